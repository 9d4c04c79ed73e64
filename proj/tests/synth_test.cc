// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <map>
#include <random>

#include "advframe/align.h"
#include "advframe/synth.h"
#include "oracles.h"

namespace advframe {
namespace {

std::vector<std::string> Words(const Sample &s) {
  std::vector<std::string> w;
  for (const auto &t : s.tokens) w.push_back(t.surface);
  return w;
}

TEST(Generate, DeterministicUnderSeed) {
  SynthConfig c;
  c.n_train_written = 50;
  c.n_train_spoken = 30;
  c.n_test = 20;
  const SynthCorpora a = Generate(c), b = Generate(c);
  EXPECT_EQ(WriteCorpus(a.written), WriteCorpus(b.written));
  EXPECT_EQ(WriteCorpus(a.spoken_asr), WriteCorpus(b.spoken_asr));
  EXPECT_EQ(a.lexicon.ToJson(), b.lexicon.ToJson());
  c.seed = 8;
  EXPECT_NE(WriteCorpus(Generate(c).written), WriteCorpus(a.written));
}

TEST(Generate, SizesDomainsAndValidAnnotations) {
  SynthConfig c;
  c.n_train_written = 50;
  c.n_train_spoken = 30;
  c.n_test = 20;
  const SynthCorpora d = Generate(c);
  EXPECT_EQ(d.written.samples.size(), 70u);
  EXPECT_EQ(d.spoken_gold.samples.size(), 50u);
  EXPECT_EQ(d.spoken_asr.samples.size(), 50u);
  EXPECT_EQ(d.written.domain_id, 0);
  EXPECT_EQ(d.spoken_gold.domain_id, 1);
  EXPECT_EQ(d.spoken_asr.domain_id, 1);
  for (const Corpus *corpus : {&d.written, &d.spoken_gold, &d.spoken_asr}) {
    for (const auto &s : corpus->samples) {
      ASSERT_TRUE(s.gold.has_value());
      EXPECT_NO_THROW(ValidateAnnotation(*s.gold, s.size(), d.lexicon));
      EXPECT_EQ(FirstBioViolation(EncodeLabels(s)), -1);
      if (corpus != &d.spoken_asr) EXPECT_NE(d.lexicon.FramesFor(s.lu_lemma()), nullptr);
    }
  }
  // An ASR target loses its licensed lemma only when the word itself was misrecognised.
  for (std::size_t i = 0; i < d.spoken_asr.samples.size(); ++i) {
    const Sample &hyp = d.spoken_asr.samples[i];
    if (d.lexicon.FramesFor(hyp.lu_lemma()) != nullptr) continue;
    EXPECT_NE(hyp.lu_lemma(), d.spoken_gold.samples[i].lu_lemma()) << i;
  }
  // Written and parsed corpora agree.
  EXPECT_EQ(ParseCorpus(WriteCorpus(d.spoken_asr), d.lexicon).samples, d.spoken_asr.samples);
}

TEST(Generate, FullSpokenNullRateGivesOnlyNullFrames) {
  SynthConfig c;
  c.n_train_written = 20;
  c.n_train_spoken = 20;
  c.n_test = 10;
  c.null_lu_rate_spoken = 1.0;
  for (const auto &s : Generate(c).spoken_gold.samples) EXPECT_TRUE(s.gold->is_null());
}

TEST(Generate, InvalidConfigsAreRejected) {
  SynthConfig c;
  c.null_lu_rate_spoken = 0.05;  // below the written rate
  EXPECT_THROW(Generate(c), ValidationError);
  c = SynthConfig{};
  c.asr_wer_target = 1.5;
  EXPECT_THROW(Generate(c), ValidationError);
  c = SynthConfig{};
  c.n_test = 0;
  EXPECT_THROW(Generate(c), ValidationError);
}

TEST(Generate, CorpusWerTracksTheTarget) {
  SynthConfig c;
  c.n_train_spoken = 400;
  c.n_test = 160;
  const SynthCorpora d = Generate(c);
  ASSERT_GE(d.spoken_gold.samples.size(), 500u);
  long edits = 0, tokens = 0;
  for (std::size_t i = 0; i < d.spoken_gold.samples.size(); ++i) {
    const auto ref = Words(d.spoken_gold.samples[i]);
    edits += oracle::EditDistance(ref, Words(d.spoken_asr.samples[i]));
    tokens += static_cast<long>(ref.size());
  }
  const double wer = static_cast<double>(edits) / tokens;
  EXPECT_GE(wer, 0.10);
  EXPECT_LE(wer, 0.20);
}

TEST(Generate, DomainsHaveDifferentFrameDistributions) {
  const SynthCorpora d = Generate(SynthConfig{});
  std::map<std::string, std::array<double, 2>> counts;
  auto tally = [&](const Corpus &c, int col) {
    for (const auto &s : c.samples) counts[s.gold->frame.value_or("<null>")][col] += 1;
  };
  tally(d.written, 0);
  tally(d.spoken_gold, 1);
  double n[2] = {0, 0};
  for (const auto &[f, c] : counts) {
    n[0] += c[0];
    n[1] += c[1];
  }
  double chi2 = 0.0;
  for (const auto &[f, c] : counts) {
    const double row = c[0] + c[1];
    for (int k = 0; k < 2; ++k) {
      const double e = row * n[k] / (n[0] + n[1]);
      chi2 += (c[k] - e) * (c[k] - e) / e;
    }
  }
  // Critical value of chi-squared with 8 degrees of freedom at p = 0.001.
  ASSERT_EQ(counts.size(), 9u);
  EXPECT_GT(chi2, 26.12);
}

std::vector<Token> PlainSentence(int n) {
  std::vector<Token> out;
  const char *words[] = {"a", "the", "dog", "ran", "to", "market", "in", "winter"};
  for (int i = 0; i < n; ++i) out.push_back({words[i % 8], words[i % 8], "X", {}});
  return out;
}

TEST(InjectAsrNoise, ZeroRateIsIdentity) {
  std::mt19937_64 rng(1);
  const auto s = PlainSentence(12);
  EXPECT_EQ(InjectAsrNoise(s, 0.0, rng), s);
}

TEST(InjectAsrNoise, FullSubstitutionReplacesEveryToken) {
  std::mt19937_64 rng(1);
  const auto s = PlainSentence(12);
  const auto out = InjectAsrNoise(s, 1.0, rng, AsrNoiseProfile::SubstitutionOnly());
  ASSERT_EQ(out.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NE(out[i].surface, s[i].surface);
}

TEST(InjectAsrNoise, CorruptionCountConcentratesAroundRate) {
  std::mt19937_64 rng(42);
  long edits = 0, tokens = 0;
  while (tokens < 10000) {
    const auto s = PlainSentence(10);
    std::vector<std::string> ref, hyp;
    for (const auto &t : s) ref.push_back(t.surface);
    for (const auto &t : InjectAsrNoise(s, 0.15, rng)) hyp.push_back(t.surface);
    edits += Align(ref, hyp).distance();
    tokens += 10;
  }
  EXPECT_GE(edits, 1300);
  EXPECT_LE(edits, 1700);
}

TEST(InjectAsrNoise, ShortWordsAreHitMoreOften) {
  std::mt19937_64 rng(5);
  long short_hits = 0, long_hits = 0;
  const auto s = PlainSentence(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto out = InjectAsrNoise(s, 0.2, rng, AsrNoiseProfile::SubstitutionOnly());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (out[i].surface == s[i].surface) continue;
      (s[i].surface.size() <= 3 ? short_hits : long_hits) += 1;
    }
  }
  // Six short and two long words; weight 2 predicts a 6:1 ratio.
  EXPECT_GT(short_hits, 2 * long_hits);
}

TEST(SurfaceFeatures, SuffixAndShape) {
  EXPECT_EQ(SurfaceFeatures("market"), (std::vector<std::string>{"et", "long"}));
  EXPECT_EQ(SurfaceFeatures("a"), (std::vector<std::string>{"a", "short"}));
}

}  // namespace
}  // namespace advframe
