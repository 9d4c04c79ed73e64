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

#include <random>

#include "advframe/align.h"
#include "advframe/synth.h"
#include "oracles.h"

namespace advframe {
namespace {

std::vector<std::vector<std::string>> AllStrings(const std::vector<std::string> &alphabet,
                                                 int max_len) {
  std::vector<std::vector<std::string>> out = {{}};
  std::size_t begin = 0;
  for (int len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (const auto &a : alphabet) {
        auto s = out[i];
        s.push_back(a);
        out.push_back(std::move(s));
      }
    }
    begin = end;
  }
  return out;
}

// Every reference and hypothesis index appears once, in order, and the
// operation agrees with the tokens it pairs.
void ExpectConsistent(const Alignment &a, const std::vector<std::string> &ref,
                      const std::vector<std::string> &hyp) {
  int r = 0, h = 0;
  for (const auto &p : a.ops) {
    switch (p.op) {
      case EditOp::kMatch:
      case EditOp::kSubstitute:
        ASSERT_EQ(p.ref, r++);
        ASSERT_EQ(p.hyp, h++);
        ASSERT_EQ(p.op == EditOp::kMatch, oracle::EditDistance({ref[p.ref]}, {hyp[p.hyp]}) == 0);
        break;
      case EditOp::kDelete:
        ASSERT_EQ(p.ref, r++);
        break;
      case EditOp::kInsert:
        ASSERT_EQ(p.hyp, h++);
        break;
    }
  }
  ASSERT_EQ(r, static_cast<int>(ref.size()));
  ASSERT_EQ(h, static_cast<int>(hyp.size()));
}

TEST(Align, DistanceMatchesTableExhaustively) {
  const auto strings = AllStrings({"a", "B", "c"}, 4);
  for (const auto &ref : strings) {
    for (const auto &hyp : strings) {
      const Alignment a = Align(ref, hyp);
      ASSERT_EQ(a.distance(), oracle::EditDistance(ref, hyp));
      ExpectConsistent(a, ref, hyp);
    }
  }
}

TEST(Align, CaseInsensitive) {
  std::vector<std::string> ref = {"The", "CAT"}, hyp = {"the", "cat"};
  EXPECT_EQ(Align(ref, hyp).distance(), 0);
}

TEST(WordErrorRate, IdenticalIsZeroAndEmptyRefIsAnError) {
  std::vector<std::string> ref = {"a", "b", "c"};
  EXPECT_EQ(WordErrorRate(ref, ref), 0.0);
  std::vector<std::string> hyp = {"a", "x"};
  EXPECT_DOUBLE_EQ(WordErrorRate(ref, hyp), 2.0 / 3.0);
  EXPECT_THROW(WordErrorRate({}, hyp), ValidationError);
}

Sample AnnotatedSample() {
  Sample s;
  for (const char *w : {"the", "dog", "went", "to", "the", "park", "today"}) {
    s.tokens.push_back({w, w, "X", {}});
  }
  s.target = {2, 2};
  s.gold = FrameAnnotation{{2, 2}, "Motion",
                           {{"Theme", {0, 1}, true}, {"Goal", {3, 5}, true}, {"Place", {6, 6}, false}}};
  return s;
}

TEST(Projection, IdentityAtZeroWer) {
  const FrameLexicon lex = oracle::MicroLexicon();
  const Sample ref = AnnotatedSample();
  const Projection p = ProjectAnnotations(ref, ref.tokens, lex);
  ASSERT_TRUE(p.sample.has_value());
  EXPECT_EQ(p.wer, 0.0);
  EXPECT_EQ(p.sample->tokens, ref.tokens);
  EXPECT_EQ(p.sample->target, ref.target);
  EXPECT_EQ(*p.sample->gold, *ref.gold);
}

TEST(Projection, DeletedTargetExcludesSample) {
  const FrameLexicon lex = oracle::MicroLexicon();
  const Sample ref = AnnotatedSample();
  std::vector<Token> hyp = ref.tokens;
  hyp.erase(hyp.begin() + 2);
  const Projection p = ProjectAnnotations(ref, hyp, lex);
  EXPECT_FALSE(p.sample.has_value());
  EXPECT_EQ(p.stats.excluded_samples, 1);
}

TEST(Projection, DeletedSpanStartIsRepaired) {
  const FrameLexicon lex = oracle::MicroLexicon();
  const Sample ref = AnnotatedSample();
  std::vector<Token> hyp = ref.tokens;
  hyp.erase(hyp.begin() + 3);  // "to", the B of Goal
  const Projection p = ProjectAnnotations(ref, hyp, lex);
  ASSERT_TRUE(p.sample.has_value());
  EXPECT_EQ(p.stats.leading_i_repairs, 1);
  EXPECT_EQ(FirstBioViolation(EncodeLabels(*p.sample)), -1);
  const auto &els = p.sample->gold->elements;
  auto goal = std::find_if(els.begin(), els.end(), [](auto &e) { return e.name == "Goal"; });
  ASSERT_NE(goal, els.end());
  EXPECT_EQ(goal->span, (Span{3, 4}));
}

TEST(Projection, InsertionsAreOutside) {
  const FrameLexicon lex = oracle::MicroLexicon();
  const Sample ref = AnnotatedSample();
  std::vector<Token> hyp = ref.tokens;
  hyp.insert(hyp.begin() + 1, Token{"uh", "uh", "INTJ", {}});
  const Projection p = ProjectAnnotations(ref, hyp, lex);
  ASSERT_TRUE(p.sample.has_value());
  EXPECT_EQ(p.stats.inserted_tokens, 1);
  EXPECT_EQ(p.stats.inserted_inside_spans, 1);
  EXPECT_TRUE(EncodeLabels(*p.sample)[1].is_outside());
  EXPECT_EQ(p.sample->target, (Span{3, 3}));
}

TEST(Projection, NoisyProjectionsStayValid) {
  const FrameLexicon lex = oracle::MicroLexicon();
  const Sample ref = AnnotatedSample();
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    const auto hyp = InjectAsrNoise(ref.tokens, 0.3, rng);
    const Projection p = ProjectAnnotations(ref, hyp, lex);
    if (!p.sample) continue;
    EXPECT_NO_THROW(ValidateAnnotation(*p.sample->gold, p.sample->size(), lex));
    EXPECT_EQ(FirstBioViolation(EncodeLabels(*p.sample)), -1);
    EXPECT_DOUBLE_EQ(p.wer, WordErrorRate(Surfaces(ref.tokens), Surfaces(hyp)));
  }
}

TEST(WerBuckets, PartitionByHalfOpenIntervals) {
  const std::vector<double> wers = {0.0, 0.05, 0.099, 0.1, 0.5};
  const WerBuckets b = BucketByWer(wers, {0.05, 0.1});
  ASSERT_EQ(b.members.size(), 3u);
  EXPECT_EQ(b.members[0], (std::vector<int>{0}));
  EXPECT_EQ(b.members[1], (std::vector<int>{1, 2}));
  EXPECT_EQ(b.members[2], (std::vector<int>{3, 4}));
  EXPECT_THROW(BucketByWer(wers, {0.1, 0.1}), ValidationError);
}

}  // namespace
}  // namespace advframe
