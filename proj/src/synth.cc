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

#include "advframe/synth.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "advframe/align.h"
#include "advframe/error.h"

namespace advframe {

namespace {

const std::vector<std::string> kFrameNames = {
    "Attack",    "Leadership", "Statement", "Ingestion", "Motion",     "Commerce_buy",
    "Giving",    "Arrest",     "Creating",  "Education", "Employment", "Request",
    "Discovery", "Travel",     "Damaging",  "Hiring"};
const std::vector<std::string> kCorePool = {"Theme",  "Recipient", "Instrument", "Goal",
                                            "Source", "Topic",     "Cause"};
const std::map<std::string, std::string> kCorePrep = {
    {"Recipient", "to"}, {"Instrument", "with"}, {"Goal", "to"},
    {"Source", "from"},  {"Topic", "about"},     {"Cause", "for"}};
const std::vector<std::string> kNonCore = {"Place", "Time"};
const std::map<std::string, std::vector<std::string>> kNonCorePrep = {
    {"Place", {"in", "at"}}, {"Time", {"on", "during"}}};

const std::vector<std::string> kWrittenDets = {"the", "a", "this"};
const std::vector<std::string> kSpokenDets = {"the", "a", "that"};
const std::vector<std::string> kFillers = {"uh", "um", "well", "like"};
const std::vector<std::string> kPronouns = {"he", "she", "we", "they", "you"};
const std::vector<std::string> kParticles = {"up", "off", "out"};
const std::vector<std::string> kInsertions = {"the", "a", "and", "uh", "in", "of"};

const std::map<std::string, std::string> kConfusions = {
    {"the", "a"},   {"a", "uh"},     {"in", "and"},   {"on", "an"},    {"to", "two"},
    {"of", "off"},  {"off", "of"},   {"by", "bye"},   {"at", "that"},  {"for", "four"},
    {"he", "she"},  {"she", "he"},   {"we", "wee"},   {"you", "yeah"}, {"up", "a"},
    {"out", "at"},  {"uh", "a"},     {"um", "and"},   {"and", "in"},   {"this", "these"},
    {"that", "at"}, {"with", "which"}, {"from", "for"}, {"about", "bout"}, {".", "and"},
    {"like", "lake"}, {"well", "will"}, {"they", "the"}, {"during", "doing"}};

constexpr double kAgentRate = 0.9;
constexpr double kFirstCoreRate = 0.9;
constexpr double kOtherCoreRate = 0.5;
constexpr double kNonCoreRate = 0.35;
constexpr double kAdjectiveRate = 0.3;
constexpr double kPronounRate = 0.5;
constexpr double kVerbalRate = 0.6;
constexpr double kSynonymShare = 0.5;
constexpr double kSynonymUse = 0.8;
constexpr int kNounsPerRole = 6;
constexpr int kAdjectives = 20;
constexpr int kProjectionRetries = 10;

bool IsShort(const std::string &s) { return s.size() <= 3; }

double Uniform(std::mt19937_64 &rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

bool Coin(std::mt19937_64 &rng, double p) { return Uniform(rng) < p; }

template <typename T>
const T &Pick(std::mt19937_64 &rng, const std::vector<T> &v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::mt19937_64 Stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  return std::mt19937_64(seq);
}

// Pronounceable pseudo-words of consonant-vowel syllables.
class WordFactory {
 public:
  explicit WordFactory(std::mt19937_64 &rng) : rng_(rng) {
    for (const auto &w : kWrittenDets) used_.insert(w);
    for (const auto &[a, b] : kConfusions) used_.insert(b);
  }

  std::string Make(int syllables) {
    static const std::string kCons = "bdfgklmnprstvz";
    static const std::string kVowels = "aeiou";
    auto from = [&](const std::string &letters) {
      return letters[std::uniform_int_distribution<std::size_t>(0, letters.size() - 1)(rng_)];
    };
    for (;;) {
      std::string w;
      for (int i = 0; i < syllables; ++i) {
        w.push_back(from(kCons));
        w.push_back(from(kVowels));
      }
      w.push_back(from(kCons));
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::mt19937_64 &rng_;
  std::set<std::string> used_;
};

struct FrameDef {
  std::string name;
  std::vector<std::string> core;     // core[0] is Agent
  std::vector<std::string> noncore;
  std::string verb;
  std::string noun;
  std::optional<std::string> borrowed_verb;  // ambiguous LU shared with another frame
  std::map<std::string, std::vector<std::string>> nouns;  // per FE
};

struct World {
  std::vector<FrameDef> frames;
  std::vector<std::string> adjectives;
  std::map<std::string, std::string> spoken_synonym;
  std::vector<double> written_prior;
  std::vector<double> spoken_prior;
  FrameLexicon lexicon;
};

std::vector<double> ZipfPrior(int n, std::mt19937_64 &rng) {
  std::vector<int> rank(n);
  for (int i = 0; i < n; ++i) rank[i] = i;
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 1.0 / (rank[i] + 1);
  return w;
}

World BuildWorld(const SynthConfig &c) {
  std::mt19937_64 rng = Stream(c.seed, 0);
  WordFactory words(rng);
  World world;
  std::vector<std::string> nouns;
  for (int i = 0; i < c.vocab_size; ++i) nouns.push_back(words.Make(2));
  for (const auto &n : nouns) {
    if (Coin(rng, kSynonymShare)) world.spoken_synonym[n] = words.Make(2);
  }
  for (int i = 0; i < kAdjectives; ++i) world.adjectives.push_back(words.Make(2));

  const int n_noncore = std::min<int>(2, c.fes_per_frame / 2);
  const int n_core = c.fes_per_frame - n_noncore;
  std::size_t next_noun = 0;
  for (int f = 0; f < c.n_frames; ++f) {
    FrameDef def;
    def.name = f < static_cast<int>(kFrameNames.size()) ? kFrameNames[f]
                                                         : "Frame_" + std::to_string(f);
    def.core.push_back("Agent");
    for (int j = 1; j < n_core; ++j) def.core.push_back(kCorePool[(f + j - 1) % kCorePool.size()]);
    for (int j = 0; j < n_noncore; ++j) def.noncore.push_back(kNonCore[j]);
    def.verb = words.Make(2);
    def.noun = words.Make(3);
    for (const auto &fe : def.core) {
      for (int k = 0; k < kNounsPerRole; ++k) def.nouns[fe].push_back(nouns[next_noun++ % nouns.size()]);
    }
    for (const auto &fe : def.noncore) {
      for (int k = 0; k < kNounsPerRole; ++k) def.nouns[fe].push_back(nouns[next_noun++ % nouns.size()]);
    }
    world.frames.push_back(std::move(def));
  }
  // Every fourth frame lends its verb to the next one.
  for (int f = 0; f + 1 < c.n_frames; f += 4) world.frames[f + 1].borrowed_verb = world.frames[f].verb;

  for (const auto &def : world.frames) {
    std::map<std::string, bool> fes;
    for (const auto &fe : def.core) fes[fe] = true;
    for (const auto &fe : def.noncore) fes[fe] = false;
    world.lexicon.AddFrame(def.name, fes);
  }
  for (const auto &def : world.frames) {
    world.lexicon.AddLexicalUnit(def.verb, def.name);
    world.lexicon.AddLexicalUnit(def.noun, def.name);
    if (def.borrowed_verb) world.lexicon.AddLexicalUnit(*def.borrowed_verb, def.name);
  }
  world.lexicon.Validate();
  world.written_prior = ZipfPrior(c.n_frames, rng);
  world.spoken_prior = ZipfPrior(c.n_frames, rng);
  return world;
}

Token MakeToken(const std::string &surface, const std::string &lemma, const std::string &pos) {
  return {surface, lemma, pos, SurfaceFeatures(surface)};
}

// Accumulates tokens and FE spans for one sentence.
struct SentenceBuilder {
  std::vector<Token> tokens;
  std::vector<FrameElement> elements;
  Span target;

  int Add(Token t) {
    tokens.push_back(std::move(t));
    return static_cast<int>(tokens.size()) - 1;
  }
  void Element(const std::string &name, bool core, int start) {
    elements.push_back({name, {start, static_cast<int>(tokens.size()) - 1}, core});
  }
};

class SampleMaker {
 public:
  SampleMaker(const World &world, bool spoken, double null_rate, double filler_rate,
              std::mt19937_64 &rng)
      : world_(world), spoken_(spoken), null_rate_(null_rate), filler_rate_(filler_rate),
        rng_(rng) {}

  Sample Make() {
    const auto &prior = spoken_ ? world_.spoken_prior : world_.written_prior;
    const int f = std::discrete_distribution<int>(prior.begin(), prior.end())(rng_);
    const FrameDef &def = world_.frames[f];
    const bool is_null = Coin(rng_, null_rate_);
    const bool verbal = Coin(rng_, kVerbalRate);
    std::string verb = def.verb;
    if (def.borrowed_verb && Coin(rng_, 0.5)) verb = *def.borrowed_verb;

    SentenceBuilder sb;
    if (is_null) {
      if (verbal) {
        NounPhrase(sb, def, "Agent", true);
        Filler(sb);
        Lu(sb, verb, true);
      } else {
        sb.Add(Det());
        Lu(sb, def.noun, false);
      }
      const std::string &particle = Pick(rng_, kParticles);
      sb.Add(MakeToken(particle, particle, "PART"));
      Filler(sb);
      NounPhrase(sb, def, def.core.size() > 1 ? def.core[1] : "Agent", false);
    } else if (verbal) {
      if (Coin(rng_, kAgentRate)) {
        const int s = static_cast<int>(sb.tokens.size());
        NounPhrase(sb, def, "Agent", true);
        sb.Element("Agent", true, s);
        Filler(sb);
      }
      Lu(sb, verb, true);
      if (def.core.size() > 1 && Coin(rng_, kFirstCoreRate)) {
        const int s = static_cast<int>(sb.tokens.size());
        NounPhrase(sb, def, def.core[1], false);
        sb.Element(def.core[1], true, s);
      }
      Rest(sb, def, 2);
    } else {
      sb.Add(Det());
      Lu(sb, def.noun, false);
      if (def.core.size() > 1 && Coin(rng_, kFirstCoreRate)) {
        const int s = sb.Add(MakeToken("of", "of", "ADP"));
        NounPhrase(sb, def, def.core[1], false);
        sb.Element(def.core[1], true, s);
      }
      if (Coin(rng_, kAgentRate)) {
        Filler(sb);
        const int s = sb.Add(MakeToken("by", "by", "ADP"));
        NounPhrase(sb, def, "Agent", true);
        sb.Element("Agent", true, s);
      }
      Rest(sb, def, 2);
    }
    sb.Add(MakeToken(".", ".", "PUNCT"));

    Sample sample;
    sample.tokens = std::move(sb.tokens);
    sample.target = sb.target;
    FrameAnnotation ann;
    ann.lu_span = sb.target;
    if (!is_null) {
      ann.frame = def.name;
      ann.elements = std::move(sb.elements);
    }
    sample.gold = std::move(ann);
    return sample;
  }

 private:
  Token Det() {
    const std::string &d = Pick(rng_, spoken_ ? kSpokenDets : kWrittenDets);
    return MakeToken(d, d, "DET");
  }

  void Filler(SentenceBuilder &sb) {
    if (spoken_ && Coin(rng_, filler_rate_)) {
      const std::string &w = Pick(rng_, kFillers);
      sb.Add(MakeToken(w, w, "INTJ"));
    }
  }

  void Lu(SentenceBuilder &sb, const std::string &lemma, bool verbal) {
    std::string surface = lemma;
    if (verbal) {
      static const std::vector<std::string> kWritten = {"s", "ed"};
      static const std::vector<std::string> kSpoken = {"s", "ed", "in"};
      surface += Pick(rng_, spoken_ ? kSpoken : kWritten);
    } else if (Coin(rng_, 0.3)) {
      surface += "s";
    }
    const int i = sb.Add(MakeToken(surface, lemma, verbal ? "VERB" : "NOUN"));
    sb.target = {i, i};
  }

  void NounPhrase(SentenceBuilder &sb, const FrameDef &def, const std::string &fe, bool subject) {
    if (subject && spoken_ && Coin(rng_, kPronounRate)) {
      const std::string &p = Pick(rng_, kPronouns);
      sb.Add(MakeToken(p, p, "PRON"));
      return;
    }
    sb.Add(Det());
    if (Coin(rng_, kAdjectiveRate)) {
      const std::string &a = Pick(rng_, world_.adjectives);
      sb.Add(MakeToken(a, a, "ADJ"));
    }
    std::string noun = Pick(rng_, def.nouns.at(fe));
    if (spoken_) {
      auto it = world_.spoken_synonym.find(noun);
      if (it != world_.spoken_synonym.end() && Coin(rng_, kSynonymUse)) noun = it->second;
    }
    sb.Add(MakeToken(noun, noun, "NOUN"));
  }

  void PrepPhrase(SentenceBuilder &sb, const FrameDef &def, const std::string &fe, bool core,
                  const std::string &prep) {
    Filler(sb);
    const int s = sb.Add(MakeToken(prep, prep, "ADP"));
    NounPhrase(sb, def, fe, false);
    sb.Element(fe, core, s);
  }

  void Rest(SentenceBuilder &sb, const FrameDef &def, std::size_t first_core) {
    for (std::size_t j = first_core; j < def.core.size(); ++j) {
      if (Coin(rng_, kOtherCoreRate)) PrepPhrase(sb, def, def.core[j], true, kCorePrep.at(def.core[j]));
    }
    std::vector<std::string> adjuncts;
    for (const auto &fe : def.noncore) {
      if (Coin(rng_, kNonCoreRate)) adjuncts.push_back(fe);
    }
    std::shuffle(adjuncts.begin(), adjuncts.end(), rng_);
    for (const auto &fe : adjuncts) PrepPhrase(sb, def, fe, false, Pick(rng_, kNonCorePrep.at(fe)));
  }

  const World &world_;
  bool spoken_;
  double null_rate_;
  double filler_rate_;
  std::mt19937_64 &rng_;
};

Token Substitute(const Token &tok, std::mt19937_64 &rng) {
  auto it = kConfusions.find(tok.surface);
  if (it != kConfusions.end()) return MakeToken(it->second, it->second, "X");
  if (!IsShort(tok.lemma) && tok.surface.rfind(tok.lemma, 0) == 0) {
    // Inflection swap: same lemma, different ending.
    static const std::vector<std::string> kEndings = {"", "s", "ed", "ing"};
    std::vector<std::string> options;
    for (const auto &e : kEndings) {
      if (tok.lemma + e != tok.surface) options.push_back(tok.lemma + e);
    }
    Token out = tok;
    out.surface = Pick(rng, options);
    out.extra_features = SurfaceFeatures(out.surface);
    return out;
  }
  std::string w = tok.surface + "h";
  return MakeToken(w, w, "X");
}

}  // namespace

void SynthConfig::Validate() const {
  auto prob = [](double p, const char *name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError(std::string(name) + " must lie in [0, 1]");
    }
  };
  prob(null_lu_rate_written, "null_lu_rate_written");
  prob(null_lu_rate_spoken, "null_lu_rate_spoken");
  prob(filler_rate_spoken, "filler_rate_spoken");
  prob(asr_wer_target, "asr_wer_target");
  if (n_train_written <= 0 || n_train_spoken <= 0 || n_test <= 0) {
    throw ValidationError("sample counts must be positive");
  }
  if (vocab_size < 10) throw ValidationError("vocab_size must be >= 10");
  if (n_frames < 1) throw ValidationError("n_frames must be >= 1");
  if (fes_per_frame < 1) throw ValidationError("fes_per_frame must be >= 1");
  if (null_lu_rate_spoken < null_lu_rate_written) {
    throw ValidationError("null_lu_rate_spoken must be >= null_lu_rate_written");
  }
}

std::vector<std::string> SurfaceFeatures(const std::string &surface) {
  std::string lower;
  for (char ch : surface) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  const std::string suffix = lower.size() <= 2 ? lower : lower.substr(lower.size() - 2);
  return {suffix, IsShort(surface) ? "short" : "long"};
}

std::vector<Token> InjectAsrNoise(std::span<const Token> sentence, double rate,
                                  std::mt19937_64 &rng, const AsrNoiseProfile &profile) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("noise rate must lie in [0, 1]");
  std::vector<Token> out;
  if (sentence.empty()) return out;
  std::vector<double> weight(sentence.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    weight[i] = IsShort(sentence[i].surface) ? profile.short_word_weight : 1.0;
    total += weight[i];
  }
  const double scale = rate * static_cast<double>(sentence.size()) / total;
  const std::vector<double> kinds = {profile.substitution, profile.deletion, profile.insertion};
  std::discrete_distribution<int> kind(kinds.begin(), kinds.end());
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const double p = std::min(1.0, weight[i] * scale);
    if (!Coin(rng, p)) {
      out.push_back(sentence[i]);
      continue;
    }
    switch (kind(rng)) {
      case 0:
        out.push_back(Substitute(sentence[i], rng));
        break;
      case 1:
        break;
      default: {
        out.push_back(sentence[i]);
        const std::string &w = Pick(rng, kInsertions);
        out.push_back(MakeToken(w, w, "X"));
      }
    }
  }
  return out;
}

SynthCorpora Generate(const SynthConfig &config) {
  config.Validate();
  World world = BuildWorld(config);
  SynthCorpora out;
  out.lexicon = world.lexicon;

  std::mt19937_64 written_rng = Stream(config.seed, 1);
  out.written.name = "written";
  out.written.domain_id = 0;
  SampleMaker written(world, false, config.null_lu_rate_written, 0.0, written_rng);
  for (int i = 0; i < config.n_train_written + config.n_test; ++i) {
    out.written.samples.push_back(written.Make());
  }

  std::mt19937_64 spoken_rng = Stream(config.seed, 2);
  out.spoken_gold.name = "spoken_gold";
  out.spoken_gold.domain_id = 1;
  SampleMaker spoken(world, true, config.null_lu_rate_spoken, config.filler_rate_spoken,
                     spoken_rng);
  for (int i = 0; i < config.n_train_spoken + config.n_test; ++i) {
    out.spoken_gold.samples.push_back(spoken.Make());
  }

  std::mt19937_64 asr_rng = Stream(config.seed, 3);
  out.spoken_asr.name = "spoken_asr";
  out.spoken_asr.domain_id = 1;
  for (const Sample &ref : out.spoken_gold.samples) {
    std::optional<Sample> projected;
    for (int attempt = 0; attempt < kProjectionRetries && !projected; ++attempt) {
      auto hyp = InjectAsrNoise(ref.tokens, config.asr_wer_target, asr_rng);
      if (hyp.empty()) continue;
      projected = ProjectAnnotations(ref, hyp, out.lexicon).sample;
    }
    if (!projected) {
      projected = ref;
      projected->wer = 0.0;
    }
    out.spoken_asr.samples.push_back(std::move(*projected));
  }
  return out;
}

}  // namespace advframe
