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

// Deterministic two-domain synthetic corpora: a written domain and a spoken
// domain with its own synonyms, fillers, pronoun subjects, more idiomatic
// (frame-less) uses of lexical units and a different frame distribution,
// plus an ASR-style noisy copy of the spoken corpus.

#ifndef ADVFRAME_SYNTH_H_
#define ADVFRAME_SYNTH_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "advframe/corpus.h"

namespace advframe {

struct SynthConfig {
  std::uint64_t seed = 7;
  int n_train_written = 480;
  int n_train_spoken = 160;
  int n_test = 160;
  int vocab_size = 200;
  int n_frames = 8;
  int fes_per_frame = 4;
  double null_lu_rate_written = 0.13;
  double null_lu_rate_spoken = 0.38;
  double filler_rate_spoken = 0.1;
  double asr_wer_target = 0.15;

  // Throws ValidationError.
  void Validate() const;
};

struct SynthCorpora {
  Corpus written;      // domain 0, n_train_written + n_test samples
  Corpus spoken_gold;  // domain 1, n_train_spoken + n_test samples
  Corpus spoken_asr;   // domain 1, aligned sample by sample with spoken_gold
  FrameLexicon lexicon;
};

SynthCorpora Generate(const SynthConfig &config);

// Relative weights of the three corruption types.
struct AsrNoiseProfile {
  double substitution = 0.5;
  double deletion = 0.3;
  double insertion = 0.2;
  // Short words (<= 3 characters) are this many times more likely to be hit.
  double short_word_weight = 2.0;

  static AsrNoiseProfile SubstitutionOnly() { return {1.0, 0.0, 0.0, 2.0}; }
};

// Corrupts each token with probability proportional to its weight, averaging
// `rate` per token. Substitutions always change the surface form.
std::vector<Token> InjectAsrNoise(std::span<const Token> sentence, double rate,
                                  std::mt19937_64 &rng, const AsrNoiseProfile &profile = {});

// Extra feature columns shared by generated corpora: two-character suffix and
// a short/long shape flag.
std::vector<std::string> SurfaceFeatures(const std::string &surface);

}  // namespace advframe

#endif  // ADVFRAME_SYNTH_H_
