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

// Run configuration: INI/TOML-style sections with key = value pairs.
//
//   [train]   mode, learning_rate, batch_size, epochs, seed
//   [net]     word_dim, lemma_dim, pos_dim, feature_dim, hidden_size,
//             n_layers, conv_window, conv_channels, n_domains, dropout_rate
//   [decoder] delta, use_coherence_filter, mode (constrained | greedy)
//   [paths]   lexicon, train (comma-separated path:domain), val, test
//   [synth]   every SynthConfig field
//   [experiment] n_seeds, val_fraction, probe_epochs,
//             probe_batch_size, probe_learning_rate, probe_train_fraction
//
// Unknown sections or keys are rejected.

#ifndef ADVFRAME_RUN_CONFIG_H_
#define ADVFRAME_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "advframe/decode.h"
#include "advframe/eval.h"
#include "advframe/synth.h"
#include "advframe/tagger.h"

namespace advframe {

struct CorpusRef {
  std::string path;
  int domain = 0;
};

struct PathsConfig {
  std::string lexicon;
  std::vector<CorpusRef> train;
  std::string val;
  std::string test;
};

struct ExperimentConfig {
  int n_seeds = 5;  // training seeds are train.seed, train.seed + 1, ...
  double val_fraction = 0.25;
  ProbeConfig probe;
};

struct RunConfig {
  NetConfig net;
  TrainConfig train;
  DecoderConfig decoder;
  PathsConfig paths;
  SynthConfig synth;
  ExperimentConfig experiment;

  void Validate() const;
  // Canonical JSON of every resolved value.
  std::string Echo() const;
  // SHA-256 of Echo().
  std::string Hash() const;
};

// Throws ValidationError naming the offending line or key.
RunConfig ParseRunConfig(std::string_view text);
RunConfig LoadRunConfig(const std::string &path);

// Parses "path:domain,path:domain"; `key` names the source in errors.
std::vector<CorpusRef> ParseCorpusRefs(const std::string &key, const std::string &text);

}  // namespace advframe

#endif  // ADVFRAME_RUN_CONFIG_H_
