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

// Subcommands of the advframe tool. Each writes its outputs and a
// manifest.json into the output directory; messages for the user go to
// `log`. ValidationError signals bad input (exit code 1), any other
// exception a runtime failure (exit code 2).

#ifndef ADVFRAME_COMMANDS_H_
#define ADVFRAME_COMMANDS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "advframe/run_config.h"

namespace advframe {

inline constexpr const char *kVersion = "0.1.0";

struct CommonOptions {
  std::string config_path;            // empty: built-in defaults
  std::optional<std::uint64_t> seed;  // overrides train.seed and synth.seed
  std::string out = "out";
};

// Defaults or the config file, with the seed override applied.
RunConfig ResolveConfig(const CommonOptions &opts);

struct TrainOptions : CommonOptions {
  std::string lexicon;
  std::vector<CorpusRef> train;
  std::string val;
  std::optional<std::string> mode;
  std::optional<int> epochs;
};

struct PredictOptions : CommonOptions {
  std::string model;
  std::string lexicon;
  std::string input;
  std::optional<double> delta;
};

struct EvalOptions : CommonOptions {
  std::string lexicon;
  std::string gold;
  std::string pred;   // scored as given, or
  std::string model;  // swept over the delta grid on `gold`
};

struct TuneDeltaOptions : CommonOptions {
  std::string model;
  std::string lexicon;
  std::string val;
};

struct AlignProjectOptions : CommonOptions {
  std::string lexicon;
  std::string ref;
  std::string hyp;
};

using GenSynthOptions = CommonOptions;
using ExperimentOptions = CommonOptions;

void CmdTrain(const TrainOptions &opts, std::ostream &log);
void CmdPredict(const PredictOptions &opts, std::ostream &log);
void CmdEval(const EvalOptions &opts, std::ostream &log);
// Returns the selected delta.
double CmdTuneDelta(const TuneDeltaOptions &opts, std::ostream &log);
// Returns the corpus WER.
double CmdAlignProject(const AlignProjectOptions &opts, std::ostream &log);
void CmdGenSynth(const GenSynthOptions &opts, std::ostream &log);

// Scores of one trained model on the three test sets.
struct ModelScores {
  std::string mode;
  std::uint64_t seed = 0;
  int best_epoch = -1;
  double delta = 0.0;  // selected on validation data
  Prf fi_written, ai_written;
  Prf fi_gold, ai_gold;
  Prf fi_asr, ai_asr;
  std::map<std::string, double> ai_asr_by_wer;  // bucket name -> AI f1
  double probe_accuracy = 0.0;
};

struct ExperimentSummary {
  std::vector<ModelScores> runs;
  // Medians over seeds, keyed by mode then cell name.
  std::map<std::string, std::map<std::string, double>> medians;
  std::vector<std::string> wer_buckets;  // non-empty buckets, lowest first
  double low_wer_advantage = 0.0;   // adversarial - baseline, median AI f1
  double high_wer_advantage = 0.0;

  std::string ToJson() const;
  std::string ToMarkdown() const;
};

ExperimentSummary CmdExperiment(const ExperimentOptions &opts, std::ostream &log);
// Same, from an already resolved configuration.
ExperimentSummary RunExperiment(const RunConfig &config, const std::string &out_dir,
                                std::ostream &log);

}  // namespace advframe

#endif  // ADVFRAME_COMMANDS_H_
