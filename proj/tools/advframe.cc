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

// advframe command-line entry point.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "advframe/commands.h"
#include "advframe/error.h"

namespace {

using namespace advframe;

void AddCommon(CLI::App *cmd, CommonOptions &opts) {
  cmd->add_option("--config", opts.config_path, "INI-style run configuration");
  cmd->add_option("--seed", opts.seed, "overrides train.seed and synth.seed");
  cmd->add_option("--out", opts.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Adversarial frame-semantic parsing toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  TrainOptions train;
  std::string train_refs;
  auto *c_train = app.add_subcommand("train", "train a tagger");
  AddCommon(c_train, train);
  c_train->add_option("--lexicon", train.lexicon, "frame lexicon (JSON)");
  c_train->add_option("--train", train_refs, "training corpora as path:domain[,path:domain...]");
  c_train->add_option("--val", train.val, "validation corpus");
  c_train->add_option("--mode", train.mode, "baseline or adversarial");
  c_train->add_option("--epochs", train.epochs, "number of epochs");

  PredictOptions predict;
  auto *c_predict = app.add_subcommand("predict", "decode a corpus with a trained model");
  AddCommon(c_predict, predict);
  c_predict->add_option("--model", predict.model, "checkpoint")->required();
  c_predict->add_option("--lexicon", predict.lexicon, "frame lexicon (JSON)");
  c_predict->add_option("--input", predict.input, "corpus to annotate")->required();
  c_predict->add_option("--delta", predict.delta, "null offset");

  EvalOptions eval;
  auto *c_eval = app.add_subcommand("eval", "score predictions against gold annotations");
  AddCommon(c_eval, eval);
  c_eval->add_option("--lexicon", eval.lexicon, "frame lexicon (JSON)");
  c_eval->add_option("--gold", eval.gold, "gold corpus")->required();
  auto *pred_opt = c_eval->add_option("--pred", eval.pred, "predicted corpus");
  auto *model_opt = c_eval->add_option("--model", eval.model, "checkpoint to sweep");
  pred_opt->excludes(model_opt);

  TuneDeltaOptions tune;
  auto *c_tune = app.add_subcommand("tune-delta", "pick the null offset maximizing AI F1");
  AddCommon(c_tune, tune);
  c_tune->add_option("--model", tune.model, "checkpoint")->required();
  c_tune->add_option("--lexicon", tune.lexicon, "frame lexicon (JSON)");
  c_tune->add_option("--val", tune.val, "validation corpus");

  AlignProjectOptions align;
  auto *c_align = app.add_subcommand("align-project", "project annotations onto transcripts");
  AddCommon(c_align, align);
  c_align->add_option("--lexicon", align.lexicon, "frame lexicon (JSON)");
  c_align->add_option("--ref", align.ref, "annotated reference corpus")->required();
  c_align->add_option("--hyp", align.hyp, "hypothesis: plain text, one sentence per line, or a corpus file")->required();

  GenSynthOptions gen;
  auto *c_gen = app.add_subcommand("gen-synth", "generate the synthetic corpora");
  AddCommon(c_gen, gen);

  ExperimentOptions experiment;
  auto *c_exp = app.add_subcommand("experiment", "baseline vs adversarial comparison");
  AddCommon(c_exp, experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*c_train) {
      if (!train_refs.empty()) train.train = ParseCorpusRefs("--train", train_refs);
      CmdTrain(train, std::cout);
    } else if (*c_predict) {
      CmdPredict(predict, std::cout);
    } else if (*c_eval) {
      CmdEval(eval, std::cout);
    } else if (*c_tune) {
      CmdTuneDelta(tune, std::cout);
    } else if (*c_align) {
      CmdAlignProject(align, std::cout);
    } else if (*c_gen) {
      CmdGenSynth(gen, std::cout);
    } else if (*c_exp) {
      CmdExperiment(experiment, std::cout);
    }
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
