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

#include "advframe/commands.h"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "advframe/align.h"
#include "advframe/hash.h"
#include "advframe/synth.h"

namespace advframe {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void WriteText(const fs::path &path, const std::string &text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Records inputs, outputs and the resolved configuration of one command.
// Output paths are relative to the output directory so that two runs into
// different directories produce the same manifest.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig &config, fs::path out_dir)
      : out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
    doc_["command"] = std::move(command);
    doc_["version"] = kVersion;
    doc_["config_hash"] = config.Hash();
    doc_["config"] = json::parse(config.Echo());
    doc_["seed"] = config.train.seed;
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }

  void Input(const std::string &path) {
    doc_["inputs"].push_back({{"path", path}, {"sha256", Sha256File(path)}});
  }
  void Output(const std::string &relative) { outputs_.push_back(relative); }
  void Set(const std::string &key, json value) { doc_[key] = std::move(value); }

  void Write() {
    for (const auto &rel : outputs_) {
      doc_["outputs"].push_back(
          {{"path", rel}, {"sha256", Sha256File((out_dir_ / rel).string())}});
    }
    WriteText(out_dir_ / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  fs::path out_dir_;
  json doc_;
  std::vector<std::string> outputs_;
};

// A hypothesis file is either a corpus file or plain text with one
// whitespace-tokenized sentence per line. Plain-text tokens get a lowercased
// lemma, POS "X" and `arity` extra feature columns.
std::vector<std::vector<Token>> ReadHypotheses(const std::string &path,
                                               const FrameLexicon &lexicon, std::size_t arity) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  std::vector<std::string> lines;
  bool tabular = false;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tabular = tabular || line.find('\t') != std::string::npos;
    lines.push_back(std::move(line));
  }
  std::vector<std::vector<Token>> out;
  if (tabular) {
    for (auto &s : ReadCorpusFile(path, lexicon).samples) out.push_back(std::move(s.tokens));
    return out;
  }
  const bool surface_features = SurfaceFeatures("x").size() == arity;
  for (const auto &line : lines) {
    std::vector<Token> tokens;
    std::istringstream words(line);
    for (std::string w; words >> w;) {
      std::string lemma = w;
      std::transform(lemma.begin(), lemma.end(), lemma.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      tokens.push_back({w, lemma, "X",
                        surface_features ? SurfaceFeatures(w)
                                         : std::vector<std::string>(arity, "_")});
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

json PrfJson(const Prf &p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

Validator MakeValidator(const NetConfig &net, const FeatureVocab &vocab, const LabelSpace &labels,
                        const FrameLexicon &lexicon, const std::vector<Sample> &val,
                        const DecoderConfig &decoder) {
  return [&net, &vocab, &labels, &lexicon, &val, decoder](const Parameters &params) {
    TaggerModel model{net, vocab, labels, params};
    const auto dists = model.Predict(val);
    const auto grid = DefaultDeltaGrid();
    const SweepResult r = SweepDelta(dists, val, labels, lexicon, grid, decoder);
    return ValidationScores{r.fi_fmax, r.ai_fmax, r.fmax_delta};
  };
}

std::string LogJsonl(const std::vector<EpochLog> &log) {
  std::string out;
  for (const auto &e : log) out += e.ToJson() + "\n";
  return out;
}

std::vector<Sample> Slice(const std::vector<Sample> &v, std::size_t begin, std::size_t end) {
  return {v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end)};
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Returns `value` after checking it is set and, for paths, that it exists.
std::string RequireSet(const std::string &value, const std::string &what) {
  if (value.empty()) throw ValidationError("missing " + what);
  if (!fs::exists(value)) throw ValidationError(what + ": no such file '" + value + "'");
  return value;
}

}  // namespace

RunConfig ResolveConfig(const CommonOptions &opts) {
  RunConfig config = opts.config_path.empty() ? RunConfig{} : LoadRunConfig(opts.config_path);
  if (opts.seed) {
    config.train.seed = *opts.seed;
    config.synth.seed = *opts.seed;
  }
  config.Validate();
  return config;
}

// ---------------------------------------------------------------------------
// train

void CmdTrain(const TrainOptions &opts, std::ostream &log) {
  RunConfig config = ResolveConfig(opts);
  if (!opts.lexicon.empty()) config.paths.lexicon = opts.lexicon;
  if (!opts.train.empty()) config.paths.train = opts.train;
  if (!opts.val.empty()) config.paths.val = opts.val;
  if (opts.mode) {
    if (*opts.mode != "baseline" && *opts.mode != "adversarial") {
      throw ValidationError("--mode must be baseline or adversarial");
    }
    config.train.adversarial = *opts.mode == "adversarial";
  }
  if (opts.epochs) config.train.epochs = *opts.epochs;
  config.Validate();
  RequireSet(config.paths.lexicon, "lexicon (--lexicon or paths.lexicon)");
  RequireSet(config.paths.val, "validation corpus (--val or paths.val)");
  if (config.paths.train.empty()) throw ValidationError("missing training corpora (--train)");
  std::set<int> domains;
  for (const auto &ref : config.paths.train) {
    RequireSet(ref.path, "training corpus");
    domains.insert(ref.domain);
  }
  if (config.train.adversarial && domains.size() < 2) {
    throw ValidationError("adversarial training needs corpora from at least two domains");
  }

  Manifest manifest("train", config, opts.out);
  const FrameLexicon lexicon = FrameLexicon::Load(config.paths.lexicon);
  manifest.Input(config.paths.lexicon);
  std::vector<Corpus> corpora;
  for (const auto &ref : config.paths.train) {
    corpora.push_back(ReadCorpusFile(ref.path, lexicon));
    manifest.Input(ref.path);
  }
  const Corpus val = ReadCorpusFile(config.paths.val, lexicon);
  manifest.Input(config.paths.val);

  std::vector<const Corpus *> ptrs;
  std::vector<DomainCorpus> train;
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    ptrs.push_back(&corpora[i]);
    train.push_back({&corpora[i], config.paths.train[i].domain});
  }
  const FeatureVocab vocab = FeatureVocab::Build(ptrs);
  const LabelSpace labels = BuildLabelSpace(lexicon);
  TrainingState init;
  init.params = InitParameters(config.net, vocab, labels.size(), config.train.seed);
  const TrainResult result =
      Train(init, config.net, vocab, labels, train, config.train,
            MakeValidator(config.net, vocab, labels, lexicon, val.samples, config.decoder));

  const TaggerModel model{config.net, vocab, labels, result.best.params};
  fs::create_directories(opts.out);
  model.Save((fs::path(opts.out) / "model.ckpt").string());
  WriteText(fs::path(opts.out) / "train_log.jsonl", LogJsonl(result.log));
  manifest.Output("model.ckpt");
  manifest.Output("train_log.jsonl");
  manifest.Set("best_epoch", result.best_epoch);
  manifest.Set("aborted", result.aborted);
  manifest.Write();
  if (result.aborted) log << "training aborted on a non-finite loss; kept the last good epoch\n";
  log << "best epoch " << result.best_epoch << "\n";
  if (!result.log.empty()) log << "final lambda " << result.log.back().lambda << "\n";
}

// ---------------------------------------------------------------------------
// predict / eval / tune-delta

void CmdPredict(const PredictOptions &opts, std::ostream &log) {
  RunConfig config = ResolveConfig(opts);
  if (!opts.lexicon.empty()) config.paths.lexicon = opts.lexicon;
  if (opts.delta) config.decoder.delta = *opts.delta;
  config.decoder.Validate();
  Manifest manifest("predict", config, opts.out);
  const FrameLexicon lexicon =
      FrameLexicon::Load(RequireSet(config.paths.lexicon, "lexicon (--lexicon)"));
  manifest.Input(config.paths.lexicon);
  const TaggerModel model = TaggerModel::Load(RequireSet(opts.model, "--model"), lexicon);
  manifest.Input(opts.model);
  Corpus corpus = ReadCorpusFile(RequireSet(opts.input, "--input"), lexicon);
  manifest.Input(opts.input);

  const auto dists = model.Predict(corpus.samples);
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    corpus.samples[i].gold =
        DecodeSample(dists[i], corpus.samples[i], model.labels, lexicon, config.decoder);
  }
  WriteCorpusFile(corpus, (fs::path(opts.out) / "predictions.conll").string());
  manifest.Output("predictions.conll");
  manifest.Set("delta", config.decoder.delta);
  manifest.Write();
  log << "predicted " << corpus.samples.size() << " samples\n";
}

void CmdEval(const EvalOptions &opts, std::ostream &log) {
  RunConfig config = ResolveConfig(opts);
  if (!opts.lexicon.empty()) config.paths.lexicon = opts.lexicon;
  if (opts.pred.empty() == opts.model.empty()) {
    throw ValidationError("eval needs exactly one of --pred or --model");
  }
  Manifest manifest("eval", config, opts.out);
  const FrameLexicon lexicon =
      FrameLexicon::Load(RequireSet(config.paths.lexicon, "lexicon (--lexicon)"));
  manifest.Input(config.paths.lexicon);
  const Corpus gold = ReadCorpusFile(RequireSet(opts.gold, "--gold"), lexicon);
  manifest.Input(opts.gold);

  EvalReport report;
  if (!opts.pred.empty()) {
    const Corpus pred = ReadCorpusFile(RequireSet(opts.pred, "--pred"), lexicon);
    manifest.Input(opts.pred);
    std::vector<FrameAnnotation> anns;
    for (const auto &s : pred.samples) {
      if (!s.gold) throw ValidationError("prediction file has unlabelled samples");
      anns.push_back(*s.gold);
    }
    report = Evaluate(gold.samples, anns, lexicon);
    report.fmax_delta = config.decoder.delta;
  } else {
    const TaggerModel model = TaggerModel::Load(RequireSet(opts.model, "--model"), lexicon);
    manifest.Input(opts.model);
    const auto dists = model.Predict(gold.samples);
    const auto grid = DefaultDeltaGrid();
    const SweepResult sweep =
        SweepDelta(dists, gold.samples, model.labels, lexicon, grid, config.decoder);
    DecoderConfig at = config.decoder;
    at.delta = sweep.fmax_delta;
    report = Evaluate(gold.samples, DecodeAll(dists, gold.samples, model.labels, lexicon, at),
                      lexicon);
    report.curve = sweep.curve;
    report.fmax_delta = sweep.fmax_delta;
    WriteText(fs::path(opts.out) / "curve.tsv", report.CurveTsv());
    manifest.Output("curve.tsv");
  }
  WriteText(fs::path(opts.out) / "report.json", report.ToJson() + "\n");
  manifest.Output("report.json");
  manifest.Write();
  log << "FI P=" << report.fi.precision << " R=" << report.fi.recall << " F=" << report.fi.f1
      << "\nAI P=" << report.ai.precision << " R=" << report.ai.recall << " F=" << report.ai.f1
      << "\n";
}

double CmdTuneDelta(const TuneDeltaOptions &opts, std::ostream &log) {
  RunConfig config = ResolveConfig(opts);
  if (!opts.lexicon.empty()) config.paths.lexicon = opts.lexicon;
  if (!opts.val.empty()) config.paths.val = opts.val;
  Manifest manifest("tune-delta", config, opts.out);
  const FrameLexicon lexicon =
      FrameLexicon::Load(RequireSet(config.paths.lexicon, "lexicon (--lexicon)"));
  manifest.Input(config.paths.lexicon);
  const TaggerModel model = TaggerModel::Load(RequireSet(opts.model, "--model"), lexicon);
  manifest.Input(opts.model);
  const Corpus val = ReadCorpusFile(RequireSet(config.paths.val, "--val"), lexicon);
  manifest.Input(config.paths.val);

  const auto grid = DefaultDeltaGrid();
  const SweepResult sweep = SweepDelta(model, val, lexicon, grid, config.decoder);
  json j;
  j["fmax_delta"] = sweep.fmax_delta;
  j["ai_fmax"] = sweep.ai_fmax;
  j["fi_fmax"] = sweep.fi_fmax;
  j["curve"] = json::array();
  for (const auto &p : sweep.curve) {
    j["curve"].push_back(
        {{"delta", p.delta}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}});
  }
  WriteText(fs::path(opts.out) / "sweep.json", j.dump(2) + "\n");
  manifest.Output("sweep.json");
  manifest.Set("fmax_delta", sweep.fmax_delta);
  manifest.Write();
  log << "fmax_delta " << sweep.fmax_delta << "\n";
  return sweep.fmax_delta;
}

// ---------------------------------------------------------------------------
// align-project / gen-synth

double CmdAlignProject(const AlignProjectOptions &opts, std::ostream &log) {
  RunConfig config = ResolveConfig(opts);
  if (!opts.lexicon.empty()) config.paths.lexicon = opts.lexicon;
  Manifest manifest("align-project", config, opts.out);
  const FrameLexicon lexicon =
      FrameLexicon::Load(RequireSet(config.paths.lexicon, "lexicon (--lexicon)"));
  manifest.Input(config.paths.lexicon);
  const Corpus ref = ReadCorpusFile(RequireSet(opts.ref, "--ref"), lexicon);
  manifest.Input(opts.ref);
  const auto hyp = ReadHypotheses(RequireSet(opts.hyp, "--hyp"), lexicon, ref.feature_arity());
  manifest.Input(opts.hyp);
  if (ref.samples.size() != hyp.size()) {
    throw ValidationError("reference has " + std::to_string(ref.samples.size()) +
                          " samples but the hypothesis has " + std::to_string(hyp.size()));
  }

  Corpus out;
  out.name = ref.name;
  out.domain_id = ref.domain_id;
  ProjectionStats stats;
  long edits = 0;
  long ref_tokens = 0;
  std::vector<double> sentence_wer;
  for (std::size_t i = 0; i < ref.samples.size(); ++i) {
    const auto &r = ref.samples[i];
    if (!r.gold) throw ValidationError("reference sample " + std::to_string(i) + " is unlabelled");
    const auto rs = Surfaces(r.tokens);
    const auto hs = Surfaces(hyp[i]);
    const int distance = Align(rs, hs).distance();
    edits += distance;
    ref_tokens += static_cast<long>(rs.size());
    sentence_wer.push_back(static_cast<double>(distance) /
                           static_cast<double>(std::max<std::size_t>(1, rs.size())));
    Projection p = ProjectAnnotations(r, hyp[i], lexicon);
    stats += p.stats;
    if (p.sample) out.samples.push_back(std::move(*p.sample));
  }
  const double wer = ref_tokens > 0 ? static_cast<double>(edits) / ref_tokens : 0.0;
  WriteCorpusFile(out, (fs::path(opts.out) / "projected.conll").string());
  manifest.Output("projected.conll");
  manifest.Set("wer", wer);
  manifest.Set("sentence_wer", sentence_wer);
  manifest.Set("stats", {{"leading_i_repairs", stats.leading_i_repairs},
                         {"dropped_spans", stats.dropped_spans},
                         {"inserted_tokens", stats.inserted_tokens},
                         {"inserted_inside_spans", stats.inserted_inside_spans},
                         {"excluded_samples", stats.excluded_samples}});
  manifest.Write();
  log << "WER " << wer << "\n";
  if (stats.excluded_samples > 0) {
    log << "excluded " << stats.excluded_samples << " samples whose target was deleted\n";
  }
  return wer;
}

void CmdGenSynth(const GenSynthOptions &opts, std::ostream &log) {
  const RunConfig config = ResolveConfig(opts);
  Manifest manifest("gen-synth", config, opts.out);
  const SynthCorpora c = Generate(config.synth);
  const fs::path out(opts.out);
  WriteCorpusFile(c.written, (out / "written.conll").string());
  WriteCorpusFile(c.spoken_gold, (out / "spoken_gold.conll").string());
  WriteCorpusFile(c.spoken_asr, (out / "spoken_asr.conll").string());
  WriteText(out / "lexicon.json", c.lexicon.ToJson());
  for (const char *f : {"written.conll", "spoken_gold.conll", "spoken_asr.conll", "lexicon.json"}) {
    manifest.Output(f);
  }
  manifest.Set("seed", config.synth.seed);
  manifest.Write();
  log << "wrote " << c.written.samples.size() << " written, " << c.spoken_gold.samples.size()
      << " spoken samples\n";
}

// ---------------------------------------------------------------------------
// experiment

std::string ExperimentSummary::ToJson() const {
  json j;
  j["runs"] = json::array();
  for (const auto &r : runs) {
    json wer = json::object();
    for (const auto &[b, v] : r.ai_asr_by_wer) wer[b] = v;
    j["runs"].push_back({{"mode", r.mode},
                         {"seed", r.seed},
                         {"best_epoch", r.best_epoch},
                         {"delta", r.delta},
                         {"fi_written", PrfJson(r.fi_written)},
                         {"ai_written", PrfJson(r.ai_written)},
                         {"fi_gold", PrfJson(r.fi_gold)},
                         {"ai_gold", PrfJson(r.ai_gold)},
                         {"fi_asr", PrfJson(r.fi_asr)},
                         {"ai_asr", PrfJson(r.ai_asr)},
                         {"ai_asr_by_wer", wer},
                         {"probe_accuracy", r.probe_accuracy}});
  }
  j["medians"] = medians;
  j["wer_buckets"] = wer_buckets;
  j["low_wer_advantage"] = low_wer_advantage;
  j["high_wer_advantage"] = high_wer_advantage;
  return j.dump(2);
}

std::string ExperimentSummary::ToMarkdown() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  auto cell = [&](const std::string &mode, const std::string &key) {
    auto m = medians.find(mode);
    if (m == medians.end() || !m->second.count(key)) return std::string("-");
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(1);
    s << 100.0 * m->second.at(key);
    return s.str();
  };
  out << "Median F-measure over seeds (decoding offset selected on validation data)\n\n";
  out << "| model | FI GOLD | FI ASR | AI GOLD | AI ASR |\n|---|---|---|---|---|\n";
  for (const char *mode : {"baseline", "adversarial"}) {
    out << "| " << mode << " | " << cell(mode, "fi_gold") << " | " << cell(mode, "fi_asr")
        << " | " << cell(mode, "ai_gold") << " | " << cell(mode, "ai_asr") << " |\n";
  }
  out << "\nIn-domain (written) test\n\n| model | FI | AI |\n|---|---|---|\n";
  for (const char *mode : {"baseline", "adversarial"}) {
    out << "| " << mode << " | " << cell(mode, "fi_written") << " | " << cell(mode, "ai_written")
        << " |\n";
  }
  out << "\nDomain probe accuracy (frozen encoder)\n\n| model | accuracy |\n|---|---|\n";
  for (const char *mode : {"baseline", "adversarial"}) {
    out << "| " << mode << " | " << cell(mode, "probe_accuracy") << " |\n";
  }
  out << "\nAI on ASR by sentence WER\n\n| bucket | baseline | adversarial |\n|---|---|---|\n";
  for (const auto &b : wer_buckets) {
    out << "| " << b << " | " << cell("baseline", "wer:" + b) << " | "
        << cell("adversarial", "wer:" + b) << " |\n";
  }
  return out.str();
}

ExperimentSummary RunExperiment(const RunConfig &config, const std::string &out_dir,
                                std::ostream &log) {
  config.Validate();
  const fs::path out(out_dir);
  Manifest manifest("experiment", config, out);
  const SynthCorpora data = Generate(config.synth);
  const FrameLexicon &lexicon = data.lexicon;
  const LabelSpace labels = BuildLabelSpace(lexicon);

  // Per corpus: [0, n_train - n_val) train, [.., n_train) validation, rest test.
  auto split = [&](const Corpus &c, int n_train, const std::string &tag, Corpus parts[3]) {
    const auto n_val = static_cast<std::size_t>(std::lround(config.experiment.val_fraction * n_train));
    const std::size_t cut = static_cast<std::size_t>(n_train) - n_val;
    const std::size_t n = c.samples.size();
    const std::size_t bounds[4] = {0, cut, static_cast<std::size_t>(n_train), n};
    const char *names[3] = {"train", "val", "test"};
    for (int k = 0; k < 3; ++k) {
      parts[k].name = tag + "_" + names[k];
      parts[k].domain_id = c.domain_id;
      parts[k].samples = Slice(c.samples, bounds[k], bounds[k + 1]);
      const std::string rel = "data/" + parts[k].name + ".conll";
      WriteText(out / rel, WriteCorpus(parts[k]));
      manifest.Output(rel);
    }
  };
  Corpus written[3], gold[3], asr[3];
  split(data.written, config.synth.n_train_written, "written", written);
  split(data.spoken_gold, config.synth.n_train_spoken, "spoken_gold", gold);
  split(data.spoken_asr, config.synth.n_train_spoken, "spoken_asr", asr);
  WriteText(out / "data/lexicon.json", lexicon.ToJson());
  manifest.Output("data/lexicon.json");

  const std::vector<const Corpus *> train_ptrs = {&written[0], &gold[0], &asr[0]};
  const std::vector<DomainCorpus> train = {{&written[0], 0}, {&gold[0], 1}, {&asr[0], 1}};
  const FeatureVocab vocab = FeatureVocab::Build(train_ptrs);
  std::vector<Sample> val = written[1].samples;
  val.insert(val.end(), gold[1].samples.begin(), gold[1].samples.end());
  val.insert(val.end(), asr[1].samples.begin(), asr[1].samples.end());
  std::vector<ProbeSample> probe_data;
  for (const auto &s : written[2].samples) probe_data.push_back({&s, 0});
  for (const auto &s : gold[2].samples) probe_data.push_back({&s, 1});

  std::vector<double> asr_test_wers;
  for (const auto &s : asr[2].samples) asr_test_wers.push_back(s.wer.value_or(0.0));
  const WerBuckets buckets = BucketByWer(asr_test_wers, DefaultWerEdges());

  ExperimentSummary summary;
  for (std::size_t b = 0; b < buckets.names.size(); ++b) {
    if (!buckets.members[b].empty()) summary.wer_buckets.push_back(buckets.names[b]);
  }

  for (int k = 0; k < config.experiment.n_seeds; ++k) {
    const std::uint64_t seed = config.train.seed + static_cast<std::uint64_t>(k);
    for (const bool adversarial : {false, true}) {
      const std::string mode = adversarial ? "adversarial" : "baseline";
      TrainConfig tc = config.train;
      tc.adversarial = adversarial;
      tc.seed = seed;
      TrainingState init;
      init.params = InitParameters(config.net, vocab, labels.size(), seed);
      const TrainResult result =
          Train(init, config.net, vocab, labels, train, tc,
                MakeValidator(config.net, vocab, labels, lexicon, val, config.decoder));
      const TaggerModel model{config.net, vocab, labels, result.best.params};
      const std::string stem = "models/" + mode + "_seed" + std::to_string(seed);
      fs::create_directories(out / "models");
      model.Save((out / (stem + ".ckpt")).string());
      WriteText(out / (stem + ".log.jsonl"), LogJsonl(result.log));
      manifest.Output(stem + ".ckpt");
      manifest.Output(stem + ".log.jsonl");

      ModelScores scores;
      scores.mode = mode;
      scores.seed = seed;
      scores.best_epoch = result.best_epoch;
      const auto grid = DefaultDeltaGrid();
      const auto val_dists = model.Predict(val);
      DecoderConfig dc = config.decoder;
      dc.delta = SweepDelta(val_dists, val, labels, lexicon, grid, config.decoder).fmax_delta;
      scores.delta = dc.delta;

      auto score = [&](const Corpus &test, Prf &fi, Prf &ai) {
        const auto dists = model.Predict(test.samples);
        const auto pred = DecodeAll(dists, test.samples, labels, lexicon, dc);
        std::vector<FrameAnnotation> g;
        for (const auto &s : test.samples) g.push_back(*s.gold);
        fi = ScoreFrameId(g, pred);
        ai = ScoreArgIdSoft(g, pred);
        return pred;
      };
      score(written[2], scores.fi_written, scores.ai_written);
      score(gold[2], scores.fi_gold, scores.ai_gold);
      const auto asr_pred = score(asr[2], scores.fi_asr, scores.ai_asr);
      for (const auto &row : BreakdownReport(asr[2].samples, asr_pred, lexicon, DefaultWerEdges())) {
        if (row.factor == "wer") scores.ai_asr_by_wer[row.value] = row.score.f1;
      }
      ProbeConfig probe = config.experiment.probe;
      probe.seed = seed;
      scores.probe_accuracy =
          ProbeDomainAccuracy(model.params, config.net, vocab, labels, probe_data, probe);
      log << mode << " seed " << seed << ": best epoch " << result.best_epoch << ", AI asr "
          << scores.ai_asr.f1 << ", probe " << scores.probe_accuracy << std::endl;
      summary.runs.push_back(std::move(scores));
    }
  }

  for (const char *mode : {"baseline", "adversarial"}) {
    std::map<std::string, std::vector<double>> cells;
    for (const auto &r : summary.runs) {
      if (r.mode != mode) continue;
      cells["fi_written"].push_back(r.fi_written.f1);
      cells["ai_written"].push_back(r.ai_written.f1);
      cells["fi_gold"].push_back(r.fi_gold.f1);
      cells["ai_gold"].push_back(r.ai_gold.f1);
      cells["fi_asr"].push_back(r.fi_asr.f1);
      cells["ai_asr"].push_back(r.ai_asr.f1);
      cells["probe_accuracy"].push_back(r.probe_accuracy);
      for (const auto &[b, v] : r.ai_asr_by_wer) cells["wer:" + b].push_back(v);
    }
    for (const auto &[key, values] : cells) summary.medians[mode][key] = Median(values);
  }
  if (!summary.wer_buckets.empty()) {
    auto advantage = [&](const std::string &bucket) {
      const std::string key = "wer:" + bucket;
      return summary.medians["adversarial"][key] - summary.medians["baseline"][key];
    };
    summary.low_wer_advantage = advantage(summary.wer_buckets.front());
    summary.high_wer_advantage = advantage(summary.wer_buckets.back());
  }

  WriteText(out / "report.json", summary.ToJson() + "\n");
  WriteText(out / "report.md", summary.ToMarkdown());
  manifest.Output("report.json");
  manifest.Output("report.md");
  manifest.Write();
  return summary;
}

ExperimentSummary CmdExperiment(const ExperimentOptions &opts, std::ostream &log) {
  const RunConfig config = ResolveConfig(opts);
  const ExperimentSummary summary = RunExperiment(config, opts.out, log);
  log << summary.ToMarkdown();
  return summary;
}

}  // namespace advframe
