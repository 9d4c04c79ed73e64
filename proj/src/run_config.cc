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

#include "advframe/run_config.h"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "advframe/hash.h"

namespace advframe {

namespace {

using Setter = std::function<void(RunConfig &, const std::string &)>;

std::string Unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

long ToLong(const std::string &key, const std::string &v) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double ToDouble(const std::string &key, const std::string &v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ValidationError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool ToBool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

std::vector<CorpusRef> ParseCorpusRefs(const std::string &key, const std::string &v) {
  std::vector<CorpusRef> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (item.empty()) continue;
    const auto colon = item.rfind(':');
    if (colon == std::string::npos) throw ValidationError(key + ": expected path:domain, got '" + item + "'");
    out.push_back({item.substr(0, colon), static_cast<int>(ToLong(key, item.substr(colon + 1)))});
  }
  return out;
}

namespace {

#define INT_FIELD(section, name, expr) \
  {section "." #name, [](RunConfig &c, const std::string &v) { expr = static_cast<decltype(expr)>(ToLong(section "." #name, v)); }}
#define DOUBLE_FIELD(section, name, expr) \
  {section "." #name, [](RunConfig &c, const std::string &v) { expr = ToDouble(section "." #name, v); }}

const std::map<std::string, Setter> &Setters() {
  static const std::map<std::string, Setter> kSetters = {
      {"train.mode",
       [](RunConfig &c, const std::string &v) {
         if (v != "baseline" && v != "adversarial") {
           throw ValidationError("train.mode: expected baseline or adversarial, got '" + v + "'");
         }
         c.train.adversarial = v == "adversarial";
       }},
      DOUBLE_FIELD("train", learning_rate, c.train.learning_rate),
      INT_FIELD("train", batch_size, c.train.batch_size),
      INT_FIELD("train", epochs, c.train.epochs),
      INT_FIELD("train", seed, c.train.seed),
      INT_FIELD("net", word_dim, c.net.word_dim),
      INT_FIELD("net", lemma_dim, c.net.lemma_dim),
      INT_FIELD("net", pos_dim, c.net.pos_dim),
      INT_FIELD("net", feature_dim, c.net.feature_dim),
      INT_FIELD("net", hidden_size, c.net.hidden_size),
      INT_FIELD("net", n_layers, c.net.n_layers),
      INT_FIELD("net", conv_window, c.net.conv_window),
      INT_FIELD("net", conv_channels, c.net.conv_channels),
      INT_FIELD("net", n_domains, c.net.n_domains),
      DOUBLE_FIELD("net", dropout_rate, c.net.dropout_rate),
      DOUBLE_FIELD("decoder", delta, c.decoder.delta),
      {"decoder.use_coherence_filter",
       [](RunConfig &c, const std::string &v) {
         c.decoder.use_coherence_filter = ToBool("decoder.use_coherence_filter", v);
       }},
      {"decoder.mode",
       [](RunConfig &c, const std::string &v) {
         if (v == "constrained") {
           c.decoder.mode = DecodeMode::kConstrainedExact;
         } else if (v == "greedy") {
           c.decoder.mode = DecodeMode::kGreedy;
         } else {
           throw ValidationError("decoder.mode: expected constrained or greedy, got '" + v + "'");
         }
       }},
      {"paths.lexicon", [](RunConfig &c, const std::string &v) { c.paths.lexicon = v; }},
      {"paths.train",
       [](RunConfig &c, const std::string &v) { c.paths.train = ParseCorpusRefs("paths.train", v); }},
      {"paths.val", [](RunConfig &c, const std::string &v) { c.paths.val = v; }},
      {"paths.test", [](RunConfig &c, const std::string &v) { c.paths.test = v; }},
      INT_FIELD("synth", seed, c.synth.seed),
      INT_FIELD("synth", n_train_written, c.synth.n_train_written),
      INT_FIELD("synth", n_train_spoken, c.synth.n_train_spoken),
      INT_FIELD("synth", n_test, c.synth.n_test),
      INT_FIELD("synth", vocab_size, c.synth.vocab_size),
      INT_FIELD("synth", n_frames, c.synth.n_frames),
      INT_FIELD("synth", fes_per_frame, c.synth.fes_per_frame),
      DOUBLE_FIELD("synth", null_lu_rate_written, c.synth.null_lu_rate_written),
      DOUBLE_FIELD("synth", null_lu_rate_spoken, c.synth.null_lu_rate_spoken),
      DOUBLE_FIELD("synth", filler_rate_spoken, c.synth.filler_rate_spoken),
      DOUBLE_FIELD("synth", asr_wer_target, c.synth.asr_wer_target),
      INT_FIELD("experiment", n_seeds, c.experiment.n_seeds),
      DOUBLE_FIELD("experiment", val_fraction, c.experiment.val_fraction),
      INT_FIELD("experiment", probe_epochs, c.experiment.probe.epochs),
      INT_FIELD("experiment", probe_batch_size, c.experiment.probe.batch_size),
      DOUBLE_FIELD("experiment", probe_learning_rate, c.experiment.probe.learning_rate),
      DOUBLE_FIELD("experiment", probe_train_fraction, c.experiment.probe.train_fraction),
  };
  return kSetters;
}

#undef INT_FIELD
#undef DOUBLE_FIELD

}  // namespace

void RunConfig::Validate() const {
  net.Validate();
  train.Validate();
  decoder.Validate();
  synth.Validate();
  if (experiment.n_seeds < 1) throw ValidationError("experiment.n_seeds must be >= 1");
  if (!(experiment.val_fraction > 0.0 && experiment.val_fraction < 1.0)) {
    throw ValidationError("experiment.val_fraction must lie in (0, 1)");
  }
  if (experiment.probe.epochs < 0 || experiment.probe.batch_size < 1 ||
      !(experiment.probe.learning_rate > 0.0)) {
    throw ValidationError("invalid probe budget");
  }
  for (const auto &ref : paths.train) {
    if (ref.domain < 0 || ref.domain >= net.n_domains) {
      throw ValidationError("paths.train: domain " + std::to_string(ref.domain) + " of " +
                            ref.path + " outside [0, net.n_domains)");
    }
  }
}

std::string RunConfig::Echo() const {
  nlohmann::json j;
  j["train"] = {{"mode", train.adversarial ? "adversarial" : "baseline"},
                {"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"epochs", train.epochs},
                {"seed", train.seed}};
  j["net"] = {{"word_dim", net.word_dim},         {"lemma_dim", net.lemma_dim},
              {"pos_dim", net.pos_dim},           {"feature_dim", net.feature_dim},
              {"hidden_size", net.hidden_size},   {"n_layers", net.n_layers},
              {"conv_window", net.conv_window},   {"conv_channels", net.conv_channels},
              {"n_domains", net.n_domains},       {"dropout_rate", net.dropout_rate}};
  j["decoder"] = {{"delta", decoder.delta},
                  {"use_coherence_filter", decoder.use_coherence_filter},
                  {"mode", decoder.mode == DecodeMode::kGreedy ? "greedy" : "constrained"}};
  nlohmann::json train_refs = nlohmann::json::array();
  for (const auto &r : paths.train) train_refs.push_back({{"path", r.path}, {"domain", r.domain}});
  j["paths"] = {{"lexicon", paths.lexicon}, {"train", train_refs}, {"val", paths.val},
                {"test", paths.test}};
  j["synth"] = {{"seed", synth.seed},
                {"n_train_written", synth.n_train_written},
                {"n_train_spoken", synth.n_train_spoken},
                {"n_test", synth.n_test},
                {"vocab_size", synth.vocab_size},
                {"n_frames", synth.n_frames},
                {"fes_per_frame", synth.fes_per_frame},
                {"null_lu_rate_written", synth.null_lu_rate_written},
                {"null_lu_rate_spoken", synth.null_lu_rate_spoken},
                {"filler_rate_spoken", synth.filler_rate_spoken},
                {"asr_wer_target", synth.asr_wer_target}};
  j["experiment"] = {{"n_seeds", experiment.n_seeds},
                     {"val_fraction", experiment.val_fraction},
                     {"probe_epochs", experiment.probe.epochs},
                     {"probe_batch_size", experiment.probe.batch_size},
                     {"probe_learning_rate", experiment.probe.learning_rate},
                     {"probe_train_fraction", experiment.probe.train_fraction}};
  return j.dump();
}

std::string RunConfig::Hash() const { return Sha256Hex(Echo()); }

RunConfig ParseRunConfig(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ValidationError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig config;
  const auto &setters = Setters();
  for (const auto &[section, body] : tree) {
    if (body.empty()) throw ValidationError("config: key '" + section + "' outside a section");
    for (const auto &[key, value] : body) {
      const std::string full = section + "." + key;
      auto it = setters.find(full);
      if (it == setters.end()) throw ValidationError("config: unknown key '" + full + "'");
      it->second(config, Unquote(Trim(value.get_value<std::string>())));
    }
  }
  config.Validate();
  return config;
}

RunConfig LoadRunConfig(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str());
}

}  // namespace advframe
