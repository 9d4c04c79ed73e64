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

#include "advframe/tagger.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "advframe/hash.h"

namespace advframe {

using json = nlohmann::json;

namespace {

constexpr double kInitRange = 0.08;

std::uint64_t NameKey(const std::string &name) {
  return std::stoull(Sha256Hex(name).substr(0, 16), nullptr, 16);
}

// Embedding tables draw from N(0, 1); weight matrices from U(-0.08, 0.08).
void InitArray(NumericArray &a, const std::string &name, std::uint64_t seed, bool zero) {
  if (zero) return;
  std::mt19937_64 rng(seed ^ NameKey(name));
  if (name.rfind("emb/", 0) == 0) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto &v : a.values()) v = dist(rng);
    return;
  }
  std::uniform_real_distribution<double> dist(-kInitRange, kInitRange);
  for (auto &v : a.values()) v = dist(rng);
}

void AddParam(Parameters &p, const std::string &name, std::vector<int> shape, ParamGroup group,
              std::uint64_t seed) {
  const bool bias = shape.size() == 1;
  InitArray(p.Add(name, std::move(shape), group), name, seed, bias);
}

int InputDim(const NetConfig &c, std::size_t arity) {
  return c.word_dim + c.lemma_dim + c.pos_dim + c.feature_dim * static_cast<int>(arity) + 1;
}

std::string LayerName(int layer, bool forward, const char *what) {
  return "l" + std::to_string(layer) + (forward ? "/fwd/" : "/bwd/") + what;
}

// Row vector broadcast to `rows` rows.
Matrix Broadcast(const std::vector<double> &row, int rows, int start, int count) {
  Eigen::Map<const Eigen::RowVectorXd> r(row.data() + start, count);
  return r.replicate(rows, 1);
}

Tape::Var GruDirection(Tape &tape, Tape::Var x, const Batch &batch, int layer, bool forward,
                       int hidden, std::vector<Tape::Var> &outputs) {
  const int T = batch.steps;
  const int B = batch.batch;
  const int H = hidden;
  auto W = tape.Param(LayerName(layer, forward, "W"));
  auto U_zr = tape.Param(LayerName(layer, forward, "U_zr"));
  auto U_n = tape.Param(LayerName(layer, forward, "U_n"));
  auto b = tape.Param(LayerName(layer, forward, "b"));
  auto xw = tape.AddBias(tape.MatMul(W, x), b);

  outputs.assign(T, {});
  auto h = tape.Constant(Matrix::Zero(H, B));
  for (int k = 0; k < T; ++k) {
    const int t = forward ? k : T - 1 - k;
    auto xt = tape.Cols(xw, t * B, B);
    auto zr = tape.Sigmoid(tape.Add(tape.Rows(xt, 0, 2 * H), tape.MatMul(U_zr, h)));
    auto z = tape.Rows(zr, 0, H);
    auto r = tape.Rows(zr, H, H);
    auto n = tape.Tanh(tape.Add(tape.Rows(xt, 2 * H, H), tape.MatMul(U_n, tape.Mul(r, h))));
    auto step = tape.Mul(z, tape.Sub(n, h));
    bool padded = false;
    for (int j = 0; j < B; ++j) padded = padded || batch.mask[t * B + j] == 0.0;
    if (padded) step = tape.MulConst(step, Broadcast(batch.mask, H, t * B, B));
    h = tape.Add(h, step);
    outputs[t] = h;
  }
  return tape.ConcatCols(outputs);
}

json NetConfigJson(const NetConfig &c) {
  return {{"word_dim", c.word_dim},       {"lemma_dim", c.lemma_dim},
          {"pos_dim", c.pos_dim},         {"feature_dim", c.feature_dim},
          {"hidden_size", c.hidden_size}, {"n_layers", c.n_layers},
          {"conv_window", c.conv_window}, {"conv_channels", c.conv_channels},
          {"n_domains", c.n_domains},     {"dropout_rate", c.dropout_rate}};
}

NetConfig NetConfigFromJson(const json &j) {
  NetConfig c;
  c.word_dim = j.at("word_dim");
  c.lemma_dim = j.at("lemma_dim");
  c.pos_dim = j.at("pos_dim");
  c.feature_dim = j.at("feature_dim");
  c.hidden_size = j.at("hidden_size");
  c.n_layers = j.at("n_layers");
  c.conv_window = j.at("conv_window");
  c.conv_channels = j.at("conv_channels");
  c.n_domains = j.at("n_domains");
  c.dropout_rate = j.at("dropout_rate");
  c.Validate();
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration and vocabulary

void NetConfig::Validate() const {
  const std::pair<const char *, int> dims[] = {
      {"word_dim", word_dim},       {"lemma_dim", lemma_dim},     {"pos_dim", pos_dim},
      {"feature_dim", feature_dim}, {"hidden_size", hidden_size}, {"conv_window", conv_window},
      {"conv_channels", conv_channels}};
  for (const auto &[name, value] : dims) {
    if (value <= 0) throw ValidationError(std::string(name) + " must be positive");
  }
  if (n_layers < 1) throw ValidationError("n_layers must be >= 1");
  if (n_domains < 2) throw ValidationError("n_domains must be >= 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError("dropout_rate must lie in [0, 1)");
  }
}

void TrainConfig::Validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (pinned_lambda && !(*pinned_lambda >= 0.0 && *pinned_lambda < 1.0)) {
    throw ValidationError("pinned lambda must lie in [0, 1)");
  }
}

FeatureVocab FeatureVocab::Build(std::span<const Corpus *const> corpora) {
  FeatureVocab v;
  std::optional<std::size_t> arity;
  for (const Corpus *c : corpora) {
    for (const Sample &s : c->samples) {
      for (const Token &tok : s.tokens) {
        if (!arity) {
          arity = tok.extra_features.size();
          v.features_.resize(*arity);
        } else if (tok.extra_features.size() != *arity) {
          throw ValidationError("inconsistent feature arity in corpus " + c->name);
        }
        Insert(v.words_, tok.surface);
        Insert(v.lemmas_, tok.lemma);
        Insert(v.pos_, tok.pos);
        for (std::size_t k = 0; k < *arity; ++k) Insert(v.features_[k], tok.extra_features[k]);
      }
    }
  }
  return v;
}

std::string FeatureVocab::ToJson() const {
  auto ordered = [](const Column &c) {
    std::vector<std::string> out(c.size());
    for (const auto &[s, id] : c) out[id - 1] = s;
    return out;
  };
  json j;
  j["words"] = ordered(words_);
  j["lemmas"] = ordered(lemmas_);
  j["pos"] = ordered(pos_);
  j["features"] = json::array();
  for (const auto &c : features_) j["features"].push_back(ordered(c));
  return j.dump();
}

FeatureVocab FeatureVocab::FromJson(const std::string &text) {
  FeatureVocab v;
  try {
    const json j = json::parse(text);
    auto fill = [](Column &c, const json &list) {
      for (const auto &s : list) Insert(c, s.get<std::string>());
    };
    fill(v.words_, j.at("words"));
    fill(v.lemmas_, j.at("lemmas"));
    fill(v.pos_, j.at("pos"));
    for (const auto &list : j.at("features")) fill(v.features_.emplace_back(), list);
  } catch (const json::exception &e) {
    throw ValidationError(std::string("bad vocabulary: ") + e.what());
  }
  return v;
}

// ---------------------------------------------------------------------------
// Batches and parameters

int Batch::labelled_tokens() const {
  return static_cast<int>(std::count_if(gold.begin(), gold.end(), [](int g) { return g >= 0; }));
}

Batch MakeBatch(std::span<const Sample *const> samples, std::span<const int> domain_ids,
                const FeatureVocab &vocab, const LabelSpace &labels, int n_domains, int pad_to) {
  if (samples.empty()) throw ValidationError("empty batch");
  if (domain_ids.size() != samples.size()) throw ValidationError("domain id count mismatch");
  Batch b;
  b.batch = static_cast<int>(samples.size());
  b.steps = pad_to;
  for (const Sample *s : samples) {
    if (s->size() == 0) throw ValidationError("empty sentence in batch");
    b.steps = std::max(b.steps, s->size());
  }
  const std::size_t cells = static_cast<std::size_t>(b.steps) * b.batch;
  const std::size_t arity = vocab.extra_arity();
  b.words.assign(cells, 0);
  b.lemmas.assign(cells, 0);
  b.pos.assign(cells, 0);
  b.features.assign(arity, std::vector<int>(cells, 0));
  b.marker.assign(cells, 0.0);
  b.mask.assign(cells, 0.0);
  b.gold.assign(cells, -1);

  for (int j = 0; j < b.batch; ++j) {
    const Sample &s = *samples[j];
    const int d = domain_ids[j];
    if (d < 0 || d >= n_domains) {
      throw ValidationError("domain id " + std::to_string(d) + " outside [0, " +
                            std::to_string(n_domains) + ")");
    }
    b.domains.push_back(d);
    b.lengths.push_back(s.size());
    std::vector<JointLabel> gold;
    if (s.gold) gold = EncodeLabels(s);
    for (int t = 0; t < s.size(); ++t) {
      const Token &tok = s.tokens[t];
      if (tok.extra_features.size() != arity) {
        throw ValidationError("feature arity " + std::to_string(tok.extra_features.size()) +
                              " does not match model arity " + std::to_string(arity));
      }
      const std::size_t at = static_cast<std::size_t>(t) * b.batch + j;
      b.words[at] = vocab.WordId(tok.surface);
      b.lemmas[at] = vocab.LemmaId(tok.lemma);
      b.pos[at] = vocab.PosId(tok.pos);
      for (std::size_t k = 0; k < arity; ++k) {
        b.features[k][at] = vocab.FeatureId(k, tok.extra_features[k]);
      }
      b.marker[at] = s.target.contains(t) ? 1.0 : 0.0;
      b.mask[at] = 1.0;
      if (s.gold) {
        auto idx = labels.IndexOf(gold[t]);
        if (!idx) throw ValidationError("label " + gold[t].ToString() + " not in label space");
        b.gold[at] = *idx;
      }
    }
  }
  return b;
}

Parameters InitParameters(const NetConfig &config, const FeatureVocab &vocab, int n_labels,
                          std::uint64_t seed, bool with_domain_head) {
  config.Validate();
  if (n_labels < 1) throw ValidationError("empty label space");
  Parameters p;
  const auto shared = ParamGroup::kShared;
  AddParam(p, "emb/word", {config.word_dim, vocab.word_count()}, shared, seed);
  AddParam(p, "emb/lemma", {config.lemma_dim, vocab.lemma_count()}, shared, seed);
  AddParam(p, "emb/pos", {config.pos_dim, vocab.pos_count()}, shared, seed);
  for (std::size_t k = 0; k < vocab.extra_arity(); ++k) {
    AddParam(p, "emb/feat" + std::to_string(k), {config.feature_dim, vocab.feature_count(k)},
             shared, seed);
  }
  const int H = config.hidden_size;
  int in = InputDim(config, vocab.extra_arity());
  for (int layer = 0; layer < config.n_layers; ++layer) {
    for (bool fwd : {true, false}) {
      AddParam(p, LayerName(layer, fwd, "W"), {3 * H, in}, shared, seed);
      AddParam(p, LayerName(layer, fwd, "U_zr"), {2 * H, H}, shared, seed);
      AddParam(p, LayerName(layer, fwd, "U_n"), {H, H}, shared, seed);
      AddParam(p, LayerName(layer, fwd, "b"), {3 * H}, shared, seed);
    }
    in = 2 * H;
  }
  AddParam(p, "out/W", {n_labels, 2 * H}, ParamGroup::kFrameHead, seed);
  AddParam(p, "out/b", {n_labels}, ParamGroup::kFrameHead, seed);
  if (with_domain_head) AddDomainHead(p, config, seed);
  return p;
}

void AddDomainHead(Parameters &p, const NetConfig &config, std::uint64_t seed) {
  const auto head = ParamGroup::kAdversarialHead;
  const int C = config.conv_channels;
  AddParam(p, "adv/conv/W", {C, config.conv_window * 2 * config.hidden_size}, head, seed);
  AddParam(p, "adv/conv/b", {C}, head, seed);
  AddParam(p, "adv/dec/W", {config.n_domains, C}, head, seed);
  AddParam(p, "adv/dec/b", {config.n_domains}, head, seed);
}

// ---------------------------------------------------------------------------
// Graph

TaggerGraph::TaggerGraph(const Parameters &params, const NetConfig &config, const Batch &batch,
                         const GraphOptions &options)
    : tape_(&params), batch_(batch) {
  const int TB = batch.steps * batch.batch;
  std::vector<Tape::Var> columns = {
      tape_.Gather(tape_.Param("emb/word"), batch.words),
      tape_.Gather(tape_.Param("emb/lemma"), batch.lemmas),
      tape_.Gather(tape_.Param("emb/pos"), batch.pos),
  };
  for (std::size_t k = 0; k < batch.features.size(); ++k) {
    columns.push_back(tape_.Gather(tape_.Param("emb/feat" + std::to_string(k)), batch.features[k]));
  }
  columns.push_back(tape_.Constant(Broadcast(batch.marker, 1, 0, TB)));
  auto x = tape_.ConcatRows(columns);

  std::mt19937_64 drop_rng(options.dropout_seed);
  std::vector<Tape::Var> outputs;
  for (int layer = 0; layer < config.n_layers; ++layer) {
    if (layer > 0 && options.training && config.dropout_rate > 0.0) {
      const Matrix &v = tape_.value(x);
      std::bernoulli_distribution keep(1.0 - config.dropout_rate);
      Matrix m(v.rows(), v.cols());
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = keep(drop_rng) ? 1.0 / (1.0 - config.dropout_rate) : 0.0;
      }
      x = tape_.MulConst(x, std::move(m));
    }
    std::vector<Tape::Var> dirs = {
        GruDirection(tape_, x, batch, layer, true, config.hidden_size, outputs),
        GruDirection(tape_, x, batch, layer, false, config.hidden_size, outputs),
    };
    x = tape_.ConcatRows(dirs);
  }
  hidden_ = x;

  if (options.frame_head) {
    frame_logits_ = tape_.AddBias(tape_.MatMul(tape_.Param("out/W"), hidden_),
                                  tape_.Param("out/b"));
  }
  if (options.domain_head) {
    auto h = options.route == ReversalRoute::kReversed
                 ? tape_.GradientReversal(hidden_, options.lambda)
                 : hidden_;
    domain_logits_ = DomainHeadLogits(tape_, h, batch, config);
  }
}

Tape::Var TaggerGraph::FrameLoss() {
  const int n = batch_.labelled_tokens();
  return tape_.SoftmaxCrossEntropy(frame_logits_, batch_.gold, n > 0 ? 1.0 / n : 0.0);
}

Tape::Var TaggerGraph::DomainLoss() {
  return tape_.SoftmaxCrossEntropy(domain_logits_, batch_.domains, 1.0 / batch_.batch);
}

Tape::Var DomainHeadLogits(Tape &tape, Tape::Var hidden, const Batch &batch,
                           const NetConfig &config) {
  const int B = batch.batch;
  const int rows = static_cast<int>(tape.value(hidden).rows());
  auto masked = tape.MulConst(hidden, Broadcast(batch.mask, rows, 0, batch.steps * B));
  const int half = (config.conv_window - 1) / 2;
  std::vector<Tape::Var> window;
  for (int k = -half; k < config.conv_window - half; ++k) {
    window.push_back(k == 0 ? masked : tape.ShiftCols(masked, k * B));
  }
  auto cols = tape.ConcatRows(window);
  auto conv = tape.Tanh(
      tape.AddBias(tape.MatMul(tape.Param("adv/conv/W"), cols), tape.Param("adv/conv/b")));
  auto pooled = tape.MaxOverTime(conv, batch.lengths);
  return tape.AddBias(tape.MatMul(tape.Param("adv/dec/W"), pooled), tape.Param("adv/dec/b"));
}

std::vector<LabelDistributionSequence> ForwardFrame(const Parameters &params,
                                                    const NetConfig &config, const Batch &batch) {
  TaggerGraph g(params, config, batch, {});
  const Matrix probs = ColumnSoftmax(g.tape().value(g.frame_logits()));
  std::vector<LabelDistributionSequence> out;
  const int L = static_cast<int>(probs.rows());
  for (int b = 0; b < batch.batch; ++b) {
    LabelDistributionSequence d(batch.lengths[b], L);
    for (int t = 0; t < batch.lengths[b]; ++t) {
      for (int l = 0; l < L; ++l) d.at(t, l) = probs(l, t * batch.batch + b);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<std::vector<double>> ForwardDomain(const Parameters &params, const NetConfig &config,
                                               const Batch &batch, double lambda) {
  GraphOptions opt;
  opt.frame_head = false;
  opt.domain_head = true;
  opt.lambda = lambda;
  TaggerGraph g(params, config, batch, opt);
  const Matrix probs = ColumnSoftmax(g.tape().value(g.domain_logits()));
  std::vector<std::vector<double>> out;
  for (Eigen::Index b = 0; b < probs.cols(); ++b) {
    out.emplace_back(probs.col(b).data(), probs.col(b).data() + probs.rows());
  }
  return out;
}

Matrix EncodeHidden(const Parameters &params, const NetConfig &config, const Batch &batch) {
  GraphOptions opt;
  opt.frame_head = false;
  TaggerGraph g(params, config, batch, opt);
  return g.tape().value(g.hidden());
}

LossAndGradients LossFrame(const Parameters &params, const NetConfig &config,
                           const Batch &batch) {
  TaggerGraph g(params, config, batch, {});
  auto loss = g.FrameLoss();
  g.tape().Backward(loss);
  return {g.tape().scalar(loss), g.tape().ParamGradients()};
}

LossAndGradients LossAdv(const Parameters &params, const NetConfig &config, const Batch &batch,
                         double lambda, ReversalRoute route) {
  GraphOptions opt;
  opt.frame_head = false;
  opt.domain_head = true;
  opt.lambda = lambda;
  opt.route = route;
  TaggerGraph g(params, config, batch, opt);
  auto loss = g.DomainLoss();
  g.tape().Backward(loss);
  return {g.tape().scalar(loss), g.tape().ParamGradients()};
}

StepResult ComputeStep(const Parameters &params, const NetConfig &config, const Batch &batch,
                       double lambda, bool adversarial, std::uint64_t dropout_seed) {
  GraphOptions opt;
  opt.training = true;
  opt.dropout_seed = dropout_seed;
  opt.domain_head = adversarial;
  opt.lambda = lambda;
  TaggerGraph g(params, config, batch, opt);
  Tape &tape = g.tape();
  StepResult out;
  auto lf = g.FrameLoss();
  out.loss_frame = tape.scalar(lf);
  if (adversarial) {
    auto la = g.DomainLoss();
    out.loss_adv = tape.scalar(la);
    std::vector<Tape::Var> parts = {lf, la};
    tape.Backward(tape.Sum(parts));
  } else {
    tape.Backward(lf);
  }
  GradientMap all = tape.ParamGradients();
  out.grads = GradientSet::Zeros(params);
  for (auto &[name, g_all] : all) {
    auto &dst = params.group(name) == ParamGroup::kAdversarialHead ? out.grads.adv : out.grads.frame;
    dst.at(name) = std::move(g_all);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

std::string EpochLog::ToJson() const {
  json j = {{"epoch", epoch},           {"p", progress},
            {"lambda", lambda},         {"loss_frame", loss_frame},
            {"loss_adv", loss_adv}};
  if (val) {
    j["val_fi"] = val->fi_fmax;
    j["val_ai"] = val->ai_fmax;
    j["fmax_delta"] = val->fmax_delta;
  }
  return j.dump();
}

std::vector<std::pair<int, int>> EpochOrder(std::span<const DomainCorpus> corpora,
                                            std::uint64_t seed, int epoch) {
  struct Item {
    double key;
    int corpus;
    int sample;
  };
  std::vector<Item> items;
  for (int c = 0; c < static_cast<int>(corpora.size()); ++c) {
    const int n = static_cast<int>(corpora[c].corpus->samples.size());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i = 0; i < n; ++i) items.push_back({(i + 0.5) / n, c, idx[i]});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item &a, const Item &b) {
    return a.key < b.key || (a.key == b.key && a.corpus < b.corpus);
  });
  std::vector<std::pair<int, int>> out;
  out.reserve(items.size());
  for (const auto &it : items) out.emplace_back(it.corpus, it.sample);
  return out;
}

TrainResult Train(const TrainingState &initial, const NetConfig &config,
                  const FeatureVocab &vocab, const LabelSpace &labels,
                  std::span<const DomainCorpus> corpora, const TrainConfig &train,
                  const Validator &validator) {
  config.Validate();
  train.Validate();
  if (corpora.empty()) throw ValidationError("no training corpora");
  std::set<int> domains;
  for (const auto &dc : corpora) {
    if (dc.corpus == nullptr) throw ValidationError("null training corpus");
    domains.insert(dc.domain_id);
  }
  if (train.adversarial) {
    if (domains.size() < 2) {
      throw ValidationError("adversarial training needs at least two distinct domains");
    }
    if (!initial.params.Has("adv/conv/W")) throw ValidationError("parameters lack a domain head");
  }

  TrainResult result;
  TrainingState state = initial;
  state.learning_rate = train.learning_rate;
  result.best = state;
  result.last = state;
  double best_score = -1.0;
  const int E = train.epochs;

  for (int epoch = 0; epoch < E; ++epoch) {
    const double p = E == 1 ? 0.0 : static_cast<double>(epoch) / (E - 1);
    double lambda = train.adversarial ? LambdaSchedule(p) : 0.0;
    if (train.pinned_lambda) lambda = *train.pinned_lambda;
    state.progress = p;
    state.lambda = lambda;
    state.epoch = epoch;

    const auto order = EpochOrder(corpora, train.seed, epoch);
    EpochLog log{epoch, p, lambda, 0.0, 0.0, std::nullopt};
    int n_batches = 0;
    bool failed = false;
    for (std::size_t start = 0; start < order.size() && !failed; start += train.batch_size) {
      const std::size_t end = std::min(order.size(), start + train.batch_size);
      std::vector<const Sample *> samples;
      std::vector<int> ids;
      for (std::size_t k = start; k < end; ++k) {
        const auto &dc = corpora[order[k].first];
        samples.push_back(&dc.corpus->samples[order[k].second]);
        ids.push_back(dc.domain_id);
      }
      const Batch batch = MakeBatch(samples, ids, vocab, labels, config.n_domains);
      const std::uint64_t drop_seed = train.seed * 1000003ULL + epoch * 7919ULL + n_batches;
      StepResult step = ComputeStep(state.params, config, batch, lambda, train.adversarial,
                                    drop_seed);
      if (!std::isfinite(step.loss_frame) || !std::isfinite(step.loss_adv)) {
        failed = true;
        break;
      }
      try {
        SgdStepInPlace(state, step.grads);
      } catch (const NumericalError &) {
        failed = true;
        break;
      }
      log.loss_frame += step.loss_frame;
      log.loss_adv += step.loss_adv;
      ++n_batches;
    }
    if (failed) {
      result.aborted = true;
      break;
    }
    if (n_batches > 0) {
      log.loss_frame /= n_batches;
      log.loss_adv /= n_batches;
    }
    if (validator) {
      log.val = validator(state.params);
      if (log.val->ai_fmax > best_score) {
        best_score = log.val->ai_fmax;
        result.best = state;
        result.best_epoch = epoch;
      }
    } else {
      result.best = state;
      result.best_epoch = epoch;
    }
    result.last = state;
    result.log.push_back(log);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model bundle

Checkpoint TaggerModel::ToCheckpoint() const {
  json echo;
  echo["net"] = NetConfigJson(config);
  echo["vocab"] = json::parse(vocab.ToJson());
  echo["labels"] = json::array();
  for (const auto &l : labels.labels()) echo["labels"].push_back(l.ToString());
  return {labels.Hash(), echo.dump(), params};
}

TaggerModel TaggerModel::FromCheckpoint(const Checkpoint &ckpt, const FrameLexicon &lexicon) {
  TaggerModel m;
  m.labels = BuildLabelSpace(lexicon);
  if (m.labels.Hash() != ckpt.label_space_hash) {
    throw ValidationError("checkpoint label space does not match the lexicon");
  }
  try {
    const json echo = json::parse(ckpt.config_echo);
    m.config = NetConfigFromJson(echo.at("net"));
    m.vocab = FeatureVocab::FromJson(echo.at("vocab").dump());
  } catch (const json::exception &e) {
    throw ValidationError(std::string("bad checkpoint config: ") + e.what());
  }
  m.params = ckpt.params;
  return m;
}

void TaggerModel::Save(const std::string &path) const { SaveCheckpoint(ToCheckpoint(), path); }

TaggerModel TaggerModel::Load(const std::string &path, const FrameLexicon &lexicon) {
  return FromCheckpoint(LoadCheckpoint(path, BuildLabelSpace(lexicon).Hash()), lexicon);
}

std::vector<LabelDistributionSequence> TaggerModel::Predict(std::span<const Sample> samples,
                                                            int batch_size) const {
  std::vector<LabelDistributionSequence> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<const Sample *> ptrs;
    std::vector<int> ids;
    for (std::size_t k = start; k < end; ++k) {
      ptrs.push_back(&samples[k]);
      ids.push_back(0);
    }
    // Gold labels are not needed for prediction.
    std::vector<Sample> stripped;
    stripped.reserve(ptrs.size());
    for (const Sample *s : ptrs) {
      stripped.push_back(*s);
      stripped.back().gold.reset();
    }
    for (std::size_t k = 0; k < ptrs.size(); ++k) ptrs[k] = &stripped[k];
    auto dists = ForwardFrame(params, config, MakeBatch(ptrs, ids, vocab, labels, config.n_domains));
    for (auto &d : dists) out.push_back(std::move(d));
  }
  return out;
}

}  // namespace advframe
