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

#include "advframe/eval.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "advframe/align.h"

namespace advframe {

using json = nlohmann::json;

namespace {

void CheckAligned(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ValidationError("gold and prediction counts differ: " + std::to_string(a) + " vs " +
                          std::to_string(b));
  }
}

std::vector<FrameElement> Kept(const std::optional<std::string> &frame,
                               const std::vector<FrameElement> &fes, const FeFilter &keep) {
  std::vector<FrameElement> out;
  for (const auto &fe : fes) {
    if (!keep || keep(frame.value_or(""), fe)) out.push_back(fe);
  }
  return out;
}

std::string TriggerClass(const Sample &s) {
  const std::string &pos = s.tokens.at(s.target.start).pos;
  if (!pos.empty() && (pos[0] == 'V' || pos[0] == 'v')) return "verbal";
  if (!pos.empty() && (pos[0] == 'N' || pos[0] == 'n')) return "nominal";
  return "other";
}

json PrfJson(const Prf &p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"tp", p.counts.tp},        {"fp", p.counts.fp},  {"fn", p.counts.fn}};
}

}  // namespace

Prf Prf::From(const Counts &c) {
  Prf p;
  p.counts = c;
  p.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  p.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  p.f1 = p.precision + p.recall > 0.0
             ? 2.0 * p.precision * p.recall / (p.precision + p.recall)
             : 0.0;
  return p;
}

Counts FrameIdCounts(const FrameAnnotation &gold, const FrameAnnotation &pred) {
  Counts c;
  if (gold.frame && pred.frame) {
    if (*gold.frame == *pred.frame) {
      c.tp = 1;
    } else {
      c.fp = 1;
      c.fn = 1;
    }
  } else if (pred.frame) {
    c.fp = 1;
  } else if (gold.frame) {
    c.fn = 1;
  }
  return c;
}

Counts ArgIdCounts(const FrameAnnotation &gold, const FrameAnnotation &pred,
                   const FeFilter &keep) {
  const auto g = Kept(gold.frame, gold.elements, keep);
  const auto h = Kept(pred.frame, pred.elements, keep);
  Counts c;
  const bool frame_ok = gold.frame && pred.frame && *gold.frame == *pred.frame;
  if (!frame_ok) {
    c.fp = static_cast<long>(h.size());
    c.fn = static_cast<long>(g.size());
    return c;
  }
  struct Pair {
    int overlap, gi, hi;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < static_cast<int>(g.size()); ++i) {
    for (int j = 0; j < static_cast<int>(h.size()); ++j) {
      if (g[i].name != h[j].name) continue;
      const int ov = g[i].span.overlap(h[j].span);
      if (ov >= 1) pairs.push_back({ov, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [&](const Pair &a, const Pair &b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (g[a.gi].span.start != g[b.gi].span.start) return g[a.gi].span.start < g[b.gi].span.start;
    if (h[a.hi].span.start != h[b.hi].span.start) return h[a.hi].span.start < h[b.hi].span.start;
    return std::tie(a.gi, a.hi) < std::tie(b.gi, b.hi);
  });
  std::vector<char> g_used(g.size(), 0), h_used(h.size(), 0);
  for (const auto &p : pairs) {
    if (g_used[p.gi] || h_used[p.hi]) continue;
    g_used[p.gi] = h_used[p.hi] = 1;
    ++c.tp;
  }
  c.fp = static_cast<long>(h.size()) - c.tp;
  c.fn = static_cast<long>(g.size()) - c.tp;
  return c;
}

Prf ScoreFrameId(std::span<const FrameAnnotation> gold, std::span<const FrameAnnotation> pred) {
  CheckAligned(gold.size(), pred.size());
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) c += FrameIdCounts(gold[i], pred[i]);
  return Prf::From(c);
}

Prf ScoreArgIdSoft(std::span<const FrameAnnotation> gold, std::span<const FrameAnnotation> pred) {
  CheckAligned(gold.size(), pred.size());
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) c += ArgIdCounts(gold[i], pred[i]);
  return Prf::From(c);
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<double> DefaultDeltaGrid() {
  std::vector<double> grid;
  for (int k = -20; k <= 20; ++k) grid.push_back(0.04 * k);
  return grid;
}

std::vector<FrameAnnotation> DecodeAll(std::span<const LabelDistributionSequence> dists,
                                       std::span<const Sample> samples, const LabelSpace &labels,
                                       const FrameLexicon &lexicon, const DecoderConfig &config) {
  CheckAligned(samples.size(), dists.size());
  std::vector<FrameAnnotation> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.push_back(DecodeSample(dists[i], samples[i], labels, lexicon, config));
  }
  return out;
}

SweepResult SweepDelta(std::span<const LabelDistributionSequence> dists,
                       std::span<const Sample> samples, const LabelSpace &labels,
                       const FrameLexicon &lexicon, std::span<const double> grid,
                       const DecoderConfig &base) {
  if (grid.empty()) throw ValidationError("empty delta grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > -1.0 && grid[k] < 1.0)) throw ValidationError("delta outside (-1, 1)");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw ValidationError("delta grid must be increasing");
  }
  std::vector<FrameAnnotation> gold;
  for (const Sample &s : samples) {
    if (!s.gold) throw ValidationError("sweep needs gold annotations");
    gold.push_back(*s.gold);
  }
  SweepResult result;
  result.ai_fmax = -1.0;
  for (double delta : grid) {
    DecoderConfig cfg = base;
    cfg.delta = delta;
    const auto pred = DecodeAll(dists, samples, labels, lexicon, cfg);
    const Prf ai = ScoreArgIdSoft(gold, pred);
    const Prf fi = ScoreFrameId(gold, pred);
    result.curve.push_back({delta, ai.precision, ai.recall, ai.f1});
    result.fi_curve.push_back({delta, fi.precision, fi.recall, fi.f1});
    if (ai.f1 > result.ai_fmax) {
      result.ai_fmax = ai.f1;
      result.fmax_delta = delta;
    }
    result.fi_fmax = std::max(result.fi_fmax, fi.f1);
  }
  return result;
}

SweepResult SweepDelta(const TaggerModel &model, const Corpus &corpus, const FrameLexicon &lexicon,
                       std::span<const double> grid, const DecoderConfig &base) {
  const auto dists = model.Predict(corpus.samples);
  return SweepDelta(dists, corpus.samples, model.labels, lexicon, grid, base);
}

// ---------------------------------------------------------------------------
// Breakdowns

std::vector<BreakdownRow> BreakdownReport(std::span<const Sample> gold,
                                          std::span<const FrameAnnotation> pred,
                                          const FrameLexicon &lexicon,
                                          const std::vector<double> &wer_edges) {
  CheckAligned(gold.size(), pred.size());
  for (const Sample &s : gold) {
    if (!s.gold) throw ValidationError("breakdown needs gold annotations");
  }
  std::vector<BreakdownRow> rows;
  auto add_ai = [&](const std::string &factor, const std::string &value,
                    const std::function<bool(std::size_t)> &in_group, const FeFilter &keep) {
    Counts c;
    long support = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (!in_group(i)) continue;
      c += ArgIdCounts(*gold[i].gold, pred[i], keep);
      support += static_cast<long>(Kept(gold[i].gold->frame, gold[i].gold->elements, keep).size());
    }
    if (support > 0) rows.push_back({factor, value, Prf::From(c), support});
  };
  auto all = [](std::size_t) { return true; };

  for (bool core : {true, false}) {
    add_ai("fe_type", core ? "core" : "non-core", all,
           [&](const std::string &frame, const FrameElement &fe) {
             auto flag = lexicon.IsCore(frame, fe.name);
             return flag.value_or(fe.core) == core;
           });
  }
  for (const char *cls : {"verbal", "nominal", "other"}) {
    add_ai("trigger", cls, [&](std::size_t i) { return TriggerClass(gold[i]) == cls; }, {});
  }
  if (!gold.empty()) {
    std::vector<int> lengths;
    for (const Sample &s : gold) lengths.push_back(s.size());
    std::nth_element(lengths.begin(), lengths.begin() + (lengths.size() - 1) / 2, lengths.end());
    const int median = lengths[(lengths.size() - 1) / 2];
    add_ai("length", "short", [&](std::size_t i) { return gold[i].size() <= median; }, {});
    add_ai("length", "long", [&](std::size_t i) { return gold[i].size() > median; }, {});
  }
  const bool have_wer = !gold.empty() && std::all_of(gold.begin(), gold.end(),
                                                     [](const Sample &s) { return s.wer.has_value(); });
  if (have_wer) {
    std::vector<double> wers;
    for (const Sample &s : gold) wers.push_back(*s.wer);
    const WerBuckets buckets = BucketByWer(wers, wer_edges);
    for (std::size_t b = 0; b < buckets.names.size(); ++b) {
      std::set<int> members(buckets.members[b].begin(), buckets.members[b].end());
      add_ai("wer", buckets.names[b],
             [&](std::size_t i) { return members.count(static_cast<int>(i)) > 0; }, {});
    }
  } else if (!gold.empty()) {
    spdlog::info("samples lack WER values; WER breakdown omitted");
  }

  std::map<std::string, std::vector<std::size_t>> by_lemma;
  for (std::size_t i = 0; i < gold.size(); ++i) by_lemma[gold[i].lu_lemma()].push_back(i);
  for (const auto &[lemma, idx] : by_lemma) {
    Counts c;
    for (std::size_t i : idx) c += FrameIdCounts(*gold[i].gold, pred[i]);
    rows.push_back({"lu", lemma, Prf::From(c), static_cast<long>(idx.size())});
  }
  return rows;
}

EvalReport Evaluate(std::span<const Sample> gold, std::span<const FrameAnnotation> pred,
                    const FrameLexicon &lexicon) {
  CheckAligned(gold.size(), pred.size());
  std::vector<FrameAnnotation> g;
  for (const Sample &s : gold) {
    if (!s.gold) throw ValidationError("evaluation needs gold annotations");
    g.push_back(*s.gold);
  }
  EvalReport r;
  r.fi = ScoreFrameId(g, pred);
  r.ai = ScoreArgIdSoft(g, pred);
  r.breakdowns = BreakdownReport(gold, pred, lexicon, DefaultWerEdges());
  return r;
}

std::string EvalReport::ToJson() const {
  json j;
  j["fi"] = PrfJson(fi);
  j["ai"] = PrfJson(ai);
  j["fmax_delta"] = fmax_delta;
  j["curve"] = json::array();
  for (const auto &p : curve) {
    j["curve"].push_back(
        {{"delta", p.delta}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}});
  }
  j["breakdowns"] = json::array();
  for (const auto &row : breakdowns) {
    json r = PrfJson(row.score);
    r["factor"] = row.factor;
    r["value"] = row.value;
    r["support"] = row.support;
    j["breakdowns"].push_back(r);
  }
  return j.dump(2);
}

std::string EvalReport::CurveTsv() const {
  std::string out = "# recall\tprecision\n";
  for (const auto &p : curve) {
    out += fmt::format("{:.6f}\t{:.6f}\n", p.recall, p.precision);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probe

double TrainAndScoreHead(std::span<const FrozenBatch> train, std::span<const FrozenBatch> test,
                         const NetConfig &config, const ProbeConfig &probe) {
  Parameters head;
  AddDomainHead(head, config, probe.seed);
  std::mt19937_64 rng(probe.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < probe.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k : order) {
      const FrozenBatch &fb = train[k];
      Tape tape(&head);
      auto logits = DomainHeadLogits(tape, tape.Constant(fb.hidden), fb.batch, config);
      auto loss = tape.SoftmaxCrossEntropy(logits, fb.batch.domains, 1.0 / fb.batch.batch);
      tape.Backward(loss);
      const GradientMap grads = tape.ParamGradients();
      for (const auto &[name, g] : grads) {
        NumericArray &theta = head.at(name);
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= probe.learning_rate * g[i];
      }
    }
  }
  long correct = 0;
  long total = 0;
  for (const FrozenBatch &fb : test) {
    Tape tape(&head);
    auto logits = DomainHeadLogits(tape, tape.Constant(fb.hidden), fb.batch, config);
    const Matrix &z = tape.value(logits);
    for (Eigen::Index b = 0; b < z.cols(); ++b) {
      Eigen::Index best = 0;
      z.col(b).maxCoeff(&best);
      correct += best == fb.batch.domains[b];
      ++total;
    }
  }
  return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

double ProbeDomainAccuracy(const Parameters &encoder, const NetConfig &config,
                           const FeatureVocab &vocab, const LabelSpace &labels,
                           std::span<const ProbeSample> data, const ProbeConfig &probe) {
  std::set<int> domains;
  for (const auto &d : data) domains.insert(d.domain);
  if (domains.size() < 2) throw ValidationError("probe corpus needs at least two domains");
  if (!(probe.train_fraction > 0.0 && probe.train_fraction < 1.0)) {
    throw ValidationError("probe train_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(probe.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::lround(probe.train_fraction * data.size()));

  auto freeze = [&](std::size_t begin, std::size_t end) {
    std::vector<FrozenBatch> out;
    for (std::size_t s = begin; s < end; s += probe.batch_size) {
      const std::size_t e = std::min(end, s + probe.batch_size);
      std::vector<const Sample *> samples;
      std::vector<int> ids;
      for (std::size_t k = s; k < e; ++k) {
        samples.push_back(data[idx[k]].sample);
        ids.push_back(data[idx[k]].domain);
      }
      FrozenBatch fb{MakeBatch(samples, ids, vocab, labels, config.n_domains), {}};
      fb.hidden = EncodeHidden(encoder, config, fb.batch);
      out.push_back(std::move(fb));
    }
    return out;
  };
  const auto train = freeze(0, n_train);
  const auto test = freeze(n_train, data.size());
  return TrainAndScoreHead(train, test, config, probe);
}

std::pair<double, double> ProbeDomainInvariance(const Parameters &a, const Parameters &b,
                                                const NetConfig &config,
                                                const FeatureVocab &vocab,
                                                const LabelSpace &labels,
                                                std::span<const ProbeSample> data,
                                                const ProbeConfig &probe) {
  return {ProbeDomainAccuracy(a, config, vocab, labels, data, probe),
          ProbeDomainAccuracy(b, config, vocab, labels, data, probe)};
}

}  // namespace advframe
