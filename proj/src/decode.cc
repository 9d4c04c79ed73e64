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

#include "advframe/decode.h"

#include <cmath>
#include <limits>
#include <mutex>
#include <set>

#include <spdlog/spdlog.h>

#include "advframe/error.h"

namespace advframe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kScoreFloor = 1e-300;

// One warning per lemma; ASR output can repeat the same unknown word often.
void WarnUnknownLemma(const std::string &lemma) {
  static std::mutex mu;
  static std::set<std::string> seen;
  std::lock_guard<std::mutex> lock(mu);
  if (seen.insert(lemma).second) {
    spdlog::warn("lemma '{}' not in lexicon; all frames are candidates", lemma);
  }
}

}  // namespace

void DecoderConfig::Validate() const {
  if (!(delta > -1.0 && delta < 1.0)) {
    throw ValidationError("delta must lie in (-1, 1), got " + std::to_string(delta));
  }
}

double LogScore(double score) {
  if (score == kNegInf) return kNegInf;
  if (score <= 0.0) return std::log(kScoreFloor);
  return std::log(score);
}

ScoreMatrix ApplyNullOffset(const LabelDistributionSequence &dists, double delta) {
  ScoreMatrix out = dists;
  for (int t = 0; t < out.tokens(); ++t) out.at(t, LabelSpace::kOutside) += delta;
  return out;
}

CoherenceResult CoherenceFilter(const ScoreMatrix &adjusted, Span target,
                                const LabelSpace &labels, const FrameLexicon &lexicon,
                                const std::string &lu_lemma, bool restrict_to_lexicon) {
  const int T = adjusted.tokens();
  const int L = labels.size();
  if (adjusted.labels() != L) throw ValidationError("score width does not match label space");
  if (target.start < 0 || target.end >= T || target.start > target.end) {
    throw ValidationError("target span out of bounds");
  }

  std::set<std::string> candidates;
  const std::set<std::string> *licensed = lexicon.FramesFor(lu_lemma);
  if (restrict_to_lexicon && licensed != nullptr) {
    candidates = *licensed;
  } else {
    if (restrict_to_lexicon) WarnUnknownLemma(lu_lemma);
    for (const auto &l : labels.labels()) {
      if (!l.is_outside() && l.kind == LabelKind::kLU) candidates.insert(l.frame);
    }
  }

  // LU mass per candidate over the target; ties go to the first frame in
  // name order.
  std::optional<std::string> best;
  double best_mass = kNegInf;
  for (const auto &frame : candidates) {
    auto b = labels.IndexOf(JointLabel::LU(Bio::kB, frame));
    auto i = labels.IndexOf(JointLabel::LU(Bio::kI, frame));
    if (!b || !i) continue;
    double mass = 0.0;
    for (int t = target.start; t <= target.end; ++t) {
      mass += adjusted.at(t, *b) + adjusted.at(t, *i);
    }
    if (mass > best_mass) {
      best_mass = mass;
      best = frame;
    }
  }
  double null_score = 0.0;
  for (int t = target.start; t <= target.end; ++t) {
    null_score += adjusted.at(t, LabelSpace::kOutside);
  }

  CoherenceResult result{adjusted, std::nullopt};
  if (best && best_mass > null_score) result.frame = best;

  for (int t = 0; t < T; ++t) {
    const bool in_target = target.contains(t);
    for (int l = 0; l < L; ++l) {
      const JointLabel &label = labels.at(l);
      bool keep;
      if (!result.frame) {
        keep = label.is_outside();
      } else if (in_target) {
        keep = !label.is_outside() && label.kind == LabelKind::kLU &&
               label.frame == *result.frame &&
               label.bio == (t == target.start ? Bio::kB : Bio::kI);
      } else {
        keep = label.is_outside() ||
               (label.kind == LabelKind::kFE && label.frame == *result.frame);
      }
      if (!keep) result.scores.at(t, l) = kNegInf;
    }
  }
  return result;
}

std::vector<int> ConstrainedDecode(const ScoreMatrix &scores, const LabelSpace &labels) {
  const int T = scores.tokens();
  const int L = labels.size();
  if (scores.labels() != L) throw ValidationError("score width does not match label space");
  if (T == 0) return {};
  auto ok = [&](int prev, int cur) { return labels.TransitionAllowed(prev, cur); };

  std::vector<double> logs(static_cast<std::size_t>(T) * L);
  for (int t = 0; t < T; ++t) {
    bool any = false;
    for (int l = 0; l < L; ++l) {
      double v = LogScore(scores.at(t, l));
      logs[static_cast<std::size_t>(t) * L + l] = v;
      any = any || v != kNegInf;
    }
    if (!any) throw ValidationError("all labels masked at position " + std::to_string(t));
  }
  auto lg = [&](int t, int l) { return logs[static_cast<std::size_t>(t) * L + l]; };

  // Forward pass: best prefix sum ending in each label, accumulated left to
  // right.
  std::vector<double> alpha(static_cast<std::size_t>(T) * L, kNegInf);
  auto al = [&](int t, int l) -> double & { return alpha[static_cast<std::size_t>(t) * L + l]; };
  for (int l = 0; l < L; ++l) {
    if (ok(-1, l)) al(0, l) = lg(0, l);
  }
  for (int t = 1; t < T; ++t) {
    for (int cur = 0; cur < L; ++cur) {
      if (lg(t, cur) == kNegInf) continue;
      double best = kNegInf;
      for (int prev = 0; prev < L; ++prev) {
        if (al(t - 1, prev) == kNegInf || !ok(prev, cur)) continue;
        double v = al(t - 1, prev) + lg(t, cur);
        if (v > best) best = v;
      }
      al(t, cur) = best;
    }
  }
  double optimum = kNegInf;
  for (int l = 0; l < L; ++l) optimum = std::max(optimum, al(T - 1, l));
  if (optimum == kNegInf) throw ValidationError("no BIO-valid label sequence");

  // Backward pass: states that lie on some optimal path.
  std::vector<char> live(static_cast<std::size_t>(T) * L, 0);
  auto lv = [&](int t, int l) -> char & { return live[static_cast<std::size_t>(t) * L + l]; };
  for (int l = 0; l < L; ++l) lv(T - 1, l) = al(T - 1, l) == optimum;
  for (int t = T - 2; t >= 0; --t) {
    for (int prev = 0; prev < L; ++prev) {
      if (al(t, prev) == kNegInf) continue;
      for (int cur = 0; cur < L && !lv(t, prev); ++cur) {
        lv(t, prev) = lv(t + 1, cur) && ok(prev, cur) && al(t, prev) + lg(t + 1, cur) == al(t + 1, cur);
      }
    }
  }

  // Lexicographically smallest optimal path.
  std::vector<int> path(T);
  int prev = -1;
  for (int t = 0; t < T; ++t) {
    int chosen = -1;
    for (int cur = 0; cur < L && chosen < 0; ++cur) {
      if (!lv(t, cur) || !ok(prev, cur)) continue;
      if (t > 0 && al(t - 1, prev) + lg(t, cur) != al(t, cur)) continue;
      chosen = cur;
    }
    if (chosen < 0) throw Error("constrained decode: broken back-trace");
    path[t] = chosen;
    prev = chosen;
  }
  return path;
}

std::vector<int> TokenArgmax(const ScoreMatrix &scores) {
  std::vector<int> out(scores.tokens());
  for (int t = 0; t < scores.tokens(); ++t) {
    int best = 0;
    for (int l = 1; l < scores.labels(); ++l) {
      if (scores.at(t, l) > scores.at(t, best)) best = l;
    }
    out[t] = best;
  }
  return out;
}

std::vector<int> GreedyDecode(const ScoreMatrix &scores, const LabelSpace &labels) {
  std::vector<int> path = TokenArgmax(scores);
  for (int t = 0; t < scores.tokens(); ++t) {
    if (scores.at(t, path[t]) == kNegInf) {
      throw ValidationError("all labels masked at position " + std::to_string(t));
    }
    const JointLabel *prev = t == 0 ? nullptr : &labels.at(path[t - 1]);
    const JointLabel &cur = labels.at(path[t]);
    if (!BioTransitionAllowed(prev, cur)) {
      JointLabel promoted = cur;
      promoted.bio = Bio::kB;
      auto idx = labels.IndexOf(promoted);
      path[t] = idx ? *idx : LabelSpace::kOutside;
    }
  }
  return path;
}

std::vector<int> DecodeSampleLabels(const LabelDistributionSequence &dists,
                                    const Sample &sample, const LabelSpace &labels,
                                    const FrameLexicon &lexicon,
                                    const DecoderConfig &config) {
  if (dists.tokens() != sample.size()) {
    throw ValidationError("distribution length does not match the sample");
  }
  ScoreMatrix adjusted = ApplyNullOffset(dists, config.delta);
  CoherenceResult filtered = CoherenceFilter(adjusted, sample.target, labels, lexicon,
                                             sample.lu_lemma(), config.use_coherence_filter);
  return config.mode == DecodeMode::kGreedy ? GreedyDecode(filtered.scores, labels)
                                            : ConstrainedDecode(filtered.scores, labels);
}

std::vector<JointLabel> ToJointLabels(std::span<const int> indices, const LabelSpace &labels) {
  std::vector<JointLabel> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(labels.at(i));
  return out;
}

FrameAnnotation DecodeSample(const LabelDistributionSequence &dists, const Sample &sample,
                             const LabelSpace &labels, const FrameLexicon &lexicon,
                             const DecoderConfig &config) {
  auto path = DecodeSampleLabels(dists, sample, labels, lexicon, config);
  return DecodeLabels(ToJointLabels(path, labels), sample.target, lexicon);
}

}  // namespace advframe
