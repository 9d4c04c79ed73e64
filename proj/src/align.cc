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

#include "advframe/align.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "advframe/error.h"

namespace advframe {

namespace {

bool SameToken(const std::string &a, const std::string &b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

int CountOps(const Alignment &a, EditOp op) {
  return static_cast<int>(std::count_if(a.ops.begin(), a.ops.end(),
                                        [op](const AlignedPair &p) { return p.op == op; }));
}

std::string PercentName(double lo, double hi) {
  auto pct = [](double v) {
    double p = v * 100.0;
    return std::abs(p - std::round(p)) < 1e-9 ? std::to_string(static_cast<long>(std::round(p)))
                                              : std::to_string(p);
  };
  if (std::isinf(hi)) return pct(lo) + "+";
  return pct(lo) + "-" + pct(hi);
}

}  // namespace

int Alignment::substitutions() const { return CountOps(*this, EditOp::kSubstitute); }
int Alignment::deletions() const { return CountOps(*this, EditOp::kDelete); }
int Alignment::insertions() const { return CountOps(*this, EditOp::kInsert); }

Alignment Align(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<int> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int & { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      int diag = at(i - 1, j - 1) + (SameToken(ref[i - 1], hyp[j - 1]) ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  Alignment out;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      bool same = SameToken(ref[i - 1], hyp[j - 1]);
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        out.ops.push_back({same ? EditOp::kMatch : EditOp::kSubstitute,
                           static_cast<int>(i - 1), static_cast<int>(j - 1)});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      out.ops.push_back({EditOp::kDelete, static_cast<int>(i - 1), -1});
      --i;
      continue;
    }
    out.ops.push_back({EditOp::kInsert, -1, static_cast<int>(j - 1)});
    --j;
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

double WordErrorRate(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.empty()) throw ValidationError("WER is undefined for an empty reference");
  return static_cast<double>(Align(ref, hyp).distance()) / static_cast<double>(ref.size());
}

std::vector<std::string> Surfaces(std::span<const Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) out.push_back(t.surface);
  return out;
}

ProjectionStats &ProjectionStats::operator+=(const ProjectionStats &o) {
  leading_i_repairs += o.leading_i_repairs;
  dropped_spans += o.dropped_spans;
  inserted_tokens += o.inserted_tokens;
  inserted_inside_spans += o.inserted_inside_spans;
  excluded_samples += o.excluded_samples;
  return *this;
}

Projection ProjectAnnotations(const Sample &ref, std::span<const Token> hyp,
                              const FrameLexicon &lexicon) {
  if (!ref.gold) throw ValidationError("projection needs a gold annotation");
  Projection result;
  const auto ref_words = Surfaces(ref.tokens);
  const auto hyp_words = Surfaces(hyp);
  const Alignment alignment = Align(ref_words, hyp_words);
  result.wer = static_cast<double>(alignment.distance()) /
               static_cast<double>(std::max<std::size_t>(1, ref_words.size()));

  const std::vector<JointLabel> ref_labels = EncodeLabels(ref);
  std::vector<JointLabel> labels(hyp.size());
  std::vector<int> source(hyp.size(), -1);
  int target_lo = std::numeric_limits<int>::max();
  int target_hi = -1;
  for (const auto &p : alignment.ops) {
    if (p.op == EditOp::kInsert) {
      ++result.stats.inserted_tokens;
      continue;
    }
    if (p.op == EditOp::kDelete) continue;
    source[p.hyp] = p.ref;
    labels[p.hyp] = ref_labels[p.ref];
    if (ref.target.contains(p.ref)) {
      target_lo = std::min(target_lo, p.hyp);
      target_hi = std::max(target_hi, p.hyp);
    }
  }
  if (target_hi < 0) {
    result.stats.excluded_samples = 1;
    return result;
  }

  // Inserted tokens strictly inside a labelled reference span.
  for (std::size_t j = 0; j < hyp.size(); ++j) {
    if (source[j] >= 0) continue;
    int prev = -1, next = -1;
    for (int k = static_cast<int>(j) - 1; k >= 0 && prev < 0; --k) prev = source[k];
    for (std::size_t k = j + 1; k < hyp.size() && next < 0; ++k) next = source[k];
    if (prev >= 0 && next >= 0 && ref_labels[next].bio == Bio::kI &&
        ref_labels[next].SamePayload(ref_labels[prev])) {
      ++result.stats.inserted_inside_spans;
    }
  }

  const Span target{target_lo, target_hi};
  for (int t = target.start; t <= target.end; ++t) {
    labels[t] = ref.gold->frame
                    ? JointLabel::LU(t == target.start ? Bio::kB : Bio::kI, *ref.gold->frame)
                    : JointLabel::Outside();
  }
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const JointLabel *prev = t == 0 ? nullptr : &labels[t - 1];
    if (!BioTransitionAllowed(prev, labels[t])) {
      labels[t].bio = Bio::kB;
      ++result.stats.leading_i_repairs;
    }
  }

  Sample out;
  out.tokens.assign(hyp.begin(), hyp.end());
  out.target = target;
  out.gold = DecodeLabels(labels, target, lexicon);
  out.wer = result.wer;

  // A reference span is dropped when none of its tokens survive.
  for (const auto &fe : ref.gold->elements) {
    bool survives = false;
    for (int j = 0; j < static_cast<int>(hyp.size()) && !survives; ++j) {
      survives = source[j] >= 0 && fe.span.contains(source[j]);
    }
    if (!survives) ++result.stats.dropped_spans;
  }
  result.sample = std::move(out);
  return result;
}

std::vector<double> DefaultWerEdges() { return {0.05, 0.10, 0.15, 0.20}; }

int WerBucketIndex(double wer, std::span<const double> edges) {
  int k = 0;
  while (k < static_cast<int>(edges.size()) && wer >= edges[k]) ++k;
  return k;
}

WerBuckets BucketByWer(std::span<const double> wers, std::vector<double> edges) {
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw ValidationError("WER bucket edges must be strictly increasing");
    }
  }
  WerBuckets buckets;
  buckets.edges = std::move(edges);
  const std::size_t k = buckets.edges.size() + 1;
  buckets.members.resize(k);
  for (std::size_t b = 0; b < k; ++b) {
    double lo = b == 0 ? 0.0 : buckets.edges[b - 1];
    double hi = b + 1 == k ? std::numeric_limits<double>::infinity() : buckets.edges[b];
    buckets.names.push_back(PercentName(lo, hi));
  }
  for (std::size_t i = 0; i < wers.size(); ++i) {
    buckets.members[WerBucketIndex(wers[i], buckets.edges)].push_back(static_cast<int>(i));
  }
  return buckets;
}

}  // namespace advframe
