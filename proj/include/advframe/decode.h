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

// Decoding of per-token label distributions into frame annotations:
// null-label offset, frame coherence filtering and exact BIO-constrained
// decoding.

#ifndef ADVFRAME_DECODE_H_
#define ADVFRAME_DECODE_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advframe/corpus.h"

namespace advframe {

// Dense (tokens x labels) row-major matrix of per-token scores. Masked
// entries hold -infinity.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(int tokens, int labels, double fill = 0.0)
      : tokens_(tokens), labels_(labels),
        data_(static_cast<std::size_t>(tokens) * labels, fill) {}

  int tokens() const { return tokens_; }
  int labels() const { return labels_; }
  double &at(int t, int l) { return data_[static_cast<std::size_t>(t) * labels_ + l]; }
  double at(int t, int l) const { return data_[static_cast<std::size_t>(t) * labels_ + l]; }
  std::span<double> row(int t) { return {data_.data() + static_cast<std::size_t>(t) * labels_, static_cast<std::size_t>(labels_)}; }
  std::span<const double> row(int t) const { return {data_.data() + static_cast<std::size_t>(t) * labels_, static_cast<std::size_t>(labels_)}; }
  const std::vector<double> &data() const { return data_; }

  bool operator==(const ScoreMatrix &) const = default;

 private:
  int tokens_ = 0;
  int labels_ = 0;
  std::vector<double> data_;
};

// Per-token probability distributions over a LabelSpace (index 0 is O).
using LabelDistributionSequence = ScoreMatrix;

enum class DecodeMode { kConstrainedExact, kGreedy };

struct DecoderConfig {
  double delta = 0.0;  // in (-1, 1)
  // When false, every frame in the label space is a candidate regardless of
  // the lexicon. Structural masking (one frame per sample) always applies.
  bool use_coherence_filter = true;
  DecodeMode mode = DecodeMode::kConstrainedExact;

  void Validate() const;
};

// score(O) = P(O) + delta; other entries are copied unchanged.
ScoreMatrix ApplyNullOffset(const LabelDistributionSequence &dists, double delta);

struct CoherenceResult {
  ScoreMatrix scores;
  std::optional<std::string> frame;
};

// Commits to one frame for the target and masks every incompatible label.
// The frame is the candidate with the largest LU-label mass summed over the
// target; it is rejected in favour of the null frame unless that mass
// exceeds the summed (offset) O score over the target. Target tokens may
// only carry the chosen frame's LU labels, other tokens only O or the chosen
// frame's FE labels. With a null frame every non-O label is masked.
CoherenceResult CoherenceFilter(const ScoreMatrix &adjusted, Span target,
                                const LabelSpace &labels, const FrameLexicon &lexicon,
                                const std::string &lu_lemma,
                                bool restrict_to_lexicon = true);

// Maximises sum_t log score(t, y_t) over BIO-valid sequences. Scores <= 0
// that are not masked contribute log(1e-300). Among optimal sequences the
// lexicographically smallest label-index sequence is returned. Throws
// ValidationError if a position is fully masked or no valid sequence exists.
std::vector<int> ConstrainedDecode(const ScoreMatrix &scores, const LabelSpace &labels);

// Per-token argmax (ties to the lowest index) followed by promotion of
// leading I labels to B.
std::vector<int> GreedyDecode(const ScoreMatrix &scores, const LabelSpace &labels);

// Per-token argmax without structural repair.
std::vector<int> TokenArgmax(const ScoreMatrix &scores);

// Log-domain transform shared by the decoders.
double LogScore(double score);

// offset -> coherence filter -> decode. Returns label indices.
std::vector<int> DecodeSampleLabels(const LabelDistributionSequence &dists,
                                    const Sample &sample, const LabelSpace &labels,
                                    const FrameLexicon &lexicon,
                                    const DecoderConfig &config);

FrameAnnotation DecodeSample(const LabelDistributionSequence &dists, const Sample &sample,
                             const LabelSpace &labels, const FrameLexicon &lexicon,
                             const DecoderConfig &config);

std::vector<JointLabel> ToJointLabels(std::span<const int> indices, const LabelSpace &labels);

}  // namespace advframe

#endif  // ADVFRAME_DECODE_H_
