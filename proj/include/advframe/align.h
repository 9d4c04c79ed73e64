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

// Reference/hypothesis token alignment, word error rate, and projection of
// gold frame annotations onto ASR hypotheses.

#ifndef ADVFRAME_ALIGN_H_
#define ADVFRAME_ALIGN_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advframe/corpus.h"

namespace advframe {

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

struct AlignedPair {
  EditOp op;
  int ref = -1;  // -1 for insertions
  int hyp = -1;  // -1 for deletions

  bool operator==(const AlignedPair &) const = default;
};

struct Alignment {
  std::vector<AlignedPair> ops;

  int substitutions() const;
  int deletions() const;
  int insertions() const;
  int distance() const { return substitutions() + deletions() + insertions(); }
};

// Minimum edit distance alignment with unit costs and case-insensitive token
// comparison. Ties prefer match > substitute > delete > insert.
Alignment Align(std::span<const std::string> ref, std::span<const std::string> hyp);

// (S + D + I) / |ref|. Throws ValidationError on an empty reference.
double WordErrorRate(std::span<const std::string> ref,
                     std::span<const std::string> hyp);

std::vector<std::string> Surfaces(std::span<const Token> tokens);

struct ProjectionStats {
  int leading_i_repairs = 0;
  int dropped_spans = 0;
  int inserted_tokens = 0;
  int inserted_inside_spans = 0;  // labelled O
  int excluded_samples = 0;       // whole LU span deleted

  ProjectionStats &operator+=(const ProjectionStats &o);
};

struct Projection {
  std::optional<Sample> sample;  // nullopt when excluded
  double wer = 0.0;
  ProjectionStats stats;
};

// Transfers the gold annotation of `ref` onto `hyp`: aligned tokens inherit
// their reference label, inserted tokens are O, and the label sequence is
// repaired to BIO validity. The projected sample records its sentence WER.
Projection ProjectAnnotations(const Sample &ref, std::span<const Token> hyp,
                              const FrameLexicon &lexicon);

// Default edges of the WER breakdown: [0,5) [5,10) [10,15) [15,20) [20,inf).
std::vector<double> DefaultWerEdges();

struct WerBuckets {
  std::vector<double> edges;
  std::vector<std::string> names;
  std::vector<std::vector<int>> members;  // sample indices per bucket
};

// Partitions samples by WER; bucket k holds edges[k-1] <= wer < edges[k].
// Throws ValidationError if edges are not strictly increasing.
WerBuckets BucketByWer(std::span<const double> wers, std::vector<double> edges);
int WerBucketIndex(double wer, std::span<const double> edges);

}  // namespace advframe

#endif  // ADVFRAME_ALIGN_H_
