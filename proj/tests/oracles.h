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

// Independent reference implementations used by the unit tests and the
// acceptance binary. Nothing here calls the library routine it checks.

#ifndef ADVFRAME_TESTS_ORACLES_H_
#define ADVFRAME_TESTS_ORACLES_H_

#include <random>
#include <string>
#include <vector>

#include "advframe/corpus.h"
#include "advframe/decode.h"
#include "advframe/eval.h"

namespace advframe::oracle {

// Three frames, one ambiguous lemma ("run") and one frame-less lemma absent
// from the lexicon is left to the caller.
FrameLexicon MicroLexicon();

// Softmax of N(0, scale) logits per token.
LabelDistributionSequence RandomDistributions(int tokens, int labels, std::mt19937_64 &rng,
                                              double scale = 1.0);
// Rows drawn from a small set of values so that exact ties are common.
ScoreMatrix QuantizedScores(int tokens, int labels, std::mt19937_64 &rng,
                            double mask_rate = 0.0);

// BIO validity from the label fields alone.
bool BioValid(const std::vector<JointLabel> &labels);

// Enumerates every label sequence in lexicographic index order and keeps the
// first with the strictly highest left-to-right log-score sum. Masked
// (-inf) entries are excluded; other scores <= 0 count as log(1e-300).
// Returns an empty vector when no valid sequence exists.
std::vector<int> BruteForceDecode(const ScoreMatrix &scores, const LabelSpace &labels);

// Levenshtein distance by the textbook full table, case-insensitive.
int EditDistance(const std::vector<std::string> &a, const std::vector<std::string> &b);

// FI and soft-span AI counts by direct enumeration. AI matching takes the
// maximum number of one-to-one (same name, overlapping) pairs found by
// trying every assignment.
Counts FiCounts(const std::vector<FrameAnnotation> &gold, const std::vector<FrameAnnotation> &pred);
Counts AiCounts(const std::vector<FrameAnnotation> &gold, const std::vector<FrameAnnotation> &pred);

double F1(const Counts &c);

FrameAnnotation Ann(std::optional<std::string> frame, std::vector<FrameElement> fes = {});
FrameElement Fe(const std::string &name, int start, int end);

// Small scoring cases with hand-counted FI and AI outcomes.
struct MetricFixture {
  std::string name;
  std::vector<FrameAnnotation> gold, pred;
  Counts fi, ai;
};
std::vector<MetricFixture> MetricFixtures();

}  // namespace advframe::oracle

#endif  // ADVFRAME_TESTS_ORACLES_H_
