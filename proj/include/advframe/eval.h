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

// Frame and argument identification scoring, null-offset sweeps, breakdown
// tables and the frozen-encoder domain probe.

#ifndef ADVFRAME_EVAL_H_
#define ADVFRAME_EVAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advframe/corpus.h"
#include "advframe/decode.h"
#include "advframe/tagger.h"

namespace advframe {

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  Counts &operator+=(const Counts &o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts &) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;

  // 0/0 ratios are 0.
  static Prf From(const Counts &c);
};

// FI counts for one sample. Both-null is ignored.
Counts FrameIdCounts(const FrameAnnotation &gold, const FrameAnnotation &pred);

// Soft-span AI counts for one sample. `keep` selects which FEs take part
// (applied to gold FEs with the gold frame and to hypotheses with the
// predicted frame); empty keeps all.
using FeFilter = std::function<bool(const std::string &frame, const FrameElement &fe)>;
Counts ArgIdCounts(const FrameAnnotation &gold, const FrameAnnotation &pred,
                   const FeFilter &keep = {});

// Throw ValidationError on length mismatch.
Prf ScoreFrameId(std::span<const FrameAnnotation> gold, std::span<const FrameAnnotation> pred);
Prf ScoreArgIdSoft(std::span<const FrameAnnotation> gold, std::span<const FrameAnnotation> pred);

struct PRPoint {
  double delta = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SweepResult {
  std::vector<PRPoint> curve;     // AI
  std::vector<PRPoint> fi_curve;  // FI at the same grid points
  double fmax_delta = 0.0;        // argmax of AI f1, ties to the smaller delta
  double ai_fmax = 0.0;
  double fi_fmax = 0.0;           // max FI f1 over the grid
};

// -0.8 to 0.8 in steps of 0.04.
std::vector<double> DefaultDeltaGrid();

// Decodes every sample at each delta. Samples must carry gold annotations.
// Throws ValidationError on an empty or unsorted grid or deltas outside (-1, 1).
SweepResult SweepDelta(std::span<const LabelDistributionSequence> dists,
                       std::span<const Sample> samples, const LabelSpace &labels,
                       const FrameLexicon &lexicon, std::span<const double> grid,
                       const DecoderConfig &base = {});

SweepResult SweepDelta(const TaggerModel &model, const Corpus &corpus, const FrameLexicon &lexicon,
                       std::span<const double> grid, const DecoderConfig &base = {});

std::vector<FrameAnnotation> DecodeAll(std::span<const LabelDistributionSequence> dists,
                                       std::span<const Sample> samples, const LabelSpace &labels,
                                       const FrameLexicon &lexicon, const DecoderConfig &config);

struct BreakdownRow {
  std::string factor;  // "fe_type", "trigger", "length", "wer", "lu"
  std::string value;
  Prf score;           // AI, or FI for the "lu" factor
  long support = 0;    // gold FEs, or gold samples for "lu"
};

// AI split by core/non-core FE, verbal/nominal/other trigger and short/long
// sentence (threshold: median length), AI per WER bucket when every sample
// has a WER, and FI per LU lemma. Rows with zero support are omitted.
std::vector<BreakdownRow> BreakdownReport(std::span<const Sample> gold,
                                          std::span<const FrameAnnotation> pred,
                                          const FrameLexicon &lexicon,
                                          const std::vector<double> &wer_edges);

struct EvalReport {
  Prf fi;
  Prf ai;
  std::vector<PRPoint> curve;
  double fmax_delta = 0.0;
  std::vector<BreakdownRow> breakdowns;

  std::string ToJson() const;
  // "recall<TAB>precision" lines, one per curve point.
  std::string CurveTsv() const;
};

// Scores predictions against gold samples; curve fields stay empty.
EvalReport Evaluate(std::span<const Sample> gold, std::span<const FrameAnnotation> pred,
                    const FrameLexicon &lexicon);

// ---------------------------------------------------------------------------
// Domain probe

struct ProbeConfig {
  int epochs = 15;
  int batch_size = 32;
  double learning_rate = 0.1;
  double train_fraction = 0.5;
  std::uint64_t seed = 1;
};

struct ProbeSample {
  const Sample *sample = nullptr;
  int domain = 0;
};

// Trains a fresh convolution + decision head on frozen last-layer states and
// returns held-out domain accuracy. Throws ValidationError with fewer than
// two domains.
double ProbeDomainAccuracy(const Parameters &encoder, const NetConfig &config,
                           const FeatureVocab &vocab, const LabelSpace &labels,
                           std::span<const ProbeSample> data, const ProbeConfig &probe);

// Same protocol, budget and seed for both encoders.
std::pair<double, double> ProbeDomainInvariance(const Parameters &a, const Parameters &b,
                                                const NetConfig &config,
                                                const FeatureVocab &vocab,
                                                const LabelSpace &labels,
                                                std::span<const ProbeSample> data,
                                                const ProbeConfig &probe);

// Shared with the probe: training of a domain head on fixed hidden states.
struct FrozenBatch {
  Batch batch;
  Matrix hidden;
};
double TrainAndScoreHead(std::span<const FrozenBatch> train, std::span<const FrozenBatch> test,
                         const NetConfig &config, const ProbeConfig &probe);

}  // namespace advframe

#endif  // ADVFRAME_EVAL_H_
