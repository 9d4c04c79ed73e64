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

// Bidirectional GRU tagger over the joint label space, with a convolutional
// domain classifier attached to the last hidden layer through a gradient
// reversal connector.

#ifndef ADVFRAME_TAGGER_H_
#define ADVFRAME_TAGGER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advframe/autodiff.h"
#include "advframe/corpus.h"
#include "advframe/decode.h"

namespace advframe {

struct NetConfig {
  int word_dim = 32;
  int lemma_dim = 32;
  int pos_dim = 8;
  int feature_dim = 8;  // per extra feature column
  int hidden_size = 64;  // per direction
  int n_layers = 4;
  int conv_window = 3;
  int conv_channels = 32;
  int n_domains = 2;
  double dropout_rate = 0.0;

  void Validate() const;
  bool operator==(const NetConfig &) const = default;
};

// Per-column feature vocabularies. Index 0 of every column is UNK.
class FeatureVocab {
 public:
  static FeatureVocab Build(std::span<const Corpus *const> corpora);

  std::size_t extra_arity() const { return features_.size(); }
  int WordId(const std::string &s) const { return Lookup(words_, s); }
  int LemmaId(const std::string &s) const { return Lookup(lemmas_, s); }
  int PosId(const std::string &s) const { return Lookup(pos_, s); }
  int FeatureId(std::size_t column, const std::string &s) const {
    return Lookup(features_.at(column), s);
  }
  int word_count() const { return static_cast<int>(words_.size()) + 1; }
  int lemma_count() const { return static_cast<int>(lemmas_.size()) + 1; }
  int pos_count() const { return static_cast<int>(pos_.size()) + 1; }
  int feature_count(std::size_t column) const {
    return static_cast<int>(features_.at(column).size()) + 1;
  }

  std::string ToJson() const;
  static FeatureVocab FromJson(const std::string &text);
  bool operator==(const FeatureVocab &) const = default;

 private:
  using Column = std::map<std::string, int>;
  static int Lookup(const Column &c, const std::string &s) {
    auto it = c.find(s);
    return it == c.end() ? 0 : it->second;
  }
  static void Insert(Column &c, const std::string &s) {
    c.emplace(s, static_cast<int>(c.size()) + 1);
  }

  Column words_;
  Column lemmas_;
  Column pos_;
  std::vector<Column> features_;
};

// Padded batch in time-major layout: entry (t, b) lives at index t * batch + b.
struct Batch {
  int steps = 0;
  int batch = 0;
  std::vector<int> words, lemmas, pos;
  std::vector<std::vector<int>> features;  // one grid per extra column
  std::vector<double> marker;              // 1 on target tokens
  std::vector<double> mask;                // 1 on real tokens
  std::vector<int> gold;                   // label index, -1 on padding/unlabelled
  std::vector<int> domains;                // per sample
  std::vector<int> lengths;                // per sample

  int labelled_tokens() const;
};

// Builds a batch from samples. `pad_to` forces a minimum step count. Samples
// without gold annotation get gold = -1 everywhere. Throws ValidationError on
// feature arity mismatch or a domain id outside [0, n_domains).
Batch MakeBatch(std::span<const Sample *const> samples, std::span<const int> domain_ids,
                const FeatureVocab &vocab, const LabelSpace &labels, int n_domains,
                int pad_to = 0);

// Fresh parameters. Each array is drawn from its own generator keyed by the
// seed and the parameter name, so the trunk is identical with or without the
// domain head.
Parameters InitParameters(const NetConfig &config, const FeatureVocab &vocab, int n_labels,
                          std::uint64_t seed, bool with_domain_head = true);

// Adds a fresh domain head ("adv/...") to an existing store.
void AddDomainHead(Parameters &params, const NetConfig &config, std::uint64_t seed);

enum class ReversalRoute {
  kReversed,  // gradient reversal connector in the graph
  kBypassed,  // plain identity; trunk receives the true domain gradient
};

struct GraphOptions {
  bool training = false;          // enables dropout
  std::uint64_t dropout_seed = 0;
  bool frame_head = true;
  bool domain_head = false;
  double lambda = 0.0;
  ReversalRoute route = ReversalRoute::kReversed;
};

// One forward graph over a batch.
class TaggerGraph {
 public:
  TaggerGraph(const Parameters &params, const NetConfig &config, const Batch &batch,
              const GraphOptions &options);

  Tape &tape() { return tape_; }
  Tape::Var hidden() const { return hidden_; }            // 2H x (steps * batch)
  Tape::Var frame_logits() const { return frame_logits_; }
  Tape::Var domain_logits() const { return domain_logits_; }

  // Mean cross-entropy over labelled tokens / over samples.
  Tape::Var FrameLoss();
  Tape::Var DomainLoss();

 private:
  Tape tape_;
  Tape::Var hidden_;
  Tape::Var frame_logits_;
  Tape::Var domain_logits_;
  const Batch &batch_;
};

// Convolution over time, max-pooling and a decision layer. Reads "adv/..."
// parameters from the tape's store.
Tape::Var DomainHeadLogits(Tape &tape, Tape::Var hidden, const Batch &batch,
                           const NetConfig &config);

std::vector<LabelDistributionSequence> ForwardFrame(const Parameters &params,
                                                    const NetConfig &config, const Batch &batch);
// Per-sample probability vectors over domains.
std::vector<std::vector<double>> ForwardDomain(const Parameters &params, const NetConfig &config,
                                               const Batch &batch, double lambda);
// Last hidden layer values, 2H x (steps * batch).
Matrix EncodeHidden(const Parameters &params, const NetConfig &config, const Batch &batch);

LossAndGradients LossFrame(const Parameters &params, const NetConfig &config,
                           const Batch &batch);
LossAndGradients LossAdv(const Parameters &params, const NetConfig &config, const Batch &batch,
                         double lambda, ReversalRoute route);

struct StepResult {
  double loss_frame = 0.0;
  double loss_adv = 0.0;
  GradientSet grads;
};

// One backward pass over L_frame + L_adv through the reversal connector.
// Trunk gradients come out as g_frame - lambda * g_adv; they are returned in
// `grads.frame`, and the head's own gradients in `grads.adv`, which is the
// split SgdStepInPlace expects.
StepResult ComputeStep(const Parameters &params, const NetConfig &config, const Batch &batch,
                       double lambda, bool adversarial, std::uint64_t dropout_seed);

// ---------------------------------------------------------------------------
// Training

struct ValidationScores {
  double fi_fmax = 0.0;
  double ai_fmax = 0.0;
  double fmax_delta = 0.0;
};

using Validator = std::function<ValidationScores(const Parameters &)>;

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.1;
  bool adversarial = false;
  std::optional<double> pinned_lambda;
  std::uint64_t seed = 7;

  void Validate() const;
};

struct EpochLog {
  int epoch = 0;
  double progress = 0.0;
  double lambda = 0.0;
  double loss_frame = 0.0;
  double loss_adv = 0.0;
  std::optional<ValidationScores> val;

  std::string ToJson() const;
};

struct TrainResult {
  TrainingState best;
  TrainingState last;
  int best_epoch = -1;
  bool aborted = false;
  std::vector<EpochLog> log;
};

// A training corpus with the domain id it is trained under.
struct DomainCorpus {
  const Corpus *corpus = nullptr;
  int domain_id = 0;
};

// Order of (corpus index, sample index) pairs for one epoch: every corpus is
// shuffled on its own, then merged proportionally to corpus size.
std::vector<std::pair<int, int>> EpochOrder(std::span<const DomainCorpus> corpora,
                                            std::uint64_t seed, int epoch);

TrainResult Train(const TrainingState &initial, const NetConfig &config,
                  const FeatureVocab &vocab, const LabelSpace &labels,
                  std::span<const DomainCorpus> corpora, const TrainConfig &train,
                  const Validator &validator = {});

// ---------------------------------------------------------------------------
// Model bundle

struct TaggerModel {
  NetConfig config;
  FeatureVocab vocab;
  LabelSpace labels;
  Parameters params;

  Checkpoint ToCheckpoint() const;
  static TaggerModel FromCheckpoint(const Checkpoint &ckpt, const FrameLexicon &lexicon);
  void Save(const std::string &path) const;
  static TaggerModel Load(const std::string &path, const FrameLexicon &lexicon);

  std::vector<LabelDistributionSequence> Predict(std::span<const Sample> samples,
                                                 int batch_size = 64) const;
};

}  // namespace advframe

#endif  // ADVFRAME_TAGGER_H_
