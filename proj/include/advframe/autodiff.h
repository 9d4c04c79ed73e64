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

// Minimal reverse-mode differentiation for the tagger: numeric arrays, the
// parameter store, a tape of matrix operations, the SGD update with an
// adversarial term, the gradient reversal connector and the adversarial
// weight schedule.

#ifndef ADVFRAME_AUTODIFF_H_
#define ADVFRAME_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "advframe/error.h"

namespace advframe {

using Matrix = Eigen::MatrixXd;

// Dense array of doubles. Two-dimensional arrays are stored column-major so
// they map directly onto Eigen matrices; 1-D arrays are column vectors.
class NumericArray {
 public:
  NumericArray() = default;
  explicit NumericArray(std::vector<int> shape, double fill = 0.0);
  static NumericArray FromMatrix(const Matrix &m);

  const std::vector<int> &shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  int rows() const { return shape_.empty() ? 0 : shape_[0]; }
  int cols() const;

  std::vector<double> &values() { return values_; }
  const std::vector<double> &values() const { return values_; }
  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  Eigen::Map<Matrix> AsMatrix() { return {values_.data(), rows(), cols()}; }
  Eigen::Map<const Matrix> AsMatrix() const { return {values_.data(), rows(), cols()}; }

  bool AllFinite() const;
  bool operator==(const NumericArray &) const = default;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

// Which part of the network a parameter belongs to. Adversarial-head
// parameters sit downstream of the gradient reversal connector.
enum class ParamGroup : std::uint8_t { kShared = 0, kFrameHead = 1, kAdversarialHead = 2 };

class Parameters {
 public:
  struct Entry {
    NumericArray value;
    ParamGroup group = ParamGroup::kShared;
    bool operator==(const Entry &) const = default;
  };

  NumericArray &Add(const std::string &name, std::vector<int> shape, ParamGroup group);
  bool Has(const std::string &name) const { return entries_.count(name) > 0; }
  NumericArray &at(const std::string &name);
  const NumericArray &at(const std::string &name) const;
  ParamGroup group(const std::string &name) const;

  const std::map<std::string, Entry> &entries() const { return entries_; }
  std::size_t scalar_count() const;

  bool operator==(const Parameters &) const = default;

 private:
  std::map<std::string, Entry> entries_;
};

using GradientMap = std::map<std::string, NumericArray>;

GradientMap ZeroGradients(const Parameters &params);

// Gradients of the frame loss and of the adversarial domain loss, aligned
// with Parameters. `adv` holds the plain gradient of the domain loss, with
// no reversal applied; SgdStep applies the adversarial weighting.
struct GradientSet {
  GradientMap frame;
  GradientMap adv;

  static GradientSet Zeros(const Parameters &params);
};

struct TrainingState {
  Parameters params;
  double learning_rate = 0.1;
  double progress = 0.0;
  double lambda = 0.0;
  int epoch = 0;
  std::uint64_t rng_seed = 0;
};

// lambda = 2 / (1 + exp(-10 p)) - 1. Throws ValidationError outside [0, 1].
double LambdaSchedule(double progress);

// theta <- theta - mu * (g_frame - lambda * g_adv) for shared and frame-head
// parameters; adversarial-head parameters descend their own loss,
// theta <- theta - mu * g_adv. Throws NumericalError on non-finite
// gradients, leaving `state` untouched.
TrainingState SgdStep(const TrainingState &state, const GradientSet &grads);
void SgdStepInPlace(TrainingState &state, const GradientSet &grads);

// Gradient reversal connector: identity forward, -lambda * upstream backward.
NumericArray GrlForward(const NumericArray &x);
NumericArray GrlBackward(const NumericArray &upstream, double lambda);

// ---------------------------------------------------------------------------
// Tape

class Tape {
 public:
  struct Var {
    int id = -1;
  };

  // Parameters must outlive the tape.
  explicit Tape(const Parameters *params = nullptr) : params_(params) {}

  Var Param(const std::string &name);
  Var Constant(Matrix value);

  Var MatMul(Var a, Var b);
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);             // element-wise
  Var AddBias(Var a, Var bias);      // bias is a column, broadcast over columns
  Var Sigmoid(Var a);
  Var Tanh(Var a);
  Var Rows(Var a, int start, int count);
  Var Cols(Var a, int start, int count);
  Var ConcatRows(std::span<const Var> parts);
  Var ConcatCols(std::span<const Var> parts);
  Var Gather(Var table, std::vector<int> columns);   // table columns by index
  Var ScaleCols(Var a, std::vector<double> weights);  // column j times w[j]
  Var MulConst(Var a, Matrix factor);                 // element-wise constant
  // out[:, j] = a[:, j + offset], zero outside the matrix.
  Var ShiftCols(Var a, int offset);
  // Max over time of a (rows x steps*batch) matrix laid out as
  // column t*batch + b; only steps t < lengths[b] take part.
  Var MaxOverTime(Var a, std::vector<int> lengths);
  Var GradientReversal(Var a, double lambda);
  // Sum over columns of -log softmax(logits)[gold], times `scale`. Columns
  // whose gold index is negative are skipped. Returns a 1x1 node.
  Var SoftmaxCrossEntropy(Var logits, std::vector<int> gold, double scale);
  Var Sum(std::span<const Var> scalars);

  const Matrix &value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Seeds d root = 1 and accumulates gradients into every reachable node.
  void Backward(Var root);
  void ClearGradients();
  // Gradients of every parameter in the store; zero where unreached.
  GradientMap ParamGradients() const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // empty until reached
    std::vector<int> inputs;
    std::function<void(Tape &, Node &)> backward;
    std::string param;  // non-empty for parameter leaves
  };

  Var Push(Matrix value, std::vector<int> inputs, std::function<void(Tape &, Node &)> backward);
  Matrix &GradOf(int id);

  const Parameters *params_;
  std::vector<Node> nodes_;
  std::map<std::string, int> param_nodes_;
};

Matrix ColumnSoftmax(const Matrix &logits);

// ---------------------------------------------------------------------------
// Gradient checking

struct LossAndGradients {
  double loss = 0.0;
  GradientMap grads;
};

using LossFunction = std::function<LossAndGradients(const Parameters &)>;

class GradientCheckError : public Error {
 public:
  using Error::Error;
};

struct GradientCheckReport {
  int checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  double worst_error = 0.0;  // |analytic - numeric| / max(1, |analytic|)
};

// Compares analytic gradients against central differences on `min_samples`
// distinct random scalars (all of them if fewer exist).
// `filter` restricts the candidate parameters. Throws GradientCheckError
// naming the worst offender when the tolerance is exceeded.
GradientCheckReport FiniteDiffCheck(const LossFunction &loss_fn, const Parameters &params,
                                    double epsilon, double tolerance, int min_samples = 50,
                                    std::uint64_t seed = 1,
                                    const std::function<bool(const std::string &)> &filter = {});

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  std::string label_space_hash;
  std::string config_echo;  // JSON text
  Parameters params;
};

std::string SerializeCheckpoint(const Checkpoint &ckpt);
// Throws ValidationError on malformed data or when `expected_label_hash` is
// given and differs from the stored hash.
Checkpoint DeserializeCheckpoint(std::string_view bytes,
                                 const std::optional<std::string> &expected_label_hash = {});
void SaveCheckpoint(const Checkpoint &ckpt, const std::string &path);
Checkpoint LoadCheckpoint(const std::string &path,
                          const std::optional<std::string> &expected_label_hash = {});

}  // namespace advframe

#endif  // ADVFRAME_AUTODIFF_H_
