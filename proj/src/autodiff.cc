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

#include "advframe/autodiff.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace advframe {

// ---------------------------------------------------------------------------
// NumericArray / Parameters

NumericArray::NumericArray(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (int d : shape_) {
    if (d < 0) throw ValidationError("negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  values_.assign(n, fill);
}

NumericArray NumericArray::FromMatrix(const Matrix &m) {
  NumericArray out({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
  std::copy(m.data(), m.data() + m.size(), out.values_.begin());
  return out;
}

int NumericArray::cols() const {
  int c = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
  return shape_.empty() ? 0 : c;
}

bool NumericArray::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

NumericArray &Parameters::Add(const std::string &name, std::vector<int> shape, ParamGroup group) {
  if (Has(name)) throw ValidationError("duplicate parameter " + name);
  auto &entry = entries_[name];
  entry.value = NumericArray(std::move(shape));
  entry.group = group;
  return entry.value;
}

NumericArray &Parameters::at(const std::string &name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown parameter " + name);
  return it->second.value;
}

const NumericArray &Parameters::at(const std::string &name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown parameter " + name);
  return it->second.value;
}

ParamGroup Parameters::group(const std::string &name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown parameter " + name);
  return it->second.group;
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto &[name, e] : entries_) n += e.value.size();
  return n;
}

GradientMap ZeroGradients(const Parameters &params) {
  GradientMap out;
  for (const auto &[name, e] : params.entries()) out.emplace(name, NumericArray(e.value.shape()));
  return out;
}

GradientSet GradientSet::Zeros(const Parameters &params) {
  return {ZeroGradients(params), ZeroGradients(params)};
}

// ---------------------------------------------------------------------------
// Update rule

double LambdaSchedule(double progress) {
  if (!(progress >= 0.0 && progress <= 1.0)) {
    throw ValidationError("progress must lie in [0, 1], got " + std::to_string(progress));
  }
  return 2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0;
}

void SgdStepInPlace(TrainingState &state, const GradientSet &grads) {
  auto lookup = [&](const GradientMap &m, const std::string &name,
                    const NumericArray &value) -> const NumericArray * {
    auto it = m.find(name);
    if (it == m.end()) return nullptr;
    if (it->second.shape() != value.shape()) {
      throw ValidationError("gradient shape mismatch for " + name);
    }
    if (!it->second.AllFinite()) throw NumericalError("non-finite gradient for " + name);
    return &it->second;
  };
  // Validate everything before touching the parameters.
  std::vector<std::pair<const NumericArray *, const NumericArray *>> aligned;
  for (const auto &[name, entry] : state.params.entries()) {
    aligned.emplace_back(lookup(grads.frame, name, entry.value),
                         lookup(grads.adv, name, entry.value));
  }
  const double mu = state.learning_rate;
  const double lambda = state.lambda;
  std::size_t k = 0;
  for (const auto &[name, entry] : state.params.entries()) {
    auto [gf, ga] = aligned[k++];
    NumericArray &theta = state.params.at(name);
    const bool head = entry.group == ParamGroup::kAdversarialHead;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double f = gf ? (*gf)[i] : 0.0;
      const double a = ga ? (*ga)[i] : 0.0;
      theta[i] -= head ? mu * a : mu * (f - lambda * a);
    }
  }
}

TrainingState SgdStep(const TrainingState &state, const GradientSet &grads) {
  TrainingState next = state;
  SgdStepInPlace(next, grads);
  return next;
}

NumericArray GrlForward(const NumericArray &x) { return x; }

NumericArray GrlBackward(const NumericArray &upstream, double lambda) {
  if (lambda < 0.0) throw ValidationError("reversal weight must be non-negative");
  NumericArray out = upstream;
  for (auto &v : out.values()) v = -lambda * v;
  return out;
}

// ---------------------------------------------------------------------------
// Tape

Matrix ColumnSoftmax(const Matrix &logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - m).exp();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

Tape::Var Tape::Push(Matrix value, std::vector<int> inputs,
                     std::function<void(Tape &, Node &)> backward) {
  Node node;
  node.value = std::move(value);
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {static_cast<int>(nodes_.size()) - 1};
}

Matrix &Tape::GradOf(int id) {
  Node &n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Tape::Var Tape::Param(const std::string &name) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return {it->second};
  if (params_ == nullptr) throw Error("tape has no parameter store");
  Var v = Push(params_->at(name).AsMatrix(), {}, nullptr);
  nodes_[v.id].param = name;
  param_nodes_.emplace(name, v.id);
  return v;
}

Tape::Var Tape::Constant(Matrix value) { return Push(std::move(value), {}, nullptr); }

Tape::Var Tape::MatMul(Var a, Var b) {
  return Push(value(a) * value(b), {a.id, b.id}, [a, b](Tape &t, Node &n) {
    t.GradOf(a.id).noalias() += n.grad * t.value(b).transpose();
    t.GradOf(b.id).noalias() += t.value(a).transpose() * n.grad;
  });
}

Tape::Var Tape::Add(Var a, Var b) {
  return Push(value(a) + value(b), {a.id, b.id}, [a, b](Tape &t, Node &n) {
    t.GradOf(a.id) += n.grad;
    t.GradOf(b.id) += n.grad;
  });
}

Tape::Var Tape::Sub(Var a, Var b) {
  return Push(value(a) - value(b), {a.id, b.id}, [a, b](Tape &t, Node &n) {
    t.GradOf(a.id) += n.grad;
    t.GradOf(b.id) -= n.grad;
  });
}

Tape::Var Tape::Mul(Var a, Var b) {
  return Push(value(a).cwiseProduct(value(b)), {a.id, b.id}, [a, b](Tape &t, Node &n) {
    t.GradOf(a.id) += n.grad.cwiseProduct(t.value(b));
    t.GradOf(b.id) += n.grad.cwiseProduct(t.value(a));
  });
}

Tape::Var Tape::AddBias(Var a, Var bias) {
  if (value(bias).cols() != 1 || value(bias).rows() != value(a).rows()) {
    throw Error("AddBias: shape mismatch");
  }
  Matrix out = value(a).colwise() + value(bias).col(0);
  return Push(std::move(out), {a.id, bias.id}, [a, bias](Tape &t, Node &n) {
    t.GradOf(a.id) += n.grad;
    t.GradOf(bias.id) += n.grad.rowwise().sum();
  });
}

Tape::Var Tape::Sigmoid(Var a) {
  Matrix out = (1.0 + (-value(a).array()).exp()).inverse().matrix();
  return Push(std::move(out), {a.id}, [a](Tape &t, Node &n) {
    t.GradOf(a.id).array() += n.grad.array() * n.value.array() * (1.0 - n.value.array());
  });
}

Tape::Var Tape::Tanh(Var a) {
  Matrix out = value(a).array().tanh().matrix();
  return Push(std::move(out), {a.id}, [a](Tape &t, Node &n) {
    t.GradOf(a.id).array() += n.grad.array() * (1.0 - n.value.array().square());
  });
}

Tape::Var Tape::Rows(Var a, int start, int count) {
  return Push(value(a).middleRows(start, count), {a.id}, [a, start, count](Tape &t, Node &n) {
    t.GradOf(a.id).middleRows(start, count) += n.grad;
  });
}

Tape::Var Tape::Cols(Var a, int start, int count) {
  return Push(value(a).middleCols(start, count), {a.id}, [a, start, count](Tape &t, Node &n) {
    t.GradOf(a.id).middleCols(start, count) += n.grad;
  });
}

Tape::Var Tape::ConcatRows(std::span<const Var> parts) {
  Eigen::Index rows = 0;
  const Eigen::Index cols = value(parts[0]).cols();
  for (Var p : parts) {
    if (value(p).cols() != cols) throw Error("ConcatRows: column mismatch");
    rows += value(p).rows();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
    ids.push_back(p.id);
  }
  return Push(std::move(out), ids, [ids](Tape &t, Node &n) {
    Eigen::Index r = 0;
    for (int id : ids) {
      const Eigen::Index k = t.nodes_[id].value.rows();
      t.GradOf(id) += n.grad.middleRows(r, k);
      r += k;
    }
  });
}

Tape::Var Tape::ConcatCols(std::span<const Var> parts) {
  Eigen::Index cols = 0;
  const Eigen::Index rows = value(parts[0]).rows();
  for (Var p : parts) {
    if (value(p).rows() != rows) throw Error("ConcatCols: row mismatch");
    cols += value(p).cols();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
    ids.push_back(p.id);
  }
  return Push(std::move(out), ids, [ids](Tape &t, Node &n) {
    Eigen::Index c = 0;
    for (int id : ids) {
      const Eigen::Index k = t.nodes_[id].value.cols();
      t.GradOf(id) += n.grad.middleCols(c, k);
      c += k;
    }
  });
}

Tape::Var Tape::Gather(Var table, std::vector<int> columns) {
  const Matrix &tab = value(table);
  Matrix out(tab.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] < 0 || columns[j] >= tab.cols()) throw Error("Gather: index out of range");
    out.col(static_cast<Eigen::Index>(j)) = tab.col(columns[j]);
  }
  return Push(std::move(out), {table.id}, [table, columns = std::move(columns)](Tape &t, Node &n) {
    Matrix &g = t.GradOf(table.id);
    for (std::size_t j = 0; j < columns.size(); ++j) {
      g.col(columns[j]) += n.grad.col(static_cast<Eigen::Index>(j));
    }
  });
}

Tape::Var Tape::ScaleCols(Var a, std::vector<double> weights) {
  if (static_cast<Eigen::Index>(weights.size()) != value(a).cols()) {
    throw Error("ScaleCols: weight count mismatch");
  }
  Eigen::Map<const Eigen::RowVectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  Matrix out = value(a).array().rowwise() * w.array();
  return Push(std::move(out), {a.id}, [a, weights = std::move(weights)](Tape &t, Node &n) {
    Eigen::Map<const Eigen::RowVectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    t.GradOf(a.id).array() += n.grad.array().rowwise() * w.array();
  });
}

Tape::Var Tape::MulConst(Var a, Matrix factor) {
  Matrix out = value(a).cwiseProduct(factor);
  return Push(std::move(out), {a.id}, [a, factor = std::move(factor)](Tape &t, Node &n) {
    t.GradOf(a.id) += n.grad.cwiseProduct(factor);
  });
}

Tape::Var Tape::ShiftCols(Var a, int offset) {
  const Matrix &in = value(a);
  const Eigen::Index cols = in.cols();
  Matrix out = Matrix::Zero(in.rows(), cols);
  const Eigen::Index lo = std::max<Eigen::Index>(0, -offset);
  const Eigen::Index hi = std::min<Eigen::Index>(cols, cols - offset);
  if (hi > lo) out.middleCols(lo, hi - lo) = in.middleCols(lo + offset, hi - lo);
  return Push(std::move(out), {a.id}, [a, offset, lo, hi](Tape &t, Node &n) {
    if (hi > lo) t.GradOf(a.id).middleCols(lo + offset, hi - lo) += n.grad.middleCols(lo, hi - lo);
  });
}

Tape::Var Tape::MaxOverTime(Var a, std::vector<int> lengths) {
  const Matrix &in = value(a);
  const int batch = static_cast<int>(lengths.size());
  if (batch == 0 || in.cols() % batch != 0) throw Error("MaxOverTime: layout mismatch");
  const int steps = static_cast<int>(in.cols() / batch);
  Matrix out(in.rows(), batch);
  std::vector<int> argmax(static_cast<std::size_t>(in.rows()) * batch);
  for (int b = 0; b < batch; ++b) {
    if (lengths[b] < 1 || lengths[b] > steps) throw Error("MaxOverTime: bad length");
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      int best = b;
      for (int s = 1; s < lengths[b]; ++s) {
        const int col = s * batch + b;
        if (in(r, col) > in(r, best)) best = col;
      }
      out(r, b) = in(r, best);
      argmax[static_cast<std::size_t>(b) * in.rows() + r] = best;
    }
  }
  return Push(std::move(out), {a.id}, [a, argmax = std::move(argmax), batch](Tape &t, Node &n) {
    Matrix &g = t.GradOf(a.id);
    const Eigen::Index rows = n.value.rows();
    for (int b = 0; b < batch; ++b) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        g(r, argmax[static_cast<std::size_t>(b) * rows + r]) += n.grad(r, b);
      }
    }
  });
}

Tape::Var Tape::GradientReversal(Var a, double lambda) {
  if (lambda < 0.0) throw ValidationError("reversal weight must be non-negative");
  return Push(value(a), {a.id}, [a, lambda](Tape &t, Node &n) {
    t.GradOf(a.id) += -lambda * n.grad;
  });
}

Tape::Var Tape::SoftmaxCrossEntropy(Var logits, std::vector<int> gold, double scale) {
  const Matrix &z = value(logits);
  if (static_cast<Eigen::Index>(gold.size()) != z.cols()) throw Error("cross entropy: gold size");
  Matrix probs = ColumnSoftmax(z);
  double loss = 0.0;
  for (std::size_t j = 0; j < gold.size(); ++j) {
    if (gold[j] < 0) continue;
    if (gold[j] >= z.rows()) throw ValidationError("gold index out of range");
    const auto col = z.col(static_cast<Eigen::Index>(j));
    const double m = col.maxCoeff();
    const double lse = m + std::log((col.array() - m).exp().sum());
    loss += lse - col(gold[j]);
  }
  Matrix out(1, 1);
  out(0, 0) = loss * scale;
  return Push(std::move(out), {logits.id},
              [logits, gold = std::move(gold), probs = std::move(probs), scale](Tape &t, Node &n) {
                Matrix &g = t.GradOf(logits.id);
                const double up = n.grad(0, 0) * scale;
                for (std::size_t j = 0; j < gold.size(); ++j) {
                  if (gold[j] < 0) continue;
                  const auto jj = static_cast<Eigen::Index>(j);
                  g.col(jj) += up * probs.col(jj);
                  g(gold[j], jj) -= up;
                }
              });
}

Tape::Var Tape::Sum(std::span<const Var> scalars) {
  Matrix out = Matrix::Zero(1, 1);
  std::vector<int> ids;
  for (Var v : scalars) {
    out(0, 0) += scalar(v);
    ids.push_back(v.id);
  }
  return Push(std::move(out), ids, [ids](Tape &t, Node &n) {
    for (int id : ids) t.GradOf(id) += n.grad;
  });
}

void Tape::Backward(Var root) {
  GradOf(root.id).setConstant(1.0);
  for (int i = root.id; i >= 0; --i) {
    Node &n = nodes_[i];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n);
  }
}

void Tape::ClearGradients() {
  for (auto &n : nodes_) n.grad.resize(0, 0);
}

GradientMap Tape::ParamGradients() const {
  if (params_ == nullptr) return {};
  GradientMap out = ZeroGradients(*params_);
  for (const auto &[name, id] : param_nodes_) {
    const Matrix &g = nodes_[id].grad;
    if (g.size() == 0) continue;
    auto &dst = out.at(name).values();
    std::copy(g.data(), g.data() + g.size(), dst.begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient checking

GradientCheckReport FiniteDiffCheck(const LossFunction &loss_fn, const Parameters &params,
                                    double epsilon, double tolerance, int min_samples,
                                    std::uint64_t seed,
                                    const std::function<bool(const std::string &)> &filter) {
  const LossAndGradients base = loss_fn(params);
  std::vector<std::pair<std::string, std::size_t>> pool;
  std::size_t total = 0;
  std::vector<std::pair<std::string, std::size_t>> ranges;
  for (const auto &[name, e] : params.entries()) {
    if (filter && !filter(name)) continue;
    ranges.emplace_back(name, e.value.size());
    total += e.value.size();
  }
  if (total == 0) throw ValidationError("gradient check: no parameters selected");

  std::vector<std::size_t> flat;
  if (total <= static_cast<std::size_t>(min_samples)) {
    flat.resize(total);
    std::iota(flat.begin(), flat.end(), 0);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    std::set<std::size_t> chosen;
    while (chosen.size() < static_cast<std::size_t>(min_samples)) chosen.insert(pick(rng));
    flat.assign(chosen.begin(), chosen.end());
  }

  Parameters probe = params;
  GradientCheckReport report;
  report.worst_error = -1.0;
  for (std::size_t f : flat) {
    std::size_t offset = f;
    std::size_t r = 0;
    while (offset >= ranges[r].second) offset -= ranges[r++].second;
    const std::string &name = ranges[r].first;
    NumericArray &theta = probe.at(name);
    const double saved = theta[offset];
    theta[offset] = saved + epsilon;
    const double plus = loss_fn(probe).loss;
    theta[offset] = saved - epsilon;
    const double minus = loss_fn(probe).loss;
    theta[offset] = saved;

    const double numeric = (plus - minus) / (2.0 * epsilon);
    auto it = base.grads.find(name);
    const double analytic = it == base.grads.end() ? 0.0 : it->second[offset];
    const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    ++report.checked;
    if (err > report.worst_error) {
      report.worst_error = err;
      report.worst_param = name;
      report.worst_index = offset;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  if (!(report.worst_error <= tolerance)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "gradient check failed for " << report.worst_param << "[" << report.worst_index
        << "]: analytic " << report.worst_analytic << " vs numeric " << report.worst_numeric
        << " (relative error " << report.worst_error << ")";
    throw GradientCheckError(msg.str());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void PutU32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutString(std::string &out, std::string_view s) {
  PutU32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t Uint(int width) {
    Need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }
  std::string String() {
    const auto n = static_cast<std::size_t>(Uint(4));
    Need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view Raw(std::size_t n) {
    Need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ValidationError("truncated checkpoint");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string SerializeCheckpoint(const Checkpoint &ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  PutU32(out, kVersion);
  PutString(out, ckpt.label_space_hash);
  PutString(out, ckpt.config_echo);
  PutU32(out, static_cast<std::uint32_t>(ckpt.params.entries().size()));
  for (const auto &[name, e] : ckpt.params.entries()) {
    PutString(out, name);
    out.push_back(static_cast<char>(e.group));
    PutU32(out, static_cast<std::uint32_t>(e.value.shape().size()));
    for (int d : e.value.shape()) PutU32(out, static_cast<std::uint32_t>(d));
    for (double v : e.value.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      PutU64(out, bits);
    }
  }
  return out;
}

Checkpoint DeserializeCheckpoint(std::string_view bytes,
                                 const std::optional<std::string> &expected_label_hash) {
  Reader in(bytes);
  if (in.Raw(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw ValidationError("not a checkpoint file");
  }
  if (in.Uint(4) != kVersion) throw ValidationError("unsupported checkpoint version");
  Checkpoint ckpt;
  ckpt.label_space_hash = in.String();
  if (expected_label_hash && *expected_label_hash != ckpt.label_space_hash) {
    throw ValidationError("checkpoint label space " + ckpt.label_space_hash +
                          " does not match lexicon label space " + *expected_label_hash);
  }
  ckpt.config_echo = in.String();
  const auto n = in.Uint(4);
  for (std::uint64_t k = 0; k < n; ++k) {
    std::string name = in.String();
    const auto group = static_cast<std::uint8_t>(in.Uint(1));
    if (group > 2) throw ValidationError("bad parameter group in checkpoint");
    const auto ndim = in.Uint(4);
    std::vector<int> shape;
    for (std::uint64_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(in.Uint(4)));
    NumericArray &arr = ckpt.params.Add(name, shape, static_cast<ParamGroup>(group));
    for (auto &v : arr.values()) {
      const std::uint64_t bits = in.Uint(8);
      std::memcpy(&v, &bits, sizeof(v));
    }
  }
  if (!in.done()) throw ValidationError("trailing bytes in checkpoint");
  return ckpt;
}

void SaveCheckpoint(const Checkpoint &ckpt, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << SerializeCheckpoint(ckpt);
}

Checkpoint LoadCheckpoint(const std::string &path,
                          const std::optional<std::string> &expected_label_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return DeserializeCheckpoint(buf.str(), expected_label_hash);
}

}  // namespace advframe
