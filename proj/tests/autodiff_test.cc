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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "advframe/autodiff.h"

namespace advframe {
namespace {

// Closed form used as the oracle: 2 / (1 + e^{-x}) - 1 = tanh(x / 2).
double LambdaOracle(double p) { return std::tanh(5.0 * p); }

TEST(LambdaSchedule, KnownValues) {
  EXPECT_EQ(LambdaSchedule(0.0), 0.0);
  EXPECT_NEAR(LambdaSchedule(1.0), 0.9999092, 1e-6);
  EXPECT_NEAR(LambdaSchedule(0.1), 0.4621172, 1e-6);
}

TEST(LambdaSchedule, AgreesWithHyperbolicTangentAndIncreases) {
  double prev = -1.0;
  for (int i = 0; i < 100; ++i) {
    const double p = i / 99.0;
    const double l = LambdaSchedule(p);
    EXPECT_NEAR(l, LambdaOracle(p), 1e-12);
    EXPECT_GT(l, prev);
    EXPECT_LT(l, 1.0);
    prev = l;
  }
}

TEST(LambdaSchedule, RejectsProgressOutsideUnitInterval) {
  EXPECT_THROW(LambdaSchedule(-0.01), ValidationError);
  EXPECT_THROW(LambdaSchedule(1.01), ValidationError);
  EXPECT_THROW(LambdaSchedule(std::nan("")), ValidationError);
}

Parameters TwoGroupParams() {
  Parameters p;
  p.Add("trunk", {2}, ParamGroup::kShared).values() = {1.0, 2.0};
  p.Add("head", {1}, ParamGroup::kAdversarialHead).values() = {0.5};
  return p;
}

TEST(SgdStep, AppliesTheAdversarialUpdate) {
  TrainingState s;
  s.params = TwoGroupParams();
  s.learning_rate = 0.1;
  s.lambda = 0.5;
  GradientSet g = GradientSet::Zeros(s.params);
  g.frame["trunk"].values() = {1.0, -1.0};
  g.adv["trunk"].values() = {2.0, 4.0};
  g.adv["head"].values() = {3.0};
  const TrainingState out = SgdStep(s, g);
  // trunk: theta - mu (g_f - lambda g_a); head: theta - mu g_a.
  EXPECT_DOUBLE_EQ(out.params.at("trunk")[0], 1.0 - 0.1 * (1.0 - 0.5 * 2.0));
  EXPECT_DOUBLE_EQ(out.params.at("trunk")[1], 2.0 - 0.1 * (-1.0 - 0.5 * 4.0));
  EXPECT_DOUBLE_EQ(out.params.at("head")[0], 0.5 - 0.1 * 3.0);
}

TEST(SgdStep, ZeroLambdaIsPlainDescent) {
  TrainingState s;
  s.params = TwoGroupParams();
  GradientSet g = GradientSet::Zeros(s.params);
  g.frame["trunk"].values() = {1.0, 1.0};
  g.adv["trunk"].values() = {100.0, 100.0};
  const TrainingState out = SgdStep(s, g);
  EXPECT_DOUBLE_EQ(out.params.at("trunk")[0], 1.0 - 0.1);
}

TEST(SgdStep, NonFiniteGradientLeavesStateUntouched) {
  TrainingState s;
  s.params = TwoGroupParams();
  GradientSet g = GradientSet::Zeros(s.params);
  g.frame["trunk"].values() = {1.0, 1.0};
  g.adv["head"].values() = {std::nan("")};
  const Parameters before = s.params;
  EXPECT_THROW(SgdStepInPlace(s, g), NumericalError);
  EXPECT_EQ(s.params, before);
}

TEST(SgdStep, ShapeMismatchIsAnError) {
  TrainingState s;
  s.params = TwoGroupParams();
  GradientSet g = GradientSet::Zeros(s.params);
  g.frame["trunk"] = NumericArray({3});
  EXPECT_THROW(SgdStep(s, g), ValidationError);
}

TEST(GradientReversal, IdentityForwardScaledNegationBackward) {
  NumericArray x({2, 2});
  x.values() = {1, -2, 3, 4};
  EXPECT_EQ(GrlForward(x), x);
  const NumericArray back = GrlBackward(x, 0.25);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(back[i], -0.25 * x[i]);
  EXPECT_THROW(GrlBackward(x, -0.1), ValidationError);
}

// ---------------------------------------------------------------------------
// Tape operations against central differences.

Parameters RandomParams(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Parameters p;
  auto fill = [&](const std::string &name, std::vector<int> shape) {
    for (auto &v : p.Add(name, std::move(shape), ParamGroup::kShared).values()) v = u(rng);
  };
  fill("a", {4, 6});
  fill("b", {3, 4});
  fill("c", {3});
  fill("d", {4, 6});
  return p;
}

using Builder = std::function<Tape::Var(Tape &)>;

void CheckOp(const Builder &build) {
  const Parameters params = RandomParams(4);
  auto loss_fn = [&](const Parameters &p) {
    Tape tape(&p);
    Tape::Var logits = build(tape);
    const int cols = static_cast<int>(tape.value(logits).cols());
    const int rows = static_cast<int>(tape.value(logits).rows());
    std::vector<int> gold(cols);
    for (int j = 0; j < cols; ++j) gold[j] = j % 3 == 2 ? -1 : j % rows;
    Tape::Var loss = tape.SoftmaxCrossEntropy(logits, gold, 0.5);
    tape.Backward(loss);
    return LossAndGradients{tape.scalar(loss), tape.ParamGradients()};
  };
  const auto report = FiniteDiffCheck(loss_fn, params, 1e-6, 1e-6, 1000);
  EXPECT_EQ(report.checked, static_cast<int>(params.scalar_count()));
  EXPECT_LT(report.worst_error, 1e-6);
}

TEST(TapeGradients, LinearAndBias) {
  CheckOp([](Tape &t) { return t.AddBias(t.MatMul(t.Param("b"), t.Param("a")), t.Param("c")); });
}

TEST(TapeGradients, ElementwiseOps) {
  CheckOp([](Tape &t) {
    auto x = t.Mul(t.Sigmoid(t.Param("a")), t.Tanh(t.Param("d")));
    auto y = t.Sub(t.Add(x, t.Param("a")), t.Param("d"));
    return t.MatMul(t.Param("b"), y);
  });
}

TEST(TapeGradients, SlicingAndConcatenation) {
  CheckOp([](Tape &t) {
    auto a = t.Param("a");
    Tape::Var rows[] = {t.Rows(a, 0, 2), t.Rows(a, 2, 2)};
    Tape::Var cols[] = {t.Cols(t.ConcatRows(rows), 3, 3), t.Cols(a, 0, 3)};
    return t.MatMul(t.Param("b"), t.ConcatCols(cols));
  });
}

TEST(TapeGradients, GatherScaleShiftAndMask) {
  CheckOp([](Tape &t) {
    auto g = t.Gather(t.Param("a"), {5, 0, 5, 2, 1, 1});
    auto s = t.ScaleCols(g, {1.0, 0.5, 0.0, 2.0, 1.0, -1.0});
    Matrix mask = Matrix::Constant(4, 6, 1.0);
    mask(1, 1) = 0.0;
    auto m = t.MulConst(t.ShiftCols(s, 2), mask);
    return t.MatMul(t.Param("b"), t.Add(m, t.ShiftCols(t.Param("d"), -1)));
  });
}

TEST(TapeGradients, MaxOverTime) {
  CheckOp([](Tape &t) {
    // 3 steps x 2 samples, lengths 3 and 2.
    auto pooled = t.MaxOverTime(t.Param("a"), {3, 2});
    return t.MatMul(t.Param("b"), pooled);
  });
}

TEST(TapeGradients, ReversalScalesUpstreamGradient) {
  const Parameters params = RandomParams(8);
  auto grads = [&](double lambda, bool reversed) {
    Tape tape(&params);
    auto h = tape.Param("a");
    if (reversed) h = tape.GradientReversal(h, lambda);
    auto loss = tape.SoftmaxCrossEntropy(tape.MatMul(tape.Param("b"), h), {0, 1, 2, 0, 1, 2}, 1.0);
    tape.Backward(loss);
    return tape.ParamGradients();
  };
  const auto plain = grads(0.0, false);
  const auto rev = grads(0.3, true);
  for (std::size_t i = 0; i < plain.at("a").size(); ++i) {
    EXPECT_NEAR(rev.at("a")[i], -0.3 * plain.at("a")[i], 1e-15);
  }
  EXPECT_EQ(rev.at("b"), plain.at("b"));
}

TEST(FiniteDiffCheck, FlagsAWrongGradient) {
  const Parameters params = RandomParams(2);
  auto wrong = [](const Parameters &p) {
    LossAndGradients out;
    out.grads = ZeroGradients(p);
    for (const auto &[name, e] : p.entries()) {
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        out.loss += e.value[i] * e.value[i];
        out.grads[name][i] = 3.0 * e.value[i];  // should be 2x
      }
    }
    return out;
  };
  EXPECT_THROW(FiniteDiffCheck(wrong, params, 1e-6, 1e-4), GradientCheckError);
}

TEST(FiniteDiffCheck, SamplesAtLeastTheRequestedCount) {
  const Parameters params = RandomParams(2);
  auto square = [](const Parameters &p) {
    LossAndGradients out;
    out.grads = ZeroGradients(p);
    for (const auto &[name, e] : p.entries()) {
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        out.loss += e.value[i] * e.value[i];
        out.grads[name][i] = 2.0 * e.value[i];
      }
    }
    return out;
  };
  EXPECT_EQ(FiniteDiffCheck(square, params, 1e-6, 1e-6, 50).checked, 50);
}

// ---------------------------------------------------------------------------
// Checkpoints

TEST(Checkpoint, RoundTripIsExact) {
  Checkpoint c{"abc123", "{\"x\":1}", RandomParams(9)};
  const std::string bytes = SerializeCheckpoint(c);
  const Checkpoint back = DeserializeCheckpoint(bytes, std::string("abc123"));
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.config_echo, c.config_echo);
  EXPECT_EQ(SerializeCheckpoint(back), bytes);
}

TEST(Checkpoint, LabelHashMismatchFailsFast) {
  Checkpoint c{"abc123", "{}", RandomParams(9)};
  EXPECT_THROW(DeserializeCheckpoint(SerializeCheckpoint(c), std::string("other")),
               ValidationError);
}

TEST(Checkpoint, TruncatedOrForeignBytesAreRejected) {
  Checkpoint c{"h", "{}", RandomParams(9)};
  const std::string bytes = SerializeCheckpoint(c);
  EXPECT_THROW(DeserializeCheckpoint(bytes.substr(0, bytes.size() / 2)), ValidationError);
  EXPECT_THROW(DeserializeCheckpoint("not a checkpoint"), ValidationError);
}

}  // namespace
}  // namespace advframe
