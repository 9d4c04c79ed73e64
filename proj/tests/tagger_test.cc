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
#include <filesystem>
#include <random>

#include "advframe/eval.h"
#include "advframe/tagger.h"
#include "fixtures.h"

namespace advframe {
namespace {

using fixture::World;

Batch BatchOf(std::span<const Sample> samples, std::vector<int> domains = {}, int pad_to = 0) {
  std::vector<const Sample *> ptrs;
  for (const auto &s : samples) ptrs.push_back(&s);
  if (domains.empty()) {
    for (std::size_t i = 0; i < samples.size(); ++i) domains.push_back(static_cast<int>(i % 2));
  }
  return MakeBatch(ptrs, domains, World().vocab, World().labels, 2, pad_to);
}

Parameters TinyParams(std::uint64_t seed = 11) {
  return InitParameters(fixture::TinyNet(), World().vocab, World().labels.size(), seed);
}

bool IsTrunk(const std::string &name) { return name.rfind("adv/", 0) != 0 && name.rfind("out/", 0) != 0; }

TEST(Forward, RowsAreDistributions) {
  const auto &samples = World().data.written.samples;
  const Batch b = BatchOf(std::span(samples).first(6));
  for (const auto &d : ForwardFrame(TinyParams(), fixture::TinyNet(), b)) {
    for (int t = 0; t < d.tokens(); ++t) {
      double sum = 0.0;
      for (double v : d.row(t)) sum += v;
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
  for (const auto &p : ForwardDomain(TinyParams(), fixture::TinyNet(), b, 0.3)) {
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-9);
  }
}

TEST(Forward, NearUniformAtInitialization) {
  const auto &w = World();
  std::mt19937_64 rng(2);
  std::vector<Sample> samples;
  const auto &pool = w.data.written.samples;
  for (int i = 0; i < 500; ++i) {
    Sample s;
    for (int t = 0; t < 5; ++t) s.tokens.push_back(pool[rng() % pool.size()].tokens[rng() % 3]);
    s.target = {static_cast<int>(rng() % 5), 0};
    s.target.end = s.target.start;
    samples.push_back(s);
  }
  const NetConfig net;  // full-size defaults
  const Parameters params = InitParameters(net, w.vocab, w.labels.size(), 7);
  double mean_o = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < samples.size(); k += 100) {
    const Batch b = BatchOf(std::span(samples).subspan(k, 100), std::vector<int>(100, 0));
    for (const auto &d : ForwardFrame(params, net, b)) {
      for (int t = 0; t < d.tokens(); ++t, ++n) mean_o += d.at(t, 0);
    }
  }
  mean_o /= n;
  const double uniform = 1.0 / w.labels.size();
  EXPECT_NEAR(mean_o, uniform, 0.1);
}

TEST(Forward, PaddingAndBatchCompanionsDoNotChangeOutputs) {
  const auto &samples = World().data.written.samples;
  const NetConfig net = fixture::TinyNet();
  const Parameters params = TinyParams();
  const auto alone = ForwardFrame(params, net, BatchOf(std::span(samples).first(1), {0}));
  const auto padded = ForwardFrame(params, net, BatchOf(std::span(samples).first(1), {0}, 40));
  const auto crowd = ForwardFrame(params, net, BatchOf(std::span(samples).first(7)));
  for (int t = 0; t < alone[0].tokens(); ++t) {
    for (int l = 0; l < alone[0].labels(); ++l) {
      EXPECT_NEAR(padded[0].at(t, l), alone[0].at(t, l), 1e-12);
      EXPECT_NEAR(crowd[0].at(t, l), alone[0].at(t, l), 1e-12);
    }
  }
  const Batch solo = BatchOf(std::span(samples).first(1), {0});
  const Batch pad = BatchOf(std::span(samples).first(1), {0}, 40);
  EXPECT_NEAR(ForwardDomain(params, net, solo, 0.5)[0][0], ForwardDomain(params, net, pad, 0.5)[0][0],
              1e-12);
}

TEST(Forward, DuplicateSamplesGiveIdenticalRows) {
  const auto &s = World().data.written.samples[3];
  const std::vector<Sample> twice = {s, s};
  const auto out = ForwardFrame(TinyParams(), fixture::TinyNet(), BatchOf(twice));
  // Blocked matrix products may round the two columns in a different order.
  ASSERT_EQ(out[0].tokens(), out[1].tokens());
  for (int t = 0; t < out[0].tokens(); ++t) {
    for (std::size_t l = 0; l < out[0].row(t).size(); ++l) {
      EXPECT_NEAR(out[0].row(t)[l], out[1].row(t)[l], 1e-14) << t << " " << l;
    }
  }
}

TEST(MakeBatch, RejectsBadDomainIds) {
  const auto &s = World().data.written.samples;
  EXPECT_THROW(BatchOf(std::span(s).first(1), {2}), ValidationError);
}

TEST(Init, SameSeedSameParametersAndTrunkIndependentOfHead) {
  const auto &w = World();
  const NetConfig net = fixture::TinyNet();
  EXPECT_EQ(TinyParams(4), TinyParams(4));
  EXPECT_NE(TinyParams(4), TinyParams(5));
  const Parameters with = InitParameters(net, w.vocab, w.labels.size(), 4, true);
  const Parameters without = InitParameters(net, w.vocab, w.labels.size(), 4, false);
  for (const auto &[name, e] : without.entries()) EXPECT_EQ(e.value, with.at(name)) << name;
  EXPECT_FALSE(without.Has("adv/dec/W"));
}

// ---------------------------------------------------------------------------
// Gradients

const char *kLayerPrefixes[] = {"emb/", "l0/fwd/", "l0/bwd/", "l1/fwd/", "l1/bwd/", "out/", "adv/"};

TEST(Gradients, EveryLayerMatchesFiniteDifferences) {
  const auto &samples = World().data.spoken_asr.samples;
  const Batch b = BatchOf(std::span(samples).first(5));
  const NetConfig net = fixture::TinyNet();
  const Parameters params = TinyParams();
  auto frame = [&](const Parameters &p) { return LossFrame(p, net, b); };
  auto adv = [&](const Parameters &p) { return LossAdv(p, net, b, 0.7, ReversalRoute::kBypassed); };
  for (const char *prefix : kLayerPrefixes) {
    auto in_layer = [prefix](const std::string &n) { return n.rfind(prefix, 0) == 0; };
    const bool head = std::string(prefix) == "adv/";
    if (!head) {
      const auto r = FiniteDiffCheck(frame, params, 1e-5, 1e-6, 50, 3, in_layer);
      EXPECT_GE(r.checked, 50) << prefix;
    }
    if (std::string(prefix) != "out/") {
      const auto r = FiniteDiffCheck(adv, params, 1e-5, 1e-6, 50, 4, in_layer);
      EXPECT_GE(r.checked, 50) << prefix;
    }
  }
}

TEST(Gradients, ReversedTrunkGradientIsNegatedScaledBypass) {
  const auto &samples = World().data.spoken_gold.samples;
  const Batch b = BatchOf(std::span(samples).first(6));
  const NetConfig net = fixture::TinyNet();
  const Parameters params = TinyParams();
  for (double lambda : {0.0, 0.25, 0.9999}) {
    const auto rev = LossAdv(params, net, b, lambda, ReversalRoute::kReversed);
    const auto byp = LossAdv(params, net, b, lambda, ReversalRoute::kBypassed);
    EXPECT_EQ(rev.loss, byp.loss);
    for (const auto &[name, g] : byp.grads) {
      const NumericArray &r = rev.grads.at(name);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double expected = IsTrunk(name) ? -lambda * g[i] : g[i];
        ASSERT_NEAR(r[i], expected, 1e-10) << name << "[" << i << "] lambda " << lambda;
      }
    }
  }
}

TEST(Gradients, StepCombinesFrameAndReversedDomainGradients) {
  const auto &samples = World().data.spoken_gold.samples;
  const Batch b = BatchOf(std::span(samples).first(6));
  const NetConfig net = fixture::TinyNet();
  const Parameters params = TinyParams();
  const double lambda = 0.6;
  const StepResult step = ComputeStep(params, net, b, lambda, true, 0);
  const auto frame = LossFrame(params, net, b);
  const auto adv = LossAdv(params, net, b, lambda, ReversalRoute::kBypassed);
  EXPECT_NEAR(step.loss_frame, frame.loss, 1e-12);
  EXPECT_NEAR(step.loss_adv, adv.loss, 1e-12);
  for (const auto &[name, entry] : params.entries()) {
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      if (IsTrunk(name)) {
        const double want = frame.grads.at(name)[i] - lambda * adv.grads.at(name)[i];
        ASSERT_NEAR(step.grads.frame.at(name)[i], want, 1e-10) << name;
      } else if (name.rfind("adv/", 0) == 0) {
        ASSERT_NEAR(step.grads.adv.at(name)[i], adv.grads.at(name)[i], 1e-12) << name;
      } else {
        ASSERT_NEAR(step.grads.frame.at(name)[i], frame.grads.at(name)[i], 1e-12) << name;
      }
    }
  }
}

// Toy network x -> tanh(W1 x) -> reversal -> W2 -> softmax, with gradients
// written out by hand.
TEST(Gradients, ToyTwoLayerReversalMatchesHandDerivation) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  Parameters p;
  for (auto &v : p.Add("W1", {3, 4}, ParamGroup::kShared).values()) v = u(rng);
  for (auto &v : p.Add("W2", {2, 3}, ParamGroup::kAdversarialHead).values()) v = u(rng);
  Matrix x(4, 5);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  const std::vector<int> gold = {0, 1, 1, 0, 1};
  const double lambda = 0.4;

  Tape tape(&p);
  auto h = tape.Tanh(tape.MatMul(tape.Param("W1"), tape.Constant(x)));
  auto logits = tape.MatMul(tape.Param("W2"), tape.GradientReversal(h, lambda));
  auto loss = tape.SoftmaxCrossEntropy(logits, gold, 1.0 / 5);
  tape.Backward(loss);
  const GradientMap g = tape.ParamGradients();

  const Matrix W1 = p.at("W1").AsMatrix(), W2 = p.at("W2").AsMatrix();
  const Matrix hv = (W1 * x).array().tanh().matrix();
  const Matrix z = W2 * hv;
  Matrix dz(2, 5);
  for (int j = 0; j < 5; ++j) {
    const double m = z.col(j).maxCoeff();
    const double e0 = std::exp(z(0, j) - m), e1 = std::exp(z(1, j) - m);
    dz(0, j) = (e0 / (e0 + e1) - (gold[j] == 0)) / 5;
    dz(1, j) = (e1 / (e0 + e1) - (gold[j] == 1)) / 5;
  }
  const Matrix dW2 = dz * hv.transpose();
  const Matrix dh = -lambda * (W2.transpose() * dz);
  const Matrix dpre = dh.cwiseProduct((1.0 - hv.array().square()).matrix());
  const Matrix dW1 = dpre * x.transpose();
  EXPECT_LT((g.at("W2").AsMatrix() - dW2).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((g.at("W1").AsMatrix() - dW1).cwiseAbs().maxCoeff(), 1e-14);
}

// ---------------------------------------------------------------------------
// Training

TEST(Train, ZeroEpochsReturnsInitialParameters) {
  const auto &w = World();
  TrainingState init;
  init.params = TinyParams();
  TrainConfig tc;
  tc.epochs = 0;
  const DomainCorpus corpora[] = {{&w.data.written, 0}};
  const TrainResult r = Train(init, fixture::TinyNet(), w.vocab, w.labels, corpora, tc);
  EXPECT_EQ(r.best.params, init.params);
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, FirstEpochIgnoresTheDomainLossAndIsDeterministic) {
  const auto &w = World();
  TrainingState init;
  init.params = TinyParams();
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  const DomainCorpus corpora[] = {{&w.data.written, 0}, {&w.data.spoken_gold, 1}};
  const NetConfig net = fixture::TinyNet();
  const TrainResult base = Train(init, net, w.vocab, w.labels, corpora, tc);
  tc.adversarial = true;
  const TrainResult adv = Train(init, net, w.vocab, w.labels, corpora, tc);
  const TrainResult again = Train(init, net, w.vocab, w.labels, corpora, tc);
  EXPECT_EQ(adv.last.params, again.last.params);
  ASSERT_EQ(adv.log.size(), 1u);
  EXPECT_EQ(adv.log[0].lambda, 0.0);
  for (const auto &[name, e] : base.last.params.entries()) {
    if (name.rfind("adv/", 0) != 0) EXPECT_EQ(e.value, adv.last.params.at(name)) << name;
  }
}

TEST(Train, LambdaReachesTheScheduleEndpoint) {
  const auto &w = World();
  TrainingState init;
  init.params = TinyParams();
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 16;
  tc.adversarial = true;
  const DomainCorpus corpora[] = {{&w.data.written, 0}, {&w.data.spoken_gold, 1}};
  const TrainResult r = Train(init, fixture::TinyNet(), w.vocab, w.labels, corpora, tc);
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_DOUBLE_EQ(r.log[0].progress, 0.0);
  EXPECT_DOUBLE_EQ(r.log[1].progress, 0.5);
  EXPECT_NEAR(r.log[2].lambda, std::tanh(5.0), 1e-12);
  for (const auto &e : r.log) EXPECT_GT(e.loss_adv, 0.0);
}

TEST(Train, SelectsTheBestValidationEpoch) {
  const auto &w = World();
  TrainingState init;
  init.params = TinyParams();
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 16;
  int calls = 0;
  std::vector<Parameters> seen;
  const double scripted[] = {0.2, 0.6, 0.4, 0.6};
  Validator v = [&](const Parameters &p) {
    seen.push_back(p);
    return ValidationScores{0.0, scripted[calls++], 0.0};
  };
  const DomainCorpus corpora[] = {{&w.data.written, 0}};
  const TrainResult r = Train(init, fixture::TinyNet(), w.vocab, w.labels, corpora, tc, v);
  EXPECT_EQ(r.best_epoch, 1);
  EXPECT_EQ(r.best.params, seen[1]);
  EXPECT_EQ(r.last.params, seen[3]);
}

TEST(EpochOrder, CoversEveryItemAndMixesProportionally) {
  const auto &w = World();
  const DomainCorpus corpora[] = {{&w.data.written, 0}, {&w.data.spoken_gold, 1}};
  const auto order = EpochOrder(corpora, 3, 0);
  const std::size_t n0 = w.data.written.samples.size(), n1 = w.data.spoken_gold.samples.size();
  ASSERT_EQ(order.size(), n0 + n1);
  std::set<std::pair<int, int>> unique(order.begin(), order.end());
  EXPECT_EQ(unique.size(), order.size());
  // Any prefix holds close to its proportional share of the smaller corpus.
  int spoken = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    spoken += order[k].first == 1;
    const double expected = (k + 1) * static_cast<double>(n1) / (n0 + n1);
    EXPECT_LE(std::abs(spoken - expected), 1.0 + 1e-9);
  }
  EXPECT_NE(EpochOrder(corpora, 3, 1), order);
  EXPECT_EQ(EpochOrder(corpora, 3, 0), order);
}

TEST(Model, SaveLoadRoundTripPredictsIdentically) {
  const auto &w = World();
  const TaggerModel m{fixture::TinyNet(), w.vocab, w.labels, TinyParams()};
  const auto path = (std::filesystem::temp_directory_path() / "advframe_model_test.ckpt").string();
  m.Save(path);
  const TaggerModel back = TaggerModel::Load(path, w.data.lexicon);
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.vocab, m.vocab);
  const auto samples = std::span(w.data.written.samples).first(5);
  EXPECT_EQ(back.Predict(samples), m.Predict(samples));

  FrameLexicon other = w.data.lexicon;
  other.AddFrame("Extra", {{"X", true}});
  EXPECT_THROW(TaggerModel::Load(path, other), ValidationError);
  std::filesystem::remove(path);
}

// Reference calibration: the baseline learns the synthetic task to a
// validation frame F1 of at least 0.9 within 30 epochs.
TEST(Train, BaselineLearnsTheSyntheticTask) {
  const SynthCorpora data = Generate(SynthConfig{});
  const LabelSpace labels = BuildLabelSpace(data.lexicon);
  const int n_train = SynthConfig{}.n_train_written;
  const int cut = n_train - n_train / 4;
  Corpus train{"train", 0, {data.written.samples.begin(), data.written.samples.begin() + cut}};
  const std::vector<Sample> val(data.written.samples.begin() + cut,
                                data.written.samples.begin() + n_train);
  const Corpus *ptrs[] = {&train};
  const FeatureVocab vocab = FeatureVocab::Build(ptrs);
  const NetConfig net;
  TrainingState init;
  init.params = InitParameters(net, vocab, labels.size(), 7);
  const DomainCorpus corpora[] = {{&train, 0}};
  double best_fi = 0.0;
  Validator v = [&](const Parameters &p) {
    const auto dists = TaggerModel{net, vocab, labels, p}.Predict(val);
    const auto grid = DefaultDeltaGrid();
    const SweepResult s = SweepDelta(dists, val, labels, data.lexicon, grid);
    best_fi = std::max(best_fi, s.fi_fmax);
    return ValidationScores{s.fi_fmax, s.ai_fmax, s.fmax_delta};
  };
  Train(init, net, vocab, labels, corpora, TrainConfig{}, v);
  EXPECT_GE(best_fi, 0.9);
}

}  // namespace
}  // namespace advframe
