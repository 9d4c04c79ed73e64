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

#include "advframe/run_config.h"

namespace advframe {
namespace {

TEST(RunConfig, DefaultsValidateAndEchoIsStable) {
  const RunConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.Hash(), RunConfig{}.Hash());
  EXPECT_EQ(ParseRunConfig("").Echo(), c.Echo());
}

TEST(RunConfig, ParsesEverySection) {
  const RunConfig c = ParseRunConfig(R"(
# comment
[train]
mode = adversarial
learning_rate = 0.25
epochs = 3
seed = 11

[net]
hidden_size = 16
n_layers = 2

[decoder]
delta = -0.2
mode = greedy
use_coherence_filter = false

[paths]
lexicon = "lex.json"
train = a.conll:0, b.conll:1

[synth]
n_test = 40

[experiment]
n_seeds = 2
probe_epochs = 3
)");
  EXPECT_TRUE(c.train.adversarial);
  EXPECT_EQ(c.train.learning_rate, 0.25);
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_EQ(c.net.hidden_size, 16);
  EXPECT_EQ(c.net.n_layers, 2);
  EXPECT_EQ(c.decoder.delta, -0.2);
  EXPECT_EQ(c.decoder.mode, DecodeMode::kGreedy);
  EXPECT_FALSE(c.decoder.use_coherence_filter);
  EXPECT_EQ(c.paths.lexicon, "lex.json");
  ASSERT_EQ(c.paths.train.size(), 2u);
  EXPECT_EQ(c.paths.train[1].path, "b.conll");
  EXPECT_EQ(c.paths.train[1].domain, 1);
  EXPECT_EQ(c.synth.n_test, 40);
  EXPECT_EQ(c.experiment.n_seeds, 2);
  EXPECT_EQ(c.experiment.probe.epochs, 3);
  EXPECT_NE(c.Hash(), RunConfig{}.Hash());
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ParseRunConfig("[train]\nlearning_rat = 0.1\n"), ValidationError);
  EXPECT_THROW(ParseRunConfig("[nowhere]\nx = 1\n"), ValidationError);
  EXPECT_THROW(ParseRunConfig("[train]\nmode = sideways\n"), ValidationError);
  EXPECT_THROW(ParseRunConfig("[train]\nepochs = many\n"), ValidationError);
  EXPECT_THROW(ParseRunConfig("[train]\nbatch_size = 0\n"), ValidationError);
  EXPECT_THROW(ParseRunConfig("[decoder]\ndelta = 1.0\n"), ValidationError);
  EXPECT_THROW(ParseRunConfig("[paths]\ntrain = a.conll\n"), ValidationError);
  EXPECT_THROW(ParseRunConfig("[paths]\ntrain = a.conll:5\n"), ValidationError);
  EXPECT_THROW(ParseRunConfig("[train\n"), ValidationError);
}

TEST(RunConfig, ErrorsNameTheKey) {
  try {
    ParseRunConfig("[net]\nhidden_size = -3\n");
    FAIL();
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("hidden_size"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, MissingFileIsAValidationError) {
  EXPECT_THROW(LoadRunConfig("/nonexistent/advframe.ini"), ValidationError);
}

}  // namespace
}  // namespace advframe
