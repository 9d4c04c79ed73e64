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

#include "fixtures.h"

namespace advframe::fixture {

SynthConfig TinySynth() {
  SynthConfig c;
  c.seed = 7;
  c.n_train_written = 60;
  c.n_train_spoken = 30;
  c.n_test = 20;
  c.vocab_size = 60;
  c.n_frames = 4;
  c.fes_per_frame = 3;
  return c;
}

NetConfig TinyNet() {
  NetConfig n;
  n.word_dim = 6;
  n.lemma_dim = 6;
  n.pos_dim = 3;
  n.feature_dim = 2;
  n.hidden_size = 5;
  n.n_layers = 2;
  n.conv_window = 3;
  n.conv_channels = 4;
  return n;
}

const TinyWorld &World() {
  static const TinyWorld world = [] {
    TinyWorld w;
    w.data = Generate(TinySynth());
    w.labels = BuildLabelSpace(w.data.lexicon);
    const Corpus *corpora[] = {&w.data.written, &w.data.spoken_gold, &w.data.spoken_asr};
    w.vocab = FeatureVocab::Build(corpora);
    return w;
  }();
  return world;
}

}  // namespace advframe::fixture
