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

// Small synthetic data and networks shared by the tests.

#ifndef ADVFRAME_TESTS_FIXTURES_H_
#define ADVFRAME_TESTS_FIXTURES_H_

#include "advframe/synth.h"
#include "advframe/tagger.h"

namespace advframe::fixture {

SynthConfig TinySynth();
NetConfig TinyNet();

struct TinyWorld {
  SynthCorpora data;
  LabelSpace labels;
  FeatureVocab vocab;
};

// Generated once per process.
const TinyWorld &World();

}  // namespace advframe::fixture

#endif  // ADVFRAME_TESTS_FIXTURES_H_
