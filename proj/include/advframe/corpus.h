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

// Annotated corpus data model, the column-based corpus format, the frame
// lexicon and the joint BIO label codec.
//
// A Sample is one sentence scoped to a single lexical-unit occurrence (the
// target). Its gold FrameAnnotation names the evoked frame, or none when the
// occurrence triggers no frame, together with the frame element spans.
//
// Labels live in a joint space so one softmax decides both the frame and its
// arguments: the target span carries B-LU:<frame>/I-LU:<frame>, argument
// spans carry B-FE:<frame>:<fe>/I-FE:<frame>:<fe>, everything else is O.
// A null frame is encoded as an all-O target region.

#ifndef ADVFRAME_CORPUS_H_
#define ADVFRAME_CORPUS_H_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace advframe {

struct Token {
  std::string surface;
  std::string lemma;
  std::string pos;
  std::vector<std::string> extra_features;

  bool operator==(const Token &) const = default;
};

// Inclusive token range.
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool contains(int i) const { return i >= start && i <= end; }
  bool overlaps(const Span &o) const { return start <= o.end && o.start <= end; }
  int overlap(const Span &o) const;

  auto operator<=>(const Span &) const = default;
};

struct FrameElement {
  std::string name;
  Span span;
  bool core = false;

  bool operator==(const FrameElement &) const = default;
};

struct FrameAnnotation {
  Span lu_span;
  std::optional<std::string> frame;  // nullopt: the LU triggers no frame
  std::vector<FrameElement> elements;

  bool is_null() const { return !frame.has_value(); }
  bool operator==(const FrameAnnotation &) const = default;
};

struct Sample {
  std::vector<Token> tokens;
  Span target;
  std::optional<FrameAnnotation> gold;
  // Per-sentence word error rate against the manual transcript, when the
  // sample comes from an ASR hypothesis.
  std::optional<double> wer;

  int size() const { return static_cast<int>(tokens.size()); }
  // Lemma of the target; tokens joined by a single space for multi-word LUs.
  std::string lu_lemma() const;

  bool operator==(const Sample &) const = default;
};

struct Corpus {
  std::string name;
  int domain_id = 0;
  std::vector<Sample> samples;

  // Number of extra feature columns (0 for an empty corpus).
  std::size_t feature_arity() const;
};

class FrameLexicon {
 public:
  void AddFrame(const std::string &frame,
                const std::map<std::string, bool> &fes);
  void AddLexicalUnit(const std::string &lemma, const std::string &frame);

  // Candidate frames for an LU lemma, or nullptr if the lemma is unknown.
  const std::set<std::string> *FramesFor(const std::string &lemma) const;
  bool HasFrame(const std::string &frame) const;
  // Core flag of an FE, or nullopt if the FE does not belong to the frame.
  std::optional<bool> IsCore(const std::string &frame,
                             const std::string &fe) const;

  const std::map<std::string, std::set<std::string>> &lu_to_frames() const {
    return lu_to_frames_;
  }
  const std::map<std::string, std::map<std::string, bool>> &frame_to_fes()
      const {
    return frame_to_fes_;
  }
  bool empty() const { return frame_to_fes_.empty(); }

  // Throws ValidationError if an LU references an undeclared frame or a set
  // is empty.
  void Validate() const;

  static FrameLexicon FromJson(std::string_view text);
  static FrameLexicon Load(const std::string &path);
  std::string ToJson() const;

 private:
  std::map<std::string, std::set<std::string>> lu_to_frames_;
  std::map<std::string, std::map<std::string, bool>> frame_to_fes_;
};

enum class Bio : std::uint8_t { kO, kB, kI };
enum class LabelKind : std::uint8_t { kLU, kFE };

struct JointLabel {
  Bio bio = Bio::kO;
  LabelKind kind = LabelKind::kLU;
  std::string frame;  // empty for O
  std::string fe;     // empty unless kind == kFE

  static JointLabel Outside() { return {}; }
  static JointLabel LU(Bio bio, std::string frame);
  static JointLabel FE(Bio bio, std::string frame, std::string fe);

  bool is_outside() const { return bio == Bio::kO; }
  // True when both labels name the same span type (kind, frame, fe).
  bool SamePayload(const JointLabel &o) const;

  std::string ToString() const;
  // Parses "O", "B-LU:F", "I-FE:F:X", ... Throws ValidationError.
  static JointLabel Parse(std::string_view text);

  bool operator==(const JointLabel &) const = default;
};

// True when `label` may follow `prev` (nullptr at sentence start).
bool BioTransitionAllowed(const JointLabel *prev, const JointLabel &label);

// Checks BIO validity of a whole sequence; returns the first offending
// position or -1.
int FirstBioViolation(std::span<const JointLabel> labels);

// Ordered label alphabet. Index 0 is always O.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<JointLabel> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  const JointLabel &at(int i) const { return labels_.at(i); }
  const std::vector<JointLabel> &labels() const { return labels_; }
  std::optional<int> IndexOf(const JointLabel &label) const;
  // Stable digest of the ordered label strings.
  std::string Hash() const;
  // BioTransitionAllowed over indices; prev < 0 is the sentence start.
  bool TransitionAllowed(int prev, int cur) const {
    return allowed_[static_cast<std::size_t>(prev < 0 ? size() : prev) * size() + cur] != 0;
  }

  static constexpr int kOutside = 0;

 private:
  std::vector<JointLabel> labels_;
  std::vector<char> allowed_;
  std::unordered_map<std::string, int> index_;
};

LabelSpace BuildLabelSpace(const FrameLexicon &lexicon);

std::vector<JointLabel> EncodeLabels(const Sample &sample);
FrameAnnotation DecodeLabels(std::span<const JointLabel> labels, Span target,
                             const FrameLexicon &lexicon);

// Checks FrameAnnotation invariants against a sentence length and lexicon.
void ValidateAnnotation(const FrameAnnotation &ann, int sentence_length,
                        const FrameLexicon &lexicon);

// Column format reader/writer. The reader validates every annotation against
// the lexicon.
Corpus ParseCorpus(std::string_view text, const FrameLexicon &lexicon);
std::string WriteCorpus(const Corpus &corpus);
Corpus ReadCorpusFile(const std::string &path, const FrameLexicon &lexicon);
void WriteCorpusFile(const Corpus &corpus, const std::string &path);

// Writes `sample` with `labels` in the label column (used by prediction).
std::string WriteSampleBlock(const Sample &sample,
                             std::span<const JointLabel> labels);

}  // namespace advframe

#endif  // ADVFRAME_CORPUS_H_
