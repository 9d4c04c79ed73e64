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

#include "advframe/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "advframe/error.h"
#include "advframe/hash.h"

namespace advframe {

namespace {

bool ValidName(std::string_view name) {
  if (name.empty()) return false;
  return std::none_of(name.begin(), name.end(), [](char c) {
    return c == ':' || c == ' ' || c == '\t' || c == '\n' || c == '\r';
  });
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    std::size_t pos = line.find('\t', begin);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, pos - begin));
    begin = pos + 1;
  }
}

std::vector<std::string_view> SplitSpaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<int> ToInt(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> ToDouble(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

int Span::overlap(const Span &o) const {
  int lo = std::max(start, o.start);
  int hi = std::min(end, o.end);
  return hi >= lo ? hi - lo + 1 : 0;
}

std::string Sample::lu_lemma() const {
  std::string out;
  for (int i = target.start; i <= target.end && i < size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[i].lemma;
  }
  return out;
}

std::size_t Corpus::feature_arity() const {
  for (const auto &s : samples) {
    if (!s.tokens.empty()) return s.tokens.front().extra_features.size();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// FrameLexicon

void FrameLexicon::AddFrame(const std::string &frame,
                            const std::map<std::string, bool> &fes) {
  auto &entry = frame_to_fes_[frame];
  for (const auto &[name, core] : fes) entry[name] = core;
}

void FrameLexicon::AddLexicalUnit(const std::string &lemma,
                                  const std::string &frame) {
  lu_to_frames_[lemma].insert(frame);
}

const std::set<std::string> *FrameLexicon::FramesFor(
    const std::string &lemma) const {
  auto it = lu_to_frames_.find(lemma);
  return it == lu_to_frames_.end() ? nullptr : &it->second;
}

bool FrameLexicon::HasFrame(const std::string &frame) const {
  return frame_to_fes_.count(frame) > 0;
}

std::optional<bool> FrameLexicon::IsCore(const std::string &frame,
                                         const std::string &fe) const {
  auto it = frame_to_fes_.find(frame);
  if (it == frame_to_fes_.end()) return std::nullopt;
  auto jt = it->second.find(fe);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

void FrameLexicon::Validate() const {
  for (const auto &[frame, fes] : frame_to_fes_) {
    if (!ValidName(frame)) throw ValidationError("invalid frame name '" + frame + "'");
    if (fes.empty()) throw ValidationError("frame " + frame + " has no frame elements");
    for (const auto &[fe, core] : fes) {
      if (!ValidName(fe)) {
        throw ValidationError("invalid frame element name '" + fe + "' in " + frame);
      }
    }
  }
  for (const auto &[lemma, frames] : lu_to_frames_) {
    if (frames.empty()) throw ValidationError("lexical unit " + lemma + " has no frames");
    for (const auto &f : frames) {
      if (!HasFrame(f)) {
        throw ValidationError("lexical unit " + lemma + " references unknown frame " + f);
      }
    }
  }
}

FrameLexicon FrameLexicon::FromJson(std::string_view text) {
  FrameLexicon lex;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    for (const auto &[frame, fes] : doc.at("frame_to_fes").items()) {
      std::map<std::string, bool> entry;
      for (const auto &fe : fes) {
        entry[fe.at("name").get<std::string>()] = fe.at("core").get<bool>();
      }
      lex.AddFrame(frame, entry);
    }
    for (const auto &[lemma, frames] : doc.at("lu_to_frames").items()) {
      if (frames.empty()) lex.lu_to_frames_[lemma];
      for (const auto &f : frames) lex.AddLexicalUnit(lemma, f.get<std::string>());
    }
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("lexicon: ") + e.what());
  }
  lex.Validate();
  return lex;
}

FrameLexicon FrameLexicon::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read lexicon " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

std::string FrameLexicon::ToJson() const {
  nlohmann::ordered_json doc;
  doc["lu_to_frames"] = nlohmann::ordered_json::object();
  for (const auto &[lemma, frames] : lu_to_frames_) {
    doc["lu_to_frames"][lemma] = std::vector<std::string>(frames.begin(), frames.end());
  }
  doc["frame_to_fes"] = nlohmann::ordered_json::object();
  for (const auto &[frame, fes] : frame_to_fes_) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto &[fe, core] : fes) arr.push_back({{"name", fe}, {"core", core}});
    doc["frame_to_fes"][frame] = arr;
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Labels

JointLabel JointLabel::LU(Bio bio, std::string frame) {
  return {bio, LabelKind::kLU, std::move(frame), {}};
}

JointLabel JointLabel::FE(Bio bio, std::string frame, std::string fe) {
  return {bio, LabelKind::kFE, std::move(frame), std::move(fe)};
}

bool JointLabel::SamePayload(const JointLabel &o) const {
  return !is_outside() && !o.is_outside() && kind == o.kind &&
         frame == o.frame && fe == o.fe;
}

std::string JointLabel::ToString() const {
  if (bio == Bio::kO) return "O";
  std::string out = bio == Bio::kB ? "B-" : "I-";
  if (kind == LabelKind::kLU) return out + "LU:" + frame;
  return out + "FE:" + frame + ":" + fe;
}

JointLabel JointLabel::Parse(std::string_view text) {
  if (text == "O") return Outside();
  auto bad = [&]() {
    return ValidationError("malformed label '" + std::string(text) + "'");
  };
  if (text.size() < 5 || text[1] != '-') throw bad();
  Bio bio;
  if (text[0] == 'B') {
    bio = Bio::kB;
  } else if (text[0] == 'I') {
    bio = Bio::kI;
  } else {
    throw bad();
  }
  std::string_view rest = text.substr(2);
  if (rest.substr(0, 3) == "LU:") {
    std::string_view frame = rest.substr(3);
    if (!ValidName(frame)) throw bad();
    return LU(bio, std::string(frame));
  }
  if (rest.substr(0, 3) == "FE:") {
    rest = rest.substr(3);
    auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw bad();
    std::string_view frame = rest.substr(0, colon);
    std::string_view fe = rest.substr(colon + 1);
    if (!ValidName(frame) || !ValidName(fe)) throw bad();
    return FE(bio, std::string(frame), std::string(fe));
  }
  throw bad();
}

bool BioTransitionAllowed(const JointLabel *prev, const JointLabel &label) {
  if (label.bio != Bio::kI) return true;
  return prev != nullptr && label.SamePayload(*prev);
}

int FirstBioViolation(std::span<const JointLabel> labels) {
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const JointLabel *prev = t == 0 ? nullptr : &labels[t - 1];
    if (!BioTransitionAllowed(prev, labels[t])) return static_cast<int>(t);
  }
  return -1;
}

LabelSpace::LabelSpace(std::vector<JointLabel> labels)
    : labels_(std::move(labels)) {
  const int n = size();
  for (int i = 0; i < n; ++i) index_.emplace(labels_[i].ToString(), i);
  allowed_.resize(static_cast<std::size_t>(n + 1) * n);
  for (int prev = 0; prev <= n; ++prev) {
    const JointLabel *p = prev == n ? nullptr : &labels_[prev];
    for (int cur = 0; cur < n; ++cur) {
      allowed_[static_cast<std::size_t>(prev) * n + cur] = BioTransitionAllowed(p, labels_[cur]);
    }
  }
}

std::optional<int> LabelSpace::IndexOf(const JointLabel &label) const {
  auto it = index_.find(label.ToString());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string LabelSpace::Hash() const {
  std::string joined;
  for (const auto &l : labels_) {
    joined += l.ToString();
    joined.push_back('\n');
  }
  return Sha256Hex(joined).substr(0, 16);
}

LabelSpace BuildLabelSpace(const FrameLexicon &lexicon) {
  if (lexicon.empty()) throw ValidationError("empty lexicon");
  std::set<std::string> lu_frames;
  for (const auto &[lemma, frames] : lexicon.lu_to_frames()) {
    lu_frames.insert(frames.begin(), frames.end());
  }
  std::vector<JointLabel> rest;
  for (const auto &f : lu_frames) {
    rest.push_back(JointLabel::LU(Bio::kB, f));
    rest.push_back(JointLabel::LU(Bio::kI, f));
  }
  for (const auto &[frame, fes] : lexicon.frame_to_fes()) {
    for (const auto &[fe, core] : fes) {
      rest.push_back(JointLabel::FE(Bio::kB, frame, fe));
      rest.push_back(JointLabel::FE(Bio::kI, frame, fe));
    }
  }
  std::sort(rest.begin(), rest.end(), [](const JointLabel &a, const JointLabel &b) {
    return a.ToString() < b.ToString();
  });
  std::vector<JointLabel> labels{JointLabel::Outside()};
  labels.insert(labels.end(), rest.begin(), rest.end());
  return LabelSpace(std::move(labels));
}

std::vector<JointLabel> EncodeLabels(const Sample &sample) {
  if (!sample.gold) throw ValidationError("cannot encode an unlabeled sample");
  const FrameAnnotation &ann = *sample.gold;
  std::vector<JointLabel> labels(sample.tokens.size());
  std::vector<bool> taken(sample.tokens.size(), false);
  auto fill = [&](Span span, auto make) {
    if (span.start < 0 || span.end >= sample.size() || span.start > span.end) {
      throw ValidationError("span out of bounds");
    }
    for (int t = span.start; t <= span.end; ++t) {
      if (taken[t]) throw ValidationError("overlapping spans at token " + std::to_string(t));
      taken[t] = true;
      labels[t] = make(t == span.start ? Bio::kB : Bio::kI);
    }
  };
  if (ann.frame) {
    fill(ann.lu_span, [&](Bio b) { return JointLabel::LU(b, *ann.frame); });
    for (const auto &fe : ann.elements) {
      fill(fe.span, [&](Bio b) { return JointLabel::FE(b, *ann.frame, fe.name); });
    }
  } else if (!ann.elements.empty()) {
    throw ValidationError("null-frame annotation with frame elements");
  }
  return labels;
}

FrameAnnotation DecodeLabels(std::span<const JointLabel> labels, Span target,
                             const FrameLexicon &lexicon) {
  const int n = static_cast<int>(labels.size());
  if (target.start < 0 || target.end >= n || target.start > target.end) {
    throw ValidationError("target span out of bounds");
  }
  if (int bad = FirstBioViolation(labels); bad >= 0) {
    throw ValidationError("BIO violation at token " + std::to_string(bad) + " (" +
                          labels[bad].ToString() + ")");
  }
  FrameAnnotation ann;
  ann.lu_span = target;
  const JointLabel &head = labels[target.start];
  if (!head.is_outside()) {
    if (head.kind != LabelKind::kLU || head.bio != Bio::kB) {
      throw ValidationError("target must start with B-LU, got " + head.ToString());
    }
    ann.frame = head.frame;
  }
  for (int t = target.start; t <= target.end; ++t) {
    const JointLabel &l = labels[t];
    bool ok = ann.frame ? (l.kind == LabelKind::kLU && l.frame == *ann.frame &&
                           l.bio == (t == target.start ? Bio::kB : Bio::kI))
                        : l.is_outside();
    if (!ok) {
      throw ValidationError("inconsistent label " + l.ToString() + " inside target");
    }
  }
  if (target.end + 1 < n && labels[target.end + 1].bio == Bio::kI &&
      labels[target.end + 1].kind == LabelKind::kLU) {
    throw ValidationError("LU label extends past the target");
  }
  for (int t = 0; t < n; ++t) {
    if (target.contains(t)) continue;
    const JointLabel &l = labels[t];
    if (l.is_outside()) continue;
    if (l.kind == LabelKind::kLU) {
      throw ValidationError("LU label outside the target at token " + std::to_string(t));
    }
    if (!ann.frame) {
      throw ValidationError("frame element without a frame at token " + std::to_string(t));
    }
    if (l.frame != *ann.frame) {
      throw ValidationError("frame element " + l.ToString() + " does not match frame " +
                            *ann.frame);
    }
    if (l.bio == Bio::kB) {
      auto core = lexicon.IsCore(l.frame, l.fe);
      if (!core) throw ValidationError("unknown frame element " + l.ToString());
      ann.elements.push_back({l.fe, {t, t}, *core});
    } else {
      ann.elements.back().span.end = t;
    }
  }
  return ann;
}

void ValidateAnnotation(const FrameAnnotation &ann, int sentence_length,
                        const FrameLexicon &lexicon) {
  auto in_bounds = [&](Span s) {
    return s.start >= 0 && s.start <= s.end && s.end < sentence_length;
  };
  if (!in_bounds(ann.lu_span)) throw ValidationError("LU span out of bounds");
  if (!ann.frame) {
    if (!ann.elements.empty()) {
      throw ValidationError("null-frame annotation with frame elements");
    }
    return;
  }
  if (!lexicon.HasFrame(*ann.frame)) {
    throw ValidationError("unknown frame " + *ann.frame);
  }
  for (std::size_t i = 0; i < ann.elements.size(); ++i) {
    const auto &fe = ann.elements[i];
    if (!in_bounds(fe.span)) throw ValidationError("FE span out of bounds");
    auto core = lexicon.IsCore(*ann.frame, fe.name);
    if (!core) throw ValidationError("FE " + fe.name + " not in frame " + *ann.frame);
    if (*core != fe.core) throw ValidationError("FE " + fe.name + " core flag mismatch");
    if (fe.span.overlaps(ann.lu_span)) {
      throw ValidationError("FE " + fe.name + " overlaps the LU span");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (fe.span.overlaps(ann.elements[j].span)) {
        throw ValidationError("overlapping frame elements");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Column format

namespace {

struct PendingBlock {
  std::size_t first_line = 0;
  std::optional<Span> target;
  std::size_t target_line = 0;
  std::optional<double> wer;
  std::vector<Token> tokens;
  std::vector<std::string> labels;
  std::vector<std::size_t> lines;

  bool empty() const { return tokens.empty() && !target && !wer; }
};

Sample FinishBlock(const PendingBlock &block, const FrameLexicon &lexicon) {
  Sample sample;
  sample.tokens = block.tokens;
  sample.wer = block.wer;
  const std::size_t header_line = block.target ? block.target_line : block.first_line;
  if (block.tokens.empty()) throw ParseError(header_line, "block without tokens");

  const bool unlabeled = std::all_of(block.labels.begin(), block.labels.end(),
                                     [](const std::string &l) { return l == "_"; });
  std::vector<JointLabel> labels;
  if (!unlabeled) {
    for (std::size_t t = 0; t < block.labels.size(); ++t) {
      JointLabel label;
      try {
        label = JointLabel::Parse(block.labels[t]);
      } catch (const ValidationError &e) {
        throw ParseError(block.lines[t], e.what());
      }
      const JointLabel *prev = t == 0 ? nullptr : &labels.back();
      if (!BioTransitionAllowed(prev, label)) {
        throw ParseError(block.lines[t], "BIO violation: " + label.ToString() +
                                             " on token '" + block.tokens[t].surface +
                                             "' does not continue a matching span");
      }
      if (!label.is_outside()) {
        if (!lexicon.HasFrame(label.frame)) {
          throw ParseError(block.lines[t], "unknown frame " + label.frame);
        }
        if (label.kind == LabelKind::kFE && !lexicon.IsCore(label.frame, label.fe)) {
          throw ParseError(block.lines[t], "unknown frame element " + label.ToString());
        }
      }
      labels.push_back(std::move(label));
    }
  }

  if (block.target) {
    sample.target = *block.target;
  } else {
    // No header: the target is the LU-labelled span.
    int start = -1, end = -1;
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (!labels[t].is_outside() && labels[t].kind == LabelKind::kLU) {
        if (start < 0) start = static_cast<int>(t);
        end = static_cast<int>(t);
      }
    }
    if (start < 0) throw ParseError(header_line, "block without #target header");
    sample.target = {start, end};
  }
  const int n = sample.size();
  if (sample.target.start < 0 || sample.target.end >= n ||
      sample.target.start > sample.target.end) {
    throw ParseError(header_line, "target span out of bounds");
  }
  if (!unlabeled) {
    try {
      sample.gold = DecodeLabels(labels, sample.target, lexicon);
      ValidateAnnotation(*sample.gold, n, lexicon);
    } catch (const ValidationError &e) {
      throw ParseError(header_line, e.what());
    }
  }
  return sample;
}

}  // namespace

Corpus ParseCorpus(std::string_view text, const FrameLexicon &lexicon) {
  Corpus corpus;
  PendingBlock block;
  std::optional<std::size_t> arity;
  bool seen_block = false;
  std::size_t line_no = 0;

  auto flush = [&]() {
    if (block.empty()) return;
    corpus.samples.push_back(FinishBlock(block, lexicon));
    block = PendingBlock{};
    seen_block = true;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::string_view trimmed = line;
    while (!trimmed.empty() && (trimmed.back() == ' ' || trimmed.back() == '\t')) {
      trimmed.remove_suffix(1);
    }
    if (trimmed.empty()) {
      flush();
      continue;
    }
    if (trimmed.front() == '#') {
      auto fields = SplitSpaces(trimmed);
      if (!block.tokens.empty()) {
        throw ParseError(line_no, "header line inside a token block");
      }
      if (block.empty()) block.first_line = line_no;
      if (fields[0] == "#corpus") {
        if (seen_block || !block.empty() || fields.size() != 3) {
          throw ParseError(line_no, "#corpus must be the first line: #corpus <name> <domain>");
        }
        auto domain = ToInt(fields[2]);
        if (!domain || *domain < 0) throw ParseError(line_no, "bad domain id");
        corpus.name = std::string(fields[1]);
        corpus.domain_id = *domain;
        block = PendingBlock{};
      } else if (fields[0] == "#target") {
        if (fields.size() != 3) throw ParseError(line_no, "expected #target <start> <end>");
        auto s = ToInt(fields[1]);
        auto e = ToInt(fields[2]);
        if (!s || !e) throw ParseError(line_no, "non-integer target bounds");
        block.target = Span{*s, *e};
        block.target_line = line_no;
      } else if (fields[0] == "#wer") {
        auto w = fields.size() == 2 ? ToDouble(fields[1]) : std::nullopt;
        if (!w || *w < 0) throw ParseError(line_no, "expected #wer <rate>");
        block.wer = *w;
      } else {
        throw ParseError(line_no, "unknown header " + std::string(fields[0]));
      }
      continue;
    }
    auto cols = SplitTabs(trimmed);
    if (cols.size() < 4) {
      throw ParseError(line_no, "expected at least 4 tab-separated columns, got " +
                                    std::to_string(cols.size()));
    }
    const std::size_t n_feats = cols.size() - 4;
    if (!arity) arity = n_feats;
    if (*arity != n_feats) {
      throw ParseError(line_no, "feature arity " + std::to_string(n_feats) +
                                    " differs from corpus arity " + std::to_string(*arity));
    }
    if (cols[0].empty()) throw ParseError(line_no, "empty surface form");
    if (block.empty()) block.first_line = line_no;
    Token tok;
    tok.surface = std::string(cols[0]);
    tok.lemma = std::string(cols[1]);
    tok.pos = std::string(cols[2]);
    for (std::size_t i = 0; i < n_feats; ++i) tok.extra_features.emplace_back(cols[3 + i]);
    block.tokens.push_back(std::move(tok));
    block.labels.emplace_back(cols.back());
    block.lines.push_back(line_no);
  }
  flush();
  return corpus;
}

std::string WriteSampleBlock(const Sample &sample, std::span<const JointLabel> labels) {
  std::string out = "#target " + std::to_string(sample.target.start) + " " +
                    std::to_string(sample.target.end) + "\n";
  if (sample.wer) out += "#wer " + FormatDouble(*sample.wer) + "\n";
  for (int t = 0; t < sample.size(); ++t) {
    const Token &tok = sample.tokens[t];
    out += tok.surface;
    out += '\t';
    out += tok.lemma;
    out += '\t';
    out += tok.pos;
    for (const auto &f : tok.extra_features) {
      out += '\t';
      out += f;
    }
    out += '\t';
    out += labels.empty() ? std::string("_") : labels[t].ToString();
    out += '\n';
  }
  return out;
}

std::string WriteCorpus(const Corpus &corpus) {
  std::string out;
  if (!corpus.name.empty() || corpus.domain_id != 0) {
    out += "#corpus " + (corpus.name.empty() ? std::string("corpus") : corpus.name) + " " +
           std::to_string(corpus.domain_id) + "\n";
  }
  bool first = true;
  for (const auto &s : corpus.samples) {
    if (!first) out += '\n';
    first = false;
    std::vector<JointLabel> labels;
    if (s.gold) labels = EncodeLabels(s);
    out += WriteSampleBlock(s, labels);
  }
  return out;
}

Corpus ReadCorpusFile(const std::string &path, const FrameLexicon &lexicon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read corpus " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParseCorpus(buf.str(), lexicon);
  } catch (const ParseError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void WriteCorpusFile(const Corpus &corpus, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << WriteCorpus(corpus);
}

}  // namespace advframe
