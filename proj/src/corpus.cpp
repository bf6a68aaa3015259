// src/corpus.cpp

#include "apl/corpus.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apl/common.hpp"

namespace apl {

using ordered_json = nlohmann::ordered_json;

std::string error_type_code(ErrorType t) {
  switch (t) {
    case ErrorType::kNone: return "none";
    case ErrorType::kSubstitution: return "s";
    case ErrorType::kDeletion: return "d";
    case ErrorType::kAddition: return "a";
  }
  throw DataError("bad error type");
}

ErrorType parse_error_type(const std::string& code) {
  if (code == "none") return ErrorType::kNone;
  if (code == "s") return ErrorType::kSubstitution;
  if (code == "d") return ErrorType::kDeletion;
  if (code == "a") return ErrorType::kAddition;
  throw DataError(cat("unknown error type code '", code, "'"));
}

std::vector<PhoneLabel> canonical_of(const std::vector<AnnotationSegment>& segments) {
  std::vector<PhoneLabel> seq;
  for (const auto& s : segments)
    if (s.error_type != ErrorType::kAddition) seq.push_back(*s.canonical);
  return seq;
}

std::vector<PhoneLabel> perceived_of(const std::vector<AnnotationSegment>& segments) {
  std::vector<PhoneLabel> seq;
  for (const auto& s : segments)
    if (s.error_type != ErrorType::kDeletion) seq.push_back(*s.perceived);
  return seq;
}

void validate_record(const UtteranceRecord& rec) {
  if (rec.id.empty()) throw DataError("utterance record without id");
  if (rec.audio_path.empty() == rec.feature_path.empty())
    throw DataError(cat("record '", rec.id, "': exactly one of audio_path/feature_path must be set"));
  for (const auto& s : rec.segments) {
    if (!(s.end_s > s.start_s))
      throw DataError(cat("record '", rec.id, "': segment end ", s.end_s, " not after start ", s.start_s));
    bool has_c = s.canonical.has_value(), has_p = s.perceived.has_value();
    switch (s.error_type) {
      case ErrorType::kNone:
        if (!has_c || !has_p || !(*s.canonical == *s.perceived))
          throw DataError(cat("record '", rec.id, "': error_type none requires canonical == perceived"));
        break;
      case ErrorType::kSubstitution:
        if (!has_c || !has_p || *s.canonical == *s.perceived)
          throw DataError(cat("record '", rec.id, "': substitution requires canonical != perceived"));
        break;
      case ErrorType::kDeletion:
        if (!has_c || has_p) throw DataError(cat("record '", rec.id, "': deletion carries canonical only"));
        break;
      case ErrorType::kAddition:
        if (has_c || !has_p) throw DataError(cat("record '", rec.id, "': addition carries perceived only"));
        break;
    }
  }
  if (!(rec.canonical_seq == canonical_of(rec.segments)))
    throw DataError(cat("record '", rec.id, "': canonical_seq does not match segments"));
  if (!(rec.perceived_seq == perceived_of(rec.segments)))
    throw DataError(cat("record '", rec.id, "': perceived_seq does not match segments"));
}

std::vector<AnnotationSegment> parse_phn(const std::string& text, int sample_rate) {
  if (sample_rate <= 0) throw DataError("sample rate must be positive");
  std::vector<AnnotationSegment> segments;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  long long prev_end = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ls(t);
    long long start = 0, end = 0;
    std::string label, extra;
    if (!(ls >> start >> end >> label) || (ls >> extra))
      throw DataError(cat("phn line ", line_no, ": expected 'start end label', got '", t, "'"));
    if (start < 0) throw DataError(cat("phn line ", line_no, ": negative sample index"));
    if (end <= start) throw DataError(cat("phn line ", line_no, ": end ", end, " not after start ", start));
    if (start < prev_end) throw DataError(cat("phn line ", line_no, ": non-monotonic sample indices"));
    prev_end = end;
    PhoneLabel folded = fold_timit61(PhoneLabel(lowercase(label)));
    if (folded == discard_label()) continue;
    AnnotationSegment seg;
    seg.start_s = static_cast<double>(start) / sample_rate;
    seg.end_s = static_cast<double>(end) / sample_rate;
    seg.canonical = folded;
    seg.perceived = folded;
    seg.error_type = ErrorType::kNone;
    segments.push_back(std::move(seg));
  }
  return segments;
}

namespace {

// Both TextGrid layouts carry the same payload once decorations (key names,
// '=', bracketed indices) are removed, so the parser works on a token stream
// of quoted strings, numbers and <exists>/<absent> flags.
struct TgToken {
  enum Kind { kString, kNumber, kFlag } kind;
  std::string text;
  double number = 0.0;
};

std::vector<TgToken> tg_tokenize(const std::string& text) {
  std::vector<TgToken> tokens;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
      continue;
    }
    if (c == '"') {
      std::string s;
      ++i;
      while (i < n) {
        if (text[i] == '"') {
          if (i + 1 < n && text[i + 1] == '"') {  // doubled quote escape
            s += '"';
            i += 2;
          } else {
            ++i;
            break;
          }
        } else {
          s += text[i++];
        }
      }
      tokens.push_back({TgToken::kString, std::move(s)});
      continue;
    }
    size_t j = i;
    while (j < n && text[j] != ' ' && text[j] != '\t' && text[j] != '\r' && text[j] != '\n' && text[j] != '"') ++j;
    std::string word = text.substr(i, j - i);
    i = j;
    if (word == "<exists>" || word == "<absent>") {
      tokens.push_back({TgToken::kFlag, word});
      continue;
    }
    char* end = nullptr;
    double v = std::strtod(word.c_str(), &end);
    if (end == word.c_str() + word.size() && !word.empty())
      tokens.push_back({TgToken::kNumber, word, v});
    // anything else is long-format decoration
  }
  return tokens;
}

class TgReader {
 public:
  explicit TgReader(std::vector<TgToken> tokens) : tokens_(std::move(tokens)) {}

  std::string string_tok(const char* what) {
    const TgToken& t = next(what);
    if (t.kind != TgToken::kString) throw DataError(cat("TextGrid: expected ", what, " string"));
    return t.text;
  }
  double number_tok(const char* what) {
    const TgToken& t = next(what);
    if (t.kind != TgToken::kNumber) throw DataError(cat("TextGrid: expected ", what, " number"));
    return t.number;
  }
  std::string flag_tok() {
    const TgToken& t = next("tiers flag");
    if (t.kind != TgToken::kFlag) throw DataError("TextGrid: expected <exists> flag");
    return t.text;
  }

 private:
  const TgToken& next(const char* what) {
    if (pos_ >= tokens_.size()) throw DataError(cat("TextGrid: truncated file while reading ", what));
    return tokens_[pos_++];
  }
  std::vector<TgToken> tokens_;
  size_t pos_ = 0;
};

// Lowercase, strip one trailing stress digit, fold via the L2-ARCTIC table.
PhoneLabel tg_fold(std::string raw, const char* context) {
  std::string t = lowercase(trim(raw));
  if (t.empty()) throw DataError(cat("TextGrid: empty phone in ", context));
  if (t.size() > 1 && t.back() >= '0' && t.back() <= '2') t.pop_back();
  return fold_arctic48(PhoneLabel(t));
}

std::optional<AnnotationSegment> tg_interval(double xmin, double xmax, const std::string& raw_label) {
  AnnotationSegment seg;
  seg.start_s = xmin;
  seg.end_s = xmax;
  std::string label = trim(raw_label);
  std::string lower = lowercase(label);
  if (label.empty() || lower == "sp" || lower == "spn" || lower == "sil") {
    if (!(xmax > xmin)) return std::nullopt;  // zero-width silence padding
    seg.canonical = PhoneLabel("sil");
    seg.perceived = seg.canonical;
    return seg;
  }
  if (!(xmax > xmin)) throw DataError(cat("TextGrid: interval '", label, "' has end <= start"));
  if (label.find(',') == std::string::npos) {
    seg.canonical = tg_fold(label, "interval");
    seg.perceived = seg.canonical;
    return seg;
  }
  std::vector<std::string> parts = split(label, ',');
  if (parts.size() != 3)
    throw DataError(cat("TextGrid: expected 'canonical,perceived,type', got '", label, "'"));
  std::string type = lowercase(trim(parts[2]));
  if (type == "s") {
    seg.canonical = tg_fold(parts[0], "substitution");
    seg.perceived = tg_fold(parts[1], "substitution");
    // Folding can merge the pair (e.g. "ao,aa,s"); the 39-set sees no error.
    if (*seg.canonical == *seg.perceived)
      seg.error_type = ErrorType::kNone;
    else
      seg.error_type = ErrorType::kSubstitution;
  } else if (type == "d") {
    seg.canonical = tg_fold(parts[0], "deletion");
    seg.perceived = std::nullopt;
    seg.error_type = ErrorType::kDeletion;
  } else if (type == "a") {
    seg.canonical = std::nullopt;
    seg.perceived = tg_fold(parts[1], "addition");
    seg.error_type = ErrorType::kAddition;
  } else {
    throw DataError(cat("TextGrid: unknown error type code '", parts[2], "' in '", label, "'"));
  }
  return seg;
}

}  // namespace

std::vector<AnnotationSegment> parse_textgrid(const std::string& text) {
  TgReader r(tg_tokenize(text));
  if (r.string_tok("file type") != "ooTextFile") throw DataError("TextGrid: file type is not ooTextFile");
  if (r.string_tok("object class") != "TextGrid") throw DataError("TextGrid: object class is not TextGrid");
  r.number_tok("xmin");
  r.number_tok("xmax");
  if (r.flag_tok() != "<exists>") throw DataError("TextGrid: no tiers");
  int n_tiers = static_cast<int>(r.number_tok("tier count"));

  std::optional<std::vector<AnnotationSegment>> phones;
  for (int tier = 0; tier < n_tiers; ++tier) {
    std::string cls = r.string_tok("tier class");
    std::string name = r.string_tok("tier name");
    r.number_tok("tier xmin");
    r.number_tok("tier xmax");
    int count = static_cast<int>(r.number_tok("entry count"));
    bool is_phones = lowercase(name) == "phones";
    if (cls == "IntervalTier") {
      std::vector<AnnotationSegment> segments;
      double prev_end = 0.0;
      for (int i = 0; i < count; ++i) {
        double xmin = r.number_tok("interval xmin");
        double xmax = r.number_tok("interval xmax");
        std::string label = r.string_tok("interval text");
        if (!is_phones) continue;
        if (xmin < prev_end - 1e-9)
          throw DataError(cat("TextGrid: overlapping intervals in phones tier near t=", xmin));
        prev_end = std::max(prev_end, xmax);
        if (auto seg = tg_interval(xmin, xmax, label)) segments.push_back(std::move(*seg));
      }
      if (is_phones && !phones) phones = std::move(segments);
    } else if (cls == "TextTier") {
      for (int i = 0; i < count; ++i) {
        r.number_tok("point time");
        r.string_tok("point mark");
      }
    } else {
      throw DataError(cat("TextGrid: unsupported tier class '", cls, "'"));
    }
  }
  if (!phones) throw DataError("TextGrid: no interval tier named 'phones'");
  return std::move(*phones);
}

SplitSpec default_l2arctic_split() {
  SplitSpec spec;
  spec.dev = {"EBVS", "THV", "TNI", "BWC", "YDCK", "YBAA"};
  spec.test = {"NJS", "HQTV", "SVBI", "NCC", "YKWK", "ZHAA"};
  spec.train = {"ABA", "SKA", "LXC", "TXHC", "ASI", "RRBI", "HJK", "HKK", "ERMS", "MBMPS", "PNV", "TLV"};
  return spec;
}

SplitRecords split_speakers(const std::vector<UtteranceRecord>& records, const SplitSpec& spec) {
  for (const auto& s : spec.train)
    if (spec.dev.count(s) || spec.test.count(s)) throw DataError(cat("speaker '", s, "' in more than one split"));
  for (const auto& s : spec.dev)
    if (spec.test.count(s)) throw DataError(cat("speaker '", s, "' in more than one split"));
  if (spec.train.empty()) throw DataError("train split must be non-empty");
  SplitRecords out;
  for (const auto& rec : records) {
    if (spec.train.count(rec.speaker))
      out.train.push_back(rec);
    else if (spec.dev.count(rec.speaker))
      out.dev.push_back(rec);
    else if (spec.test.count(rec.speaker))
      out.test.push_back(rec);
    else
      throw DataError(cat("speaker '", rec.speaker, "' missing from split spec"));
  }
  return out;
}

namespace {

std::vector<PhoneLabel> labels_from_json(const ordered_json& arr, const char* field, int line_no) {
  if (!arr.is_array()) throw DataError(cat("manifest line ", line_no, ": '", field, "' must be an array"));
  std::vector<PhoneLabel> out;
  out.reserve(arr.size());
  for (const auto& v : arr) out.emplace_back(v.get<std::string>());
  return out;
}

}  // namespace

Manifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError(cat("cannot open manifest '", path, "'"));
  Manifest manifest;
  manifest.dir = std::filesystem::path(path).parent_path();
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw DataError(cat("manifest line ", line_no, ": ", e.what()));
    }
    try {
      UtteranceRecord rec;
      rec.id = j.at("id").get<std::string>();
      rec.speaker = j.at("speaker").get<std::string>();
      if (j.contains("audio_path")) rec.audio_path = j["audio_path"].get<std::string>();
      if (j.contains("feature_path")) rec.feature_path = j["feature_path"].get<std::string>();
      if (j.contains("embedding_path")) rec.embedding_path = j["embedding_path"].get<std::string>();
      rec.canonical_seq = labels_from_json(j.at("canonical"), "canonical", line_no);
      rec.perceived_seq = labels_from_json(j.at("perceived"), "perceived", line_no);
      for (const auto& s : j.at("segments")) {
        if (!s.is_array() || s.size() != 5)
          throw DataError("segment entries must be [start_s, end_s, canonical, perceived, type]");
        AnnotationSegment seg;
        seg.start_s = s[0].get<double>();
        seg.end_s = s[1].get<double>();
        std::string c = s[2].get<std::string>(), p = s[3].get<std::string>();
        if (!c.empty()) seg.canonical = PhoneLabel(c);
        if (!p.empty()) seg.perceived = PhoneLabel(p);
        seg.error_type = parse_error_type(s[4].get<std::string>());
        rec.segments.push_back(std::move(seg));
      }
      validate_record(rec);
      for (const std::string& rel : {rec.audio_path, rec.feature_path, rec.embedding_path}) {
        if (rel.empty()) continue;
        if (!std::filesystem::exists(manifest.dir / rel))
          throw DataError(cat("referenced file '", (manifest.dir / rel).string(), "' does not exist"));
      }
      manifest.records.push_back(std::move(rec));
    } catch (const ordered_json::exception& e) {
      throw DataError(cat("manifest line ", line_no, ": ", e.what()));
    } catch (const DataError& e) {
      throw DataError(cat("manifest line ", line_no, ": ", e.what()));
    }
  }
  return manifest;
}

void save_manifest(const std::string& path, const std::vector<UtteranceRecord>& records) {
  std::ofstream os(path);
  if (!os) throw DataError(cat("cannot open '", path, "' for writing"));
  for (const auto& rec : records) {
    validate_record(rec);
    ordered_json j;
    j["id"] = rec.id;
    j["speaker"] = rec.speaker;
    if (!rec.audio_path.empty()) j["audio_path"] = rec.audio_path;
    if (!rec.feature_path.empty()) j["feature_path"] = rec.feature_path;
    if (!rec.embedding_path.empty()) j["embedding_path"] = rec.embedding_path;
    ordered_json canonical = ordered_json::array(), perceived = ordered_json::array();
    for (const auto& l : rec.canonical_seq) canonical.push_back(l.str());
    for (const auto& l : rec.perceived_seq) perceived.push_back(l.str());
    j["canonical"] = std::move(canonical);
    j["perceived"] = std::move(perceived);
    ordered_json segments = ordered_json::array();
    for (const auto& s : rec.segments) {
      segments.push_back(ordered_json::array({s.start_s, s.end_s, s.canonical ? s.canonical->str() : "",
                                              s.perceived ? s.perceived->str() : "", error_type_code(s.error_type)}));
    }
    j["segments"] = std::move(segments);
    os << j.dump() << "\n";
  }
  if (!os) throw DataError(cat("write failed for '", path, "'"));
}

}  // namespace apl
