// include/apl/corpus.hpp
//
// Annotation ingestion (TIMIT .phn, Praat TextGrid), speaker splits and the
// JSON-lines manifest.

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apl/phoneset.hpp"

namespace apl {

enum class ErrorType { kNone, kSubstitution, kDeletion, kAddition };

std::string error_type_code(ErrorType t);           // "none" | "s" | "d" | "a"
ErrorType parse_error_type(const std::string& code);

struct AnnotationSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::optional<PhoneLabel> canonical;  // absent for additions
  std::optional<PhoneLabel> perceived;  // absent for deletions
  ErrorType error_type = ErrorType::kNone;

  friend bool operator==(const AnnotationSegment&, const AnnotationSegment&) = default;
};

struct UtteranceRecord {
  std::string id;
  std::string speaker;
  std::string audio_path;      // exactly one of audio_path / feature_path is set
  std::string feature_path;
  std::string embedding_path;  // optional
  std::vector<PhoneLabel> canonical_seq;
  std::vector<PhoneLabel> perceived_seq;
  std::vector<AnnotationSegment> segments;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

// Sequence views implied by the segments: canonical skips additions,
// perceived skips deletions.
std::vector<PhoneLabel> canonical_of(const std::vector<AnnotationSegment>& segments);
std::vector<PhoneLabel> perceived_of(const std::vector<AnnotationSegment>& segments);
void validate_record(const UtteranceRecord& rec);

// "start_sample end_sample label" per line; labels folded via the TIMIT
// table, discarded symbols dropped. Native speech: canonical == perceived.
std::vector<AnnotationSegment> parse_phn(const std::string& text, int sample_rate);

// Praat TextGrid (short or long format), interval tier named "phones".
// Interval labels are a plain phone or a "canonical,perceived,type" triplet
// with type in {s,d,a}. Labels are lowercased, stress digits stripped, then
// folded via the L2-ARCTIC table. Empty / "sp" / "spn" intervals read as sil.
std::vector<AnnotationSegment> parse_textgrid(const std::string& text);

struct SplitSpec {
  std::set<std::string> train, dev, test;
};

// Speaker lists of the L2-ARCTIC evaluation protocol.
SplitSpec default_l2arctic_split();

struct SplitRecords {
  std::vector<UtteranceRecord> train, dev, test;
};

SplitRecords split_speakers(const std::vector<UtteranceRecord>& records, const SplitSpec& spec);

struct Manifest {
  std::filesystem::path dir;  // referenced paths resolve against this
  std::vector<UtteranceRecord> records;

  std::string resolve(const std::string& rel) const { return (dir / rel).string(); }
};

Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<UtteranceRecord>& records);

}  // namespace apl
