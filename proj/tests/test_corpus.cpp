// tests/test_corpus.cpp

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "apl/common.hpp"
#include "apl/corpus.hpp"
#include "apl/matio.hpp"
#include "apl/synth.hpp"

using namespace apl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("apl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("parse_phn basics") {
  auto segs = parse_phn("0 1600 h#\n1600 3200 aa\n", 16000);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].start_s == doctest::Approx(0.0));
  CHECK(segs[0].end_s == doctest::Approx(0.1));
  CHECK(segs[0].canonical->str() == "sil");
  CHECK(segs[0].perceived->str() == "sil");
  CHECK(segs[0].error_type == ErrorType::kNone);
  CHECK(segs[1].start_s == doctest::Approx(0.1));
  CHECK(segs[1].end_s == doctest::Approx(0.2));
  CHECK(segs[1].canonical->str() == "aa");

  CHECK_THROWS_WITH_AS(static_cast<void>(parse_phn("100 50 aa\n", 16000)), doctest::Contains("line 1"), DataError);
  CHECK_THROWS_AS(parse_phn("0 100 aa extra\n", 16000), DataError);
  CHECK_THROWS_AS(parse_phn("0 100 aa\n50 200 b\n", 16000), DataError);  // non-monotonic
  // "q" is discarded
  CHECK(parse_phn("0 100 q\n", 16000).empty());
}

TEST_CASE("parse_textgrid long format") {
  std::string tg = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 0.9
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 0.9
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 0.9
            text = "hello"
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 0.9
        intervals: size = 5
        intervals [1]:
            xmin = 0
            xmax = 0.2
            text = "AA"
        intervals [2]:
            xmin = 0.2
            xmax = 0.4
            text = "AA,AH,s"
        intervals [3]:
            xmin = 0.4
            xmax = 0.6
            text = "S,S*,s"
        intervals [4]:
            xmin = 0.6
            xmax = 0.7
            text = "T,,d"
        intervals [5]:
            xmin = 0.7
            xmax = 0.9
            text = ",IY,a"
)";
  auto segs = parse_textgrid(tg);
  REQUIRE(segs.size() == 5);
  CHECK(segs[0].canonical->str() == "aa");
  CHECK(segs[0].perceived->str() == "aa");
  CHECK(segs[0].error_type == ErrorType::kNone);
  CHECK(segs[1].canonical->str() == "aa");
  CHECK(segs[1].perceived->str() == "ah");
  CHECK(segs[1].error_type == ErrorType::kSubstitution);
  CHECK(segs[2].canonical->str() == "s");
  CHECK(segs[2].perceived->str() == "s*");
  CHECK(segs[2].error_type == ErrorType::kSubstitution);
  CHECK(segs[3].canonical->str() == "t");
  CHECK_FALSE(segs[3].perceived.has_value());
  CHECK(segs[3].error_type == ErrorType::kDeletion);
  CHECK_FALSE(segs[4].canonical.has_value());
  CHECK(segs[4].perceived->str() == "iy");
  CHECK(segs[4].error_type == ErrorType::kAddition);
}

TEST_CASE("parse_textgrid short format with stress digits and silence") {
  std::string tg = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n0.6\n<exists>\n1\n"
                   "\"IntervalTier\"\n\"phones\"\n0\n0.6\n4\n"
                   "0\n0.1\n\"\"\n"
                   "0.1\n0.3\n\"AH0\"\n"
                   "0.3\n0.5\n\"ZH\"\n"
                   "0.5\n0.6\n\"sp\"\n";
  auto segs = parse_textgrid(tg);
  REQUIRE(segs.size() == 4);
  CHECK(segs[0].canonical->str() == "sil");
  CHECK(segs[1].canonical->str() == "ah");
  CHECK(segs[2].canonical->str() == "sh");  // zh folds to sh
  CHECK(segs[3].canonical->str() == "sil");
}

TEST_CASE("parse_textgrid errors") {
  CHECK_THROWS_AS(parse_textgrid("not a textgrid"), DataError);
  std::string bad_type = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n1\n<exists>\n1\n"
                         "\"IntervalTier\"\n\"phones\"\n0\n1\n1\n0\n1\n\"AA,AH,x\"\n";
  CHECK_THROWS_AS(parse_textgrid(bad_type), DataError);
  std::string bad_label = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n1\n<exists>\n1\n"
                          "\"IntervalTier\"\n\"phones\"\n0\n1\n1\n0\n1\n\"QX\"\n";
  CHECK_THROWS_AS(parse_textgrid(bad_label), DataError);
  std::string no_phones = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n1\n<exists>\n1\n"
                          "\"IntervalTier\"\n\"words\"\n0\n1\n1\n0\n1\n\"hi\"\n";
  CHECK_THROWS_AS(parse_textgrid(no_phones), DataError);
  // folding can erase an annotated substitution ("AO,AA,s" -> aa,aa)
  std::string merged = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n1\n<exists>\n1\n"
                       "\"IntervalTier\"\n\"phones\"\n0\n1\n1\n0\n1\n\"AO,AA,s\"\n";
  auto segs = parse_textgrid(merged);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].error_type == ErrorType::kNone);
  CHECK(segs[0].canonical->str() == "aa");
}

TEST_CASE("split_speakers") {
  auto make = [](const std::string& id, const std::string& spk) {
    UtteranceRecord r;
    r.id = id;
    r.speaker = spk;
    return r;
  };
  SplitSpec spec = default_l2arctic_split();
  CHECK(spec.train.size() == 12);
  CHECK(spec.dev.size() == 6);
  CHECK(spec.test.size() == 6);

  std::vector<UtteranceRecord> records;
  for (const auto& s : spec.train) records.push_back(make("u_" + s, s));
  for (const auto& s : spec.dev) records.push_back(make("u_" + s, s));
  for (const auto& s : spec.test) records.push_back(make("u_" + s, s));
  auto splits = split_speakers(records, spec);
  CHECK(splits.train.size() == 12);
  CHECK(splits.dev.size() == 6);
  CHECK(splits.test.size() == 6);
  CHECK(splits.train.size() + splits.dev.size() + splits.test.size() == records.size());

  SplitSpec single;
  single.train = {"X"};
  auto one = split_speakers({make("a", "X"), make("b", "X")}, single);
  CHECK(one.train.size() == 2);

  CHECK_THROWS_AS(split_speakers({make("a", "UNLISTED")}, single), DataError);
  SplitSpec overlapping;
  overlapping.train = {"X"};
  overlapping.dev = {"X"};
  CHECK_THROWS_AS(split_speakers({make("a", "X")}, overlapping), DataError);
}

TEST_CASE("synth corpus determinism and rates") {
  PhoneInventory inv = build_inventory(InventoryMode::kTimit39);
  SynthConfig cfg;
  cfg.n_utts = 40;
  cfg.phones_per_utt = 6;
  cfg.frames_per_phone = 4;
  cfg.noise_std = 0.1;

  // synth records get their paths on save; patch one in for validation
  auto validate_synth = [](SynthUtterance u) {
    u.record.feature_path = "placeholder.mat";
    validate_record(u.record);
  };

  SUBCASE("no perturbation means perceived == canonical") {
    auto utts = synth_corpus(cfg, inv, 7);
    REQUIRE(utts.size() == 40);
    for (const auto& u : utts) {
      CHECK(u.record.perceived_seq == u.record.canonical_seq);
      CHECK(u.record.canonical_seq.size() == 6);
      CHECK(u.features.rows() == 24);
      CHECK(u.features.cols() == 81);
      CHECK(u.embedding.rows() == 24);
      CHECK(u.embedding.cols() == inv.size());
      validate_synth(u);
    }
  }

  SUBCASE("same seed twice is element-wise identical") {
    auto a = synth_corpus(cfg, inv, 11);
    auto b = synth_corpus(cfg, inv, 11);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].record == b[i].record);
      CHECK(a[i].features == b[i].features);
      CHECK(a[i].embedding == b[i].embedding);
    }
    auto c = synth_corpus(cfg, inv, 12);
    bool all_same = true;
    for (size_t i = 0; i < a.size(); ++i) all_same &= (a[i].record == c[i].record);
    CHECK_FALSE(all_same);
  }

  SUBCASE("empirical error rates track the configuration") {
    SynthConfig rated = cfg;
    rated.n_utts = 1500;
    rated.phones_per_utt = 8;  // 12000 positions
    rated.sub_rate = 0.15;
    rated.del_rate = 0.05;
    rated.ins_rate = 0.03;
    auto utts = synth_corpus(rated, inv, 3);
    SynthStats st = synth_stats(utts);
    CHECK(st.positions >= 10000);
    double sub = static_cast<double>(st.substitutions) / st.positions;
    double del = static_cast<double>(st.deletions) / st.positions;
    CHECK(sub == doctest::Approx(0.15).epsilon(0.02 / 0.15));
    CHECK(del == doctest::Approx(0.05).epsilon(0.02 / 0.05));
    CHECK(st.insertions > 0);
    for (const auto& u : utts) validate_synth(u);
  }
}

TEST_CASE("manifest round trip") {
  fs::path dir = temp_dir("manifest");
  PhoneInventory inv = build_inventory(InventoryMode::kTimit39);
  SynthConfig cfg;
  cfg.n_utts = 3;
  cfg.phones_per_utt = 5;
  cfg.frames_per_phone = 4;
  cfg.sub_rate = 0.2;
  cfg.del_rate = 0.1;
  cfg.ins_rate = 0.05;
  auto utts = synth_corpus(cfg, inv, 5);
  save_synth_files(dir.string(), utts);
  std::vector<UtteranceRecord> records;
  for (const auto& u : utts) records.push_back(u.record);
  save_manifest((dir / "manifest.jsonl").string(), records);

  Manifest loaded = load_manifest((dir / "manifest.jsonl").string());
  REQUIRE(loaded.records.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) CHECK(loaded.records[i] == records[i]);

  // matrices round trip bit-exactly
  Matf back = read_mat(loaded.resolve(loaded.records[0].feature_path));
  CHECK(back == utts[0].features);

  SUBCASE("empty manifest") {
    std::ofstream((dir / "empty.jsonl").string()).close();
    CHECK(load_manifest((dir / "empty.jsonl").string()).records.empty());
  }

  SUBCASE("missing referenced file is named") {
    records[0].feature_path = "features/missing.mat";
    save_manifest((dir / "broken.jsonl").string(), records);
    CHECK_THROWS_WITH_AS(static_cast<void>(load_manifest((dir / "broken.jsonl").string())),
                         doctest::Contains("missing.mat"), DataError);
  }
}

TEST_CASE("record invariants") {
  UtteranceRecord rec;
  rec.id = "u1";
  rec.speaker = "s";
  rec.feature_path = "f.mat";
  AnnotationSegment seg;
  seg.start_s = 0.0;
  seg.end_s = 0.1;
  seg.canonical = PhoneLabel("aa");
  seg.perceived = PhoneLabel("aa");
  rec.segments = {seg};
  rec.canonical_seq = {PhoneLabel("aa")};
  rec.perceived_seq = {PhoneLabel("aa")};
  CHECK_NOTHROW(validate_record(rec));

  rec.perceived_seq = {PhoneLabel("ah")};
  CHECK_THROWS_AS(validate_record(rec), DataError);
  rec.perceived_seq = {PhoneLabel("aa")};
  rec.segments[0].end_s = 0.0;
  CHECK_THROWS_AS(validate_record(rec), DataError);
}
