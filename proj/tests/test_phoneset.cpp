// tests/test_phoneset.cpp

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "apl/common.hpp"
#include "apl/phoneset.hpp"

using namespace apl;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string data_dir() {
  // tests run from the build tree; data/ lives in the source tree
  return std::string(APL_SOURCE_DIR) + "/data";
}

}  // namespace

TEST_CASE("phone label validation") {
  CHECK_NOTHROW(PhoneLabel("aa"));
  CHECK_NOTHROW(PhoneLabel("s*"));
  CHECK_NOTHROW(PhoneLabel("err"));
  CHECK_THROWS_AS(PhoneLabel(""), DataError);
  CHECK_THROWS_AS(PhoneLabel("a a"), DataError);
  CHECK_THROWS_AS(PhoneLabel("a*b"), DataError);
  CHECK(PhoneLabel("s*").deviant());
  CHECK(PhoneLabel("err").deviant());
  CHECK_FALSE(PhoneLabel("s").deviant());
}

TEST_CASE("timit 61->39 folding") {
  CHECK(fold_timit61(PhoneLabel("aa")) == PhoneLabel("aa"));
  CHECK(fold_timit61(PhoneLabel("h#")) == PhoneLabel("sil"));
  CHECK(fold_timit61(PhoneLabel("zh")) == PhoneLabel("sh"));
  CHECK(fold_timit61(PhoneLabel("q")) == discard_label());
  CHECK_THROWS_AS(fold_timit61(PhoneLabel("zz")), DataError);

  CHECK(timit61_fold_table().size() == 61);
  std::set<PhoneLabel> targets;
  for (const auto& [src, dst] : timit61_fold_table())
    if (!(dst == discard_label())) targets.insert(dst);
  CHECK(targets.size() == 39);
}

TEST_CASE("arctic 48->39 folding") {
  CHECK(fold_arctic48(PhoneLabel("ah")) == PhoneLabel("ah"));
  CHECK(fold_arctic48(PhoneLabel("s*")) == PhoneLabel("s*"));
  CHECK(fold_arctic48(PhoneLabel("err")) == PhoneLabel("err"));
  CHECK(fold_arctic48(PhoneLabel("zh")) == PhoneLabel("sh"));
  CHECK_THROWS_AS(fold_arctic48(PhoneLabel("qq")), DataError);

  CHECK(arctic48_fold_table().size() == 48);
  std::set<PhoneLabel> targets;
  for (const auto& [src, dst] : arctic48_fold_table()) targets.insert(dst);
  CHECK(targets.size() == 39);
}

TEST_CASE("folding is idempotent") {
  for (const auto& [src, dst] : timit61_fold_table()) {
    if (dst == discard_label()) continue;
    // every fold target is a 48-set symbol mapping to itself
    CHECK(fold_arctic48(dst) == dst);
  }
  for (const auto& [src, dst] : arctic48_fold_table()) CHECK(fold_arctic48(dst) == dst);
}

TEST_CASE("shipped fold tables match the built-in tables") {
  auto timit = parse_fold_table(read_file(data_dir() + "/timit61_to_39.map"));
  CHECK(timit == timit61_fold_table());
  auto arctic = parse_fold_table(read_file(data_dir() + "/arctic48_to_39.map"));
  CHECK(arctic == arctic48_fold_table());

  // specials file: one label per line, matches the built-in list
  std::istringstream is(read_file(data_dir() + "/l2arctic_specials.txt"));
  std::vector<PhoneLabel> specials;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (!t.empty() && t[0] != '#') specials.emplace_back(t);
  }
  CHECK(specials == l2arctic_special_labels());
}

TEST_CASE("inventory construction") {
  PhoneInventory timit = build_inventory(InventoryMode::kTimit39);
  CHECK(timit.size() == 40);
  CHECK(timit.blank_id() == 39);
  CHECK(timit.label(timit.blank_id()).str() == kBlankMarker);

  PhoneInventory ext = build_inventory(InventoryMode::kL2ArcticExtended);
  CHECK(ext.size() == 69);
  CHECK(ext.blank_id() == 68);
  CHECK(l2arctic_special_labels().size() == 29);
  CHECK(ext.contains(PhoneLabel("s*")));
  CHECK(ext.contains(PhoneLabel("err")));
  CHECK(ext.plain_ids().size() == 39);

  PhoneInventory custom = build_inventory(std::vector<PhoneLabel>{PhoneLabel("a"), PhoneLabel("b")});
  CHECK(custom.size() == 3);
  CHECK(custom.blank_id() == 2);
  CHECK_THROWS_AS(build_inventory(std::vector<PhoneLabel>{PhoneLabel("a"), PhoneLabel("a")}), DataError);

  // determinism: element-wise equal across builds
  CHECK(build_inventory(InventoryMode::kL2ArcticExtended) == ext);
}

TEST_CASE("encode/decode round trip") {
  PhoneInventory inv = build_inventory(InventoryMode::kTimit39);
  std::vector<PhoneLabel> seq{PhoneLabel("aa"), PhoneLabel("b")};
  auto ids = inv.encode(seq);
  CHECK(inv.decode(ids) == seq);
  CHECK(inv.encode(std::vector<PhoneLabel>{}).empty());
  CHECK_THROWS_AS(inv.encode(std::vector<PhoneLabel>{PhoneLabel("zz")}), DataError);
  CHECK_THROWS_AS(inv.encode(std::vector<PhoneLabel>{PhoneLabel(kBlankMarker)}), DataError);

  // round trip over every label and every id
  std::vector<PhoneLabel> all;
  std::vector<int> all_ids;
  for (int i = 0; i < inv.size(); ++i) {
    if (i == inv.blank_id()) continue;
    all.push_back(inv.label(i));
    all_ids.push_back(i);
  }
  CHECK(inv.decode(inv.encode(all)) == all);
  CHECK(inv.encode(inv.decode(all_ids)) == all_ids);
}

TEST_CASE("inventory serialization") {
  PhoneInventory inv = build_inventory(InventoryMode::kL2ArcticExtended);
  PhoneInventory back = PhoneInventory::deserialize(inv.serialize());
  CHECK(back == inv);
  CHECK(back.checksum() == inv.checksum());
  PhoneInventory other = build_inventory(InventoryMode::kTimit39);
  CHECK(other.checksum() != inv.checksum());
  CHECK_THROWS_AS(PhoneInventory::deserialize("aa\nbb\n"), DataError);  // no blank
}
