// src/phoneset.cpp

#include "apl/phoneset.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "apl/common.hpp"

namespace apl {

PhoneLabel::PhoneLabel(std::string text) : text_(std::move(text)) {
  if (text_.empty()) throw DataError("phone label must be non-empty");
  for (size_t i = 0; i < text_.size(); ++i) {
    char c = text_[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
      throw DataError(cat("phone label '", text_, "' contains whitespace"));
    if (c == '*' && i + 1 != text_.size())
      throw DataError(cat("phone label '", text_, "': '*' allowed only as final character"));
  }
}

bool PhoneLabel::deviant() const {
  return (!text_.empty() && text_.back() == '*') || text_ == "err";
}

const PhoneLabel& discard_label() {
  static const PhoneLabel l("-");
  return l;
}

namespace {

std::vector<std::pair<PhoneLabel, PhoneLabel>> make_table(
    std::initializer_list<std::pair<const char*, const char*>> pairs) {
  std::vector<std::pair<PhoneLabel, PhoneLabel>> t;
  t.reserve(pairs.size());
  for (auto [a, b] : pairs) t.emplace_back(PhoneLabel(a), PhoneLabel(b));
  return t;
}

}  // namespace

// Lee & Hon 61->39 folding; "q" is discarded.
const std::vector<std::pair<PhoneLabel, PhoneLabel>>& timit61_fold_table() {
  static const auto table = make_table({
      {"aa", "aa"},   {"ae", "ae"},   {"ah", "ah"},  {"ao", "aa"},   {"aw", "aw"},
      {"ax", "ah"},   {"ax-h", "ah"}, {"axr", "er"}, {"ay", "ay"},   {"b", "b"},
      {"bcl", "sil"}, {"ch", "ch"},   {"d", "d"},    {"dcl", "sil"}, {"dh", "dh"},
      {"dx", "dx"},   {"eh", "eh"},   {"el", "l"},   {"em", "m"},    {"en", "n"},
      {"eng", "ng"},  {"epi", "sil"}, {"er", "er"},  {"ey", "ey"},   {"f", "f"},
      {"g", "g"},     {"gcl", "sil"}, {"h#", "sil"}, {"hh", "hh"},   {"hv", "hh"},
      {"ih", "ih"},   {"ix", "ih"},   {"iy", "iy"},  {"jh", "jh"},   {"k", "k"},
      {"kcl", "sil"}, {"l", "l"},     {"m", "m"},    {"n", "n"},     {"ng", "ng"},
      {"nx", "n"},    {"ow", "ow"},   {"oy", "oy"},  {"p", "p"},     {"pau", "sil"},
      {"pcl", "sil"}, {"q", "-"},     {"r", "r"},    {"s", "s"},     {"sh", "sh"},
      {"t", "t"},     {"tcl", "sil"}, {"th", "th"},  {"uh", "uh"},   {"uw", "uw"},
      {"ux", "uw"},   {"v", "v"},     {"w", "w"},    {"y", "y"},     {"z", "z"},
      {"zh", "sh"},
  });
  return table;
}

const std::vector<std::pair<PhoneLabel, PhoneLabel>>& arctic48_fold_table() {
  static const auto table = make_table({
      {"aa", "aa"},   {"ae", "ae"},  {"ah", "ah"}, {"ao", "aa"},  {"aw", "aw"},
      {"ax", "ah"},   {"ay", "ay"},  {"b", "b"},   {"ch", "ch"},  {"cl", "sil"},
      {"d", "d"},     {"dh", "dh"},  {"dx", "dx"}, {"eh", "eh"},  {"el", "l"},
      {"en", "n"},    {"epi", "sil"},{"er", "er"}, {"ey", "ey"},  {"f", "f"},
      {"g", "g"},     {"hh", "hh"},  {"ih", "ih"}, {"ix", "ih"},  {"iy", "iy"},
      {"jh", "jh"},   {"k", "k"},    {"l", "l"},   {"m", "m"},    {"n", "n"},
      {"ng", "ng"},   {"ow", "ow"},  {"oy", "oy"}, {"p", "p"},    {"r", "r"},
      {"s", "s"},     {"sh", "sh"},  {"sil", "sil"},{"t", "t"},   {"th", "th"},
      {"uh", "uh"},   {"uw", "uw"},  {"v", "v"},   {"vcl", "sil"},{"w", "w"},
      {"y", "y"},     {"z", "z"},    {"zh", "sh"},
  });
  return table;
}

const std::vector<PhoneLabel>& l2arctic_special_labels() {
  static const std::vector<PhoneLabel> specials = [] {
    std::vector<PhoneLabel> v;
    for (const char* s :
         {"aa*", "ae*", "ah*", "ao*", "aw*", "ay*", "b*",  "ch*", "d*",  "dh*",
          "eh*", "er*", "ey*", "f*",  "g*",  "hh*", "ih*", "iy*", "k*",  "l*",
          "m*",  "n*",  "ng*", "ow*", "r*",  "s*",  "t*",  "v*",  "err"})
      v.emplace_back(s);
    return v;
  }();
  return specials;
}

namespace {

std::map<PhoneLabel, PhoneLabel> as_map(const std::vector<std::pair<PhoneLabel, PhoneLabel>>& table) {
  std::map<PhoneLabel, PhoneLabel> m;
  for (const auto& [src, dst] : table) m.emplace(src, dst);
  return m;
}

}  // namespace

PhoneLabel fold_timit61(const PhoneLabel& label) {
  static const auto m = as_map(timit61_fold_table());
  auto it = m.find(label);
  if (it == m.end()) throw DataError(cat("unknown TIMIT phone '", label.str(), "'"));
  return it->second;
}

PhoneLabel fold_arctic48(const PhoneLabel& label) {
  if (label.deviant()) return label;
  static const auto m = as_map(arctic48_fold_table());
  auto it = m.find(label);
  if (it == m.end()) throw DataError(cat("unknown L2-ARCTIC phone '", label.str(), "'"));
  return it->second;
}

const PhoneLabel& PhoneInventory::label(int id) const {
  if (id < 0 || id >= size()) throw DataError(cat("class id ", id, " out of range [0,", size(), ")"));
  return classes_[static_cast<size_t>(id)];
}

int PhoneInventory::encode_one(const PhoneLabel& l) const {
  auto it = index_.find(l);
  if (it == index_.end() || it->second == blank_id_)
    throw DataError(cat("label '", l.str(), "' not in inventory"));
  return it->second;
}

std::vector<int> PhoneInventory::encode(std::span<const PhoneLabel> seq) const {
  std::vector<int> ids;
  ids.reserve(seq.size());
  for (const PhoneLabel& l : seq) ids.push_back(encode_one(l));
  return ids;
}

std::vector<PhoneLabel> PhoneInventory::decode(std::span<const int> ids) const {
  std::vector<PhoneLabel> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id == blank_id_) throw DataError("blank id not allowed in a phone sequence");
    out.push_back(label(id));
  }
  return out;
}

std::vector<int> PhoneInventory::plain_ids() const {
  std::vector<int> ids;
  for (int i = 0; i < size(); ++i)
    if (i != blank_id_ && !classes_[static_cast<size_t>(i)].deviant()) ids.push_back(i);
  return ids;
}

std::string PhoneInventory::serialize() const {
  std::ostringstream os;
  for (int i = 0; i < size(); ++i) {
    if (i == blank_id_)
      os << kBlankMarker << "\n";
    else
      os << classes_[static_cast<size_t>(i)].str() << "\n";
  }
  return os.str();
}

PhoneInventory PhoneInventory::deserialize(const std::string& text) {
  PhoneInventory inv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t == kBlankMarker) {
      if (inv.blank_id_ >= 0) throw DataError("inventory file has more than one <blk> entry");
      inv.blank_id_ = static_cast<int>(inv.classes_.size());
      inv.classes_.emplace_back(kBlankMarker);
    } else {
      inv.classes_.emplace_back(t);
    }
  }
  if (inv.blank_id_ < 0) throw DataError("inventory file lacks a <blk> entry");
  inv.rebuild_index();
  return inv;
}

std::uint64_t PhoneInventory::checksum() const { return fnv1a64(serialize()); }

void PhoneInventory::rebuild_index() {
  index_.clear();
  for (int i = 0; i < size(); ++i) {
    auto [it, fresh] = index_.emplace(classes_[static_cast<size_t>(i)], i);
    if (!fresh) throw DataError(cat("duplicate label '", classes_[static_cast<size_t>(i)].str(), "' in inventory"));
  }
}

PhoneInventory PhoneInventory::from_labels(std::vector<PhoneLabel> labels) {
  std::vector<PhoneLabel> plain, special;
  for (auto& l : labels) {
    if (l.str() == kBlankMarker) throw DataError("the blank class is appended automatically");
    (l.deviant() ? special : plain).push_back(std::move(l));
  }
  std::sort(plain.begin(), plain.end());
  std::sort(special.begin(), special.end());
  PhoneInventory inv;
  inv.classes_ = std::move(plain);
  inv.classes_.insert(inv.classes_.end(), special.begin(), special.end());
  inv.blank_id_ = static_cast<int>(inv.classes_.size());
  inv.classes_.emplace_back(kBlankMarker);
  inv.rebuild_index();
  return inv;
}

InventoryMode parse_inventory_mode(const std::string& name) {
  if (name == "timit39") return InventoryMode::kTimit39;
  if (name == "l2arctic-extended") return InventoryMode::kL2ArcticExtended;
  throw UsageError(cat("unknown inventory mode '", name, "' (timit39 | l2arctic-extended)"));
}

std::string inventory_mode_name(InventoryMode mode) {
  return mode == InventoryMode::kTimit39 ? "timit39" : "l2arctic-extended";
}

PhoneInventory build_inventory(InventoryMode mode) {
  std::set<PhoneLabel> folded;
  for (const auto& [src, dst] : timit61_fold_table())
    if (!(dst == discard_label())) folded.insert(dst);
  std::vector<PhoneLabel> labels(folded.begin(), folded.end());
  if (mode == InventoryMode::kL2ArcticExtended) {
    const auto& specials = l2arctic_special_labels();
    labels.insert(labels.end(), specials.begin(), specials.end());
  }
  return PhoneInventory::from_labels(std::move(labels));
}

PhoneInventory build_inventory(const std::vector<PhoneLabel>& custom) {
  if (custom.empty()) throw DataError("custom inventory must contain at least one label");
  return PhoneInventory::from_labels(custom);
}

std::vector<std::pair<PhoneLabel, PhoneLabel>> parse_fold_table(const std::string& text) {
  std::vector<std::pair<PhoneLabel, PhoneLabel>> table;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    std::string src, dst, extra;
    if (!(ls >> src >> dst) || (ls >> extra))
      throw DataError(cat("fold table line ", line_no, ": expected 'source folded', got '", t, "'"));
    table.emplace_back(PhoneLabel(src), PhoneLabel(dst));
  }
  return table;
}

std::string format_fold_table(const std::vector<std::pair<PhoneLabel, PhoneLabel>>& table) {
  std::ostringstream os;
  for (const auto& [src, dst] : table) os << src.str() << " " << dst.str() << "\n";
  return os.str();
}

}  // namespace apl
