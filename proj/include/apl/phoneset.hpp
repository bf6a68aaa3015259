// include/apl/phoneset.hpp
//
// Phone inventories, the 61->39 and 48->39 folding tables, the L2-ARCTIC
// special annotation classes and the label<->class-id codec.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace apl {

// A phone symbol: lowercase, no whitespace, optionally suffixed with the
// deviation mark '*' (final character only), or the literal "err".
class PhoneLabel {
 public:
  PhoneLabel() = default;
  explicit PhoneLabel(std::string text);

  const std::string& str() const { return text_; }
  bool deviant() const;  // '*'-suffixed or "err"

  friend bool operator==(const PhoneLabel& a, const PhoneLabel& b) { return a.text_ == b.text_; }
  friend auto operator<=>(const PhoneLabel& a, const PhoneLabel& b) { return a.text_ <=> b.text_; }

 private:
  std::string text_;
};

// Folding target for symbols that leave no trace in the 39-set (TIMIT "q").
// fold_sequence drops it.
const PhoneLabel& discard_label();

// Blank marker used by the inventory text format.
inline constexpr const char* kBlankMarker = "<blk>";

const std::vector<std::pair<PhoneLabel, PhoneLabel>>& timit61_fold_table();
const std::vector<std::pair<PhoneLabel, PhoneLabel>>& arctic48_fold_table();
// 28 '*'-marked deviation classes plus "err".
const std::vector<PhoneLabel>& l2arctic_special_labels();

PhoneLabel fold_timit61(const PhoneLabel& label);
// Plain labels fold to the 39-set; '*'-suffixed labels and "err" pass
// through unchanged.
PhoneLabel fold_arctic48(const PhoneLabel& label);

template <class FoldFn>
std::vector<PhoneLabel> fold_sequence(std::span<const PhoneLabel> seq, FoldFn&& fold) {
  std::vector<PhoneLabel> out;
  out.reserve(seq.size());
  for (const PhoneLabel& l : seq) {
    PhoneLabel f = fold(l);
    if (!(f == discard_label())) out.push_back(std::move(f));
  }
  return out;
}

class PhoneInventory {
 public:
  PhoneInventory() = default;

  int size() const { return static_cast<int>(classes_.size()); }
  int blank_id() const { return blank_id_; }
  const PhoneLabel& label(int id) const;
  const std::vector<PhoneLabel>& classes() const { return classes_; }

  bool contains(const PhoneLabel& l) const { return index_.count(l) != 0; }
  int encode_one(const PhoneLabel& l) const;
  std::vector<int> encode(std::span<const PhoneLabel> seq) const;
  std::vector<PhoneLabel> decode(std::span<const int> ids) const;

  // Ids of assignable phone classes: everything except blank and the
  // special annotation classes.
  std::vector<int> plain_ids() const;

  std::string serialize() const;  // one label per line, blank as "<blk>"
  static PhoneInventory deserialize(const std::string& text);
  std::uint64_t checksum() const;

  friend bool operator==(const PhoneInventory& a, const PhoneInventory& b) {
    return a.classes_ == b.classes_ && a.blank_id_ == b.blank_id_;
  }

  // Sorted plain labels, then sorted specials, blank last.
  static PhoneInventory from_labels(std::vector<PhoneLabel> labels);

 private:
  std::vector<PhoneLabel> classes_;
  int blank_id_ = -1;
  std::map<PhoneLabel, int> index_;

  void rebuild_index();
};

enum class InventoryMode { kTimit39, kL2ArcticExtended };

InventoryMode parse_inventory_mode(const std::string& name);  // "timit39" | "l2arctic-extended"
std::string inventory_mode_name(InventoryMode mode);

PhoneInventory build_inventory(InventoryMode mode);
PhoneInventory build_inventory(const std::vector<PhoneLabel>& custom);

// Two-column "source folded" per line, '#' comments.
std::vector<std::pair<PhoneLabel, PhoneLabel>> parse_fold_table(const std::string& text);
std::string format_fold_table(const std::vector<std::pair<PhoneLabel, PhoneLabel>>& table);

}  // namespace apl
