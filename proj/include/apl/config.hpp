// include/apl/config.hpp
//
// Plain-text key=value run configuration. Precedence: command-line override
// > config file > defaults. The fully resolved map is written next to every
// command's outputs so a run can be reproduced from it.

#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace apl {

class RunConfig {
 public:
  RunConfig() = default;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set_default(const std::string& key, const std::string& value) { values_.try_emplace(key, value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;  // true/false/1/0
  std::uint64_t get_seed(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // "key = value" lines, '#' comments. Later keys override earlier ones.
  static RunConfig from_file(const std::string& path);

  std::string serialize() const;  // sorted "key = value" lines
  void write(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace apl
