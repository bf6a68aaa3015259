// src/config.cpp

#include "apl/config.hpp"

#include <fstream>

#include "apl/common.hpp"

namespace apl {

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError(cat("missing configuration key '", key, "'"));
  return it->second;
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  long out = std::strtol(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty()) throw UsageError(cat("key '", key, "': '", v, "' is not an integer"));
  return out;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty()) throw UsageError(cat("key '", key, "': '", v, "' is not a number"));
  return out;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError(cat("key '", key, "': '", v, "' is not a boolean"));
}

std::uint64_t RunConfig::get_seed(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty()) throw UsageError(cat("key '", key, "': '", v, "' is not a seed"));
  return out;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError(cat("cannot open config file '", path, "'"));
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw UsageError(cat(path, " line ", line_no, ": expected 'key = value'"));
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw UsageError(cat(path, " line ", line_no, ": empty key"));
    cfg.values_[key] = value;
  }
  return cfg;
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += cat(k, " = ", v, "\n");
  return out;
}

void RunConfig::write(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DataError(cat("cannot open '", path, "' for writing"));
  os << serialize();
  if (!os) throw DataError(cat("write failed for '", path, "'"));
}

}  // namespace apl
