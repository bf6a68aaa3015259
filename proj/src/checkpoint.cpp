// src/checkpoint.cpp

#include "apl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "apl/common.hpp"

namespace apl {

namespace {

constexpr char kMagic[8] = {'A', 'P', 'L', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& is, const std::string& path) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(cat(path, ": truncated checkpoint"));
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const std::map<std::string, Matf>& entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(cat("cannot open '", path, "' for writing"));
  os.write(kMagic, sizeof kMagic);
  write_u64(os, entries.size());
  for (const auto& [name, value] : entries) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, 2);
    write_u64(os, static_cast<std::uint64_t>(value.rows()));
    write_u64(os, static_cast<std::uint64_t>(value.cols()));
    os.write(reinterpret_cast<const char*>(value.data()), static_cast<std::streamsize>(sizeof(float) * value.size()));
  }
  if (!os) throw DataError(cat("write failed for '", path, "'"));
}

std::map<std::string, Matf> read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(cat("cannot open '", path, "'"));
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError(cat(path, ": not an APLCKPT1 file"));
  std::uint64_t count = read_u64(is, path);
  std::map<std::string, Matf> entries;
  for (std::uint64_t e = 0; e < count; ++e) {
    std::uint64_t name_len = read_u64(is, path);
    if (name_len > 4096) throw DataError(cat(path, ": implausible name length"));
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len))) throw DataError(cat(path, ": truncated name"));
    std::uint64_t rank = read_u64(is, path);
    if (rank < 1 || rank > 2) throw DataError(cat(path, ": unsupported rank ", rank, " for '", name, "'"));
    std::uint64_t rows = read_u64(is, path);
    std::uint64_t cols = rank == 2 ? read_u64(is, path) : 1;
    Matf value(static_cast<Index>(rows), static_cast<Index>(cols));
    if (!is.read(reinterpret_cast<char*>(value.data()), static_cast<std::streamsize>(sizeof(float) * value.size())))
      throw DataError(cat(path, ": truncated values for '", name, "'"));
    if (!entries.emplace(name, std::move(value)).second)
      throw DataError(cat(path, ": duplicate entry '", name, "'"));
  }
  return entries;
}

}  // namespace apl
