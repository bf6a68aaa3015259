// src/matio.cpp

#include "apl/matio.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "apl/common.hpp"

namespace apl {

static_assert(std::endian::native == std::endian::little, "file containers assume a little-endian host");

namespace {

constexpr char kMagic[7] = {'A', 'P', 'L', 'M', 'A', 'T', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& is, const std::string& path) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(cat(path, ": truncated APLMAT1 header"));
  return v;
}

}  // namespace

void write_mat(const std::string& path, const Matf& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(cat("cannot open '", path, "' for writing"));
  os.write(kMagic, sizeof kMagic);
  write_u64(os, static_cast<std::uint64_t>(m.rows()));
  write_u64(os, static_cast<std::uint64_t>(m.cols()));
  // Matf is row-major, so the buffer already has the on-disk layout.
  os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(float) * m.size()));
  if (!os) throw DataError(cat("write failed for '", path, "'"));
}

Matf read_mat(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(cat("cannot open '", path, "'"));
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError(cat(path, ": not an APLMAT1 file"));
  std::uint64_t rows = read_u64(is, path);
  std::uint64_t cols = read_u64(is, path);
  if (rows > (1ull << 32) || cols > (1ull << 32)) throw DataError(cat(path, ": implausible matrix extents"));
  Matf m(static_cast<Index>(rows), static_cast<Index>(cols));
  if (!is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(float) * m.size())))
    throw DataError(cat(path, ": truncated APLMAT1 payload"));
  return m;
}

}  // namespace apl
