// src/wav.cpp

#include "apl/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "apl/common.hpp"

namespace apl {

namespace {

constexpr int kRate = 16000;

template <class T>
T read_pod(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(cat(path, ": truncated WAV file"));
  return v;
}

template <class T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

}  // namespace

std::vector<float> read_wav_16k_mono(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(cat("cannot open '", path, "'"));
  char riff[4], wave[4];
  is.read(riff, 4);
  read_pod<std::uint32_t>(is, path);  // chunk size
  is.read(wave, 4);
  if (!is || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0)
    throw DataError(cat(path, ": not a RIFF/WAVE file"));

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (true) {
    char id[4];
    if (!is.read(id, 4)) throw DataError(cat(path, ": no data chunk"));
    std::uint32_t size = read_pod<std::uint32_t>(is, path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_pod<std::uint16_t>(is, path);
      channels = read_pod<std::uint16_t>(is, path);
      rate = read_pod<std::uint32_t>(is, path);
      read_pod<std::uint32_t>(is, path);  // byte rate
      read_pod<std::uint16_t>(is, path);  // block align
      bits = read_pod<std::uint16_t>(is, path);
      if (size > 16) is.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw DataError(cat(path, ": data chunk before fmt chunk"));
      if (format != 1 || bits != 16) throw DataError(cat(path, ": only 16-bit PCM is supported"));
      if (channels != 1) throw DataError(cat(path, ": only mono is supported"));
      if (rate != kRate) throw DataError(cat(path, ": sample rate ", rate, " != required ", kRate));
      std::vector<std::int16_t> raw(size / 2);
      if (!is.read(reinterpret_cast<char*>(raw.data()), size)) throw DataError(cat(path, ": truncated data chunk"));
      std::vector<float> out(raw.size());
      for (size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<float>(raw[i]) / 32768.0f;
      return out;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);  // chunks are word-aligned
      if (!is) throw DataError(cat(path, ": truncated chunk"));
    }
  }
}

void write_wav_16k_mono(const std::string& path, const std::vector<float>& samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(cat("cannot open '", path, "' for writing"));
  std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  write_pod<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_pod<std::uint32_t>(os, 16);
  write_pod<std::uint16_t>(os, 1);  // PCM
  write_pod<std::uint16_t>(os, 1);  // mono
  write_pod<std::uint32_t>(os, kRate);
  write_pod<std::uint32_t>(os, kRate * 2);
  write_pod<std::uint16_t>(os, 2);
  write_pod<std::uint16_t>(os, 16);
  os.write("data", 4);
  write_pod<std::uint32_t>(os, data_bytes);
  for (float s : samples) {
    float clamped = std::clamp(s, -1.0f, 32767.0f / 32768.0f);
    write_pod<std::int16_t>(os, static_cast<std::int16_t>(std::lrintf(clamped * 32768.0f)));
  }
  if (!os) throw DataError(cat("write failed for '", path, "'"));
}

}  // namespace apl
