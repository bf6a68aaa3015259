// include/apl/wav.hpp

#pragma once

#include <string>
#include <vector>

namespace apl {

// 16-bit PCM, mono, 16 kHz only; samples scaled to [-1, 1).
std::vector<float> read_wav_16k_mono(const std::string& path);

// Test/tooling helper; writes the same restricted format.
void write_wav_16k_mono(const std::string& path, const std::vector<float>& samples);

}  // namespace apl
