// include/apl/features.hpp
//
// 81-dim acoustic front end: 80 log-mel filter banks plus one log-energy
// channel, 25 ms window / 10 ms hop at 16 kHz.

#pragma once

#include <span>

#include "apl/types.hpp"

namespace apl {

struct FbankConfig {
  double win_s = 0.025;
  double hop_s = 0.010;
  int n_mels = 80;
  double preemph = 0.97;
  double floor = 1e-10;
  int sample_rate = 16000;
};

struct FeatureMatrix {
  Matf frames;  // T x (n_mels + 1); last column is log-energy
  double hop_s = 0.010;
  int sample_rate = 16000;
};

// T = 1 + floor((len - win_samples) / hop_samples). Rejects inputs shorter
// than one window and sample rates other than 16 kHz.
FeatureMatrix fbank_energy(std::span<const float> samples, const FbankConfig& cfg = {});

// Per-utterance, per-column zero mean / unit variance (variance floor 1e-8).
Matf cmvn(const Matf& m);

}  // namespace apl
