// src/features.cpp

#include "apl/features.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "apl/common.hpp"

namespace apl {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Triangular filters, mel-spaced from 0 Hz to Nyquist, weights on FFT bin
// center frequencies.
Matd mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  int n_bins = n_fft / 2 + 1;
  double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[static_cast<size_t>(i)] = mel_to_hz(mel_hi * i / (n_mels + 1));
  Matd fb = Matd::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    double lo = edges[static_cast<size_t>(m)], mid = edges[static_cast<size_t>(m) + 1], hi = edges[static_cast<size_t>(m) + 2];
    for (int b = 0; b < n_bins; ++b) {
      double f = static_cast<double>(b) * sample_rate / n_fft;
      if (f > lo && f < mid)
        fb(m, b) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(m, b) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

}  // namespace

FeatureMatrix fbank_energy(std::span<const float> samples, const FbankConfig& cfg) {
  if (cfg.sample_rate != 16000) throw DataError(cat("unsupported sample rate ", cfg.sample_rate, " (need 16000)"));
  const int win = static_cast<int>(std::lround(cfg.win_s * cfg.sample_rate));
  const int hop = static_cast<int>(std::lround(cfg.hop_s * cfg.sample_rate));
  if (static_cast<int>(samples.size()) < win)
    throw DataError(cat("input of ", samples.size(), " samples is shorter than one ", win, "-sample window"));
  const int n_frames = 1 + (static_cast<int>(samples.size()) - win) / hop;
  const int n_fft = next_pow2(win);
  const int n_bins = n_fft / 2 + 1;

  static thread_local Eigen::FFT<double> fft;
  const Matd fb = mel_filterbank(cfg.n_mels, n_fft, cfg.sample_rate);

  Vecd window(win);
  for (int i = 0; i < win; ++i)
    window(i) = 0.5 - 0.5 * std::cos(2.0 * EIGEN_PI * i / (win - 1));

  FeatureMatrix out;
  out.hop_s = cfg.hop_s;
  out.sample_rate = cfg.sample_rate;
  out.frames.resize(n_frames, cfg.n_mels + 1);

  std::vector<double> frame(static_cast<size_t>(n_fft), 0.0);
  std::vector<std::complex<double>> spectrum;
  const double log_floor = std::log(cfg.floor);
  for (int t = 0; t < n_frames; ++t) {
    const int off = t * hop;
    double energy = 0.0;
    for (int i = 0; i < win; ++i) {
      double prev = (off + i > 0) ? samples[static_cast<size_t>(off + i - 1)] : 0.0;
      double v = (samples[static_cast<size_t>(off + i)] - cfg.preemph * prev) * window(i);
      frame[static_cast<size_t>(i)] = v;
      energy += v * v;
    }
    std::fill(frame.begin() + win, frame.end(), 0.0);
    fft.fwd(spectrum, frame);
    Vecd power(n_bins);
    for (int b = 0; b < n_bins; ++b) power(b) = std::norm(spectrum[static_cast<size_t>(b)]);
    Vecd mel = fb * power;
    for (int m = 0; m < cfg.n_mels; ++m)
      out.frames(t, m) = static_cast<float>(mel(m) > cfg.floor ? std::log(mel(m)) : log_floor);
    out.frames(t, cfg.n_mels) = static_cast<float>(energy > cfg.floor ? std::log(energy) : log_floor);
  }
  return out;
}

Matf cmvn(const Matf& m) {
  if (m.rows() < 2) throw DataError("cmvn needs at least two frames");
  Matf out(m.rows(), m.cols());
  const auto n = static_cast<float>(m.rows());
  for (Index c = 0; c < m.cols(); ++c) {
    float mean = m.col(c).mean();
    float var = (m.col(c).array() - mean).square().sum() / n;
    float inv_std = 1.0f / std::sqrt(std::max(var, 1e-8f));
    out.col(c) = (m.col(c).array() - mean) * inv_std;
  }
  return out;
}

}  // namespace apl
