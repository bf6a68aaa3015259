// tests/test_features.cpp

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "apl/common.hpp"
#include "apl/features.hpp"
#include "apl/wav.hpp"

using namespace apl;

TEST_CASE("framing formula and output width") {
  std::vector<float> samples(16000, 0.0f);
  for (size_t i = 0; i < samples.size(); ++i)
    samples[i] = 0.4f * std::sin(2.0f * 3.14159265f * 440.0f * static_cast<float>(i) / 16000.0f);
  FeatureMatrix m = fbank_energy(samples);
  CHECK(m.frames.rows() == 98);  // 1 + (16000 - 400) / 160
  CHECK(m.frames.cols() == 81);
  CHECK(m.hop_s == doctest::Approx(0.010));
  CHECK(m.frames.allFinite());
}

TEST_CASE("all-zero signal hits the log floor everywhere") {
  std::vector<float> samples(1600, 0.0f);
  FeatureMatrix m = fbank_energy(samples);
  const float expected = std::log(1e-10f);
  for (Index t = 0; t < m.frames.rows(); ++t)
    for (Index c = 0; c < m.frames.cols(); ++c) CHECK(m.frames(t, c) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("too-short and wrong-rate inputs are rejected") {
  std::vector<float> samples(100, 0.1f);
  CHECK_THROWS_AS(static_cast<void>(fbank_energy(samples)), DataError);
  FbankConfig cfg;
  cfg.sample_rate = 8000;
  std::vector<float> ok(16000, 0.1f);
  CHECK_THROWS_AS(static_cast<void>(fbank_energy(ok, cfg)), DataError);
}

TEST_CASE("shift covariance: one hop of leading silence shifts frames by one") {
  Rng rng(42);
  std::vector<float> samples(4000);
  for (auto& s : samples) s = static_cast<float>(0.2 * rng.normal());
  std::vector<float> padded(samples.size() + 160, 0.0f);
  std::copy(samples.begin(), samples.end(), padded.begin() + 160);
  FeatureMatrix a = fbank_energy(samples);
  FeatureMatrix b = fbank_energy(padded);
  REQUIRE(b.frames.rows() == a.frames.rows() + 1);
  for (Index t = 1; t + 1 < a.frames.rows(); ++t)
    for (Index c = 0; c < a.frames.cols(); ++c)
      CHECK(b.frames(t + 1, c) == doctest::Approx(a.frames(t, c)).epsilon(1e-6));
}

TEST_CASE("cmvn") {
  Matf m(2, 2);
  m << 1.0f, 5.0f, 3.0f, 5.0f;
  Matf out = cmvn(m);
  CHECK(out(0, 0) == doctest::Approx(-1.0));
  CHECK(out(1, 0) == doctest::Approx(1.0));
  // constant column collapses to zeros under the variance floor
  CHECK(out(0, 1) == doctest::Approx(0.0));
  CHECK(out(1, 1) == doctest::Approx(0.0));

  Rng rng(1);
  Matf r(50, 7);
  for (Index i = 0; i < r.rows(); ++i)
    for (Index j = 0; j < r.cols(); ++j) r(i, j) = static_cast<float>(rng.normal() * 3.0 + 1.0);
  Matf rn = cmvn(r);
  for (Index j = 0; j < rn.cols(); ++j) {
    CHECK(rn.col(j).mean() == doctest::Approx(0.0).epsilon(1e-6));
    float var = (rn.col(j).array() - rn.col(j).mean()).square().sum() / static_cast<float>(rn.rows());
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }

  Matf tiny(1, 2);
  CHECK_THROWS_AS(static_cast<void>(cmvn(tiny)), DataError);
}

TEST_CASE("wav round trip and format rejection") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "apl_test_wav";
  fs::create_directories(dir);
  std::vector<float> samples(800);
  Rng rng(9);
  for (auto& s : samples) s = static_cast<float>(0.5 * rng.normal());
  std::string path = (dir / "t.wav").string();
  write_wav_16k_mono(path, samples);
  std::vector<float> back = read_wav_16k_mono(path);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i)
    CHECK(back[i] == doctest::Approx(std::clamp(samples[i], -1.0f, 32767.0f / 32768.0f)).epsilon(1e-3));
  CHECK_THROWS_AS(static_cast<void>(read_wav_16k_mono((dir / "missing.wav").string())), DataError);
}
