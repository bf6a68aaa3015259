// include/apl/synth.hpp
//
// Synthetic toy corpus with controlled mispronunciations. Each perceived
// phone emits a fixed number of frames of a per-class spectral template plus
// Gaussian noise, alongside an oracle phonetic-embedding matrix of noisy
// one-hot posteriors.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apl/corpus.hpp"
#include "apl/types.hpp"

namespace apl {

struct SynthConfig {
  int n_utts = 0;
  int phones_per_utt = 8;
  double sub_rate = 0.0;
  double del_rate = 0.0;
  double ins_rate = 0.0;
  int frames_per_phone = 8;
  double noise_std = 0.0;

  int feature_dim = 81;          // matches the acoustic front end
  double template_gain = 1.0;    // amplitude of the per-class one-hot template
  double posterior_sharpness = 4.0;  // logit scale of the oracle posteriors
  double hop_s = 0.010;          // nominal, for format parity with real data
  int speaker_pool = 4;
  std::string speaker_prefix = "spk";
  std::string id_prefix = "utt";
};

struct SynthUtterance {
  UtteranceRecord record;  // feature/embedding paths left empty; set on save
  Matf features;           // T x feature_dim
  Matf embedding;          // T x inventory size
};

struct SynthStats {
  long positions = 0;      // canonical positions generated
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
};

// Deterministic given (cfg, inventory, seed); independent of thread count.
std::vector<SynthUtterance> synth_corpus(const SynthConfig& cfg, const PhoneInventory& inv, std::uint64_t seed);

SynthStats synth_stats(const std::vector<SynthUtterance>& utts);

// Writes features/ and emb/ matrices under dir and fills the records' paths
// (relative to dir).
void save_synth_files(const std::string& dir, std::vector<SynthUtterance>& utts);

}  // namespace apl
