// src/synth.cpp

#include "apl/synth.hpp"

#include <cmath>
#include <filesystem>

#include "apl/common.hpp"
#include "apl/matio.hpp"

namespace apl {

namespace {

void check_config(const SynthConfig& cfg, const PhoneInventory& inv) {
  if (cfg.n_utts < 0) throw UsageError("n_utts must be >= 0");
  if (cfg.phones_per_utt < 1) throw UsageError("phones_per_utt must be >= 1");
  for (double r : {cfg.sub_rate, cfg.del_rate, cfg.ins_rate})
    if (r < 0.0 || r >= 1.0) throw UsageError("error rates must lie in [0, 1)");
  if (cfg.sub_rate + cfg.del_rate >= 1.0) throw UsageError("sub_rate + del_rate must be < 1");
  if (cfg.frames_per_phone < 2) throw UsageError("frames_per_phone must be >= 2");
  if (inv.plain_ids().empty()) throw DataError("inventory has no assignable phone classes");
  if (inv.size() > cfg.feature_dim)
    throw UsageError(cat("feature_dim ", cfg.feature_dim, " too small for ", inv.size(), " classes"));
}

struct DrawnPhone {
  int klass;  // class id of the perceived phone
  ErrorType type;
  int canonical = -1;  // class id, -1 for additions
};

// One utterance's phone-level plan: per canonical position an independent
// substitute/delete draw, plus geometric insertions at every gap.
std::vector<DrawnPhone> draw_plan(const SynthConfig& cfg, const std::vector<int>& plain, Rng& rng,
                                  std::vector<int>& canonical_out) {
  std::vector<DrawnPhone> plan;
  canonical_out.clear();
  auto random_class = [&](int exclude) {
    int k = plain[static_cast<size_t>(rng.uniform_int(static_cast<std::int64_t>(plain.size())))];
    if (k == exclude) {
      // redraw among the others; requires >= 2 plain classes
      size_t idx = static_cast<size_t>(rng.uniform_int(static_cast<std::int64_t>(plain.size()) - 1));
      size_t skip = 0;
      for (size_t i = 0; i < plain.size(); ++i) {
        if (plain[i] == exclude) continue;
        if (skip == idx) return plain[i];
        ++skip;
      }
    }
    return k;
  };
  auto insertions = [&] {
    while (cfg.ins_rate > 0.0 && rng.uniform() < cfg.ins_rate)
      plan.push_back({random_class(-1), ErrorType::kAddition, -1});
  };
  for (int n = 0; n < cfg.phones_per_utt; ++n) {
    insertions();
    int canonical = random_class(-1);
    canonical_out.push_back(canonical);
    double u = rng.uniform();
    if (u < cfg.sub_rate && plain.size() > 1) {
      plan.push_back({random_class(canonical), ErrorType::kSubstitution, canonical});
    } else if (u < cfg.sub_rate + cfg.del_rate) {
      plan.push_back({-1, ErrorType::kDeletion, canonical});
    } else {
      plan.push_back({canonical, ErrorType::kNone, canonical});
    }
  }
  insertions();
  return plan;
}

SynthUtterance render(const SynthConfig& cfg, const PhoneInventory& inv, const std::vector<int>& plain,
                      std::uint64_t utt_seed, int utt_index) {
  Rng rng(utt_seed);
  std::vector<int> canonical;
  std::vector<DrawnPhone> plan;
  // A fully deleted utterance has no frames; redraw (rare unless del_rate
  // is extreme).
  for (;;) {
    plan = draw_plan(cfg, plain, rng, canonical);
    bool any = false;
    for (const auto& p : plan) any |= (p.klass >= 0);
    if (any) break;
  }

  SynthUtterance utt;
  char id[64];
  std::snprintf(id, sizeof id, "%s_%05d", cfg.id_prefix.c_str(), utt_index);
  utt.record.id = id;
  utt.record.speaker = cat(cfg.speaker_prefix, utt_index % std::max(1, cfg.speaker_pool));

  int n_perceived = 0;
  for (const auto& p : plan) n_perceived += (p.klass >= 0);
  const Index total_frames = static_cast<Index>(n_perceived) * cfg.frames_per_phone;
  utt.features = Matf::Zero(total_frames, cfg.feature_dim);
  utt.embedding = Matf::Zero(total_frames, inv.size());

  const double phone_s = cfg.frames_per_phone * cfg.hop_s;
  double cursor = 0.0;
  Index frame = 0;
  for (const auto& p : plan) {
    AnnotationSegment seg;
    seg.error_type = p.type;
    if (p.canonical >= 0) seg.canonical = inv.label(p.canonical);
    if (p.klass >= 0) seg.perceived = inv.label(p.klass);
    if (p.type == ErrorType::kDeletion) {
      // Nominal one-hop span; deletions emit no frames.
      seg.start_s = cursor;
      seg.end_s = cursor + cfg.hop_s;
      utt.record.segments.push_back(std::move(seg));
      continue;
    }
    seg.start_s = cursor;
    seg.end_s = cursor + phone_s;
    cursor = seg.end_s;
    utt.record.segments.push_back(std::move(seg));
    for (int f = 0; f < cfg.frames_per_phone; ++f, ++frame) {
      for (Index d = 0; d < cfg.feature_dim; ++d)
        utt.features(frame, d) = static_cast<float>(cfg.noise_std * rng.normal());
      utt.features(frame, p.klass) += static_cast<float>(cfg.template_gain);
      // Oracle posterior: softmax of a sharpened one-hot with logit noise.
      Vecd logits(inv.size());
      for (Index c = 0; c < inv.size(); ++c) logits(c) = cfg.noise_std * rng.normal();
      logits(p.klass) += cfg.posterior_sharpness;
      double mx = logits.maxCoeff();
      Vecd ex = (logits.array() - mx).exp();
      ex /= ex.sum();
      for (Index c = 0; c < inv.size(); ++c) utt.embedding(frame, c) = static_cast<float>(ex(c));
    }
  }
  utt.record.canonical_seq = canonical_of(utt.record.segments);
  utt.record.perceived_seq = perceived_of(utt.record.segments);
  return utt;
}

}  // namespace

std::vector<SynthUtterance> synth_corpus(const SynthConfig& cfg, const PhoneInventory& inv, std::uint64_t seed) {
  check_config(cfg, inv);
  const std::vector<int> plain = inv.plain_ids();
  std::vector<SynthUtterance> utts(static_cast<size_t>(cfg.n_utts));
  parallel_for(static_cast<size_t>(cfg.n_utts), [&](size_t i) {
    utts[i] = render(cfg, inv, plain, derive_seed(seed, i), static_cast<int>(i));
  });
  return utts;
}

SynthStats synth_stats(const std::vector<SynthUtterance>& utts) {
  SynthStats st;
  for (const auto& u : utts) {
    for (const auto& seg : u.record.segments) {
      switch (seg.error_type) {
        case ErrorType::kNone: ++st.positions; break;
        case ErrorType::kSubstitution: ++st.positions; ++st.substitutions; break;
        case ErrorType::kDeletion: ++st.positions; ++st.deletions; break;
        case ErrorType::kAddition: ++st.insertions; break;
      }
    }
  }
  return st;
}

void save_synth_files(const std::string& dir, std::vector<SynthUtterance>& utts) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "features");
  fs::create_directories(fs::path(dir) / "emb");
  parallel_for(utts.size(), [&](size_t i) {
    SynthUtterance& u = utts[i];
    u.record.feature_path = cat("features/", u.record.id, ".mat");
    u.record.embedding_path = cat("emb/", u.record.id, ".mat");
    write_mat((fs::path(dir) / u.record.feature_path).string(), u.features);
    write_mat((fs::path(dir) / u.record.embedding_path).string(), u.embedding);
  });
}

}  // namespace apl
