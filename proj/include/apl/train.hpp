// include/apl/train.hpp
//
// Per-utterance training with gradient accumulation over the batch, the
// epoch loop with best-on-dev tracking, beam-search prediction and model
// persistence via the APLCKPT1 container.

#pragma once

#include <functional>

#include "apl/checkpoint.hpp"
#include "apl/corpus.hpp"
#include "apl/ctc.hpp"
#include "apl/features.hpp"
#include "apl/matio.hpp"
#include "apl/model.hpp"
#include "apl/scoring.hpp"
#include "apl/wav.hpp"

namespace apl {

struct UttTensors {
  std::string id;
  Matf features;   // 0x0 when the variant does not use the stream
  Matf embedding;  // 0x0 likewise
  std::vector<int> canonical_ids;
  std::vector<int> target_ids;  // perceived phones: what was actually said
};

// Materializes one record: features from the referenced matrix or from the
// wav via the front end (with per-utterance cmvn when configured).
inline UttTensors load_tensors(const Manifest& manifest, const UtteranceRecord& rec, const PhoneInventory& inv,
                               const AplConfig& cfg) {
  UttTensors out;
  out.id = rec.id;
  if (cfg.uses_acoustic()) {
    if (!rec.feature_path.empty())
      out.features = read_mat(manifest.resolve(rec.feature_path));
    else
      out.features = fbank_energy(read_wav_16k_mono(manifest.resolve(rec.audio_path))).frames;
    if (cfg.use_cmvn && out.features.rows() >= 2) out.features = cmvn(out.features);
  }
  if (cfg.uses_phonetic()) {
    if (rec.embedding_path.empty())
      throw DataError(cat("record '", rec.id, "' has no phonetic embedding but variant ",
                          variant_name(cfg.variant), " needs one"));
    out.embedding = read_mat(manifest.resolve(rec.embedding_path));
  }
  out.canonical_ids = inv.encode(rec.canonical_seq);
  out.target_ids = inv.encode(rec.perceived_seq);
  return out;
}

inline std::vector<UttTensors> load_tensors(const Manifest& manifest, const PhoneInventory& inv,
                                            const AplConfig& cfg) {
  std::vector<UttTensors> out(manifest.records.size());
  parallel_for(manifest.records.size(),
               [&](size_t i) { out[i] = load_tensors(manifest, manifest.records[i], inv, cfg); });
  return out;
}

template <class S>
ModelInput<S> model_input(const UttTensors& utt, const Mat<S>& features, const Mat<S>& embedding) {
  ModelInput<S> in;
  in.features = &features;
  in.embedding = &embedding;
  in.canonical = utt.canonical_ids;
  return in;
}

// Frame count available to CTC for this utterance under the model's conv
// geometry.
inline Index ctc_frames(const AplConfig& cfg, const UttTensors& utt) {
  Index t = cfg.uses_acoustic() ? utt.features.rows() : utt.embedding.rows();
  return cfg.encoded_frames(t);
}

inline bool ctc_feasible(const AplConfig& cfg, const UttTensors& utt) {
  return ctc_frames(cfg, utt) >= ctc_min_frames(utt.target_ids);
}

struct StepStats {
  double mean_loss = 0.0;
  int used = 0;
  int skipped_infeasible = 0;
};

template <class S>
StepStats train_step(AplModel<S>& model, Optimizer<S>& opt, std::span<const UttTensors> batch,
                     const PhoneInventory& inv) {
  const AplConfig& cfg = model.config();
  StepStats stats;
  std::vector<const UttTensors*> usable;
  for (const auto& utt : batch) {
    if (ctc_feasible(cfg, utt))
      usable.push_back(&utt);
    else
      ++stats.skipped_infeasible;
  }
  if (usable.empty()) return stats;

  model.zero_grad();
  const S scale = S(1) / static_cast<S>(usable.size());
  double loss_sum = 0.0;
  for (const UttTensors* utt : usable) {
    Mat<S> features = utt->features.template cast<S>();
    Mat<S> embedding = utt->embedding.template cast<S>();
    ModelOutput<S> out = model.forward(model_input(*utt, features, embedding), /*train=*/true);
    CtcResult<S> ctc = ctc_loss(out.log_probs, std::span<const int>(utt->target_ids), inv.blank_id());
    if (!std::isfinite(ctc.loss)) {
      double max_logit = static_cast<double>(out.log_probs.template cast<double>().array().abs().maxCoeff());
      double grad_norm = static_cast<double>(ctc.grad.template cast<double>().norm());
      throw NumericError(cat("non-finite CTC loss on '", utt->id, "' (max |log-posterior| = ", max_logit,
                             ", grad norm = ", grad_norm, ")"));
    }
    loss_sum += ctc.loss;
    model.backward(Mat<S>(scale * ctc.grad));
  }
  opt.step(model.params());
  stats.mean_loss = loss_sum / static_cast<double>(usable.size());
  stats.used = static_cast<int>(usable.size());
  return stats;
}

template <class S>
std::vector<int> predict_ids(AplModel<S>& model, const UttTensors& utt, const PhoneInventory& inv, int beam_width) {
  Mat<S> features = utt.features.template cast<S>();
  Mat<S> embedding = utt.embedding.template cast<S>();
  ModelOutput<S> out = model.forward(model_input(utt, features, embedding), /*train=*/false);
  return beam_search(out.log_probs, inv.blank_id(), beam_width);
}

template <class S>
std::vector<PhoneLabel> predict(AplModel<S>& model, const UttTensors& utt, const PhoneInventory& inv,
                                int beam_width) {
  std::vector<int> ids = predict_ids(model, utt, inv, beam_width);
  return inv.decode(ids);
}

// Micro-averaged phoneme accuracy of the recognized sequences against the
// perceived targets: (N-S-D-I)/N over the whole set.
template <class S>
double dataset_accuracy(AplModel<S>& model, std::span<const UttTensors> utts, const PhoneInventory& inv,
                        int beam_width) {
  EditCounts total;
  for (const auto& utt : utts) {
    std::vector<int> hyp = predict_ids(model, utt, inv, beam_width);
    EditCounts c = align(std::span<const int>(utt.target_ids), std::span<const int>(hyp)).second;
    total.s += c.s;
    total.d += c.d;
    total.i += c.i;
    total.n += c.n;
  }
  if (total.n == 0) return 0.0;
  return accuracy(total);
}

// ---------------------------------------------------------------------------
// persistence

template <class S>
std::map<std::string, Matf> snapshot(AplModel<S>& model, Optimizer<S>* opt) {
  std::map<std::string, Matf> entries;
  for (const auto& p : model.params()) entries[p.name] = p.value->template cast<float>();
  for (const auto& st : model.state()) entries[st.name] = st.value->template cast<float>();
  if (opt) {
    Matf step(1, 1);
    step(0, 0) = static_cast<float>(opt->step_count());
    entries["opt.step"] = step;
    for (const auto& [name, m] : opt->first_moments()) entries["opt.m." + name] = m.template cast<float>();
    for (const auto& [name, v] : opt->second_moments()) entries["opt.v." + name] = v.template cast<float>();
  }
  return entries;
}

template <class S>
void restore(AplModel<S>& model, Optimizer<S>* opt, const std::map<std::string, Matf>& entries) {
  auto assign = [&](const std::string& name, Mat<S>* dst) {
    auto it = entries.find(name);
    if (it == entries.end()) throw DataError(cat("checkpoint is missing entry '", name, "'"));
    if (it->second.rows() != dst->rows() || it->second.cols() != dst->cols())
      throw DataError(cat("checkpoint entry '", name, "' has shape ", it->second.rows(), "x", it->second.cols(),
                          ", expected ", dst->rows(), "x", dst->cols()));
    *dst = it->second.template cast<S>();
  };
  for (const auto& p : model.params()) assign(p.name, p.value);
  for (const auto& st : model.state()) assign(st.name, st.value);
  if (opt) {
    auto it = entries.find("opt.step");
    if (it != entries.end()) {
      opt->set_step_count(static_cast<long>(it->second(0, 0)));
      for (const auto& p : model.params()) {
        auto m = entries.find("opt.m." + p.name);
        auto v = entries.find("opt.v." + p.name);
        if (m != entries.end()) opt->first_moments()[p.name] = m->second.template cast<S>();
        if (v != entries.end()) opt->second_moments()[p.name] = v->second.template cast<S>();
      }
    }
  }
}

template <class S>
void save_model(const std::string& path, AplModel<S>& model, Optimizer<S>* opt) {
  write_checkpoint(path, snapshot(model, opt));
}

template <class S>
void load_model(const std::string& path, AplModel<S>& model, Optimizer<S>* opt) {
  restore(model, opt, read_checkpoint(path));
}

// ---------------------------------------------------------------------------
// epoch loop

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
  double lr = 0.0;
  int skipped_infeasible = 0;
};

struct FitResult {
  std::vector<EpochLog> history;
  int best_epoch = -1;  // -1 when no epoch ran
  double best_dev_accuracy = 0.0;
  std::map<std::string, Matf> best_checkpoint;  // model+optimizer at the best epoch
};

// Seeded shuffling, sequential batches, dev accuracy after every epoch.
// Early stopping after cfg.patience epochs without dev improvement
// (patience 0 disables). The model is left in its final state; the best
// snapshot rides along in the result.
template <class S>
FitResult fit(AplModel<S>& model, Optimizer<S>& opt, const std::vector<UttTensors>& train,
              const std::vector<UttTensors>& dev, const PhoneInventory& inv,
              const std::function<void(const EpochLog&)>& on_epoch = {}) {
  if (train.empty()) throw DataError("fit: empty training set");
  const AplConfig& cfg = model.config();
  FitResult result;
  result.best_checkpoint = snapshot(model, &opt);

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5affe000ull + static_cast<std::uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(shuffle_rng.uniform_int(static_cast<std::int64_t>(i)))]);

    double loss_sum = 0.0;
    long used = 0;
    int skipped = 0;
    std::vector<UttTensors> batch;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      StepStats stats = train_step(model, opt, std::span<const UttTensors>(batch), inv);
      loss_sum += stats.mean_loss * stats.used;
      used += stats.used;
      skipped += stats.skipped_infeasible;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = used > 0 ? loss_sum / static_cast<double>(used) : 0.0;
    log.dev_accuracy = dev.empty() ? 0.0 : dataset_accuracy(model, std::span<const UttTensors>(dev), inv,
                                                            cfg.dev_beam_width);
    log.lr = opt.config().lr;
    log.skipped_infeasible = skipped;
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);

    if (result.best_epoch < 0 || log.dev_accuracy > result.best_dev_accuracy) {
      result.best_epoch = epoch;
      result.best_dev_accuracy = log.dev_accuracy;
      result.best_checkpoint = snapshot(model, &opt);
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace apl
