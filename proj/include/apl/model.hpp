// include/apl/model.hpp
//
// The APL architecture: acoustic encoder (2 conv stacks + 4 RNN stacks),
// phonetic encoder (same conv geometry, 1 RNN stack), linguistic encoder
// (embedding + BiLSTM + key/value heads) and the attention decoder, plus the
// ablation variants that drop input streams.

#pragma once

#include <optional>
#include <span>

#include "apl/lstm.hpp"
#include "apl/optim.hpp"

namespace apl {

enum class Variant { kBaseline1, kAL, kPL, kAPL };

inline Variant parse_variant(const std::string& name) {
  if (name == "baseline1") return Variant::kBaseline1;
  if (name == "AL") return Variant::kAL;
  if (name == "PL") return Variant::kPL;
  if (name == "APL") return Variant::kAPL;
  throw UsageError(cat("unknown variant '", name, "' (baseline1 | AL | PL | APL)"));
}

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline1: return "baseline1";
    case Variant::kAL: return "AL";
    case Variant::kPL: return "PL";
    case Variant::kAPL: return "APL";
  }
  throw UsageError("bad variant");
}

struct AplConfig {
  Variant variant = Variant::kAPL;
  int acoustic_dim = 81;
  int phonetic_dim = 41;
  int conv_channels = 32;
  int conv_kernel = 3;
  int conv_stride = 2;
  int conv_pad = 1;
  int n_conv = 2;
  int rnn_hidden = 128;  // per direction
  int n_rnn_acoustic = 4;
  int n_rnn_phonetic = 1;
  int embed_dim = 64;
  int ling_hidden = 64;  // linguistic BiLSTM, per direction
  int n_classes = 0;     // inventory size including blank
  double dropout = 0.2;
  bool use_cmvn = true;
  int batch_size = 64;
  int max_epochs = 200;
  int patience = 0;  // 0 disables early stopping
  int beam_width = 10;
  int dev_beam_width = 1;
  OptimConfig optim;
  std::uint64_t seed = 1;

  bool uses_acoustic() const { return variant != Variant::kPL; }
  bool uses_phonetic() const { return variant == Variant::kPL || variant == Variant::kAPL; }
  bool uses_attention() const { return variant != Variant::kBaseline1; }
  // The attention query is the per-frame concat of the active encoder
  // outputs; keys/values take the same width so the dot products line up.
  int query_dim() const {
    return 2 * rnn_hidden * ((uses_acoustic() ? 1 : 0) + (uses_phonetic() ? 1 : 0));
  }
  int key_dim() const { return query_dim(); }

  Index encoded_frames(Index t) const {
    Index out = t;
    for (int i = 0; i < n_conv; ++i) out = conv_out_extent(out, conv_kernel, conv_stride, conv_pad);
    return out;
  }

  void validate() const {
    if (n_classes < 2) throw UsageError("n_classes must be >= 2 (at least one phone plus blank)");
    for (int v : {acoustic_dim, phonetic_dim, conv_channels, conv_kernel, conv_stride, rnn_hidden, embed_dim,
                  ling_hidden, n_rnn_acoustic, batch_size})
      if (v < 1) throw UsageError("model dimensions must be positive");
    if (n_conv < 1 || conv_pad < 0 || n_rnn_phonetic < 1 || max_epochs < 0 || beam_width < 1 || dev_beam_width < 1)
      throw UsageError("bad model configuration");
    if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout rate must lie in [0, 1)");
  }
};

// conv -> batchnorm -> relu -> dropout on channel stacks
template <class S>
class ConvStack {
 public:
  ConvStack(int in_ch, int out_ch, int kernel, int stride, int pad, double dropout, std::uint64_t seed)
      : conv_(in_ch, out_ch, kernel, stride, pad), bn_(out_ch), drop_(dropout, seed) {}

  Channels<S> forward(const Channels<S>& in, bool train) {
    Channels<S> c = conv_.forward(in);
    h_ = c[0].rows();
    w_ = c[0].cols();
    Mat<S> pop = channels_to_population(c);
    pop = drop_.forward(relu_.forward(bn_.forward(pop, train)), train);
    return population_to_channels(pop, h_, w_);
  }

  Channels<S> backward(const Channels<S>& grad) {
    Mat<S> g = channels_to_population(grad);
    g = bn_.backward(relu_.backward(drop_.backward(g)));
    return conv_.backward(population_to_channels(g, h_, w_));
  }

  void init(Rng& rng) { conv_.init(rng); }
  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params, std::vector<StateRef<S>>& state) {
    conv_.collect(prefix + ".conv", params);
    bn_.collect(prefix + ".bn", params, state);
  }
  Conv2d<S>& conv() { return conv_; }
  BatchNorm<S>& bn() { return bn_; }

 private:
  Conv2d<S> conv_;
  BatchNorm<S> bn_;
  ReLU<S> relu_;
  Dropout<S> drop_;
  Index h_ = 0, w_ = 0;
};

// bilstm -> batchnorm -> dropout on frame rows
template <class S>
class RnnStack {
 public:
  RnnStack(int in_dim, int hidden, double dropout, std::uint64_t seed)
      : lstm_(in_dim, hidden), bn_(2 * hidden), drop_(dropout, seed) {}

  Mat<S> forward(const Mat<S>& x, bool train) { return drop_.forward(bn_.forward(lstm_.forward(x), train), train); }
  Mat<S> backward(const Mat<S>& g) { return lstm_.backward(bn_.backward(drop_.backward(g))); }

  void init(Rng& rng) { lstm_.init(rng); }
  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params, std::vector<StateRef<S>>& state) {
    lstm_.collect(prefix + ".lstm", params);
    bn_.collect(prefix + ".bn", params, state);
  }
  BiLstm<S>& lstm() { return lstm_; }
  BatchNorm<S>& bn() { return bn_; }

 private:
  BiLstm<S> lstm_;
  BatchNorm<S> bn_;
  Dropout<S> drop_;
};

// Frame-stream encoder shared by the acoustic and phonetic branches:
// the T x D input becomes a 1-channel D x T map, runs through the conv
// stacks, is re-flattened per frame (channel x frequency) and fed to the
// RNN stacks. Output: T' x 2*hidden.
template <class S>
class FrameEncoder {
 public:
  FrameEncoder(int in_dim, const AplConfig& cfg, int n_rnn, std::uint64_t seed) : in_dim_(in_dim) {
    int freq = in_dim;
    for (int i = 0; i < cfg.n_conv; ++i) {
      convs_.emplace_back(i == 0 ? 1 : cfg.conv_channels, cfg.conv_channels, cfg.conv_kernel, cfg.conv_stride,
                          cfg.conv_pad, cfg.dropout, derive_seed(seed, 100 + static_cast<std::uint64_t>(i)));
      freq = static_cast<int>(conv_out_extent(freq, cfg.conv_kernel, cfg.conv_stride, cfg.conv_pad));
    }
    freq_out_ = freq;
    channels_ = cfg.conv_channels;
    int rnn_in = cfg.conv_channels * freq;
    for (int i = 0; i < n_rnn; ++i) {
      rnns_.emplace_back(i == 0 ? rnn_in : 2 * cfg.rnn_hidden, cfg.rnn_hidden, cfg.dropout,
                         derive_seed(seed, 200 + static_cast<std::uint64_t>(i)));
    }
  }

  Mat<S> forward(const Mat<S>& frames, bool train) {
    if (frames.cols() != in_dim_)
      throw NumericError(cat("encoder expects ", in_dim_, "-dim frames, got ", frames.cols()));
    Channels<S> ch(1);
    ch[0] = frames.transpose();
    for (auto& cs : convs_) ch = cs.forward(ch, train);
    Mat<S> h = channels_to_frames(ch);
    for (auto& rs : rnns_) h = rs.forward(h, train);
    return h;
  }

  Mat<S> backward(const Mat<S>& grad) {
    Mat<S> g = grad;
    for (auto it = rnns_.rbegin(); it != rnns_.rend(); ++it) g = it->backward(g);
    Channels<S> gch = frames_to_channels(g, channels_, freq_out_);
    for (auto it = convs_.rbegin(); it != convs_.rend(); ++it) gch = it->backward(gch);
    return gch[0].transpose();
  }

  void init(Rng& rng) {
    for (auto& cs : convs_) cs.init(rng);
    for (auto& rs : rnns_) rs.init(rng);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params, std::vector<StateRef<S>>& state) {
    for (size_t i = 0; i < convs_.size(); ++i) convs_[i].collect(cat(prefix, ".conv", i), params, state);
    for (size_t i = 0; i < rnns_.size(); ++i) rnns_[i].collect(cat(prefix, ".rnn", i), params, state);
  }

  std::vector<ConvStack<S>>& conv_stacks() { return convs_; }
  std::vector<RnnStack<S>>& rnn_stacks() { return rnns_; }

 private:
  int in_dim_;
  int channels_ = 0;
  Index freq_out_ = 0;
  std::vector<ConvStack<S>> convs_;
  std::vector<RnnStack<S>> rnns_;
};

// Canonical phone ids -> (keys, values), each N x key_dim.
template <class S>
class LinguisticEncoder {
 public:
  LinguisticEncoder(const AplConfig& cfg)
      : lstm_(cfg.embed_dim, cfg.ling_hidden),
        key_head_(2 * cfg.ling_hidden, cfg.key_dim()),
        value_head_(2 * cfg.ling_hidden, cfg.key_dim()) {
    embed_ = Mat<S>::Zero(cfg.n_classes, cfg.embed_dim);
    dembed_ = Mat<S>::Zero(cfg.n_classes, cfg.embed_dim);
  }

  std::pair<Mat<S>, Mat<S>> forward(std::span<const int> ids) {
    if (ids.empty()) throw NumericError("linguistic encoder: empty canonical sequence");
    for (int id : ids)
      if (id < 0 || id >= embed_.rows()) throw NumericError(cat("canonical id ", id, " out of range"));
    ids_.assign(ids.begin(), ids.end());
    Mat<S> x(static_cast<Index>(ids.size()), embed_.cols());
    for (size_t n = 0; n < ids.size(); ++n) x.row(static_cast<Index>(n)) = embed_.row(ids[n]);
    Mat<S> h = lstm_.forward(x);
    return {key_head_.forward(h), value_head_.forward(h)};
  }

  void backward(const Mat<S>& dkeys, const Mat<S>& dvalues) {
    Mat<S> dh = key_head_.backward(dkeys) + value_head_.backward(dvalues);
    Mat<S> dx = lstm_.backward(dh);
    for (size_t n = 0; n < ids_.size(); ++n) dembed_.row(ids_[n]) += dx.row(static_cast<Index>(n));
  }

  void init(Rng& rng) {
    glorot_init(embed_, embed_.rows(), embed_.cols(), rng);
    lstm_.init(rng);
    key_head_.init(rng);
    value_head_.init(rng);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) {
    params.push_back({prefix + ".embed", &embed_, &dembed_});
    lstm_.collect(prefix + ".lstm", params);
    key_head_.collect(prefix + ".key", params);
    value_head_.collect(prefix + ".value", params);
  }

  Linear<S>& key_head() { return key_head_; }
  Linear<S>& value_head() { return value_head_; }

 private:
  Mat<S> embed_, dembed_;
  std::vector<int> ids_;
  BiLstm<S> lstm_;
  Linear<S> key_head_, value_head_;
};

// Attention (unscaled dot products, softmax over the N canonical slots) and
// the output layer y = softmax(W [context; query] + b), returned as
// log-probabilities. Baseline-1 skips attention: y = softmax(W query + b).
template <class S>
class Decoder {
 public:
  Decoder(int in_dim, int n_classes) : out_(in_dim, n_classes) {}

  Mat<S> forward_attention(const Mat<S>& query, const Mat<S>& keys, const Mat<S>& values) {
    if (query.cols() != keys.cols())
      throw NumericError(cat("attention: query width ", query.cols(), " != key width ", keys.cols()));
    q_ = query;
    k_ = keys;
    v_ = values;
    alpha_ = softmax_rows(Mat<S>(query * keys.transpose()));
    context_ = alpha_ * values;
    log_y_ = log_softmax_rows(out_.forward(concat(context_, query, 1)));
    return log_y_;
  }

  struct AttentionGrads {
    Mat<S> dquery, dkeys, dvalues;
  };

  AttentionGrads backward_attention(const Mat<S>& dlog_y) {
    Mat<S> dcat = out_.backward(log_softmax_backward_rows(log_y_, dlog_y));
    auto [dctx, dq] = split(dcat, context_.cols(), 1);
    Mat<S> dvalues = alpha_.transpose() * dctx;
    Mat<S> dlogits = softmax_backward_rows(alpha_, Mat<S>(dctx * v_.transpose()));
    Mat<S> dquery = Mat<S>(dq) + dlogits * k_;
    Mat<S> dkeys = dlogits.transpose() * q_;
    return {std::move(dquery), std::move(dkeys), std::move(dvalues)};
  }

  Mat<S> forward_plain(const Mat<S>& query) {
    log_y_ = log_softmax_rows(out_.forward(query));
    return log_y_;
  }

  Mat<S> backward_plain(const Mat<S>& dlog_y) { return out_.backward(log_softmax_backward_rows(log_y_, dlog_y)); }

  void init(Rng& rng) { out_.init(rng); }
  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) { out_.collect(prefix + ".out", params); }

  const Mat<S>& attention() const { return alpha_; }
  Linear<S>& output_layer() { return out_; }

 private:
  Linear<S> out_;
  Mat<S> q_, k_, v_, alpha_, context_, log_y_;
};

template <class S>
struct ModelInput {
  const Mat<S>* features = nullptr;   // T x acoustic_dim
  const Mat<S>* embedding = nullptr;  // T x phonetic_dim
  std::span<const int> canonical;     // N ids, non-blank
};

template <class S>
struct ModelOutput {
  Mat<S> log_probs;  // T' x C
  Mat<S> attention;  // T' x N (empty for baseline1)
};

template <class S>
class AplModel {
 public:
  explicit AplModel(const AplConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg.uses_acoustic())
      acoustic_.emplace(cfg.acoustic_dim, cfg, cfg.n_rnn_acoustic, derive_seed(cfg.seed, 1));
    if (cfg.uses_phonetic())
      phonetic_.emplace(cfg.phonetic_dim, cfg, cfg.n_rnn_phonetic, derive_seed(cfg.seed, 2));
    if (cfg.uses_attention()) linguistic_.emplace(cfg);
    decoder_.emplace(cfg.uses_attention() ? 2 * cfg.query_dim() : cfg.query_dim(), cfg.n_classes);
    Rng rng(derive_seed(cfg.seed, 0));
    if (acoustic_) acoustic_->init(rng);
    if (phonetic_) phonetic_->init(rng);
    if (linguistic_) linguistic_->init(rng);
    decoder_->init(rng);
  }

  ModelOutput<S> forward(const ModelInput<S>& in, bool train) {
    if (cfg_.uses_acoustic() && (in.features == nullptr || in.features->rows() == 0))
      throw DataError(cat("variant ", variant_name(cfg_.variant), " requires acoustic features"));
    if (cfg_.uses_phonetic() && (in.embedding == nullptr || in.embedding->rows() == 0))
      throw DataError(cat("variant ", variant_name(cfg_.variant), " requires phonetic embeddings"));
    if (cfg_.uses_attention() && in.canonical.empty())
      throw DataError(cat("variant ", variant_name(cfg_.variant), " requires the canonical phone sequence"));
    if (cfg_.uses_acoustic() && cfg_.uses_phonetic() && in.features->rows() != in.embedding->rows())
      throw DataError(cat("acoustic (", in.features->rows(), ") and phonetic (", in.embedding->rows(),
                          ") inputs must have an identical number of frames"));

    Mat<S> h_a, h_p;
    if (cfg_.uses_acoustic()) h_a = acoustic_->forward(*in.features, train);
    if (cfg_.uses_phonetic()) h_p = phonetic_->forward(*in.embedding, train);
    acoustic_width_ = h_a.cols();

    Mat<S> query;
    if (cfg_.uses_acoustic() && cfg_.uses_phonetic())
      query = concat(h_a, h_p, 1);
    else if (cfg_.uses_acoustic())
      query = std::move(h_a);
    else
      query = std::move(h_p);

    ModelOutput<S> out;
    if (!cfg_.uses_attention()) {
      out.log_probs = decoder_->forward_plain(query);
      return out;
    }
    auto [keys, values] = linguistic_->forward(in.canonical);
    out.log_probs = decoder_->forward_attention(query, keys, values);
    out.attention = decoder_->attention();
    return out;
  }

  void backward(const Mat<S>& dlog_probs) {
    dfeatures_.resize(0, 0);
    dembedding_.resize(0, 0);
    if (!cfg_.uses_attention()) {
      dfeatures_ = acoustic_->backward(decoder_->backward_plain(dlog_probs));
      return;
    }
    auto grads = decoder_->backward_attention(dlog_probs);
    linguistic_->backward(grads.dkeys, grads.dvalues);
    if (cfg_.uses_acoustic() && cfg_.uses_phonetic()) {
      auto [dha, dhp] = split(grads.dquery, acoustic_width_, 1);
      dfeatures_ = acoustic_->backward(dha);
      dembedding_ = phonetic_->backward(dhp);
    } else if (cfg_.uses_acoustic()) {
      dfeatures_ = acoustic_->backward(grads.dquery);
    } else {
      dembedding_ = phonetic_->backward(grads.dquery);
    }
  }

  // input-stream gradients of the latest backward (empty for unused streams)
  const Mat<S>& feature_grad() const { return dfeatures_; }
  const Mat<S>& embedding_grad() const { return dembedding_; }

  std::vector<ParamRef<S>> params() {
    std::vector<ParamRef<S>> out;
    std::vector<StateRef<S>> state;
    collect(out, state);
    return out;
  }

  std::vector<StateRef<S>> state() {
    std::vector<ParamRef<S>> params;
    std::vector<StateRef<S>> out;
    collect(params, out);
    return out;
  }

  void zero_grad() { zero_grads(params()); }

  const AplConfig& config() const { return cfg_; }
  FrameEncoder<S>* acoustic_encoder() { return acoustic_ ? &*acoustic_ : nullptr; }
  FrameEncoder<S>* phonetic_encoder() { return phonetic_ ? &*phonetic_ : nullptr; }
  LinguisticEncoder<S>* linguistic_encoder() { return linguistic_ ? &*linguistic_ : nullptr; }
  Decoder<S>& decoder() { return *decoder_; }

 private:
  void collect(std::vector<ParamRef<S>>& params, std::vector<StateRef<S>>& state) {
    if (acoustic_) acoustic_->collect("acoustic", params, state);
    if (phonetic_) phonetic_->collect("phonetic", params, state);
    if (linguistic_) linguistic_->collect("linguistic", params);
    decoder_->collect("decoder", params);
  }

  AplConfig cfg_;
  Mat<S> dfeatures_, dembedding_;
  std::optional<FrameEncoder<S>> acoustic_;
  std::optional<FrameEncoder<S>> phonetic_;
  std::optional<LinguisticEncoder<S>> linguistic_;
  std::optional<Decoder<S>> decoder_;
  Index acoustic_width_ = 0;
};

}  // namespace apl
