// include/apl/layers.hpp
//
// Forward + analytic backward passes for every layer the model needs.
// No autodiff graph: composites wire the calls explicitly. Layers cache what
// their backward needs; parameter gradients accumulate until zero_grads().

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "apl/common.hpp"
#include "apl/types.hpp"

namespace apl {

template <class S>
using Channels = std::vector<Mat<S>>;  // conv feature maps, one H x W matrix per channel

template <class S>
struct ParamRef {
  std::string name;
  Mat<S>* value;
  Mat<S>* grad;
};

template <class S>
struct StateRef {  // persisted, not optimized (batchnorm running stats)
  std::string name;
  Mat<S>* value;
};

template <class S>
void zero_grads(const std::vector<ParamRef<S>>& params) {
  for (const auto& p : params) p.grad->setZero();
}

template <class S>
void glorot_init(Mat<S>& w, Index fan_in, Index fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<S>(rng.uniform(-limit, limit));
}

// ---------------------------------------------------------------------------
// conv2d: square kernel, cross-correlation, zero padding.
// out_extent = floor((in + 2*pad - kernel) / stride) + 1.

inline Index conv_out_extent(Index in, int kernel, int stride, int pad) {
  Index span = in + 2 * pad - kernel;
  if (span < 0) throw NumericError(cat("conv input extent ", in, " smaller than kernel ", kernel, " under pad ", pad));
  return span / stride + 1;
}

template <class S>
class Conv2d {
 public:
  Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad)
      : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {
    w_ = Mat<S>::Zero(out_ch, in_ch * kernel * kernel);
    b_ = Mat<S>::Zero(1, out_ch);
    dw_ = Mat<S>::Zero(w_.rows(), w_.cols());
    db_ = Mat<S>::Zero(1, out_ch);
  }

  void init(Rng& rng) {
    glorot_init(w_, in_ch_ * kernel_ * kernel_, out_ch_ * kernel_ * kernel_, rng);
    b_.setZero();
  }

  Channels<S> forward(const Channels<S>& in) {
    if (static_cast<int>(in.size()) != in_ch_) throw NumericError("conv2d: channel count mismatch");
    const Index h = in[0].rows(), w = in[0].cols();
    const Index oh = conv_out_extent(h, kernel_, stride_, pad_);
    const Index ow = conv_out_extent(w, kernel_, stride_, pad_);
    padded_.assign(in.size(), Mat<S>());
    for (int c = 0; c < in_ch_; ++c) {
      if (in[c].rows() != h || in[c].cols() != w) throw NumericError("conv2d: ragged input channels");
      padded_[c] = Mat<S>::Zero(h + 2 * pad_, w + 2 * pad_);
      padded_[c].block(pad_, pad_, h, w) = in[c];
    }
    Channels<S> out(static_cast<size_t>(out_ch_));
    for (int oc = 0; oc < out_ch_; ++oc) {
      Mat<S>& o = out[oc];
      o = Mat<S>::Constant(oh, ow, b_(0, oc));
      for (int ic = 0; ic < in_ch_; ++ic) {
        const Mat<S>& p = padded_[ic];
        for (int u = 0; u < kernel_; ++u)
          for (int v = 0; v < kernel_; ++v) {
            const S k = w_(oc, (ic * kernel_ + u) * kernel_ + v);
            if (k == S(0)) continue;
            for (Index i = 0; i < oh; ++i)
              for (Index j = 0; j < ow; ++j) o(i, j) += k * p(i * stride_ + u, j * stride_ + v);
          }
      }
    }
    return out;
  }

  Channels<S> backward(const Channels<S>& grad_out) {
    const Index oh = grad_out[0].rows(), ow = grad_out[0].cols();
    Channels<S> dpad(padded_.size());
    for (size_t c = 0; c < padded_.size(); ++c) dpad[c] = Mat<S>::Zero(padded_[c].rows(), padded_[c].cols());
    for (int oc = 0; oc < out_ch_; ++oc) {
      const Mat<S>& g = grad_out[oc];
      db_(0, oc) += g.sum();
      for (int ic = 0; ic < in_ch_; ++ic) {
        const Mat<S>& p = padded_[ic];
        Mat<S>& dp = dpad[ic];
        for (int u = 0; u < kernel_; ++u)
          for (int v = 0; v < kernel_; ++v) {
            const Index col = (ic * kernel_ + u) * kernel_ + v;
            S acc = 0;
            const S k = w_(oc, col);
            for (Index i = 0; i < oh; ++i)
              for (Index j = 0; j < ow; ++j) {
                const S gij = g(i, j);
                acc += gij * p(i * stride_ + u, j * stride_ + v);
                dp(i * stride_ + u, j * stride_ + v) += k * gij;
              }
            dw_(oc, col) += acc;
          }
      }
    }
    Channels<S> din(dpad.size());
    for (size_t c = 0; c < dpad.size(); ++c)
      din[c] = dpad[c].block(pad_, pad_, dpad[c].rows() - 2 * pad_, dpad[c].cols() - 2 * pad_);
    return din;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) {
    params.push_back({prefix + ".w", &w_, &dw_});
    params.push_back({prefix + ".b", &b_, &db_});
  }

  Mat<S>& weight() { return w_; }
  Mat<S>& bias() { return b_; }
  int out_channels() const { return out_ch_; }

 private:
  int in_ch_, out_ch_, kernel_, stride_, pad_;
  Mat<S> w_, b_, dw_, db_;
  Channels<S> padded_;
};

// ---------------------------------------------------------------------------
// batchnorm over columns: input rows are the normalization population.

template <class S>
class BatchNorm {
 public:
  explicit BatchNorm(int channels, S momentum = S(0.1), S eps = S(1e-5)) : momentum_(momentum), eps_(eps) {
    gamma_ = Mat<S>::Ones(1, channels);
    beta_ = Mat<S>::Zero(1, channels);
    dgamma_ = Mat<S>::Zero(1, channels);
    dbeta_ = Mat<S>::Zero(1, channels);
    running_mean_ = Mat<S>::Zero(1, channels);
    running_var_ = Mat<S>::Ones(1, channels);
  }

  Mat<S> forward(const Mat<S>& x, bool train) {
    if (x.cols() != gamma_.cols()) throw NumericError("batchnorm: channel count mismatch");
    const Index m = x.rows();
    xhat_.resize(m, x.cols());
    inv_std_.resize(1, x.cols());
    if (train) {
      if (m < 2) throw NumericError("batchnorm: train mode needs a population of at least 2");
      for (Index c = 0; c < x.cols(); ++c) {
        S mean = x.col(c).mean();
        S var = (x.col(c).array() - mean).square().sum() / static_cast<S>(m);
        inv_std_(0, c) = S(1) / std::sqrt(var + eps_);
        xhat_.col(c) = ((x.col(c).array() - mean) * inv_std_(0, c)).matrix();
        running_mean_(0, c) = (S(1) - momentum_) * running_mean_(0, c) + momentum_ * mean;
        running_var_(0, c) = (S(1) - momentum_) * running_var_(0, c) + momentum_ * var;
      }
      train_ = true;
    } else {
      for (Index c = 0; c < x.cols(); ++c) {
        S inv = S(1) / std::sqrt(running_var_(0, c) + eps_);
        xhat_.col(c) = ((x.col(c).array() - running_mean_(0, c)) * inv).matrix();
      }
      train_ = false;
    }
    Mat<S> y(m, x.cols());
    for (Index c = 0; c < x.cols(); ++c)
      y.col(c) = (gamma_(0, c) * xhat_.col(c).array() + beta_(0, c)).matrix();
    return y;
  }

  Mat<S> backward(const Mat<S>& g) {
    if (!train_) throw NumericError("batchnorm: backward only defined after a train-mode forward");
    const S m = static_cast<S>(g.rows());
    Mat<S> dx(g.rows(), g.cols());
    for (Index c = 0; c < g.cols(); ++c) {
      S sum_g = g.col(c).sum();
      S sum_g_xhat = g.col(c).dot(xhat_.col(c));
      dbeta_(0, c) += sum_g;
      dgamma_(0, c) += sum_g_xhat;
      dx.col(c) = ((gamma_(0, c) * inv_std_(0, c) / m) *
                   (m * g.col(c).array() - sum_g - xhat_.col(c).array() * sum_g_xhat))
                      .matrix();
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params, std::vector<StateRef<S>>& state) {
    params.push_back({prefix + ".gamma", &gamma_, &dgamma_});
    params.push_back({prefix + ".beta", &beta_, &dbeta_});
    state.push_back({prefix + ".running_mean", &running_mean_});
    state.push_back({prefix + ".running_var", &running_var_});
  }

  Mat<S>& gamma() { return gamma_; }
  Mat<S>& beta() { return beta_; }
  Mat<S>& running_mean() { return running_mean_; }
  Mat<S>& running_var() { return running_var_; }

 private:
  S momentum_, eps_;
  Mat<S> gamma_, beta_, dgamma_, dbeta_;
  Mat<S> running_mean_, running_var_;
  Mat<S> xhat_, inv_std_;
  bool train_ = false;
};

// ---------------------------------------------------------------------------

template <class S>
class ReLU {
 public:
  Mat<S> forward(const Mat<S>& x) {
    mask_ = (x.array() > S(0)).template cast<S>().matrix();
    return x.cwiseMax(S(0));
  }
  Mat<S> backward(const Mat<S>& g) { return (g.array() * mask_.array()).matrix(); }

 private:
  Mat<S> mask_;
};

// Inverted dropout; identity in eval mode. Masks are drawn from a private
// generator, one draw per element in row-major order, so a fixed seed gives
// a fixed mask sequence across runs.
template <class S>
class Dropout {
 public:
  Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
    if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout rate must lie in [0, 1)");
  }

  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }

  Mat<S> forward(const Mat<S>& x, bool train) {
    if (!train || rate_ == 0.0) {
      mask_.resize(0, 0);
      return x;
    }
    const S keep_scale = static_cast<S>(1.0 / (1.0 - rate_));
    mask_.resize(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j) mask_(i, j) = rng_.uniform() < rate_ ? S(0) : keep_scale;
    return (x.array() * mask_.array()).matrix();
  }

  Mat<S> backward(const Mat<S>& g) {
    if (mask_.size() == 0) return g;
    return (g.array() * mask_.array()).matrix();
  }

 private:
  double rate_;
  Rng rng_;
  Mat<S> mask_;
};

template <class S>
class Linear {
 public:
  Linear(int in_dim, int out_dim) {
    w_ = Mat<S>::Zero(out_dim, in_dim);
    b_ = Mat<S>::Zero(1, out_dim);
    dw_ = Mat<S>::Zero(out_dim, in_dim);
    db_ = Mat<S>::Zero(1, out_dim);
  }

  void init(Rng& rng) {
    glorot_init(w_, w_.cols(), w_.rows(), rng);
    b_.setZero();
  }

  Mat<S> forward(const Mat<S>& x) {
    if (x.cols() != w_.cols()) throw NumericError(cat("linear: input width ", x.cols(), " != ", w_.cols()));
    x_ = x;
    return (x * w_.transpose()).rowwise() + b_.row(0);
  }

  Mat<S> backward(const Mat<S>& g) {
    dw_ += g.transpose() * x_;
    db_ += g.colwise().sum();
    return g * w_;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) {
    params.push_back({prefix + ".w", &w_, &dw_});
    params.push_back({prefix + ".b", &b_, &db_});
  }

  Mat<S>& weight() { return w_; }
  Mat<S>& bias() { return b_; }

 private:
  Mat<S> w_, b_, dw_, db_, x_;
};

// ---------------------------------------------------------------------------
// softmax / log-softmax over rows (axis 1) or columns (axis 0)

template <class S>
Mat<S> softmax_rows(const Mat<S>& x) {
  Mat<S> y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    S mx = x.row(i).maxCoeff();
    auto e = (x.row(i).array() - mx).exp();
    y.row(i) = (e / e.sum()).matrix();
  }
  return y;
}

template <class S>
Mat<S> softmax(const Mat<S>& x, int axis) {
  if (axis == 1) return softmax_rows(x);
  if (axis == 0) return softmax_rows(Mat<S>(x.transpose())).transpose();
  throw UsageError(cat("softmax: axis ", axis, " out of range for a 2-d input"));
}

// dx given y = softmax_rows(x) and dy
template <class S>
Mat<S> softmax_backward_rows(const Mat<S>& y, const Mat<S>& dy) {
  Mat<S> dx(y.rows(), y.cols());
  for (Index i = 0; i < y.rows(); ++i) {
    S dot = y.row(i).dot(dy.row(i));
    dx.row(i) = (y.row(i).array() * (dy.row(i).array() - dot)).matrix();
  }
  return dx;
}

template <class S>
Mat<S> log_softmax_rows(const Mat<S>& x) {
  Mat<S> y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    S mx = x.row(i).maxCoeff();
    S lse = mx + std::log((x.row(i).array() - mx).exp().sum());
    y.row(i) = x.row(i).array() - lse;
  }
  return y;
}

// dx given log_y = log_softmax_rows(x) and dy
template <class S>
Mat<S> log_softmax_backward_rows(const Mat<S>& log_y, const Mat<S>& dy) {
  Mat<S> dx(log_y.rows(), log_y.cols());
  for (Index i = 0; i < log_y.rows(); ++i) {
    S total = dy.row(i).sum();
    dx.row(i) = dy.row(i).array() - log_y.row(i).array().exp() * total;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// concat along an axis, with the exact gradient split

template <class S>
Mat<S> concat(const Mat<S>& a, const Mat<S>& b, int axis) {
  if (axis == 1) {
    if (a.rows() != b.rows()) throw NumericError("concat: row count mismatch");
    Mat<S> out(a.rows(), a.cols() + b.cols());
    out.leftCols(a.cols()) = a;
    out.rightCols(b.cols()) = b;
    return out;
  }
  if (axis == 0) {
    if (a.cols() != b.cols()) throw NumericError("concat: column count mismatch");
    Mat<S> out(a.rows() + b.rows(), a.cols());
    out.topRows(a.rows()) = a;
    out.bottomRows(b.rows()) = b;
    return out;
  }
  throw UsageError(cat("concat: axis ", axis, " out of range for a 2-d input"));
}

template <class S>
std::pair<Mat<S>, Mat<S>> split(const Mat<S>& g, Index a_extent, int axis) {
  if (axis == 1) return {g.leftCols(a_extent), g.rightCols(g.cols() - a_extent)};
  if (axis == 0) return {g.topRows(a_extent), g.bottomRows(g.rows() - a_extent)};
  throw UsageError(cat("split: axis ", axis, " out of range for a 2-d input"));
}

// ---------------------------------------------------------------------------
// shape shims between conv channel stacks and per-frame feature rows

// Channels (C maps of H x W) -> (H*W) x C population matrix for batchnorm.
template <class S>
Mat<S> channels_to_population(const Channels<S>& ch) {
  const Index h = ch[0].rows(), w = ch[0].cols();
  Mat<S> out(h * w, static_cast<Index>(ch.size()));
  for (size_t c = 0; c < ch.size(); ++c)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) out(i * w + j, static_cast<Index>(c)) = ch[c](i, j);
  return out;
}

template <class S>
Channels<S> population_to_channels(const Mat<S>& m, Index h, Index w) {
  Channels<S> ch(static_cast<size_t>(m.cols()));
  for (Index c = 0; c < m.cols(); ++c) {
    ch[static_cast<size_t>(c)].resize(h, w);
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) ch[static_cast<size_t>(c)](i, j) = m(i * w + j, c);
  }
  return ch;
}

// Channels (C maps of F x T) -> T x (C*F) frame-major feature rows.
template <class S>
Mat<S> channels_to_frames(const Channels<S>& ch) {
  const Index f = ch[0].rows(), t = ch[0].cols();
  Mat<S> out(t, static_cast<Index>(ch.size()) * f);
  for (size_t c = 0; c < ch.size(); ++c)
    for (Index i = 0; i < f; ++i)
      for (Index j = 0; j < t; ++j) out(j, static_cast<Index>(c) * f + i) = ch[c](i, j);
  return out;
}

template <class S>
Channels<S> frames_to_channels(const Mat<S>& m, Index n_ch, Index f) {
  Channels<S> ch(static_cast<size_t>(n_ch));
  const Index t = m.rows();
  for (Index c = 0; c < n_ch; ++c) {
    ch[static_cast<size_t>(c)].resize(f, t);
    for (Index i = 0; i < f; ++i)
      for (Index j = 0; j < t; ++j) ch[static_cast<size_t>(c)](i, j) = m(j, c * f + i);
  }
  return ch;
}

}  // namespace apl
