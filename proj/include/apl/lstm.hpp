// include/apl/lstm.hpp
//
// Single-direction LSTM with full backward-through-time, and the
// bidirectional wrapper that concatenates both directions per frame.

#pragma once

#include "apl/layers.hpp"

namespace apl {

// Gate row blocks of wx/wh/b are ordered [input; forget; cell; output].
template <class S>
class LstmDir {
 public:
  LstmDir(int in_dim, int hidden) : in_dim_(in_dim), hidden_(hidden) {
    wx_ = Mat<S>::Zero(4 * hidden, in_dim);
    wh_ = Mat<S>::Zero(4 * hidden, hidden);
    b_ = Mat<S>::Zero(1, 4 * hidden);
    dwx_ = Mat<S>::Zero(wx_.rows(), wx_.cols());
    dwh_ = Mat<S>::Zero(wh_.rows(), wh_.cols());
    db_ = Mat<S>::Zero(1, 4 * hidden);
  }

  void init(Rng& rng) {
    glorot_init(wx_, in_dim_, hidden_, rng);
    glorot_init(wh_, hidden_, hidden_, rng);
    b_.setZero();
  }

  // x: T x in_dim -> T x hidden. Zero initial states.
  Mat<S> forward(const Mat<S>& x) {
    if (x.cols() != in_dim_) throw NumericError(cat("lstm: input width ", x.cols(), " != ", in_dim_));
    const Index t_len = x.rows();
    x_ = x;
    i_.resize(t_len, hidden_);
    f_.resize(t_len, hidden_);
    g_.resize(t_len, hidden_);
    o_.resize(t_len, hidden_);
    c_.resize(t_len, hidden_);
    tanh_c_.resize(t_len, hidden_);
    h_.resize(t_len, hidden_);
    Vec<S> h_prev = Vec<S>::Zero(hidden_);
    Vec<S> c_prev = Vec<S>::Zero(hidden_);
    for (Index t = 0; t < t_len; ++t) {
      Vec<S> z = wx_ * x.row(t).transpose() + wh_ * h_prev + b_.row(0).transpose();
      for (Index k = 0; k < hidden_; ++k) {
        S zi = z(k), zf = z(hidden_ + k), zg = z(2 * hidden_ + k), zo = z(3 * hidden_ + k);
        S iv = S(1) / (S(1) + std::exp(-zi));
        S fv = S(1) / (S(1) + std::exp(-zf));
        S gv = std::tanh(zg);
        S ov = S(1) / (S(1) + std::exp(-zo));
        S cv = fv * c_prev(k) + iv * gv;
        S tc = std::tanh(cv);
        i_(t, k) = iv;
        f_(t, k) = fv;
        g_(t, k) = gv;
        o_(t, k) = ov;
        c_(t, k) = cv;
        tanh_c_(t, k) = tc;
        h_(t, k) = ov * tc;
      }
      h_prev = h_.row(t).transpose();
      c_prev = c_.row(t).transpose();
    }
    return h_;
  }

  // grad_out: T x hidden -> T x in_dim; accumulates parameter grads.
  Mat<S> backward(const Mat<S>& grad_out) {
    const Index t_len = grad_out.rows();
    Mat<S> dx(t_len, in_dim_);
    Vec<S> dh_next = Vec<S>::Zero(hidden_);
    Vec<S> dc_next = Vec<S>::Zero(hidden_);
    Vec<S> dz(4 * hidden_);
    for (Index t = t_len - 1; t >= 0; --t) {
      for (Index k = 0; k < hidden_; ++k) {
        S dh = grad_out(t, k) + dh_next(k);
        S iv = i_(t, k), fv = f_(t, k), gv = g_(t, k), ov = o_(t, k), tc = tanh_c_(t, k);
        S dov = dh * tc;
        S dc = dh * ov * (S(1) - tc * tc) + dc_next(k);
        S c_prev = (t > 0) ? c_(t - 1, k) : S(0);
        S div = dc * gv;
        S dgv = dc * iv;
        S dfv = dc * c_prev;
        dc_next(k) = dc * fv;
        dz(k) = div * iv * (S(1) - iv);
        dz(hidden_ + k) = dfv * fv * (S(1) - fv);
        dz(2 * hidden_ + k) = dgv * (S(1) - gv * gv);
        dz(3 * hidden_ + k) = dov * ov * (S(1) - ov);
      }
      dwx_ += dz * x_.row(t);
      if (t > 0) dwh_ += dz * h_.row(t - 1);
      db_.row(0) += dz.transpose();
      dx.row(t) = (wx_.transpose() * dz).transpose();
      dh_next = wh_.transpose() * dz;
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) {
    params.push_back({prefix + ".wx", &wx_, &dwx_});
    params.push_back({prefix + ".wh", &wh_, &dwh_});
    params.push_back({prefix + ".b", &b_, &db_});
  }

  Mat<S>& wx() { return wx_; }
  Mat<S>& wh() { return wh_; }
  Mat<S>& bias() { return b_; }
  int hidden() const { return hidden_; }

 private:
  int in_dim_, hidden_;
  Mat<S> wx_, wh_, b_, dwx_, dwh_, db_;
  Mat<S> x_, i_, f_, g_, o_, c_, tanh_c_, h_;
};

template <class S>
class BiLstm {
 public:
  BiLstm(int in_dim, int hidden) : fwd_(in_dim, hidden), bwd_(in_dim, hidden) {}

  void init(Rng& rng) {
    fwd_.init(rng);
    bwd_.init(rng);
  }

  // x: T x in_dim -> T x 2*hidden ([forward; backward] per frame)
  Mat<S> forward(const Mat<S>& x) {
    if (x.rows() < 1) throw NumericError("bilstm: empty sequence");
    Mat<S> hf = fwd_.forward(x);
    Mat<S> hb = reverse_rows(bwd_.forward(reverse_rows(x)));
    return concat(hf, hb, 1);
  }

  Mat<S> backward(const Mat<S>& grad_out) {
    const Index hidden = grad_out.cols() / 2;
    auto [gf, gb] = split(grad_out, hidden, 1);
    Mat<S> dxf = fwd_.backward(gf);
    Mat<S> dxb = reverse_rows(bwd_.backward(reverse_rows(gb)));
    return dxf + dxb;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<S>>& params) {
    fwd_.collect(prefix + ".fwd", params);
    bwd_.collect(prefix + ".bwd", params);
  }

  LstmDir<S>& forward_cell() { return fwd_; }
  LstmDir<S>& backward_cell() { return bwd_; }

 private:
  LstmDir<S> fwd_, bwd_;
};

}  // namespace apl
