// include/apl/optim.hpp

#pragma once

#include <map>
#include <string>

#include "apl/layers.hpp"

namespace apl {

enum class OptimMode { kPlain, kAdaptiveMoments };

inline OptimMode parse_optim_mode(const std::string& name) {
  if (name == "plain") return OptimMode::kPlain;
  if (name == "adaptive-moments") return OptimMode::kAdaptiveMoments;
  throw UsageError(cat("unknown optimizer mode '", name, "' (plain | adaptive-moments)"));
}

inline std::string optim_mode_name(OptimMode m) {
  return m == OptimMode::kPlain ? "plain" : "adaptive-moments";
}

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  OptimMode mode = OptimMode::kAdaptiveMoments;
};

template <class S>
class Optimizer {
 public:
  explicit Optimizer(OptimConfig cfg) : cfg_(cfg) {}

  void step(const std::vector<ParamRef<S>>& params) {
    ++step_count_;
    const S lr = static_cast<S>(cfg_.lr);
    if (cfg_.mode == OptimMode::kPlain) {
      for (const auto& p : params) {
        if (p.value->rows() != p.grad->rows() || p.value->cols() != p.grad->cols())
          throw NumericError(cat("optimizer: shape mismatch for '", p.name, "'"));
        *p.value -= lr * *p.grad;
      }
      return;
    }
    const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2), eps = static_cast<S>(cfg_.eps);
    const S bc1 = S(1) - static_cast<S>(std::pow(cfg_.beta1, step_count_));
    const S bc2 = S(1) - static_cast<S>(std::pow(cfg_.beta2, step_count_));
    for (const auto& p : params) {
      if (p.value->rows() != p.grad->rows() || p.value->cols() != p.grad->cols())
        throw NumericError(cat("optimizer: shape mismatch for '", p.name, "'"));
      Mat<S>& m = moment(m_, p);
      Mat<S>& v = moment(v_, p);
      m = b1 * m + (S(1) - b1) * *p.grad;
      v = (b2 * v).array() + (S(1) - b2) * p.grad->array().square();
      Mat<S> mhat = m / bc1;
      Mat<S> vhat = v / bc2;
      p.value->array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
    }
  }

  long step_count() const { return step_count_; }
  const OptimConfig& config() const { return cfg_; }

  // Persistence hooks for the checkpoint container.
  std::map<std::string, Mat<S>>& first_moments() { return m_; }
  std::map<std::string, Mat<S>>& second_moments() { return v_; }
  void set_step_count(long n) { step_count_ = n; }

 private:
  Mat<S>& moment(std::map<std::string, Mat<S>>& store, const ParamRef<S>& p) {
    auto [it, fresh] = store.try_emplace(p.name);
    if (fresh) it->second = Mat<S>::Zero(p.value->rows(), p.value->cols());
    return it->second;
  }

  OptimConfig cfg_;
  long step_count_ = 0;
  std::map<std::string, Mat<S>> m_, v_;
};

}  // namespace apl
