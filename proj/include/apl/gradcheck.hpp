// include/apl/gradcheck.hpp
//
// Central finite-difference gradient checking. Meant to run on the double
// instantiation of the layers; float has too little headroom at eps=1e-5.

#pragma once

#include <cmath>
#include <functional>

#include "apl/common.hpp"
#include "apl/types.hpp"

namespace apl {

// Central differences of a many-op double pipeline carry ~1e-9 absolute
// noise in the difference quotient; entries agreeing that closely count as
// matched or the relative metric explodes on exactly-invariant parameters
// (e.g. conv bias under batchnorm).
inline constexpr double kFdNoiseFloor = 1e-8;

inline double rel_err(double analytic, double numeric) {
  if (std::abs(analytic - numeric) <= kFdNoiseFloor) return 0.0;
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-12});
}

// Central differences of eval() w.r.t. every entry of *x, compared against
// the matching analytic gradient. eval() must observe *x (the perturbation
// happens in place and is restored).
inline double grad_check_entries(const std::function<double()>& eval, Matd& x, const Matd& analytic,
                                 double eps = 1e-5) {
  if (analytic.rows() != x.rows() || analytic.cols() != x.cols())
    throw NumericError("grad_check: analytic gradient shape mismatch");
  double worst = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + eps;
      double up = eval();
      x(i, j) = saved - eps;
      double down = eval();
      x(i, j) = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError(cat("grad_check: non-finite value at entry (", i, ",", j, ")"));
      worst = std::max(worst, rel_err(analytic(i, j), (up - down) / (2.0 * eps)));
    }
  }
  return worst;
}

// Spec surface: f is a scalar-valued function of x with a caller-supplied
// analytic gradient.
inline double grad_check(const std::function<double(const Matd&)>& f, Matd x, const Matd& analytic,
                         double eps = 1e-5) {
  return grad_check_entries([&] { return f(x); }, x, analytic, eps);
}

// Numeric-only central difference, for tests that assert gradient values.
inline Matd finite_diff(const std::function<double(const Matd&)>& f, Matd x, double eps = 1e-5) {
  Matd g(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + eps;
      double up = f(x);
      x(i, j) = saved - eps;
      double down = f(x);
      x(i, j) = saved;
      g(i, j) = (up - down) / (2.0 * eps);
    }
  }
  return g;
}

}  // namespace apl
