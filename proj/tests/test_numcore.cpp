// tests/test_numcore.cpp
//
// Layer-by-layer checks: hand examples plus central finite differences
// against every analytic backward (double instantiation).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apl/gradcheck.hpp"
#include "apl/layers.hpp"
#include "apl/lstm.hpp"
#include "apl/optim.hpp"

using namespace apl;

namespace {

Matd random_mat(Index r, Index c, Rng& rng, double scale = 1.0) {
  Matd m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

Channels<double> random_channels(int n, Index r, Index c, Rng& rng) {
  Channels<double> ch(static_cast<size_t>(n));
  for (auto& m : ch) m = random_mat(r, c, rng);
  return ch;
}

double project(const Channels<double>& a, const Channels<double>& r) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i].array() * r[i].array()).sum();
  return s;
}

}  // namespace

TEST_CASE("conv2d examples") {
  Conv2d<double> conv(1, 1, 1, 1, 0);
  conv.weight()(0, 0) = 3.0;
  Channels<double> x(1);
  x[0] = Matd::Constant(1, 1, 2.0);
  Channels<double> y = conv.forward(x);
  CHECK(y[0](0, 0) == doctest::Approx(6.0));

  CHECK(conv_out_extent(100, 3, 2, 1) == 50);
  CHECK(conv_out_extent(81, 3, 2, 1) == 41);
  CHECK(conv_out_extent(41, 3, 2, 1) == 21);
}

TEST_CASE("conv2d gradients match finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    Conv2d<double> conv(3, 2, 3, 2, 1);
    conv.init(rng);
    Channels<double> x = random_channels(3, 5, 7, rng);
    Channels<double> r = random_channels(2, 3, 4, rng);  // out extents: ceil(5/2)=3, ceil(7/2)=4

    std::vector<ParamRef<double>> params;
    conv.collect("conv", params);
    zero_grads(params);
    Channels<double> out = conv.forward(x);
    REQUIRE(out[0].rows() == 3);
    REQUIRE(out[0].cols() == 4);
    Channels<double> dx = conv.backward(r);

    auto eval = [&] {
      Conv2d<double> c = conv;
      return project(c.forward(x), r);
    };
    double worst = 0.0;
    for (size_t ic = 0; ic < x.size(); ++ic) worst = std::max(worst, grad_check_entries(eval, x[ic], dx[ic]));
    for (const auto& p : params) worst = std::max(worst, grad_check_entries(eval, *p.value, *p.grad));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("batchnorm defining properties") {
  Rng rng(5);
  BatchNorm<double> bn(4);
  Matd x = random_mat(20, 4, rng, 2.5);
  x.array() += 1.0;
  Matd y = bn.forward(x, true);
  for (Index c = 0; c < y.cols(); ++c) {
    CHECK(y.col(c).mean() == doctest::Approx(0.0).epsilon(1e-6));
    double var = (y.col(c).array() - y.col(c).mean()).square().sum() / static_cast<double>(y.rows());
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }

  // eval with unit running stats and identity affine is the identity (up to eps)
  BatchNorm<double> fresh(4);
  Matd z = bn.forward(x, false);  // running stats updated once above
  Matd id = fresh.forward(x, false);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) CHECK(id(i, j) == doctest::Approx(x(i, j)).epsilon(1e-4));

  Matd one(1, 4);
  CHECK_THROWS_AS(static_cast<void>(fresh.forward(one, true)), NumericError);
}

TEST_CASE("batchnorm gradients match finite differences") {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    Rng rng(seed);
    BatchNorm<double> bn(3);
    bn.gamma() = random_mat(1, 3, rng);
    bn.beta() = random_mat(1, 3, rng);
    Matd x = random_mat(6, 3, rng, 1.5);
    Matd r = random_mat(6, 3, rng);

    std::vector<ParamRef<double>> params;
    std::vector<StateRef<double>> state;
    bn.collect("bn", params, state);
    zero_grads(params);
    BatchNorm<double> work = bn;  // keep pristine running stats for eval copies
    Matd y = work.forward(x, true);
    Matd dx = work.backward(r);

    auto eval = [&] {
      BatchNorm<double> b = bn;
      return (b.forward(x, true).array() * r.array()).sum();
    };
    double worst = grad_check_entries(eval, x, dx);
    std::vector<ParamRef<double>> work_params;
    std::vector<StateRef<double>> work_state;
    work.collect("bn", work_params, work_state);
    for (size_t i = 0; i < params.size(); ++i)
      worst = std::max(worst, grad_check_entries(eval, *params[i].value, *work_params[i].grad));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("relu, dropout, linear, softmax, concat examples") {
  ReLU<double> relu;
  Matd x(1, 2);
  x << 1.0, -1.0;
  Matd y = relu.forward(x);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(0, 1) == 0.0);
  Matd g = relu.backward(Matd::Ones(1, 2));
  CHECK(g(0, 0) == 1.0);
  CHECK(g(0, 1) == 0.0);

  Dropout<double> drop0(0.0, 1);
  Rng drng(3);
  Matd dx = random_mat(3, 3, drng);
  CHECK(drop0.forward(dx, true) == dx);
  CHECK(drop0.forward(dx, false) == dx);

  Dropout<double> drop(0.4, 99);
  Matd masked = drop.forward(Matd::Ones(50, 50), true);
  // entries are 0 or 1/(1-rate)
  for (Index i = 0; i < masked.rows(); ++i)
    for (Index j = 0; j < masked.cols(); ++j)
      CHECK((masked(i, j) == 0.0 || masked(i, j) == doctest::Approx(1.0 / 0.6)));
  CHECK(drop.forward(Matd::Ones(5, 5), false) == Matd::Ones(5, 5));

  Matd sx(1, 2);
  sx << 0.0, 0.0;
  Matd sy = softmax_rows(sx);
  CHECK(sy(0, 0) == doctest::Approx(0.5));
  CHECK(sy(0, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(static_cast<void>(softmax(sx, 2)), UsageError);

  Matd a = Matd::Ones(2, 2), b = Matd::Zero(2, 3);
  Matd c = concat(a, b, 1);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 5);
  Rng crng(4);
  auto [ga, gb] = split(random_mat(2, 5, crng), 2, 1);
  CHECK(ga.cols() == 2);
  CHECK(gb.cols() == 3);
}

TEST_CASE("concat backward reassembles exactly") {
  Rng rng(11);
  Matd a = random_mat(4, 3, rng), b = random_mat(4, 5, rng);
  Matd whole = concat(a, b, 1);
  Matd g = random_mat(4, 8, rng);
  auto [ga, gb] = split(g, 3, 1);
  Matd re = concat(Matd(ga), Matd(gb), 1);
  CHECK(re == g);
}

TEST_CASE("linear and softmax gradients match finite differences") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    Rng rng(seed);
    Linear<double> lin(4, 3);
    lin.init(rng);
    Matd x = random_mat(5, 4, rng);
    Matd r = random_mat(5, 3, rng);
    std::vector<ParamRef<double>> params;
    lin.collect("lin", params);
    zero_grads(params);
    lin.forward(x);
    Matd dx = lin.backward(r);
    auto eval = [&] {
      Linear<double> l = lin;
      return (l.forward(x).array() * r.array()).sum();
    };
    double worst = grad_check_entries(eval, x, dx);
    for (const auto& p : params) worst = std::max(worst, grad_check_entries(eval, *p.value, *p.grad));
    CHECK(worst < 1e-4);

    // softmax rows
    Matd sx = random_mat(4, 5, rng);
    Matd sr = random_mat(4, 5, rng);
    Matd sy = softmax_rows(sx);
    Matd sdx = softmax_backward_rows(sy, sr);
    auto seval = [&] { return (softmax_rows(sx).array() * sr.array()).sum(); };
    CHECK(grad_check_entries(seval, sx, sdx) < 1e-4);

    // log-softmax rows
    Matd ly = log_softmax_rows(sx);
    Matd ldx = log_softmax_backward_rows(ly, sr);
    auto leval = [&] { return (log_softmax_rows(sx).array() * sr.array()).sum(); };
    CHECK(grad_check_entries(leval, sx, ldx) < 1e-4);
  }
}

TEST_CASE("softmax rows sum to one and lie in (0,1)") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Matd x = random_mat(6, 7, rng, 4.0);
    Matd y = softmax_rows(x);
    for (Index i = 0; i < y.rows(); ++i) {
      CHECK(std::abs(y.row(i).sum() - 1.0) < 1e-9);
      for (Index j = 0; j < y.cols(); ++j) {
        CHECK(y(i, j) > 0.0);
        CHECK(y(i, j) < 1.0);
      }
    }
  }
}

TEST_CASE("bilstm zero parameters give zero output") {
  BiLstm<double> lstm(3, 2);
  Rng rng(41);
  Matd x = random_mat(5, 3, rng);
  Matd y = lstm.forward(x);
  CHECK(y.rows() == 5);
  CHECK(y.cols() == 4);
  CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bilstm single frame equals two independent cells") {
  Rng rng(43);
  BiLstm<double> lstm(3, 2);
  lstm.init(rng);
  Matd x = random_mat(1, 3, rng);
  Matd y = lstm.forward(x);
  // with one frame both directions see the same input and zero states
  LstmDir<double>& f = lstm.forward_cell();
  LstmDir<double>& b = lstm.backward_cell();
  Matd yf = f.forward(x);
  Matd yb = b.forward(x);
  CHECK(y.leftCols(2) == yf);
  CHECK(y.rightCols(2) == yb);
}

TEST_CASE("bilstm gradients match finite differences") {
  for (std::uint64_t seed : {51u, 52u, 53u}) {
    Rng rng(seed);
    BiLstm<double> lstm(3, 2);
    lstm.init(rng);
    Matd x = random_mat(4, 3, rng);
    Matd r = random_mat(4, 4, rng);
    std::vector<ParamRef<double>> params;
    lstm.collect("lstm", params);
    zero_grads(params);
    lstm.forward(x);
    Matd dx = lstm.backward(r);
    auto eval = [&] {
      BiLstm<double> l = lstm;
      return (l.forward(x).array() * r.array()).sum();
    };
    double worst = grad_check_entries(eval, x, dx);
    for (const auto& p : params) worst = std::max(worst, grad_check_entries(eval, *p.value, *p.grad));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("grad_check harness on closed forms") {
  Matd x(1, 2);
  x << 1.0, 2.0;
  Matd analytic(1, 2);
  analytic << 2.0, 4.0;
  double err = grad_check([](const Matd& v) { return v.array().square().sum(); }, x, analytic);
  CHECK(err < 1e-8);

  // constant function: numeric gradient vanishes
  Rng rng(61);
  Matd sx = random_mat(3, 4, rng);
  Matd numeric = finite_diff([](const Matd& v) { return softmax_rows(v).sum(); }, sx);
  CHECK(numeric.cwiseAbs().maxCoeff() < 1e-8);

  CHECK_THROWS_AS(static_cast<void>(grad_check([](const Matd&) { return std::nan(""); }, x, analytic)),
                  NumericError);
}

TEST_CASE("optimizer updates") {
  Matd p(1, 1), g(1, 1);
  Matd dummy_grad = Matd::Zero(1, 1);

  SUBCASE("plain step") {
    p(0, 0) = 1.0;
    g(0, 0) = 1.0;
    OptimConfig cfg;
    cfg.lr = 0.1;
    cfg.mode = OptimMode::kPlain;
    Optimizer<double> opt(cfg);
    opt.step({{"p", &p, &g}});
    CHECK(p(0, 0) == doctest::Approx(0.9));
  }

  SUBCASE("adaptive-moments first step is a unit-normalized lr step") {
    p(0, 0) = 0.0;
    g(0, 0) = 1.0;
    OptimConfig cfg;
    cfg.lr = 0.1;
    Optimizer<double> opt(cfg);
    opt.step({{"p", &p, &g}});
    CHECK(p(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
  }

  SUBCASE("zero gradient leaves parameters unchanged") {
    for (OptimMode mode : {OptimMode::kPlain, OptimMode::kAdaptiveMoments}) {
      p(0, 0) = 0.7;
      g(0, 0) = 0.0;
      OptimConfig cfg;
      cfg.mode = mode;
      Optimizer<double> opt(cfg);
      opt.step({{"p", &p, &g}});
      opt.step({{"p", &p, &g}});
      CHECK(p(0, 0) == 0.7);
    }
  }

  SUBCASE("shape mismatch is rejected") {
    Matd bad = Matd::Zero(2, 1);
    Optimizer<double> opt(OptimConfig{});
    ParamRef<double> ref{"p", &p, &bad};
    CHECK_THROWS_AS(opt.step({ref}), NumericError);
  }
}

TEST_CASE("determinism: identical seeds give bit-identical dropout and init") {
  Rng a(123), b(123);
  Linear<double> la(6, 5), lb(6, 5);
  la.init(a);
  lb.init(b);
  CHECK(la.weight() == lb.weight());

  Dropout<double> da(0.3, 77), db(0.3, 77);
  Matd x = Matd::Ones(8, 8);
  CHECK(da.forward(x, true) == db.forward(x, true));
  CHECK(da.forward(x, true) == db.forward(x, true));  // second call advances identically
}
