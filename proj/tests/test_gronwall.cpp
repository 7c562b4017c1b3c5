#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "displab/gronwall.hpp"
#include "displab/propagators.hpp"

namespace {

namespace gw = displab::gronwall;

gw::GronwallProblem problem(std::vector<double> alphas, std::vector<double> betas, double C, double F0,
                            std::vector<gw::Sample> H = gw::zero_samples(100.0), double tail = 0.0) {
  gw::GronwallProblem p;
  p.alphas = std::move(alphas);
  p.betas = std::move(betas);
  p.C = C;
  p.F0_bound = F0;
  p.H_samples = std::move(H);
  p.tail_bound = tail;
  return p;
}

std::vector<gw::Sample> sample_fn(double horizon, double step, auto&& fn) {
  std::vector<gw::Sample> out;
  const int n = static_cast<int>(std::lround(horizon / step));
  for (int i = 0; i <= n; ++i) out.push_back({i * step, fn(i * step)});
  return out;
}

// Largest root of y = C' + C' sum R_i y^{beta_i}; the right side minus y is
// concave and positive at 0, so there is exactly one crossing.
double fixed_point(double c, const std::vector<double>& R, const std::vector<double>& beta) {
  auto g = [&](double y) {
    double v = c;
    for (std::size_t i = 0; i < R.size(); ++i) v += c * R[i] * std::pow(y, beta[i]);
    return v - y;
  };
  double lo = 0.0, hi = 1.0;
  while (g(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

TEST(ImplicitRootBound, WorkedExample) {
  const std::vector<double> R{3.0}, b{0.5};
  EXPECT_NEAR(gw::implicit_root_bound(2.0, R, b), 64.0, 1e-12);
}

TEST(ImplicitRootBound, LinearCase) {
  const std::vector<double> R{4.0}, b{0.0};
  EXPECT_NEAR(gw::implicit_root_bound(3.0, R, b), 15.0, 1e-12);
  EXPECT_NEAR(gw::implicit_root_bound(0.5, R, b), 5.0, 1e-12);  // max{1, C'} = 1
  EXPECT_LE(3.0 + 3.0 * 4.0, gw::implicit_root_bound(3.0, R, b));
}

TEST(ImplicitRootBound, RejectsBadInput) {
  const std::vector<double> R{1.0}, b{0.5}, bad_b{1.0}, bad_R{0.0};
  EXPECT_THROW(gw::implicit_root_bound(0.0, R, b), std::invalid_argument);
  EXPECT_THROW(gw::implicit_root_bound(1.0, R, bad_b), std::invalid_argument);
  EXPECT_THROW(gw::implicit_root_bound(1.0, bad_R, b), std::invalid_argument);
  EXPECT_THROW(gw::implicit_root_bound(1.0, std::vector<double>{1.0, 2.0}, b), std::invalid_argument);
}

TEST(ImplicitRootBound, DominatesBisectionRoot) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const int m = 1 + static_cast<int>(u(rng) * 3);
    const double c = std::exp(-4.0 + 8.0 * u(rng));
    std::vector<double> R, beta;
    for (int i = 0; i < m; ++i) {
      R.push_back(std::exp(-4.0 + 8.0 * u(rng)));
      beta.push_back(0.95 * u(rng));
    }
    const double root = fixed_point(c, R, beta);
    if (root > gw::implicit_root_bound(c, R, beta) * (1.0 + 1e-12)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(Partition, ZeroH) {
  const auto p = gw::build_partition(problem({1.0}, {0.0}, 1.0, 1.0));
  EXPECT_DOUBLE_EQ(p.t0, 1.0);
  ASSERT_GE(p.points.size(), 2u);
  EXPECT_EQ(p.points.back(), 0.0);
  for (std::size_t i = 0; i + 1 < p.points.size(); ++i) {
    const double b = p.points[i], a = p.points[i + 1];
    EXPECT_LT(a, b);
    EXPECT_LE((b - a) * gw::japanese(b), 1.0);
  }
}

TEST(Partition, ExponentialH) {
  auto H = sample_fn(40.0, 1e-3, [](double t) { return std::exp(-t); });
  const auto p = gw::build_partition(problem({1.0}, {0.0}, 1.0, 1.0, H, std::exp(-40.0)));
  EXPECT_GT(p.t0, std::numbers::ln2);
  EXPECT_LT(std::exp(-p.t0), 0.5);
  for (std::size_t i = 0; i + 1 < p.points.size(); ++i) {
    const double b = p.points[i], a = p.points[i + 1];
    EXPECT_LT(std::exp(-a) - std::exp(-b), 0.5);
    // exact \int_a^b <tau> dtau below 1
    auto prim = [](double x) { return 0.5 * (x * gw::japanese(x) + std::asinh(x)); };
    EXPECT_LT(prim(b) - prim(a), 1.0);
  }
}

TEST(Partition, LargeIntegralNeedsManyCells) {
  // \int_0^inf 10 e^{-t} = 10
  auto H = sample_fn(60.0, 1e-3, [](double t) { return 10.0 * std::exp(-t); });
  const auto p = gw::build_partition(problem({0.0}, {0.5}, 1.0, 1.0, H, 10.0 * std::exp(-60.0)));
  EXPECT_GE(p.cells(), 20u);
  EXPECT_LT(10.0 * std::exp(-p.t0), 0.5);
}

TEST(Partition, RejectsInfiniteTail) {
  EXPECT_THROW(gw::build_partition(problem({1.0}, {0.0}, 1.0, 1.0, gw::zero_samples(10.0),
                                           std::numeric_limits<double>::infinity())),
               std::invalid_argument);
  EXPECT_THROW(gw::build_partition(problem({1.0}, {0.0}, 1.0, 1.0, gw::zero_samples(10.0), 0.7)),
               std::invalid_argument);
  EXPECT_THROW(gw::build_partition(problem({-1.0}, {0.0}, 1.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(gw::build_partition(problem({1.0}, {1.0}, 1.0, 1.0)), std::invalid_argument);
}

TEST(Certify, LinearSaturator) {
  // F' = 1, F(0) = 1
  const auto c = gw::certify(problem({0.0}, {0.0}, 1.0, 1.0));
  for (double t = 0.0; t <= 100.0; t += 0.5) EXPECT_GE(c.bound(t), 1.0 + t) << t;
}

TEST(Certify, SquareRootSaturator) {
  // F' = F^{1/2}, F(0) = 1  =>  F = (1 + t/2)^2
  const auto c = gw::certify(problem({0.0}, {0.5}, 1.0, 1.0));
  for (double t : {0.0, 1.0, 10.0, 100.0}) EXPECT_GE(c.bound(t), std::pow(1.0 + 0.5 * t, 2)) << t;
  for (double t = 0.0; t <= 100.0; t += 0.25) EXPECT_GE(c.bound(t), std::pow(1.0 + 0.5 * t, 2)) << t;
}

// F' = C (<t>^{a1} F^{b1} + <t>^{a2} F^{b2}) by classical RK4.
TEST(Certify, TwoBranchSaturatorRK4) {
  const double C = 0.7;
  const std::vector<double> a{0.5, 1.0}, b{0.5, 0.25};
  const auto c = gw::certify(problem(a, b, C, 2.0));
  auto rhs = [&](double t, double F) {
    double v = 0.0;
    for (int i = 0; i < 2; ++i) v += C * std::pow(gw::japanese(t), a[i]) * std::pow(F, b[i]);
    return v;
  };
  double F = 2.0, t = 0.0;
  const double h = 1e-3;
  while (t < 100.0 - 1e-12) {
    const double k1 = rhs(t, F), k2 = rhs(t + h / 2, F + h / 2 * k1), k3 = rhs(t + h / 2, F + h / 2 * k2),
                 k4 = rhs(t + h, F + h * k3);
    F += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
    if (std::fmod(t + 1e-9, 5.0) < 2e-3) EXPECT_LE(F, c.bound(t)) << t;
  }
  EXPECT_LE(F, c.bound(100.0));
}

TEST(Certify, ExponentsAndGrowthRate) {
  const auto c = gw::certify(problem({0.0, 1.5, 2.0}, {0.0, 0.5, 0.0}, 1.0, 1.0));
  ASSERT_EQ(c.exponents.size(), 3u);
  EXPECT_EQ(c.exponents[0], 1.0);
  EXPECT_EQ(c.exponents[1], 5.0);
  EXPECT_EQ(c.exponents[2], 3.0);

  for (double alpha : {0.0, 0.5, 1.0, 3.0}) {
    const auto z = gw::certify(problem({alpha}, {0.0}, 2.0, 1.0));
    EXPECT_EQ(z.exponents[0], alpha + 1.0);
    const double t1 = 1e7, t2 = 1e8;
    const double slope = (z.log_bound(t2) - z.log_bound(t1)) / std::log(t2 / t1);
    EXPECT_NEAR(slope, alpha + 1.0, 1e-6) << alpha;
  }
}

TEST(Certify, BoundIsNonDecreasing) {
  const auto c = gw::certify(problem({0.5, 1.0}, {0.3, 0.6}, 1.3, 2.0));
  double prev = -1e300;
  for (double t = 0.0; t <= 1000.0; t += 0.5) {
    const double v = c.log_bound(t);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Certify, MonotoneInData) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto H = sample_fn(10.0, 0.01, [](double t) { return 0.3 * std::exp(-t); });
  for (int inst = 0; inst < 50; ++inst) {
    const double alpha = 2.0 * u(rng), beta = 0.9 * u(rng), C = 0.1 + 3.0 * u(rng), F0 = 0.1 + 5.0 * u(rng),
                 tail = 0.2 * u(rng);
    const double base = gw::certify(problem({alpha}, {beta}, C, F0, H, tail)).log_K;
    EXPECT_GE(gw::certify(problem({alpha}, {beta}, 1.5 * C, F0, H, tail)).log_K, base);
    EXPECT_GE(gw::certify(problem({alpha}, {beta}, C, 2.0 * F0, H, tail)).log_K, base);
    EXPECT_GE(gw::certify(problem({alpha}, {beta}, C, F0, H, tail + 0.2)).log_K, base);
  }
}

TEST(Certify, OverflowReportedInLogForm) {
  auto H = sample_fn(40.0, 1e-3, [](double t) { return 10.0 * std::exp(-t); });
  const auto c = gw::certify(problem({0.0}, {0.95}, 1.0, 1.0, H, 0.0));
  EXPECT_TRUE(c.overflow);
  EXPECT_TRUE(std::isinf(c.K));
  EXPECT_TRUE(std::isfinite(c.log_K));
  EXPECT_GT(c.log_K, std::log(1e300));
}

TEST(VerifyBound, ZeroFunction) {
  const auto p = problem({0.0}, {0.5}, 1.0, 1.0);
  const auto c = gw::certify(p);
  const auto F = sample_fn(100.0, 0.5, [](double) { return 0.0; });
  const auto r = gw::verify_bound(F, p, c);
  EXPECT_TRUE(r.hypothesis_ok);
  EXPECT_TRUE(r.bound_checked);
  EXPECT_TRUE(r.bound_ok);
}

TEST(VerifyBound, SaturatorPasses) {
  const auto p = problem({0.0}, {0.5}, 1.0, 1.0);
  const auto c = gw::certify(p);
  const auto F = sample_fn(100.0, 0.1, [](double t) { return std::pow(1.0 + 0.5 * t, 2); });
  const auto r = gw::verify_bound(F, p, c);
  EXPECT_TRUE(r.hypothesis_ok) << r.hypothesis_detail;
  EXPECT_TRUE(r.bound_ok);
  EXPECT_LT(r.max_log_ratio, 0.0);
}

TEST(VerifyBound, AdversarialHypothesisBreak) {
  const auto p = problem({0.0}, {0.0}, 1.0, 1.0);
  const auto c = gw::certify(p);
  const auto F = sample_fn(20.0, 0.01, [](double t) { return std::exp(3.0 * t); });
  const auto r = gw::verify_bound(F, p, c);
  EXPECT_FALSE(r.hypothesis_ok);
  ASSERT_TRUE(r.first_hypothesis_violation.has_value());
  EXPECT_FALSE(r.bound_checked);
  EXPECT_FALSE(r.bound_ok);
}

// F(t) = \int x^2 |u|^2 along a defocusing NLS run: F' = 4 Im \int x conj(u) u_x,
// so |F'| <= 4 ||u_x|| F^{1/2} (alpha = 0, beta = 1/2, H = 0).
TEST(VerifyBound, MomentSeriesEndToEnd) {
  auto g = displab::make_grid(4096, 400.0);
  const double c = std::pow(std::numbers::pi, -0.25);
  const auto f = displab::WaveField::sample(g, [c](double x) { return c * std::exp(-0.5 * x * x); });
  displab::NLSConfig cfg;
  cfg.lambda = -1.0;
  cfg.dt = 0.01;
  cfg.t_final = 20.0;
  for (int i = 0; i <= 200; ++i) cfg.sample_times.push_back(0.1 * i);
  cfg.s_max = 1;
  const auto traj = displab::nls_evolve(cfg, displab::make_potential(g, "sech2(0.5)"), f);
  ASSERT_TRUE(traj.validity.valid) << traj.validity.reasons.front();
  double grad = 0.0;
  std::vector<gw::Sample> F;
  for (std::size_t i = 0; i < traj.fields.size(); ++i) {
    grad = std::max(grad, std::sqrt(displab::homogeneous_sobolev_squared(traj.fields[i], 1)));
    F.push_back({traj.monitors.times[i], traj.monitors.moments[0][i]});
  }
  const auto p = problem({0.0}, {0.5}, 4.0 * grad * 1.01, F.front().value, gw::zero_samples(20.0));
  const auto cert = gw::certify(p);
  const auto r = gw::verify_bound(F, p, cert);
  EXPECT_TRUE(r.hypothesis_ok) << r.hypothesis_detail;
  EXPECT_TRUE(r.bound_ok);
}

}  // namespace
