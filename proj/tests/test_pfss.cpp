#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sturm/green.hpp"
#include "sturm/pfss.hpp"

using namespace sturm;

namespace {

std::size_t node_index(const Pfss& p, double x) {
  const auto g = p.grid();
  auto it = std::lower_bound(g.begin(), g.end(), x - 1e-9);
  EXPECT_NE(it, g.end());
  EXPECT_NEAR(*it, x, 1e-9);
  return static_cast<std::size_t>(it - g.begin());
}

Potential step_well() {
  return Potential(PiecewiseFunction(
      {{-kInf, -2, Constant{9}}, {-2, 2, Constant{1}}, {2, kInf, Constant{9}}}));
}

}  // namespace

TEST(Pfss, ConstantPotentialClosedForm) {
  for (double c : {1.0, 2.0, 5.0}) {
    const Pfss p = solve_pfss(Potential::constant(c * c), 6.0, 1e-10);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double x = p.grid()[i];
      ASSERT_NEAR(p.w_v()[i], c, 1e-12);
      ASSERT_NEAR(p.w_u()[i], -c, 1e-12);
      ASSERT_NEAR(p.rho()[i], 0.5 / c, 1e-12);
      // u(0) = v(0) = sqrt(rho)
      ASSERT_NEAR(p.log_v()[i], 0.5 * std::log(0.5 / c) + c * x, 1e-9);
      ASSERT_NEAR(p.log_u()[i], 0.5 * std::log(0.5 / c) - c * x, 1e-9);
    }
  }
}

TEST(Pfss, HarmonicMatchesIndependentRiccatiIntegration) {
  const auto q = Potential::polynomial({1, 0, 1});
  PfssOptions o;
  o.tol = 1e-11;
  o.grid_step = 0.01;
  const Pfss p = solve_pfss(q, 5.0, o);
  auto qf = [](double x) { return 1 + x * x; };
  const auto fwd = oracle::riccati_rk4(qf, -20.0, std::sqrt(qf(-20.0)), 5.0, 25000);
  const auto bwd = oracle::riccati_rk4(qf, 20.0, -std::sqrt(qf(20.0)), -5.0, 25000);
  for (int k = -5; k <= 5; ++k) {
    const std::size_t i = node_index(p, k);
    EXPECT_NEAR(p.w_v()[i], fwd[static_cast<std::size_t>((k + 20) * 1000)], 1e-8) << k;
    EXPECT_NEAR(p.w_u()[i], bwd[static_cast<std::size_t>((20 - k) * 1000)], 1e-8) << k;
  }
  // log v(x) - log v(t) = int_t^x w_v
  const double ref = oracle::simpson(
      [&](double x) { return fwd[static_cast<std::size_t>(std::lround((x + 20) * 1000))]; },
      -3.0, 4.0, 7000);
  EXPECT_NEAR(-p.log_ratio_v(-3.0, 4.0), ref, 1e-7);
}

TEST(Pfss, StepWellMatchesHyperbolicCotangent) {
  // On [-2, 2], q = 1 and w_v enters at 3: w_v = coth(x + 2 + acoth 3).
  PfssOptions o;
  o.tol = 1e-11;
  o.extra_nodes = {-5.0, -3.0, -1.0, 0.0, 0.5};
  const Pfss p = solve_pfss(step_well(), 6.0, o);
  const double shift = 2.0 + 0.5 * std::log(2.0);
  for (double x : {-2.0, -1.0, 0.0, 0.5, 2.0}) {
    const std::size_t i = node_index(p, x);
    EXPECT_NEAR(p.w_v()[i], 1.0 / std::tanh(x + shift), 1e-9) << x;
    EXPECT_NEAR(p.w_u()[i], -1.0 / std::tanh(-x + shift), 1e-9) << x;
  }
  for (double x : {-5.0, -3.0}) EXPECT_NEAR(p.w_v()[node_index(p, x)], 3.0, 1e-9);
}

TEST(Pfss, StructuralBoundsOnCanonicalPotentials) {
  for (const auto& q : {Potential::constant(1), Potential::polynomial({1, 0, 1}),
                        Potential::sinusoid(2, 1), step_well()}) {
    const Pfss p = solve_pfss(q, 8.0, 1e-10);
    EXPECT_LE(p.wronskian_residual(), 1e-13);
    for (std::size_t i = 0; i < p.size(); ++i) {
      ASSERT_GE(p.w_v()[i], 1.0 - 1e-9);
      ASSERT_LE(p.w_u()[i], -1.0 + 1e-9);
      ASSERT_GT(p.rho()[i], 0.0);
      ASSERT_LE(p.rho()[i], 0.5 + 1e-9);
      if (i + 1 < p.size()) {
        ASSERT_LT(std::abs(p.rho()[i + 1] - p.rho()[i]), p.grid()[i + 1] - p.grid()[i]);
      }
    }
  }
}

TEST(Pfss, LogRatiosDecayAtLeastExponentially) {
  const Pfss p = solve_pfss(Potential::sinusoid(2, 1), 8.0, 1e-10);
  for (double t : {-7.3, -1.0, 0.25})
    for (double x : {0.3, 2.0, 7.9}) {
      if (t > x) continue;
      EXPECT_LE(p.log_ratio_v(t, x), -(x - t) + 1e-10);
      EXPECT_LE(p.log_ratio_u(x, t), -(x - t) + 1e-10);
    }
  EXPECT_EQ(p.log_ratio_v(1.0, 1.0), 0.0);
  EXPECT_THROW(p.log_ratio_v(2.0, 1.0), ArgumentOrderError);
  EXPECT_THROW(p.log_ratio_u(1.0, 2.0), ArgumentOrderError);
  EXPECT_THROW(p.log_ratio_v(-9.0, 1.0), DomainError);
  EXPECT_THROW(p.w_v_at(8.5), DomainError);
}

TEST(Pfss, OffGridValuesInterpolateConsistently) {
  const Pfss p = solve_pfss(Potential::polynomial({1, 0, 1}), 5.0, 1e-10);
  for (std::size_t i = 0; i < p.size(); i += 97) {
    const double x = p.grid()[i];
    EXPECT_NEAR(p.w_v_at(x), p.w_v()[i], 1e-14);
    EXPECT_NEAR(p.rho_smooth_at(x), p.rho()[i], 1e-14);
    EXPECT_NEAR(p.log_v_at(x), p.log_v()[i], 1e-12);
    EXPECT_NEAR(p.log_u_at(x), p.log_u()[i], 1e-12);
  }
  // rho at a midpoint agrees with the linear interpolant to O(h^2).
  const double xm = 0.5 * (p.grid()[100] + p.grid()[101]);
  EXPECT_NEAR(p.rho_smooth_at(xm), p.rho_at(xm), 1e-5);
}

TEST(Pfss, NormalizationMakesFactorsEqualAtOrigin) {
  const Pfss p = solve_pfss(Potential::sinusoid(2, 1), 4.0, 1e-10);
  EXPECT_NEAR(p.log_v_at(0.0), p.log_u_at(0.0), 1e-13);
  EXPECT_NEAR(p.log_v_at(0.0), 0.5 * std::log(p.rho_smooth_at(0.0)), 1e-13);
}

TEST(Pfss, RenormalizationLeavesKernelUnchanged) {
  const Pfss p = solve_pfss(Potential::polynomial({1, 0, 1}), 4.0, 1e-10);
  const GreenKernel a(p, 1e-12, true, false);
  const GreenKernel b(p.renormalized(3.7), 1e-12, true, false);
  for (double x : {-3.0, 0.1, 2.2})
    for (double t : {-1.0, 0.5, 3.9}) EXPECT_NEAR(a.eval(x, t), b.eval(x, t), 1e-13);
  EXPECT_NEAR(b.pfss().log_v_at(1.0) - p.log_v_at(1.0), -3.7, 1e-12);
}

TEST(Pfss, RiccatiResidualIsSecondOrder) {
  const auto q = Potential::polynomial({1, 0, 1});
  std::vector<double> r;
  for (double h : {0.04, 0.02, 0.01}) {
    PfssOptions o;
    o.tol = 1e-12;
    o.grid_step = h;
    r.push_back(solve_pfss(q, 5.0, o).riccati_residual());
  }
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    EXPECT_GT(r[i] / r[i + 1], 3.5);
    EXPECT_LT(r[i] / r[i + 1], 4.5);
  }
}

TEST(Pfss, BreakpointsAndExtraNodesBecomeGridNodes) {
  PfssOptions o;
  o.extra_nodes = {0.123456, -1.5};
  const Pfss p = solve_pfss(step_well(), 5.0, o);
  for (double x : {-2.0, 2.0, 0.123456, -1.5}) node_index(p, x);
  EXPECT_TRUE(std::is_sorted(p.grid().begin(), p.grid().end()));
  EXPECT_EQ(p.grid().front(), -5.0);
  EXPECT_EQ(p.grid().back(), 5.0);
}

TEST(Pfss, Deterministic) {
  const auto q = Potential::sinusoid(2, 1);
  const Pfss a = solve_pfss(q, 6.0, 1e-10), b = solve_pfss(q, 6.0, 1e-10);
  std::ostringstream sa, sb;
  a.write_csv(sa);
  b.write_csv(sb);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "x,w_v,w_u,rho,log_v,log_u");
}

TEST(Pfss, InvalidArguments) {
  const auto q = Potential::constant(1);
  EXPECT_THROW(solve_pfss(q, 0.0, 1e-10), InvalidInput);
  EXPECT_THROW(solve_pfss(q, 5.0, 0.0), InvalidInput);
  PfssOptions o;
  o.grid_step = -1;
  EXPECT_THROW(solve_pfss(q, 5.0, o), InvalidInput);
}

TEST(Pfss, StepBudgetExhaustionIsReported) {
  PfssOptions o;
  o.max_steps = 50;
  EXPECT_THROW(solve_pfss(Potential::polynomial({1, 0, 1}), 5.0, o), RefinementFailure);
}
