#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sturm/green.hpp"

using namespace sturm;

namespace {

KernelOptions quick() {
  KernelOptions o;
  o.with_dfuncs = false;
  return o;
}

PiecewiseFunction indicator(double a, double b, double value = 1.0) {
  return PiecewiseFunction({{-kInf, a, Constant{0}}, {a, b, Constant{value}}, {b, kInf, Constant{0}}});
}

SampledFunction sample_indicator(const GreenKernel& k, double a, double b) {
  return sample(indicator(a, b), k.grid());
}

GreenKernel kernel_with_nodes(const Potential& q, double L, std::vector<double> nodes) {
  KernelOptions o = quick();
  o.pfss.extra_nodes = std::move(nodes);
  return GreenKernel::build(q, L, o);
}

}  // namespace

TEST(GreenKernel, ClosedFormForConstantPotentials) {
  const auto k1 = GreenKernel::build(Potential::constant(1), 10.0, quick());
  EXPECT_NEAR(k1.eval(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(k1.eval(0, 2), 0.5 * std::exp(-2.0), 1e-12);
  const auto k4 = GreenKernel::build(Potential::constant(4), 10.0, quick());
  EXPECT_NEAR(k4.eval(0, 1), 0.25 * std::exp(-2.0), 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-9, 9);
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng), t = u(rng);
    ASSERT_NEAR(k4.eval(x, t), oracle::kernel_const(4, x, t), 1e-12);
  }
}

TEST(GreenKernel, DiagonalEqualsRho) {
  const auto k = GreenKernel::build(Potential::sinusoid(2, 1), 6.0, quick());
  for (double x : {-5.5, -0.3, 0.0, 1.234, 6.0}) EXPECT_NEAR(k.eval(x, x), k.pfss().rho_smooth_at(x), 1e-14);
}

TEST(GreenKernel, SymmetricOnSampleGrid) {
  for (const auto& q : {Potential::constant(1), Potential::polynomial({1, 0, 1}),
                        Potential::sinusoid(2, 1)}) {
    const auto k = GreenKernel::build(q, 6.0, quick());
    for (int i = 0; i < 200; ++i)
      for (int j = 0; j < 200; ++j) {
        const double x = -5.97 + 11.9 * i / 199.0, t = -5.97 + 11.9 * j / 199.0;
        const double g = k.eval(x, t);
        ASSERT_GT(g, 0.0);
        ASSERT_LE(std::abs(g - k.eval(t, x)), 1e-9 * g);
      }
  }
}

TEST(GreenKernel, DerivativeClosedFormAndJump) {
  const auto k = GreenKernel::build(Potential::constant(1), 8.0, quick());
  EXPECT_NEAR(k.dx(1, 0), -0.5 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(k.dx(-1, 0), 0.5 * std::exp(-1.0), 1e-12);
  EXPECT_THROW(k.dx(0.5, 0.5), DiagonalError);
  const auto kh = GreenKernel::build(Potential::polynomial({1, 0, 1}), 5.0, quick());
  for (double t : {-2.0, 0.3, 1.7}) {
    const double eps = 1e-7;
    EXPECT_NEAR(kh.dx(t + eps, t) - kh.dx(t - eps, t), -1.0, 1e-5);
  }
}

TEST(GreenKernel, DerivativeMatchesFiniteDifference) {
  const auto k = GreenKernel::build(Potential::sinusoid(2, 1), 6.0, quick());
  const double h = 1e-5;
  for (auto [x, t] : {std::pair{1.0, -0.5}, std::pair{-2.0, 3.0}, std::pair{4.2, 4.0}}) {
    const double fd = (k.eval(x + h, t) - k.eval(x - h, t)) / (2 * h);
    EXPECT_NEAR(k.dx(x, t), fd, 1e-7);
  }
}

TEST(GreenKernel, DomainAndSamplingErrors) {
  const auto k = GreenKernel::build(Potential::constant(1), 4.0, quick());
  EXPECT_THROW(k.eval(5.0, 0.0), DomainError);
  EXPECT_THROW(k.apply(SampledFunction::constant(3, 1.0), 0.0), SamplingError);
  EXPECT_THROW(k.apply_all(SampledFunction::constant(k.grid().size() + 1, 1.0)), SamplingError);
}

TEST(GreenOperator, ConstantRightHandSide) {
  for (double c : {1.0, 4.0}) {
    const auto k = GreenKernel::build(Potential::constant(c), 10.0, quick());
    const auto f = SampledFunction::constant(k.grid().size(), 1.0);
    const auto v = k.apply_all(f);
    for (std::size_t i = 0; i < v.y.size(); ++i) {
      ASSERT_NEAR(v.y[i], 1.0 / c, 1e-12);
      ASSERT_NEAR(v.y_prime[i], 0.0, 1e-12);
    }
    EXPECT_NEAR(k.apply(f, 0.37), 1.0 / c, 1e-12);
    EXPECT_NEAR(k.apply_derivative(f, -2.71), 0.0, 1e-12);
  }
}

TEST(GreenOperator, IndicatorClosedForm) {
  const auto k = kernel_with_nodes(Potential::constant(1), 10.0, {-1, 1, 0});
  const auto f = sample_indicator(k, -1, 1);
  EXPECT_NEAR(k.apply(f, 0.0), 1.0 - std::exp(-1.0), 1e-9);
  EXPECT_NEAR(k.apply_derivative(f, 0.0), 0.0, 1e-12);
  // y = e^{-x} sinh 1 for x > 1
  EXPECT_NEAR(k.apply(f, 2.0), std::exp(-2.0) * std::sinh(1.0), 1e-9);
  EXPECT_NEAR(k.apply_derivative(f, 2.0), -std::exp(-2.0) * std::sinh(1.0), 1e-9);
  // inside: y = 1 - e^{-1} cosh x
  EXPECT_NEAR(k.apply(f, 0.4321), 1.0 - std::exp(-1.0) * std::cosh(0.4321), 1e-9);
}

TEST(GreenOperator, DirectSumAgreesWithRecurrence) {
  const auto q = Potential::polynomial({1, 0, 1});
  const auto k = kernel_with_nodes(q, 6.0, {-0.5, 2.0});
  const auto f = sample(PiecewiseFunction({{-kInf, -0.5, Constant{0}},
                                           {-0.5, 2.0, Polynomial{{1, 2}}},
                                           {2.0, kInf, Constant{0}}}),
                        k.grid());
  const auto v = k.apply_all(f);
  for (std::size_t i = 0; i < v.y.size(); i += 211) {
    const double x = k.grid()[i];
    EXPECT_NEAR(k.apply(f, x), v.y[i], 1e-12 * (1 + std::abs(v.y[i])));
    EXPECT_NEAR(k.apply_derivative(f, x), v.y_prime[i], 1e-12 * (1 + std::abs(v.y_prime[i])));
  }
}

TEST(GreenOperator, HarmonicMatchesFiniteDifferenceOracle) {
  const auto q = Potential::polynomial({1, 0, 1});
  auto fq = [](double x) { return 1 + x * x; };
  auto ff = [](double x) { return std::exp(-x * x) * (1 + x); };
  const double L = 8.0;
  const int n = 16000;
  const auto ref = oracle::fd_bvp(fq, ff, L, n);
  const auto k = GreenKernel::build(q, L, quick());
  const auto f = sample_continuous(ff, k.grid());
  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0, 4.0}) {
    const auto i = static_cast<std::size_t>(std::lround((x + L) / (2 * L) * n));
    EXPECT_NEAR(k.apply(f, x), ref[i], 2e-6) << x;
  }
}

TEST(GreenOperator, RowIntegralsClosedForm) {
  const auto k1 = GreenKernel::build(Potential::constant(1), 10.0, quick());
  const auto k4 = GreenKernel::build(Potential::constant(4), 10.0, quick());
  for (double x : {-5.0, 0.0, 3.3}) {
    const auto [a, b] = k1.row_integral(x);
    EXPECT_NEAR(a, 1.0, 1e-9);
    EXPECT_NEAR(b, 1.0, 1e-9);
    const auto [c, d] = k4.row_integral(x);
    // int G = 1/c^2 and int |dG/dx| = 1/c
    EXPECT_NEAR(c, 0.25, 1e-9);
    EXPECT_NEAR(d, 0.5, 1e-9);
  }
}

TEST(GreenOperator, RowIntegralsDecayForGrowingPotential) {
  const auto q = Potential::polynomial({1, 0, 1});
  const auto k = GreenKernel::build(q, 12.0, quick());
  const auto r0 = k.row_integral(0.0);
  for (double x : {-8.0, 8.0}) {
    const auto r = k.row_integral(x);
    EXPECT_GE(r0.first / r.first, 5.0);
    EXPECT_GE(r0.second / r.second, 5.0);
  }
  // first component at most 2 d(x)
  for (double x : {-8.0, -3.0, 0.0, 5.0}) EXPECT_LE(k.row_integral(x).first, 2 * solve_d(q, x));
  // independent check: direct Simpson quadrature of the kernel row
  const double x = 1.5;
  const double ref = oracle::simpson([&](double t) { return k.eval(x, t); }, -12.0, x, 20000) +
                     oracle::simpson([&](double t) { return k.eval(x, t); }, x, 12.0, 20000);
  EXPECT_NEAR(k.row_integral(x).first, ref, 1e-8);
}

TEST(GreenOperator, KernelBoundsAgainstD) {
  for (const auto& q : {Potential::polynomial({1, 0, 1}), Potential::sinusoid(2, 1)}) {
    KernelOptions o;
    o.pfss.grid_step = 0.01;
    const auto k = GreenKernel::build(q, 6.0, o);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-6, 6);
    for (int i = 0; i < 400; ++i) {
      const std::size_t ix = static_cast<std::size_t>(i * 37) % k.grid().size();
      const double x = k.grid()[ix], t = u(rng);
      const double g = k.eval(x, t), e = std::exp(-std::abs(t - x));
      ASSERT_LE(g, e * (1 + 1e-9));
      ASSERT_LE(g, 0.75 * k.dfuncs().d[ix] * e * (1 + 1e-9));
      if (x != t) {
        ASSERT_LE(std::abs(k.dx(x, t)), e * (1 + 1e-9));
      }
    }
  }
}

TEST(GreenOperator, TailClosureOnlyChangesTails) {
  const auto q = Potential::sinusoid(2, 1);
  KernelOptions a = quick(), b = quick();
  b.tail_closure = false;
  const double L = 12.0;
  const auto ka = GreenKernel::build(q, L, a), kb = GreenKernel::build(q, L, b);
  const auto f = SampledFunction::constant(ka.grid().size(), 1.0);
  for (double x : {-6.0, 0.0, 5.0})
    EXPECT_LE(std::abs(ka.apply(f, x) - kb.apply(f, x)), std::exp(-(L - std::abs(x))));
}

TEST(SolveBvp, ConstantPotentialBoundedSolution) {
  const auto rep = solve_bvp(Potential::constant(1), PiecewiseFunction({{-kInf, kInf, Constant{1}}}),
                             NormIndex::inf, 10.0, 1e-8);
  for (double y : rep.y) ASSERT_NEAR(y, 1.0, 1e-10);
  EXPECT_EQ(rep.class_verdict, "D_inf");
  EXPECT_FALSE(rep.note.empty());
  ASSERT_TRUE(rep.compactness.has_value());
  EXPECT_EQ(rep.compactness->verdict, Compactness::not_compact);
  EXPECT_LE(rep.residual_norm, 1e-8);
}

TEST(SolveBvp, HarmonicBoundedSolutionDecays) {
  const auto q = Potential::polynomial({1, 0, 1});
  const auto rep = solve_bvp(q, PiecewiseFunction({{-kInf, kInf, Constant{1}}}), NormIndex::inf,
                             q.domain_hint(), 1e-8);
  EXPECT_EQ(rep.class_verdict, "D_inf0");
  auto at = [&](double x) {
    auto it = std::lower_bound(rep.grid.begin(), rep.grid.end(), x - 1e-9);
    return rep.y[static_cast<std::size_t>(it - rep.grid.begin())];
  };
  EXPECT_LT(at(8.0) / at(0.0), 0.2);
  EXPECT_LT(rep.decay.y_plus, 1e-2);
  for (std::size_t i = 0; i < rep.y.size(); ++i)
    ASSERT_LE(rep.y[i], 2 * solve_d(q, rep.grid[i]) + 1e-9);
}

TEST(SolveBvp, IndicatorInL2) {
  const double L = 10.0;
  const auto rep = solve_bvp(Potential::constant(1), indicator(-1, 1), NormIndex::two, L, 1e-8);
  EXPECT_EQ(rep.class_verdict, "D_2");
  EXPECT_FALSE(rep.compactness.has_value());
  EXPECT_LE(rep.decay.y_minus, std::exp(-(L - 1)));
  EXPECT_LE(rep.decay.y_plus, std::exp(-(L - 1)));
  EXPECT_LE(rep.residual_norm, 1e-8);
  // L2 norm of y = G f against the closed form on a fine Simpson rule
  auto y = [](double x) {
    const double a = std::abs(x);
    return a <= 1 ? 1 - std::exp(-1.0) * std::cosh(x) : std::exp(-a) * std::sinh(1.0);
  };
  const double ref = std::sqrt(oracle::simpson([&](double x) { return y(x) * y(x); }, -L, L, 200000));
  EXPECT_NEAR(rep.norm_y, ref, 1e-4);
  EXPECT_NEAR(rep.norm_f, std::sqrt(2.0), 1e-2);
}

TEST(SolveBvp, WeakResidualAndDecayOnAllTestPotentials) {
  const Potential well(PiecewiseFunction(
      {{-kInf, -2, Constant{9}}, {-2, 2, Constant{1}}, {2, kInf, Constant{9}}}));
  const double L = 10.0, R = 1.5;
  for (const auto& q : {Potential::constant(1), Potential::polynomial({1, 0, 1}),
                        Potential::sinusoid(2, 1), well}) {
    const auto rep = solve_bvp(q, indicator(-R, R, 2.0), NormIndex::one, L, 1e-8);
    EXPECT_LE(rep.residual_norm, 1e-8);
    const double bound = std::exp(-(L - R) / 2) * 2.0;
    EXPECT_LE(std::max({rep.decay.y_minus, rep.decay.y_plus, rep.decay.yp_minus, rep.decay.yp_plus}),
              bound);
  }
}

TEST(SolveBvp, NecessityWitnessAboveRhoSquared) {
  for (const auto& q : {Potential::constant(1), Potential::polynomial({1, 0, 1}),
                        Potential::sinusoid(2, 1)}) {
    const auto k = GreenKernel::build(q, 10.0, quick());
    const auto y = k.apply_all(SampledFunction::constant(k.grid().size(), 1.0)).y;
    const auto rho = k.pfss().rho();
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_GE(y[i], rho[i] * rho[i] - 1e-12);
  }
}

TEST(SolveBvp, LocalKernelMassBoundedBelow) {
  // On q = 1 the minimum of (G f_x) over the window is (1 - e^{-1}) / 2.
  const double calibrated = 0.5 * (1 - std::exp(-1.0));
  for (const auto& q : {Potential::constant(1), Potential::polynomial({1, 0, 1}),
                        Potential::sinusoid(2, 1)}) {
    for (double x : {-3.0, 0.0, 2.5}) {
      const double d = solve_d(q, x);
      const double a = x - d / 2, b = x + d / 2;
      const auto k = kernel_with_nodes(q, 8.0, {a, b});
      const auto f = sample_indicator(k, a, b);
      double lo = 1e300;
      for (int i = 0; i <= 20; ++i) lo = std::min(lo, k.apply(f, a + d * i / 20.0));
      EXPECT_GE(lo / (d * d), calibrated / 10) << x;
      if (q.eval(0.3) == 1.0) {
        EXPECT_NEAR(lo, calibrated, 1e-8);
      }
    }
  }
}

TEST(SolveBvp, NormRatioDoesNotGrowUnderRefinement) {
  const auto q = Potential::sinusoid(2, 1);
  std::vector<PiecewiseFunction> family;
  for (int j = 0; j < 4; ++j) family.push_back(indicator(-1.0 - j, 0.5 + j, 1.0 + j));
  for (int j = 0; j < 4; ++j)
    family.push_back(PiecewiseFunction({{-kInf, -2, Constant{0}},
                                        {-2, 2, Polynomial{{1.0 * j, 1, -0.25}}},
                                        {2, kInf, Constant{0}}}));
  for (int j = 0; j < 4; ++j)
    family.push_back(PiecewiseFunction({{-kInf, kInf, Sinusoid{0.5 * j, 1, 1.0 + j, 0.3}}}));
  ASSERT_EQ(family.size(), 12u);
  for (NormIndex p : {NormIndex::one, NormIndex::two, NormIndex::inf}) {
    for (const auto& f : family) {
      std::vector<double> ratio;
      for (double h : {0.02, 0.01, 0.005}) {
        BvpOptions o;
        o.grid_step = h;
        const auto rep = solve_bvp(q, f, p, 8.0, 1e-6, o);
        ratio.push_back(rep.norm_y / rep.norm_f);
      }
      EXPECT_LE(ratio[2], ratio[0] * (1 + 1e-2));
      EXPECT_LE(ratio[2], 1.0);
    }
  }
}

TEST(SolveBvp, InputErrors) {
  const auto q = Potential::constant(1);
  const PiecewiseFunction f;
  EXPECT_THROW(solve_bvp(q, f, NormIndex::two, 5.0, 0.0), InvalidInput);
  EXPECT_THROW(solve_bvp(q, f, NormIndex::two, -5.0, 1e-8), InvalidInput);
  EXPECT_THROW(parse_norm_index("3"), InvalidInput);
  EXPECT_EQ(parse_norm_index("inf"), NormIndex::inf);
}

TEST(SolveBvp, UnreachableToleranceFails) {
  BvpOptions o;
  o.grid_step = 0.2;
  EXPECT_THROW(solve_bvp(Potential::polynomial({1, 0, 1}), indicator(-1, 1), NormIndex::two, 6.0,
                         1e-15, o),
               RefinementFailure);
}
