#pragma once

// Otelbaev-type length scales of a potential:
//
//   d(x):  d * int_{x-d}^{x+d} q = 2
//   d1(x): int_0^{sqrt2 d} int_{x-t}^{x} q dxi dt = 1
//   d2(x): int_0^{sqrt2 d} int_{x}^{x+t} q dxi dt = 1
//
// Each left-hand side is strictly increasing in d and q >= 1 puts the root in
// (0, 1], so plain bisection on that bracket always converges.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sturm/errors.hpp"
#include "sturm/parallel.hpp"
#include "sturm/potential.hpp"

namespace sturm {

inline constexpr double kSqrt2 = 1.41421356237309504880;

/// d * int_{x-d}^{x+d} q - 2
inline double d_equation(const Potential& q, double x, double d) {
  return d * q.integrate(x - d, x + d) - 2.0;
}

namespace detail {

// int_0^s g(t) dt with g(t) = int over the window of length t on one side of
// x. g is smooth between the offsets where the window edge meets a
// breakpoint, so the outer integral is split there.
inline double one_sided_double_integral(const Potential& q, double x, double s,
                                        bool left) {
  if (s <= 0.0) return 0.0;
  std::vector<double> cuts{0.0};
  for (double b : q.breakpoints()) {
    const double t = left ? x - b : b - x;
    if (t > 0.0 && t < s) cuts.push_back(t);
  }
  cuts.push_back(s);
  std::sort(cuts.begin(), cuts.end());
  auto g = [&q, x, left](double t) {
    return left ? q.integrate(x - t, x) : q.integrate(x, x + t);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        g, cuts[i], cuts[i + 1], 12, 1e-13);
  return total;
}

template <typename F>
double bisect_unit_bracket(F&& f, double tol, const char* name, double x) {
  const double f_hi = f(1.0);
  if (f_hi < -tol)
    throw InternalFault(std::string(name) + ": equation is negative at d = 1 for x = " +
                        std::to_string(x) + "; q >= 1 must have been violated");
  if (f_hi <= tol) return 1.0;
  double lo = 0.0, hi = 1.0;
  double mid = 0.5;
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (iter >= 60 && std::abs(fm) <= tol) break;
    if (fm < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

}  // namespace detail

/// int_0^{sqrt2 d} int_{x-t}^{x} q - 1
inline double d1_equation(const Potential& q, double x, double d) {
  return detail::one_sided_double_integral(q, x, kSqrt2 * d, true) - 1.0;
}

/// int_0^{sqrt2 d} int_{x}^{x+t} q - 1
inline double d2_equation(const Potential& q, double x, double d) {
  return detail::one_sided_double_integral(q, x, kSqrt2 * d, false) - 1.0;
}

inline double solve_d(const Potential& q, double x, double tol = 1e-12) {
  if (!(tol > 0.0)) throw InvalidInput("solve_d: tol must be positive");
  return detail::bisect_unit_bracket([&](double d) { return d_equation(q, x, d); }, tol,
                                     "solve_d", x);
}

inline double solve_d1(const Potential& q, double x, double tol = 1e-12) {
  if (!(tol > 0.0)) throw InvalidInput("solve_d1: tol must be positive");
  return detail::bisect_unit_bracket([&](double d) { return d1_equation(q, x, d); }, tol,
                                     "solve_d1", x);
}

inline double solve_d2(const Potential& q, double x, double tol = 1e-12) {
  if (!(tol > 0.0)) throw InvalidInput("solve_d2: tol must be positive");
  return detail::bisect_unit_bracket([&](double d) { return d2_equation(q, x, d); }, tol,
                                     "solve_d2", x);
}

struct DFunctions {
  std::vector<double> grid;
  std::vector<double> d, d1, d2;
  double tol = 0.0;
};

/// d, d1, d2 at every grid point.
inline DFunctions solve_dfuncs(const Potential& q, std::span<const double> grid,
                               double tol = 1e-12) {
  DFunctions out;
  out.grid.assign(grid.begin(), grid.end());
  out.tol = tol;
  const std::size_t n = grid.size();
  out.d.resize(n);
  out.d1.resize(n);
  out.d2.resize(n);
  parallel_for(n, [&](std::size_t i) {
    out.d[i] = solve_d(q, grid[i], tol);
    out.d1[i] = solve_d1(q, grid[i], tol);
    out.d2[i] = solve_d2(q, grid[i], tol);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Compactness classification from the decay of d along both tails.

enum class Compactness { compact, not_compact, inconclusive };

inline const char* to_string(Compactness c) {
  switch (c) {
    case Compactness::compact: return "compact";
    case Compactness::not_compact: return "not_compact";
    default: return "inconclusive";
  }
}

struct ProbeRecord {
  double x = 0.0;
  double d = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double window_mass = 0.0;  // int_{x-1}^{x+1} q
  double mass_growth = 1.0;  // window_mass relative to the previous probe on the tail
};

struct CompactnessVerdict {
  Compactness verdict = Compactness::inconclusive;
  Compactness from_d = Compactness::inconclusive;
  Compactness from_d1 = Compactness::inconclusive;
  Compactness from_d2 = Compactness::inconclusive;
  /// d1, d2 agree with d, and 2 sqrt2 d_{1,2} >= d plus the shifted-window
  /// bound (3/sqrt2) d(x -+ (sqrt2/3) d_{1,2}) >= d_{1,2} hold at every probe.
  bool one_sided_consistent = false;
  double max_abs_probe = 0.0;
  std::vector<ProbeRecord> evidence;  // negative tail then positive tail, by |x|
};

struct CompactnessOptions {
  double eps = 0.05;
  /// Allowed relative increase between consecutive probes of a decreasing tail.
  double monotone_slack = 0.10;
  double tol = 1e-12;
};

namespace detail {

inline Compactness classify_tails(const std::vector<std::vector<double>>& tails,
                                  const std::vector<double>& outer_mass,
                                  const CompactnessOptions& opt) {
  bool all_decay = true;
  for (std::size_t k = 0; k < tails.size(); ++k) {
    const auto& v = tails[k];
    const bool floor_reached = *std::min_element(v.begin(), v.end()) >= opt.eps;
    if (floor_reached && v.back() >= 0.5 * v.front()) return Compactness::not_compact;
    bool decays = v.back() < opt.eps && v.back() < v.front() &&
                  outer_mass[k] > 2.0 / opt.eps;
    for (std::size_t i = 1; i < v.size(); ++i)
      decays = decays && v[i] <= (1.0 + opt.monotone_slack) * v[i - 1];
    all_decay = all_decay && decays;
  }
  return all_decay ? Compactness::compact : Compactness::inconclusive;
}

}  // namespace detail

/// Probes must contain at least two points on each side of the origin whose
/// |x| span two decades.
inline CompactnessVerdict compactness_indicator(const Potential& q,
                                                std::span<const double> probes,
                                                const CompactnessOptions& opt = {}) {
  if (!(opt.eps > 0.0)) throw InvalidInput("compactness_indicator: eps must be positive");
  std::vector<double> neg, pos;
  for (double x : probes) {
    if (!std::isfinite(x)) throw InvalidProbeError("probe points must be finite");
    if (x < 0.0) neg.push_back(-x);
    if (x > 0.0) pos.push_back(x);
  }
  for (auto* tail : {&neg, &pos}) {
    std::sort(tail->begin(), tail->end());
    tail->erase(std::unique(tail->begin(), tail->end()), tail->end());
    if (tail->size() < 2 || tail->back() < 100.0 * tail->front())
      throw InvalidProbeError(
          "probes must reach two decades in |x| on both sides of the origin");
  }

  CompactnessVerdict out;
  std::vector<std::vector<double>> td(2), td1(2), td2(2);
  std::vector<double> outer_mass(2);
  for (int side = 0; side < 2; ++side) {
    const auto& mags = side == 0 ? neg : pos;
    const double sign = side == 0 ? -1.0 : 1.0;
    double prev_mass = 0.0;
    for (double m : mags) {
      ProbeRecord r;
      r.x = sign * m;
      r.d = solve_d(q, r.x, opt.tol);
      r.d1 = solve_d1(q, r.x, opt.tol);
      r.d2 = solve_d2(q, r.x, opt.tol);
      r.window_mass = q.window_mass(r.x, 1.0);
      r.mass_growth = prev_mass > 0.0 ? r.window_mass / prev_mass : 1.0;
      prev_mass = r.window_mass;
      td[side].push_back(r.d);
      td1[side].push_back(r.d1);
      td2[side].push_back(r.d2);
      outer_mass[side] = r.window_mass;
      out.max_abs_probe = std::max(out.max_abs_probe, m);
      out.evidence.push_back(r);
    }
  }
  out.from_d = detail::classify_tails(td, outer_mass, opt);
  out.from_d1 = detail::classify_tails(td1, outer_mass, opt);
  out.from_d2 = detail::classify_tails(td2, outer_mass, opt);

  bool chain = true;
  constexpr double kShift = kSqrt2 / 3.0;
  for (const auto& r : out.evidence) {
    const double slack = 1e-9;
    chain = chain && 2.0 * kSqrt2 * r.d1 >= r.d * (1.0 - slack) &&
            2.0 * kSqrt2 * r.d2 >= r.d * (1.0 - slack);
    chain = chain &&
            3.0 / kSqrt2 * solve_d(q, r.x - kShift * r.d1, opt.tol) >= r.d1 * (1.0 - slack);
    chain = chain &&
            3.0 / kSqrt2 * solve_d(q, r.x + kShift * r.d2, opt.tol) >= r.d2 * (1.0 - slack);
  }
  out.one_sided_consistent =
      chain && out.from_d1 == out.from_d && out.from_d2 == out.from_d;
  out.verdict = out.one_sided_consistent ? out.from_d : Compactness::inconclusive;
  return out;
}

inline CompactnessVerdict compactness_indicator(const Potential& q) {
  static constexpr double kDefaultProbes[] = {-1000.0, -100.0, -10.0, 10.0, 100.0, 1000.0};
  return compactness_indicator(q, kDefaultProbes);
}

}  // namespace sturm
