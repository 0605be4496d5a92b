#pragma once

// Adaptive Dormand-Prince 5(4) integration of the Riccati equation
// w' = q(x) - w^2 across a sorted list of output nodes. Steps never cross a
// node, so potential breakpoints placed among the nodes are hit exactly and
// q is evaluated with the one-sided limit belonging to the current cell.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sturm/errors.hpp"
#include "sturm/potential.hpp"

namespace sturm {

struct RiccatiStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double worst_error = 0.0;  // largest accepted scaled local error estimate
};

enum class Sweep { forward, backward };

namespace detail {

// q restricted to the closed cell [lo, hi]: interior points and lo use the
// right-limit, hi uses the left-limit.
struct CellPotential {
  const Potential& q;
  double lo;
  double hi;
  double operator()(double x) const {
    if (x >= hi) return q.eval_left(hi);
    if (x <= lo) return q.eval(lo);
    return q.eval(x);
  }
};

}  // namespace detail

/// Integrates from nodes.front() (forward) or nodes.back() (backward) with
/// initial value w0 and returns w at every node. `tol` bounds the local error
/// per step, scaled by (1 + |w|).
inline std::vector<double> integrate_riccati(const Potential& q,
                                             std::span<const double> nodes, double w0,
                                             double tol, Sweep dir, RiccatiStats& stats,
                                             std::size_t max_steps = 20'000'000) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = nodes.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  const bool fwd = dir == Sweep::forward;
  const std::size_t first = fwd ? 0 : n - 1;
  out[first] = w0;
  double w = w0;
  double h = 0.0;  // magnitude of the next trial step
  std::size_t steps = 0;

  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t i0 = fwd ? k - 1 : n - k;
    const std::size_t i1 = fwd ? k : n - k - 1;
    const double start = nodes[i0];
    const double stop = nodes[i1];
    const double span = std::abs(stop - start);
    const double sign = fwd ? 1.0 : -1.0;
    const detail::CellPotential qc{q, std::min(start, stop), std::max(start, stop)};
    auto rhs = [&qc](double x, double y) { return qc(x) - y * y; };

    if (h == 0.0) h = std::min(span, 0.01);
    double x = start;
    double done = 0.0;
    double k1 = rhs(x, w);
    while (done < span) {
      if (++steps > max_steps)
        throw RefinementFailure("Riccati integration exceeded the step budget",
                                stats.worst_error);
      const double remaining = span - done;
      const bool last = h >= remaining * (1.0 - 1e-12);
      const double step = last ? remaining : h;
      const double hs = sign * step;
      const double k2 = rhs(x + c2 * hs, w + hs * a21 * k1);
      const double k3 = rhs(x + c3 * hs, w + hs * (a31 * k1 + a32 * k2));
      const double k4 = rhs(x + c4 * hs, w + hs * (a41 * k1 + a42 * k2 + a43 * k3));
      const double k5 =
          rhs(x + c5 * hs, w + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const double xe = last ? stop : x + hs;
      const double k6 = rhs(
          xe, w + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const double wn = w + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double k7 = rhs(xe, wn);
      const double err_abs =
          std::abs(hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
      const double err = err_abs / (tol * (1.0 + std::abs(w)));
      if (!std::isfinite(wn))
        throw InternalFault("Riccati solution blew up near x = " + std::to_string(x));
      if (err <= 1.0) {
        ++stats.accepted;
        stats.worst_error = std::max(stats.worst_error, err_abs);
        w = wn;
        x = xe;
        done = last ? span : done + step;
        k1 = k7;
        const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (!last || grow < 1.0) h = step * grow;
      } else {
        ++stats.rejected;
        h = step * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (h < 1e-14 * (1.0 + std::abs(x)))
          throw RefinementFailure("Riccati step size underflow", err_abs);
      }
    }
    out[i1] = w;
  }
  return out;
}

}  // namespace sturm
