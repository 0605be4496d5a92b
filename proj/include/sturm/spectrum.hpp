#pragma once

// Low spectrum of -y'' + q y on [-L, L] with zero boundary values, from the
// three-point finite-difference matrix and Sturm-sequence bisection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sturm/dfuncs.hpp"
#include "sturm/errors.hpp"
#include "sturm/parallel.hpp"
#include "sturm/potential.hpp"

namespace sturm {

/// Symmetric tridiagonal matrix with diagonal `diag` and constant off-diagonal.
struct Tridiagonal {
  std::vector<double> diag;
  double off = 0.0;

  std::size_t size() const { return diag.size(); }

  /// Number of eigenvalues strictly below lambda (negative pivots of T - lambda).
  std::size_t count_below(double lambda) const {
    const double off2 = off * off;
    const double tiny = std::numeric_limits<double>::min() * 4.0;
    std::size_t count = 0;
    double piv = 1.0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      piv = diag[i] - lambda - (i == 0 ? 0.0 : off2 / piv);
      if (piv == 0.0) piv = -tiny;
      if (piv < 0.0) ++count;
    }
    return count;
  }

  std::pair<double, double> gershgorin() const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      const double r = (i > 0 ? std::abs(off) : 0.0) + (i + 1 < diag.size() ? std::abs(off) : 0.0);
      lo = std::min(lo, diag[i] - r);
      hi = std::max(hi, diag[i] + r);
    }
    return {lo, hi};
  }

  /// j-th smallest eigenvalue, j counted from 1.
  double eigenvalue(std::size_t j) const {
    auto [lo, hi] = gershgorin();
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (count_below(mid) >= j) {
        hi = mid;
      } else {
        lo = mid;
      }
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
        break;
    }
    return 0.5 * (lo + hi);
  }
};

/// Interior nodes x_i = -L + i h, i = 1..n-1, h = 2L/n.
inline Tridiagonal fd_matrix(const Potential& q, double L, std::size_t n) {
  const double h = 2.0 * L / static_cast<double>(n);
  Tridiagonal t;
  t.off = -1.0 / (h * h);
  t.diag.resize(n - 1);
  for (std::size_t i = 1; i < n; ++i)
    t.diag[i - 1] = 2.0 / (h * h) + q.eval(-L + static_cast<double>(i) * h);
  return t;
}

inline std::vector<double> lowest_eigenvalues(const Tridiagonal& t, std::size_t k) {
  std::vector<double> out(k);
  parallel_for(k, [&](std::size_t j) { out[j] = t.eigenvalue(j + 1); });
  return out;
}

struct SpectralResult {
  std::vector<double> eigenvalues;
  double L = 0.0;
  std::size_t n = 0;
  std::string method = "FD2-dirichlet";
  /// |lambda_j(L + 2, 2n) - lambda_j(L, n)|
  std::vector<double> convergence;
};

inline void check_spectral_request(double L, std::size_t n, std::size_t k) {
  if (!(L > 0.0)) throw InvalidInput("L must be positive");
  if (n < 100) throw InvalidInput("mesh count n must be at least 100");
  if (k < 1) throw InvalidInput("k must be at least 1");
  if (4 * k > n) throw InvalidInput("k must not exceed n/4");
}

inline SpectralResult eigen_truncated(const Potential& q, double L, std::size_t n,
                                      std::size_t k, bool with_convergence = true) {
  check_spectral_request(L, n, k);
  SpectralResult r;
  r.L = L;
  r.n = n;
  r.eigenvalues = lowest_eigenvalues(fd_matrix(q, L, n), k);
  if (with_convergence) {
    const auto fine = lowest_eigenvalues(fd_matrix(q, L + 2.0, 2 * n), k);
    r.convergence.resize(k);
    for (std::size_t j = 0; j < k; ++j) r.convergence[j] = std::abs(fine[j] - r.eigenvalues[j]);
  }
  return r;
}

inline std::size_t count_below(const Potential& q, double L, std::size_t n, double level) {
  return fd_matrix(q, L, n).count_below(level);
}

// ---------------------------------------------------------------------------

enum class SpectrumVerdict { discrete_consistent, continuous_consistent, inconclusive };

inline const char* to_string(SpectrumVerdict v) {
  switch (v) {
    case SpectrumVerdict::discrete_consistent: return "discrete-consistent";
    case SpectrumVerdict::continuous_consistent: return "continuous-consistent";
    default: return "inconclusive";
  }
}

struct DiscretenessReport {
  std::vector<double> radii;
  std::vector<std::size_t> meshes;
  std::vector<std::vector<double>> lowest;  // per radius
  double level = 0.0;                       // fixed level for counting
  std::vector<std::size_t> counts;          // eigenvalues below level, per radius
  double max_relative_change = 0.0;         // between the two largest radii
  bool stabilized = false;
  bool densifying = false;
  SpectrumVerdict verdict = SpectrumVerdict::inconclusive;
  Compactness compactness = Compactness::inconclusive;
  /// discrete with compact, continuous with not_compact
  bool consistent = false;
};

struct DiscretenessOptions {
  double mesh_step = 0.02;
  double stabilization = 1e-3;
  double level_offset = 0.5;
};

inline DiscretenessReport discreteness_diagnostic(const Potential& q, std::size_t k,
                                                  const DiscretenessOptions& opt = {}) {
  if (k < 1) throw InvalidInput("k must be at least 1");
  DiscretenessReport r;
  const double L0 = q.domain_hint();
  r.radii = {L0, L0 + 4.0, L0 + 8.0};
  for (double L : r.radii) {
    const auto n = std::max<std::size_t>(
        static_cast<std::size_t>(std::llround(2.0 * L / opt.mesh_step)), std::max<std::size_t>(100, 4 * k));
    r.meshes.push_back(n);
  }
  r.lowest.resize(3);
  for (std::size_t i = 0; i < 3; ++i)
    r.lowest[i] = eigen_truncated(q, r.radii[i], r.meshes[i], k, false).eigenvalues;

  r.level = r.lowest[0][0] + opt.level_offset;
  for (std::size_t i = 0; i < 3; ++i)
    r.counts.push_back(count_below(q, r.radii[i], r.meshes[i], r.level));
  for (std::size_t j = 0; j < k; ++j)
    r.max_relative_change = std::max(
        r.max_relative_change, std::abs(r.lowest[2][j] - r.lowest[1][j]) / std::abs(r.lowest[2][j]));
  r.stabilized = r.max_relative_change < opt.stabilization;
  r.densifying = r.counts[2] > r.counts[0];
  if (r.densifying) {
    r.verdict = SpectrumVerdict::continuous_consistent;
  } else if (r.stabilized) {
    r.verdict = SpectrumVerdict::discrete_consistent;
  }

  r.compactness = compactness_indicator(q).verdict;
  r.consistent = (r.verdict == SpectrumVerdict::discrete_consistent &&
                  r.compactness == Compactness::compact) ||
                 (r.verdict == SpectrumVerdict::continuous_consistent &&
                  r.compactness == Compactness::not_compact);
  return r;
}

}  // namespace sturm
