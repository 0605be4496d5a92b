#pragma once

// Principal fundamental system {u, v} of z'' = q z, held entirely in
// logarithmic-derivative form: w_v = v'/v, w_u = u'/u, rho = u v and the
// logarithms of u and v. Nothing here ever materializes u or v, which grow
// or decay like exp(+-x).

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sturm/cell.hpp"
#include "sturm/errors.hpp"
#include "sturm/potential.hpp"
#include "sturm/riccati.hpp"

namespace sturm {

struct PfssOptions {
  double tol = 1e-10;
  /// Extra integration length beyond each end; seed error decays like e^{-2 B}.
  double burn_in = 15.0;
  /// Uniform node spacing; defaults to min(0.01, tol^{1/4}).
  std::optional<double> grid_step;
  /// Points that must be grid nodes (breakpoints of a right-hand side, ...).
  std::vector<double> extra_nodes;
  std::size_t max_steps = 20'000'000;
};

class Pfss;
inline Pfss solve_pfss(const Potential& q, double L, const PfssOptions& opts);

class Pfss {
 public:
  std::span<const double> grid() const { return x_; }
  std::span<const double> w_v() const { return wv_; }
  std::span<const double> w_u() const { return wu_; }
  std::span<const double> rho() const { return rho_; }
  std::span<const double> log_v() const { return logv_; }
  std::span<const double> log_u() const { return logu_; }
  std::size_t size() const { return x_.size(); }

  double L() const { return L_; }
  double tol() const { return tol_; }
  /// Point where u = v under the chosen normalization.
  double x0() const { return 0.0; }
  const Potential& potential() const { return q_; }
  const RiccatiStats& forward_stats() const { return fwd_stats_; }
  const RiccatiStats& backward_stats() const { return bwd_stats_; }

  bool contains(double x) const { return x >= x_.front() && x <= x_.back(); }

  /// Index i of the cell [x_i, x_{i+1}] holding x.
  std::size_t cell_of(double x) const {
    require_domain(x);
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, x_.size() - 2);
  }

  /// rho by linear interpolation of the stored nodes; stays in (0, 1].
  double rho_at(double x) const {
    const std::size_t i = cell_of(x);
    const double s = (x - x_[i]) / (x_[i + 1] - x_[i]);
    return (1.0 - s) * rho_[i] + s * rho_[i + 1];
  }

  double w_v_at(double x) const {
    const std::size_t i = cell_of(x);
    return cell::hermite_value(wv_cell(i), frac(i, x));
  }
  double w_u_at(double x) const {
    const std::size_t i = cell_of(x);
    return cell::hermite_value(wu_cell(i), frac(i, x));
  }

  /// 1 / (w_v - w_u) from the Hermite interpolants; the diagonal of the Green
  /// kernel off the grid. Agrees with the stored rho at nodes.
  double rho_smooth_at(double x) const {
    const std::size_t i = cell_of(x);
    const double s = frac(i, x);
    return 1.0 / (cell::hermite_value(wv_cell(i), s) - cell::hermite_value(wu_cell(i), s));
  }

  double log_v_at(double x) const {
    const auto [half_log_rho, half_c] = log_parts(x);
    return half_log_rho + half_c + shift_;
  }
  double log_u_at(double x) const {
    const auto [half_log_rho, half_c] = log_parts(x);
    return half_log_rho - half_c - shift_;
  }

  /// log v(t) - log v(x) for t <= x; at most -(x - t).
  double log_ratio_v(double t, double x) const {
    if (t > x) throw ArgumentOrderError("log_ratio_v: t > x");
    if (t == x) {
      require_domain(x);
      return 0.0;
    }
    return log_v_at(t) - log_v_at(x);
  }

  /// log u(t) - log u(x) for t >= x; at most -(t - x).
  double log_ratio_u(double t, double x) const {
    if (t < x) throw ArgumentOrderError("log_ratio_u: t < x");
    if (t == x) {
      require_domain(x);
      return 0.0;
    }
    return log_u_at(t) - log_u_at(x);
  }

  /// max over nodes of |rho (w_v - w_u) - 1|.
  double wronskian_residual() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i)
      worst = std::max(worst, std::abs(rho_[i] * (wv_[i] - wu_[i]) - 1.0));
    return worst;
  }

  /// max over interior nodes of |D w_v - (q - w_v^2)| with D the three-point
  /// difference quotient; nodes next to a jump of q are skipped. O(h^2).
  double riccati_residual() const {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < x_.size(); ++i) {
      if (q_right_[i - 1] != q_left_[i - 1] || q_right_[i] != q_left_[i] ||
          q_right_[i + 1] != q_left_[i + 1])
        continue;
      const double hm = x_[i] - x_[i - 1], hp = x_[i + 1] - x_[i];
      const double deriv = (hm * hm * wv_[i + 1] - hp * hp * wv_[i - 1] -
                            (hm * hm - hp * hp) * wv_[i]) /
                           (hm * hp * (hm + hp));
      worst = std::max(worst, std::abs(deriv - (q_right_[i] - wv_[i] * wv_[i])));
    }
    return worst;
  }

  /// Same system with u -> c u, v -> v / c where log_c = log c.
  Pfss renormalized(double log_c) const {
    Pfss out = *this;
    out.shift_ -= log_c;
    for (auto& v : out.logv_) v -= log_c;
    for (auto& v : out.logu_) v += log_c;
    return out;
  }

  /// Fault injection for the verification harness: scales stored rho only.
  void scale_rho_for_testing(double factor) {
    for (auto& r : rho_) r *= factor;
  }

  /// CSV with header x,w_v,w_u,rho,log_v,log_u.
  void write_csv(std::ostream& os) const;

 private:
  friend Pfss solve_pfss(const Potential& q, double L, const PfssOptions& opts);

  explicit Pfss(Potential q) : q_(std::move(q)) {}

  void require_domain(double x) const {
    if (!(x >= x_.front() && x <= x_.back()))
      throw DomainError("x = " + std::to_string(x) + " outside [" +
                        std::to_string(x_.front()) + ", " + std::to_string(x_.back()) +
                        "]");
  }

  double frac(std::size_t i, double x) const {
    return std::clamp((x - x_[i]) / (x_[i + 1] - x_[i]), 0.0, 1.0);
  }

  cell::HermiteData wv_cell(std::size_t i) const {
    return {x_[i + 1] - x_[i], wv_[i], q_right_[i] - wv_[i] * wv_[i], wv_[i + 1],
            q_left_[i + 1] - wv_[i + 1] * wv_[i + 1]};
  }
  cell::HermiteData wu_cell(std::size_t i) const {
    return {x_[i + 1] - x_[i], wu_[i], q_right_[i] - wu_[i] * wu_[i], wu_[i + 1],
            q_left_[i + 1] - wu_[i + 1] * wu_[i + 1]};
  }
  // 1/rho = w_v - w_u, whose derivative w_u^2 - w_v^2 does not involve q.
  cell::HermiteData inv_rho_cell(std::size_t i) const {
    return {x_[i + 1] - x_[i], wv_[i] - wu_[i], wu_[i] * wu_[i] - wv_[i] * wv_[i],
            wv_[i + 1] - wu_[i + 1], wu_[i + 1] * wu_[i + 1] - wv_[i + 1] * wv_[i + 1]};
  }

  // (1/2 log rho(x), 1/2 int_0^x dt / rho(t)) without the normalization shift.
  std::pair<double, double> log_parts(double x) const {
    const std::size_t i = cell_of(x);
    const double s = frac(i, x);
    if (s == 0.0) return {0.5 * std::log(1.0 / (wv_[i] - wu_[i])), 0.5 * cum_[i]};
    if (s == 1.0)
      return {0.5 * std::log(1.0 / (wv_[i + 1] - wu_[i + 1])), 0.5 * cum_[i + 1]};
    const double inv_rho = cell::hermite_value(inv_rho_cell(i), s);
    const double c = cum_[i] + cell::hermite_integral(inv_rho_cell(i), s);
    return {-0.5 * std::log(inv_rho), 0.5 * c};
  }

  Potential q_;
  double L_ = 0.0;
  double tol_ = 0.0;
  double shift_ = 0.0;
  std::vector<double> x_, wv_, wu_, rho_, logv_, logu_;
  std::vector<double> q_left_, q_right_;
  std::vector<double> cum_;  // int_0^x (w_v - w_u)
  RiccatiStats fwd_stats_, bwd_stats_;
};

namespace detail {

// Uniform nodes on [-L, L] merged with the required points. A required point
// closer than a thousandth of the spacing to a uniform node replaces it.
inline std::vector<double> build_grid(double L, double step, std::vector<double> required) {
  const auto cells = static_cast<std::size_t>(std::ceil(2.0 * L / step - 1e-9));
  std::vector<double> x(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    x[i] = -L + 2.0 * L * static_cast<double>(i) / static_cast<double>(cells);
  x.back() = L;
  const double h = 2.0 * L / static_cast<double>(cells);
  std::sort(required.begin(), required.end());
  for (double r : required) {
    if (!(r > -L && r < L)) continue;
    auto it = std::lower_bound(x.begin(), x.end(), r);
    const bool near_hi = it != x.end() && *it - r < 1e-3 * h;
    const bool near_lo = it != x.begin() && r - *(it - 1) < 1e-3 * h;
    if (near_hi && it != x.begin() && it + 1 != x.end()) {
      *it = r;
    } else if (near_lo && it - 1 != x.begin()) {
      *(it - 1) = r;
    } else if (!near_hi && !near_lo) {
      x.insert(it, r);
    }
  }
  x.erase(std::unique(x.begin(), x.end()), x.end());
  return x;
}

}  // namespace detail

inline Pfss solve_pfss(const Potential& q, double L, const PfssOptions& opts) {
  if (!(L > 0.0)) throw InvalidInput("solve_pfss: L must be positive");
  if (!(opts.tol > 0.0)) throw InvalidInput("solve_pfss: tol must be positive");
  if (!(opts.burn_in >= 0.0)) throw InvalidInput("solve_pfss: burn_in must be >= 0");
  const double step = opts.grid_step ? *opts.grid_step
                                     : std::min(0.01, std::pow(opts.tol, 0.25));
  if (!(step > 0.0) || step > L) throw InvalidInput("solve_pfss: bad grid step");

  std::vector<double> required = q.breakpoints();
  required.insert(required.end(), opts.extra_nodes.begin(), opts.extra_nodes.end());

  Pfss p(q);
  p.L_ = L;
  p.tol_ = opts.tol;
  p.x_ = detail::build_grid(L, step, required);
  const auto& x = p.x_;
  const std::size_t n = x.size();

  // Burn-in stretches carry only breakpoints; the integrator picks its own steps.
  const double B = opts.burn_in;
  std::vector<double> fwd_nodes{-L - B}, bwd_nodes;
  for (double b : q.breakpoints())
    if (b > -L - B && b < -L) fwd_nodes.push_back(b);
  const std::size_t fwd_offset = fwd_nodes.size();
  fwd_nodes.insert(fwd_nodes.end(), x.begin(), x.end());
  if (B == 0.0) fwd_nodes.erase(fwd_nodes.begin());
  bwd_nodes = x;
  for (double b : q.breakpoints())
    if (b > L && b < L + B) bwd_nodes.push_back(b);
  if (B > 0.0) bwd_nodes.push_back(L + B);

  // Principal branches: v grows to the right, u decays to the right.
  const double wv0 = std::sqrt(q.eval(fwd_nodes.front()));
  const double wu0 = -std::sqrt(q.eval_left(bwd_nodes.back()));
  const auto wv_all = integrate_riccati(q, fwd_nodes, wv0, opts.tol, Sweep::forward,
                                        p.fwd_stats_, opts.max_steps);
  const auto wu_all = integrate_riccati(q, bwd_nodes, wu0, opts.tol, Sweep::backward,
                                        p.bwd_stats_, opts.max_steps);
  const std::size_t off = B == 0.0 ? 0 : fwd_offset;
  p.wv_.assign(wv_all.begin() + static_cast<std::ptrdiff_t>(off),
               wv_all.begin() + static_cast<std::ptrdiff_t>(off + n));
  p.wu_.assign(wu_all.begin(), wu_all.begin() + static_cast<std::ptrdiff_t>(n));

  p.q_left_.resize(n);
  p.q_right_.resize(n);
  p.rho_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.q_left_[i] = q.eval_left(x[i]);
    p.q_right_[i] = q.eval(x[i]);
    if (!(p.wv_[i] > 0.0) || !(p.wu_[i] < 0.0))
      throw InternalFault("principal branch lost its sign at x = " + std::to_string(x[i]));
    p.rho_[i] = 1.0 / (p.wv_[i] - p.wu_[i]);
  }

  p.cum_.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i)
    p.cum_[i + 1] = p.cum_[i] + cell::hermite_integral(p.inv_rho_cell(i));
  // Normalize so that u(0) = v(0).
  const std::size_t i0 = p.cell_of(0.0);
  const double c0 =
      p.cum_[i0] + cell::hermite_integral(p.inv_rho_cell(i0), p.frac(i0, 0.0));
  for (auto& c : p.cum_) c -= c0;

  p.logv_.resize(n);
  p.logu_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double half_log_rho = 0.5 * std::log(p.rho_[i]);
    p.logv_[i] = half_log_rho + 0.5 * p.cum_[i];
    p.logu_[i] = half_log_rho - 0.5 * p.cum_[i];
  }
  return p;
}

inline Pfss solve_pfss(const Potential& q, double L, double tol) {
  PfssOptions opts;
  opts.tol = tol;
  return solve_pfss(q, L, opts);
}

inline void Pfss::write_csv(std::ostream& os) const {
  const auto old_flags = os.flags();
  const auto old_prec = os.precision(17);
  os << "x,w_v,w_u,rho,log_v,log_u\n";
  for (std::size_t i = 0; i < x_.size(); ++i)
    os << x_[i] << ',' << wv_[i] << ',' << wu_[i] << ',' << rho_[i] << ',' << logv_[i]
       << ',' << logu_[i] << '\n';
  os.flags(old_flags);
  os.precision(old_prec);
}

}  // namespace sturm
