#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sturm/errors.hpp"

namespace sturm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Shapes with closed-form antiderivatives. Every integral below is exact up
// to roundoff; nothing in this header does numerical quadrature.

struct Constant {
  double value = 0.0;
};

/// sum_k coefficients[k] * x^k
struct Polynomial {
  std::vector<double> coefficients;
};

/// offset + amplitude * sin(frequency * x + phase)
struct Sinusoid {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
};

using Shape = std::variant<Constant, Polynomial, Sinusoid>;

namespace detail {

inline double poly_value(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

// sum_k c_k (b^{k+1} - a^{k+1}) / (k+1), written as (b - a) * sum_j b^j a^{k-j}
// so that narrow windows far from the origin do not cancel.
inline double poly_integral(const std::vector<double>& c, double a, double b) {
  double total = 0.0;
  double s = 1.0;   // sum_{j=0}^{k} b^j a^{k-j}
  double bk = 1.0;  // b^k
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k > 0) {
      bk *= b;
      s = a * s + bk;
    }
    total += c[k] * s / static_cast<double>(k + 1);
  }
  return (b - a) * total;
}

inline std::size_t poly_degree(const std::vector<double>& c) {
  std::size_t deg = c.size();
  while (deg > 0 && c[deg - 1] == 0.0) --deg;
  return deg == 0 ? 0 : deg - 1;
}

}  // namespace detail

inline double shape_value(const Shape& s, double x) {
  return std::visit(
      [x](const auto& sh) -> double {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return sh.value;
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          return detail::poly_value(sh.coefficients, x);
        } else {
          return sh.offset + sh.amplitude * std::sin(sh.frequency * x + sh.phase);
        }
      },
      s);
}

/// Exact integral of one shape over [a, b] (a <= b, both finite).
inline double shape_integral(const Shape& s, double a, double b) {
  return std::visit(
      [a, b](const auto& sh) -> double {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return sh.value * (b - a);
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          return detail::poly_integral(sh.coefficients, a, b);
        } else {
          if (sh.frequency == 0.0)
            return (sh.offset + sh.amplitude * std::sin(sh.phase)) * (b - a);
          const double w = sh.frequency;
          return sh.offset * (b - a) +
                 2.0 * sh.amplitude / w * std::sin(0.5 * w * (a + b) + sh.phase) *
                     std::sin(0.5 * w * (b - a));
        }
      },
      s);
}

struct Segment {
  double from = -kInf;
  double to = kInf;
  Shape shape = Constant{1.0};
};

/// A function on the whole real line, given as shapes on [from, to) pieces
/// that tile the line. Used for potentials and for right-hand sides.
class PiecewiseFunction {
 public:
  PiecewiseFunction() : PiecewiseFunction(std::vector<Segment>{Segment{}}) {}

  explicit PiecewiseFunction(std::vector<Segment> segments)
      : segments_(std::move(segments)) {
    // Drop empty pieces (from == to) produced by clipping.
    std::erase_if(segments_, [](const Segment& s) { return s.from == s.to; });
    if (segments_.empty()) throw InvalidInput("piecewise function has no segments");
    if (segments_.front().from != -kInf)
      throw InvalidInput("first segment must start at -inf");
    if (segments_.back().to != kInf)
      throw InvalidInput("last segment must end at +inf");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      if (!(s.from < s.to))
        throw InvalidInput("segment " + std::to_string(i) + " has from >= to");
      if (i > 0 && segments_[i - 1].to != s.from)
        throw InvalidInput("segments " + std::to_string(i - 1) + " and " +
                           std::to_string(i) + " leave a gap or overlap");
      if (i > 0 && !std::isfinite(s.from))
        throw InvalidInput("interior breakpoint must be finite");
    }
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }

  /// Finite breakpoints, ascending.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < segments_.size(); ++i) out.push_back(segments_[i].from);
    return out;
  }

  std::size_t segment_index(double x) const {
    // Index of the piece with from <= x < to (right-continuous).
    auto it = std::upper_bound(
        segments_.begin() + 1, segments_.end(), x,
        [](double v, const Segment& s) { return v < s.from; });
    return static_cast<std::size_t>(it - segments_.begin()) - 1;
  }

  /// Right-limit value at x.
  double operator()(double x) const { return value(x); }
  double value(double x) const {
    return shape_value(segments_[segment_index(x)].shape, x);
  }

  /// Left-limit value at x.
  double left_value(double x) const {
    std::size_t i = segment_index(x);
    if (i > 0 && segments_[i].from == x) --i;
    return shape_value(segments_[i].shape, x);
  }

  /// Exact integral over [a, b]; requires finite a <= b.
  double integral(double a, double b) const {
    if (a > b) throw ArgumentOrderError("integral: a > b");
    if (a == b) return 0.0;
    double total = 0.0;
    std::size_t i = segment_index(a);
    double lo = a;
    while (lo < b) {
      const Segment& s = segments_[i];
      const double hi = std::min(b, s.to);
      total += shape_integral(s.shape, lo, hi);
      lo = hi;
      ++i;
    }
    return total;
  }

 private:
  std::vector<Segment> segments_;
};

/// An admissible potential: piecewise-analytic, q(x) >= 1 everywhere.
/// Immutable after construction.
class Potential {
 public:
  /// Audits q >= 1 and throws PotentialAuditError on violation.
  explicit Potential(PiecewiseFunction fn, std::optional<double> domain_hint = {})
      : fn_(std::move(fn)) {
    audit();
    hint_ = domain_hint ? *domain_hint : default_domain_hint();
    if (!(hint_ > 0.0)) throw InvalidInput("domain_hint must be positive");
  }

  static Potential constant(double c) {
    return Potential(PiecewiseFunction({Segment{-kInf, kInf, Constant{c}}}));
  }
  static Potential polynomial(std::vector<double> coefficients) {
    return Potential(PiecewiseFunction(
        {Segment{-kInf, kInf, Polynomial{std::move(coefficients)}}}));
  }
  static Potential sinusoid(double offset, double amplitude, double frequency = 1.0,
                            double phase = 0.0) {
    return Potential(PiecewiseFunction(
        {Segment{-kInf, kInf, Sinusoid{offset, amplitude, frequency, phase}}}));
  }

  double eval(double x) const { return fn_.value(x); }
  double operator()(double x) const { return fn_.value(x); }
  double eval_left(double x) const { return fn_.left_value(x); }

  double integrate(double a, double b) const {
    if (a > b) throw ArgumentOrderError("integrate: a > b");
    return fn_.integral(a, b);
  }

  /// Integral of q over [x - a, x + a].
  double window_mass(double x, double a) const {
    if (!(a > 0.0)) throw InvalidWindowError("window_mass: half-width must be > 0");
    return fn_.integral(x - a, x + a);
  }

  std::vector<double> breakpoints() const { return fn_.breakpoints(); }
  const PiecewiseFunction& function() const noexcept { return fn_; }
  double domain_hint() const noexcept { return hint_; }

  /// True when both end pieces are non-constant polynomials, i.e. q grows
  /// without bound in both directions and every sliding window mass diverges.
  bool grows_at_both_ends() const {
    return end_grows(fn_.segments().front()) && end_grows(fn_.segments().back());
  }

  /// q + c; used to check that spectra shift rigidly.
  Potential shifted(double c) const {
    std::vector<Segment> segs = fn_.segments();
    for (auto& s : segs) {
      std::visit(
          [c](auto& sh) {
            using T = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<T, Constant>) {
              sh.value += c;
            } else if constexpr (std::is_same_v<T, Polynomial>) {
              if (sh.coefficients.empty()) sh.coefficients.push_back(0.0);
              sh.coefficients[0] += c;
            } else {
              sh.offset += c;
            }
          },
          s.shape);
    }
    return Potential(PiecewiseFunction(std::move(segs)));
  }

 private:
  static bool end_grows(const Segment& s) {
    const auto* p = std::get_if<Polynomial>(&s.shape);
    return p != nullptr && detail::poly_degree(p->coefficients) >= 1;
  }

  static std::string where(const Segment& s) {
    std::ostringstream os;
    os << "[" << s.from << ", " << s.to << ")";
    return os.str();
  }

  void audit() const {
    constexpr int kAuditPoints = 10000;
    for (const Segment& s : fn_.segments()) {
      if (const auto* c = std::get_if<Constant>(&s.shape)) {
        if (!(c->value >= 1.0))
          throw PotentialAuditError("constant " + std::to_string(c->value) +
                                    " < 1 on " + where(s));
      } else if (const auto* sn = std::get_if<Sinusoid>(&s.shape)) {
        if (!std::isfinite(sn->offset) || !std::isfinite(sn->amplitude) ||
            !std::isfinite(sn->frequency) || !std::isfinite(sn->phase))
          throw PotentialAuditError("non-finite sinusoid parameter on " + where(s));
        if (!(sn->offset - std::abs(sn->amplitude) >= 1.0))
          throw PotentialAuditError("sinusoid offset - |amplitude| < 1 on " + where(s));
      } else {
        const auto& c = std::get<Polynomial>(s.shape).coefficients;
        for (double v : c)
          if (!std::isfinite(v))
            throw PotentialAuditError("non-finite polynomial coefficient on " + where(s));
        const std::size_t deg = detail::poly_degree(c);
        if (c.empty() || deg == 0) {
          const double v = c.empty() ? 0.0 : c[0];
          if (!(v >= 1.0)) throw PotentialAuditError("polynomial value < 1 on " + where(s));
          continue;
        }
        // Beyond the Cauchy bound of p - 1 the sign of p - 1 is fixed by the
        // leading term; inside it we sample.
        const double lead = c[deg];
        double bound = 0.0;
        for (std::size_t k = 0; k < deg; ++k)
          bound = std::max(bound, std::abs((k == 0 ? c[0] - 1.0 : c[k]) / lead));
        bound += 1.0;
        const bool odd = deg % 2 == 1;
        if (s.to == kInf && !(lead > 0.0))
          throw PotentialAuditError("polynomial tends to -inf at +inf on " + where(s));
        if (s.from == -kInf && !((odd ? -lead : lead) > 0.0))
          throw PotentialAuditError("polynomial tends to -inf at -inf on " + where(s));
        const double lo = std::max(s.from, -bound);
        const double hi = std::min(s.to, bound);
        if (lo > hi) continue;
        for (int i = 0; i <= kAuditPoints; ++i) {
          const double x = lo + (hi - lo) * i / kAuditPoints;
          if (!(detail::poly_value(c, x) >= 1.0)) {
            std::ostringstream os;
            os << "polynomial value " << detail::poly_value(c, x) << " < 1 at x = " << x
               << " on " << where(s);
            throw PotentialAuditError(os.str());
          }
        }
      }
    }
  }

  // Smallest L with window_mass(+-L, 1) >= 1e3 when q grows at both ends,
  // 50 otherwise.
  double default_domain_hint() const {
    constexpr double kFallback = 50.0;
    if (!grows_at_both_ends()) return kFallback;
    auto ok = [this](double L) {
      return fn_.integral(L - 1.0, L + 1.0) >= 1e3 &&
             fn_.integral(-L - 1.0, -L + 1.0) >= 1e3;
    };
    double prev = 0.0;
    for (double L = 0.0; L <= 1e4; L += 0.5) {
      if (ok(L)) {
        if (L == 0.0) return 0.5;
        double lo = prev, hi = L;
        for (int i = 0; i < 60; ++i) {
          const double mid = 0.5 * (lo + hi);
          (ok(mid) ? hi : lo) = mid;
        }
        return hi;
      }
      prev = L;
    }
    return kFallback;
  }

  PiecewiseFunction fn_;
  double hint_ = 50.0;
};

}  // namespace sturm
