#pragma once

// Per-cell helpers: cubic Hermite interpolation from values and slopes at
// the two cell ends, its exact partial integral, and Gauss-Legendre nodes.

#include <array>

namespace sturm::cell {

struct HermiteData {
  double h;   // cell width
  double fa;  // value at left end
  double ma;  // slope at left end (one-sided, from inside the cell)
  double fb;
  double mb;
};

/// Interpolated value at fraction s in [0, 1] of the cell.
inline double hermite_value(const HermiteData& c, double s) {
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * c.fa + h10 * c.h * c.ma + h01 * c.fb + h11 * c.h * c.mb;
}

/// Integral of the interpolant from the left end to fraction s.
inline double hermite_integral(const HermiteData& c, double s) {
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
  const double i00 = s - s3 + 0.5 * s4;
  const double i10 = 0.5 * s2 - 2.0 / 3.0 * s3 + 0.25 * s4;
  const double i01 = s3 - 0.5 * s4;
  const double i11 = -s3 / 3.0 + 0.25 * s4;
  return c.h * (i00 * c.fa + i10 * c.h * c.ma + i01 * c.fb + i11 * c.h * c.mb);
}

/// Full-cell integral; the end-corrected trapezoid rule.
inline double hermite_integral(const HermiteData& c) {
  return 0.5 * c.h * (c.fa + c.fb) + c.h * c.h / 12.0 * (c.ma - c.mb);
}

/// 4-point Gauss-Legendre rule mapped to [0, 1].
inline constexpr std::array<double, 4> kGaussNodes = {
    0.0694318442029737123880267555535953,
    0.3300094782075718675986671204483777,
    0.6699905217924281324013328795516223,
    0.9305681557970262876119732444464048};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.1739274225687269286865319746109997,
    0.3260725774312730713134680253890003,
    0.3260725774312730713134680253890003,
    0.1739274225687269286865319746109997};

}  // namespace sturm::cell
