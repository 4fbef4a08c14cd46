#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace nsdual {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi] on the extended real line.  Used for
/// subdifferentials, which are interval-valued at kinks and at domain
/// boundaries (where one endpoint may be infinite).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool is_point(double tol = 0.0) const { return hi - lo <= tol; }
  bool contains(double v, double tol = 0.0) const {
    return v >= lo - tol && v <= hi + tol;
  }
  /// Distance from v to the interval; 0 when contained, +inf only if the
  /// interval is empty in the relevant direction.
  double distance(double v) const {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
  }
  double clamp(double v) const { return std::min(std::max(v, lo), hi); }
  /// A finite representative, preferring the midpoint.
  double pick() const {
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(hi)) return hi;
    return 0.0;
  }

  Interval shifted(double c) const { return {lo + c, hi + c}; }
};

}  // namespace nsdual
