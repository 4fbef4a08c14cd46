#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nsdual/interval.hpp"

namespace nsdual {

/// One affine piece of a piecewise-affine convex function:
/// value = a + b*y on [y_lo, y_hi].  y_hi may be +inf for a tail piece.
struct AffineSegment {
  double y_lo, y_hi;
  double a, b;
};

class Conjugate;

/// Concave, nondecreasing utility U, finite on an interval unbounded to the
/// right.  Immutable; all evaluators are thread-safe.  value() returns -inf
/// left of the domain; at a finite left endpoint it returns the closure
/// value.  superdiff() is the superdifferential interval [D+ U, D- U]
/// (half-line [D+ U, +inf] at a finite left endpoint).
class Utility {
 public:
  double value(double x) const;
  Interval superdiff(double x) const;

  /// Left end of the effective domain (-inf when U is finite on all of R).
  double domain_left() const;
  /// r = sup of all slopes.  +inf for the standard families.
  double slope_sup() const;
  /// Whether slope_sup is itself a slope (r attained at some point).
  bool slope_sup_attained() const;
  /// inf of all slopes (0 for nondecreasing utilities that flatten out).
  double slope_inf() const;
  /// Satiation point: inf{ l : U(l) = sup U }.  +inf when U never flattens.
  double satiation() const;
  /// sup U = lim_{x->inf} U(x).
  double sup_value() const;
  /// Points where the superdifferential is a nondegenerate interval.
  const std::vector<double>& kinks() const;
  const std::string& name() const;

  /// U^k(x) = U(x - k1) + k2.  Slopes are unchanged.
  Utility shifted(double k1, double k2) const;
  /// Restriction to (-level, +inf).  No-op if the domain is already inside.
  Utility truncated(double level) const;

  /// Fenchel conjugate \tilde U(y) = sup_x { U(x) - x y }.  Closed form for
  /// the built-in families and their shifts/truncations; numeric fallback
  /// for custom utilities constructed without one.
  Conjugate conjugate() const;

  /// U(x) = -exp(-eta x), eta > 0.
  static Utility exponential(double eta);
  /// U(x) = -(x^-)^2.  Flat at 0 and beyond.
  static Utility quadratic_shortfall();
  /// U(x) = -(x^-)^p, p > 1.
  static Utility power_shortfall(double p);
  /// Piecewise linear concave: breakpoints b (strictly increasing) with
  /// slope s[i] > 0 on (b[i-1], b[i]] (s strictly decreasing), slope s[0]
  /// left of b[0], slope 0 on [b.back(), +inf).  anchor = U(b.back()).
  static Utility piecewise_linear(std::vector<double> breakpoints,
                                  std::vector<double> slopes,
                                  double anchor = 0.0);

  struct CustomSpec {
    std::string name;
    std::function<double(double)> value;
    std::function<Interval(double)> superdiff;
    double domain_left = -kInf;
    double slope_sup = kInf;
    bool slope_sup_attained = false;
    double slope_inf = 0.0;
    double satiation = kInf;
    double sup_value = 0.0;
    std::vector<double> kinks;
  };
  /// Escape hatch for utilities outside the built-in families.  The
  /// conjugate is computed numerically.
  static Utility custom(CustomSpec spec);

  struct Impl;
  explicit Utility(std::shared_ptr<const Impl> impl);
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Convex conjugate \tilde U of a Utility.  Domain is [0, r] or [0, r)
/// within the nonnegative half-line; value() returns +inf outside.
/// subdiff() throws std::domain_error for y < 0 or y beyond the domain.
class Conjugate {
 public:
  double value(double y) const;
  Interval subdiff(double y) const;

  /// Right end of the domain direction: r = slope_sup of the primal U.
  double r() const;
  /// Whether value(r) is finite when r < +inf (closed domain end).
  bool r_in_domain() const;
  /// \tilde U(0) = sup U.
  double value_at_zero() const;
  /// Satiation point L of the primal: max subdiff(0) = -L.
  double satiation() const;
  /// Nonempty iff \tilde U is piecewise affine on its whole domain; then the
  /// segments cover [0, r] (or [0, +inf) with an affine tail).
  const std::vector<AffineSegment>& affine_segments() const;
  /// Interior kink locations of \tilde U (jump points of the derivative).
  const std::vector<double>& kinks() const;
  const std::string& name() const;

  /// \tilde U^k(y) = \tilde U(y) - k1 y + k2, the conjugate of the shifted
  /// utility U(. - k1) + k2.
  Conjugate shifted(double k1, double k2) const;

  struct Impl;
  explicit Conjugate(std::shared_ptr<const Impl> impl);
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

struct NumericConjugateOptions {
  double tol = 1e-6;  // bisection width on the maximizer
};

/// Conjugate computed from the utility evaluators alone (bisection on the
/// superdifferential).  Independent of the closed forms; serves as the
/// fallback for custom utilities.
Conjugate numeric_conjugate(const Utility& u, NumericConjugateOptions opts = {});

}  // namespace nsdual
