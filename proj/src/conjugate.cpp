#include <cmath>
#include <stdexcept>

#include "nsdual/detail/convex_impl.hpp"

namespace nsdual {

Conjugate::Conjugate(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

double Conjugate::value(double y) const { return impl_->value(y); }
Interval Conjugate::subdiff(double y) const { return impl_->subdiff(y); }
double Conjugate::r() const { return impl_->r; }
bool Conjugate::r_in_domain() const { return impl_->r_in_domain; }
double Conjugate::value_at_zero() const { return impl_->at_zero; }
double Conjugate::satiation() const { return impl_->satiation; }
const std::vector<AffineSegment>& Conjugate::affine_segments() const { return impl_->segments; }
const std::vector<double>& Conjugate::kinks() const { return impl_->kinks; }
const std::string& Conjugate::name() const { return impl_->name; }

Conjugate Conjugate::shifted(double k1, double k2) const {
  auto base = impl_;
  auto c = std::make_shared<Impl>();
  c->name = base->name + " shifted(k1=" + std::to_string(k1) + ",k2=" + std::to_string(k2) + ")";
  c->value = [base, k1, k2](double y) { return base->value(y) - k1 * y + k2; };
  c->subdiff = [base, k1](double y) { return base->subdiff(y).shifted(-k1); };
  c->r = base->r;
  c->r_in_domain = base->r_in_domain;
  c->at_zero = base->at_zero + k2;
  c->satiation = base->satiation + k1;
  c->kinks = base->kinks;
  c->segments.reserve(base->segments.size());
  for (const auto& g : base->segments)
    c->segments.push_back(AffineSegment{g.y_lo, g.y_hi, g.a + k2, g.b - k1});
  return Conjugate(c);
}

namespace {

// Endpoints [a, b] of the maximizer set argmax_x { U(x) - x y } for y in the
// interior of the slope range, located by bisection on the superdifferential.
// Slopes of a concave U decrease in x, so {x : max dU(x) >= y} is a left
// half-line whose right edge is b, and {x : min dU(x) > y} has right edge a.
struct ArgmaxSet {
  double lo, hi;
};

ArgmaxSet argmax_set(const Utility& u, double y, double tol) {
  const double dl = u.domain_left();
  auto grow_left = [&](auto pred) {
    double x = -1.0;
    if (std::isfinite(dl)) return dl;
    while (!pred(x)) {
      x *= 2.0;
      if (x < -1e18) break;
    }
    return x;
  };
  auto grow_right = [&](auto pred) {
    double x = 1.0;
    while (pred(x)) {
      x *= 2.0;
      if (x > 1e18) break;
    }
    return x;
  };
  auto bisect = [&](double lo, double hi, auto pred) {
    // pred true at lo, false at hi; returns the crossing.
    for (int it = 0; it < 200 && hi - lo > tol * (1.0 + std::abs(lo)); ++it) {
      double mid = 0.5 * (lo + hi);
      (pred(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  auto hi_ge = [&](double x) { return u.superdiff(x).hi >= y; };
  auto lo_gt = [&](double x) { return u.superdiff(x).lo > y; };

  double bl = grow_left(hi_ge), br = grow_right(hi_ge);
  double b = hi_ge(br) ? br : bisect(bl, br, hi_ge);
  double al = grow_left(lo_gt), ar = grow_right(lo_gt);
  double a = lo_gt(ar) ? ar : (lo_gt(al) ? bisect(al, ar, lo_gt) : al);
  if (a > b) a = b;
  return {a, b};
}

}  // namespace

Conjugate numeric_conjugate(const Utility& u, NumericConjugateOptions opts) {
  auto c = std::make_shared<Conjugate::Impl>();
  c->name = "numeric conj " + u.name();
  c->at_zero = u.sup_value();
  c->satiation = u.satiation();
  const double r = u.slope_sup();
  c->r = r;

  // Closed-domain probe at a finite r: the sup of U(x) - x r is finite iff
  // U(x) - x r stabilizes as x -> -inf (maximizers escape leftward).
  double r_value = kInf;
  if (std::isfinite(r) && u.domain_left() == -kInf) {
    double prev = u.value(-std::exp2(30)) + std::exp2(30) * r;
    double cur = u.value(-std::exp2(40)) + std::exp2(40) * r;
    if (std::isfinite(prev) && std::abs(cur - prev) <= 1e-7 * (1.0 + std::abs(prev))) {
      c->r_in_domain = true;
      r_value = cur;
    }
  }

  const double tol = opts.tol;
  c->value = [u, r, r_value, tol](double y) {
    if (y < 0.0) return kInf;
    if (y == 0.0) return u.sup_value();
    if (std::isfinite(r)) {
      if (y > r) return kInf;
      if (y == r) return r_value;
    }
    ArgmaxSet s = argmax_set(u, y, tol);
    return std::max(u.value(s.lo) - s.lo * y, u.value(s.hi) - s.hi * y);
  };
  c->subdiff = [u, r, r_value, tol](double y) {
    if (y < 0.0) throw std::domain_error("numeric conjugate subdifferential: y < 0");
    if (y == 0.0) return Interval{-kInf, -u.satiation()};
    if (std::isfinite(r)) {
      if (y > r || (y == r && !std::isfinite(r_value)))
        throw std::domain_error("numeric conjugate subdifferential: y outside domain");
      if (y == r) {
        ArgmaxSet s = argmax_set(u, y * (1.0 - 1e-9), tol);
        return Interval{-s.hi, kInf};
      }
    }
    ArgmaxSet s = argmax_set(u, y, tol);
    return Interval{-s.hi, -s.lo};
  };
  return Conjugate(c);
}

}  // namespace nsdual
