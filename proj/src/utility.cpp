#include "nsdual/convex.hpp"

#include <cmath>
#include <stdexcept>

#include "nsdual/detail/convex_impl.hpp"

namespace nsdual {

namespace {

using ConjImplPtr = std::shared_ptr<const Conjugate::Impl>;

std::shared_ptr<Utility::Impl> base_impl(std::string name) {
  auto impl = std::make_shared<Utility::Impl>();
  impl->name = std::move(name);
  return impl;
}

}  // namespace

Utility::Utility(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

double Utility::value(double x) const { return impl_->value(x); }
Interval Utility::superdiff(double x) const { return impl_->superdiff(x); }
double Utility::domain_left() const { return impl_->domain_left; }
double Utility::slope_sup() const { return impl_->slope_sup; }
bool Utility::slope_sup_attained() const { return impl_->slope_sup_attained; }
double Utility::slope_inf() const { return impl_->slope_inf; }
double Utility::satiation() const { return impl_->satiation; }
double Utility::sup_value() const { return impl_->sup_value; }
const std::vector<double>& Utility::kinks() const { return impl_->kinks; }
const std::string& Utility::name() const { return impl_->name; }

Conjugate Utility::conjugate() const {
  if (impl_->conj_builder) return Conjugate(impl_->conj_builder());
  return numeric_conjugate(*this);
}

Utility Utility::exponential(double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("exponential utility: eta must be > 0");
  auto impl = base_impl("exponential(eta=" + std::to_string(eta) + ")");
  impl->value = [eta](double x) { return -std::exp(-eta * x); };
  impl->superdiff = [eta](double x) {
    double s = eta * std::exp(-eta * x);
    return Interval{s, s};
  };
  impl->conj_builder = [eta, name = impl->name]() -> ConjImplPtr {
    auto c = std::make_shared<Conjugate::Impl>();
    c->name = "conj " + name;
    c->value = [eta](double y) {
      if (y < 0.0) return kInf;
      if (y == 0.0) return 0.0;
      return (y / eta) * (std::log(y / eta) - 1.0);
    };
    c->subdiff = [eta](double y) {
      if (y < 0.0) throw std::domain_error("conjugate subdifferential: y < 0");
      if (y == 0.0) return Interval{-kInf, -kInf};  // satiation at +inf
      double q = std::log(y / eta) / eta;
      return Interval{q, q};
    };
    c->r = kInf;
    c->at_zero = 0.0;
    c->satiation = kInf;
    return c;
  };
  return Utility(impl);
}

namespace {

std::shared_ptr<Utility::Impl> power_like(double p, std::string name) {
  auto impl = base_impl(std::move(name));
  impl->value = [p](double x) { return x >= 0.0 ? 0.0 : -std::pow(-x, p); };
  impl->superdiff = [p](double x) {
    double s = x >= 0.0 ? 0.0 : p * std::pow(-x, p - 1.0);
    return Interval{s, s};
  };
  impl->satiation = 0.0;
  impl->sup_value = 0.0;
  impl->conj_builder = [p, name = impl->name]() -> ConjImplPtr {
    auto c = std::make_shared<Conjugate::Impl>();
    c->name = "conj " + name;
    // sup_t { t y - t^p } = (p-1) (y/p)^{p/(p-1)}, attained at t = (y/p)^{1/(p-1)}
    double q = p / (p - 1.0);
    c->value = [p, q](double y) {
      if (y < 0.0) return kInf;
      return (p - 1.0) * std::pow(y / p, q);
    };
    c->subdiff = [p](double y) {
      if (y < 0.0) throw std::domain_error("conjugate subdifferential: y < 0");
      if (y == 0.0) return Interval{-kInf, 0.0};  // satiation at 0
      double d = std::pow(y / p, 1.0 / (p - 1.0));
      return Interval{d, d};
    };
    c->r = kInf;
    c->at_zero = 0.0;
    c->satiation = 0.0;
    return c;
  };
  return impl;
}

}  // namespace

Utility Utility::quadratic_shortfall() { return Utility(power_like(2.0, "quadratic_shortfall")); }

Utility Utility::power_shortfall(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("power shortfall: p must be > 1");
  return Utility(power_like(p, "power_shortfall(p=" + std::to_string(p) + ")"));
}

Utility Utility::piecewise_linear(std::vector<double> b, std::vector<double> s, double anchor) {
  const size_t m = b.size();
  if (m == 0 || s.size() != m)
    throw std::invalid_argument("piecewise_linear: need equal nonzero breakpoint/slope counts");
  for (size_t i = 0; i + 1 < m; ++i) {
    if (!(b[i] < b[i + 1])) throw std::invalid_argument("piecewise_linear: breakpoints must increase");
    if (!(s[i] > s[i + 1])) throw std::invalid_argument("piecewise_linear: slopes must decrease");
  }
  if (!(s.back() > 0.0)) throw std::invalid_argument("piecewise_linear: slopes must be positive");

  // Values at breakpoints, anchored at the last one.
  std::vector<double> ub(m);
  ub[m - 1] = anchor;
  for (size_t i = m - 1; i > 0; --i) ub[i - 1] = ub[i] - s[i] * (b[i] - b[i - 1]);

  auto impl = base_impl("piecewise_linear(" + std::to_string(m) + " kinks)");
  impl->value = [b, s, ub](double x) {
    const size_t m = b.size();
    if (x >= b[m - 1]) return ub[m - 1];
    size_t i = std::lower_bound(b.begin(), b.end(), x) - b.begin();  // b[i] >= x
    return ub[i] - s[i] * (b[i] - x);
  };
  impl->superdiff = [b, s](double x) {
    const size_t m = b.size();
    if (x > b[m - 1]) return Interval{0.0, 0.0};
    size_t i = std::lower_bound(b.begin(), b.end(), x) - b.begin();
    if (x == b[i]) {
      double next = (i + 1 < m) ? s[i + 1] : 0.0;
      return Interval{next, s[i]};
    }
    return Interval{s[i], s[i]};
  };
  impl->slope_sup = s[0];
  impl->slope_sup_attained = true;
  impl->slope_inf = 0.0;
  impl->satiation = b[m - 1];
  impl->sup_value = anchor;
  impl->kinks = b;
  impl->conj_builder = [b, s, ub, name = impl->name]() -> ConjImplPtr {
    const size_t m = b.size();
    auto c = std::make_shared<Conjugate::Impl>();
    c->name = "conj " + name;
    // Segment for kink b[i]: y in [s[i+1], s[i]] (s[m] := 0), value ub[i] - b[i] y.
    std::vector<AffineSegment> segs;
    for (size_t k = 0; k < m; ++k) {
      size_t i = m - 1 - k;
      double y_lo = (i + 1 < m) ? s[i + 1] : 0.0;
      segs.push_back(AffineSegment{y_lo, s[i], ub[i], -b[i]});
    }
    c->segments = segs;
    c->value = [segs](double y) {
      if (y < 0.0 || y > segs.back().y_hi) return kInf;
      for (const auto& g : segs)
        if (y <= g.y_hi) return g.a + g.b * y;
      return kInf;  // unreachable
    };
    c->subdiff = [b, s](double y) {
      const size_t m = b.size();
      if (y < 0.0 || y > s[0]) throw std::domain_error("conjugate subdifferential: y outside domain");
      if (y == 0.0) return Interval{-kInf, -b[m - 1]};
      if (y == s[0]) return Interval{-b[0], kInf};
      // Find i with y in [s[i+1], s[i]].
      for (size_t i = m; i-- > 0;) {
        double y_lo = (i + 1 < m) ? s[i + 1] : 0.0;
        if (y >= y_lo && y <= s[i]) {
          if (y == s[i] && i > 0) return Interval{-b[i], -b[i - 1]};
          return Interval{-b[i], -b[i]};
        }
      }
      throw std::domain_error("conjugate subdifferential: y outside domain");
    };
    c->r = s[0];
    c->r_in_domain = true;
    c->at_zero = ub[m - 1];
    c->satiation = b[m - 1];
    for (size_t i = m - 1; i > 0; --i) c->kinks.push_back(s[i]);
    return c;
  };
  return Utility(impl);
}

Utility Utility::custom(CustomSpec spec) {
  auto impl = base_impl(spec.name.empty() ? "custom" : spec.name);
  impl->value = std::move(spec.value);
  impl->superdiff = std::move(spec.superdiff);
  impl->domain_left = spec.domain_left;
  impl->slope_sup = spec.slope_sup;
  impl->slope_sup_attained = spec.slope_sup_attained;
  impl->slope_inf = spec.slope_inf;
  impl->satiation = spec.satiation;
  impl->sup_value = spec.sup_value;
  impl->kinks = std::move(spec.kinks);
  return Utility(impl);
}

Utility Utility::shifted(double k1, double k2) const {
  auto base = impl_;
  auto impl = base_impl(base->name + " shifted(k1=" + std::to_string(k1) +
                        ",k2=" + std::to_string(k2) + ")");
  impl->value = [base, k1, k2](double x) { return base->value(x - k1) + k2; };
  impl->superdiff = [base, k1](double x) { return base->superdiff(x - k1); };
  impl->domain_left = base->domain_left + k1;
  impl->slope_sup = base->slope_sup;
  impl->slope_sup_attained = base->slope_sup_attained;
  impl->slope_inf = base->slope_inf;
  impl->satiation = base->satiation + k1;  // +inf stays +inf
  impl->sup_value = base->sup_value + k2;
  impl->kinks.reserve(base->kinks.size());
  for (double k : base->kinks) impl->kinks.push_back(k + k1);
  if (base->conj_builder) {
    impl->conj_builder = [base, k1, k2, name = impl->name]() -> ConjImplPtr {
      auto bc = base->conj_builder();
      auto c = std::make_shared<Conjugate::Impl>();
      c->name = "conj " + name;
      c->value = [bc, k1, k2](double y) { return bc->value(y) - k1 * y + k2; };
      c->subdiff = [bc, k1](double y) { return bc->subdiff(y).shifted(-k1); };
      c->r = bc->r;
      c->r_in_domain = bc->r_in_domain;
      c->at_zero = bc->at_zero + k2;
      c->satiation = bc->satiation + k1;
      c->kinks = bc->kinks;
      c->segments.reserve(bc->segments.size());
      for (const auto& g : bc->segments)
        c->segments.push_back(AffineSegment{g.y_lo, g.y_hi, g.a + k2, g.b - k1});
      return c;
    };
  }
  return Utility(impl);
}

Utility Utility::truncated(double level) const {
  if (!(level > 0.0) || !std::isfinite(level))
    throw std::invalid_argument("truncated: level must be finite and > 0");
  auto base = impl_;
  if (base->domain_left >= -level) return *this;  // already inside: no-op

  const double xcut = -level;
  const double slope_cut = base->superdiff(xcut).hi;
  const double u_cut = base->value(xcut);

  auto impl = base_impl(base->name + " truncated(n=" + std::to_string(level) + ")");
  impl->value = [base, xcut](double x) { return x < xcut ? -kInf : base->value(x); };
  impl->superdiff = [base, xcut](double x) {
    if (x < xcut) throw std::domain_error("superdiff: x left of truncated domain");
    if (x == xcut) return Interval{base->superdiff(xcut).lo, kInf};
    return base->superdiff(x);
  };
  impl->domain_left = xcut;
  impl->slope_sup = kInf;
  impl->slope_sup_attained = false;
  impl->slope_inf = base->slope_inf;
  impl->satiation = base->satiation;
  impl->sup_value = base->sup_value;
  for (double k : base->kinks)
    if (k > xcut) impl->kinks.push_back(k);
  if (base->conj_builder) {
    impl->conj_builder = [base, level, slope_cut, u_cut, name = impl->name]() -> ConjImplPtr {
      auto bc = base->conj_builder();
      auto c = std::make_shared<Conjugate::Impl>();
      c->name = "conj " + name;
      c->value = [bc, level, slope_cut, u_cut](double y) {
        if (y < 0.0) return kInf;
        if (y >= slope_cut) return u_cut + level * y;
        return bc->value(y);
      };
      c->subdiff = [bc, level, slope_cut](double y) {
        if (y < 0.0) throw std::domain_error("conjugate subdifferential: y < 0");
        if (y > slope_cut) return Interval{level, level};
        Interval b = bc->subdiff(y);
        if (y == slope_cut) return Interval{b.lo, level};
        return b;
      };
      c->r = kInf;
      c->r_in_domain = false;
      c->at_zero = bc->at_zero;
      c->satiation = bc->satiation;
      for (double k : bc->kinks)
        if (k < slope_cut) c->kinks.push_back(k);
      c->kinks.push_back(slope_cut);
      if (!bc->segments.empty()) {
        for (const auto& g : bc->segments) {
          if (g.y_lo >= slope_cut) break;
          AffineSegment h = g;
          h.y_hi = std::min(h.y_hi, slope_cut);
          c->segments.push_back(h);
        }
        c->segments.push_back(AffineSegment{slope_cut, kInf, u_cut, level});
      }
      return c;
    };
  }
  return Utility(impl);
}

}  // namespace nsdual
