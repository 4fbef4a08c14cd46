#include "nsdual/moreau.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nsdual {

InfConvolution::InfConvolution(Conjugate conj, double n, double beta, double tol)
    : conj_(std::move(conj)), n_(n), beta_(beta), tol_(tol) {
  if (!(n > 0.0)) throw std::invalid_argument("inf-convolution: level must be > 0");
  z_max_ = kInf;
  if (std::isfinite(conj_.r())) z_max_ = conj_.r_in_domain() ? conj_.r() : conj_.r() * (1.0 - 1e-14);
}

double InfConvolution::prox_affine(double y) const {
  double best_z = 0.0, best_g = kInf;
  for (const auto& seg : conj_.affine_segments()) {
    double z = std::clamp(y - (seg.b - beta_) / n_, seg.y_lo, seg.y_hi);
    double g = (seg.a + seg.b * z) - beta_ * z + 0.5 * n_ * (z - y) * (z - y);
    if (g < best_g) {
      best_g = g;
      best_z = z;
    }
  }
  return best_z;
}

double InfConvolution::prox_bisect(double y) const {
  // F(z) = subdiff(conj)(z) - beta + n (z - y) is a strictly increasing
  // set-valued map; the prox is the point where 0 lies in it.
  auto f_lo = [&](double z) { return conj_.subdiff(z).lo - beta_ + n_ * (z - y); };
  auto f_hi = [&](double z) { return conj_.subdiff(z).hi - beta_ + n_ * (z - y); };

  if (f_hi(0.0) >= 0.0) return 0.0;
  if (std::isfinite(z_max_) && f_lo(z_max_) <= 0.0) return z_max_;

  double a = 0.0;
  double b = std::max(1.0, y);
  b = std::min(b, z_max_);
  while (f_lo(b) < 0.0) {
    a = b;
    b *= 2.0;
    if (b >= z_max_) {
      b = z_max_;
      break;
    }
  }
  // Relative-in-z stopping keeps subdiff(prox) usable even when the prox is
  // tiny (e.g. exponential conjugates push z toward 0 exponentially fast).
  for (int it = 0; it < 200 && b - a > tol_ * std::min(1.0 + std::abs(y), b); ++it) {
    double mid = 0.5 * (a + b);
    if (f_hi(mid) < 0.0)
      a = mid;
    else if (f_lo(mid) > 0.0)
      b = mid;
    else
      return mid;
  }
  return 0.5 * (a + b);
}

double InfConvolution::prox(double y) const {
  if (!conj_.affine_segments().empty()) return prox_affine(y);
  return prox_bisect(y);
}

double InfConvolution::value(double y) const {
  double z = prox(y);
  return beta_ * y + conj_.value(z) - beta_ * z + 0.5 * n_ * (z - y) * (z - y);
}

double InfConvolution::deriv(double y) const {
  double z = prox(y);
  double d = n_ * (y - z) + beta_;
  // Envelope derivative lies in the subdifferential at the prox; clamping
  // removes the cancellation noise of n*(y - z) for large n.  Skip it when
  // the prox is too small for its subdifferential to be reliable.
  if (z <= 1e-12 * (1.0 + std::abs(y))) return d;
  return conj_.subdiff(z).clamp(d);
}

TransferCheckResult elasticity_transfer_check(const Conjugate& conj, double beta,
                                              const std::vector<double>& levels, double y0,
                                              int y_count, int mu_count) {
  TransferCheckResult out;
  std::vector<double> ys, mus;
  for (int i = 0; i < y_count; ++i) ys.push_back(y0 * std::exp2(-i));
  for (int i = 0; i < mu_count; ++i)
    mus.push_back(0.5 + 0.5 * i / std::max(1, mu_count - 1));

  // One shift uniform over the sweep keeps the ratios comparable.
  double vmin = kInf;
  std::vector<InfConvolution> smooths;
  smooths.reserve(levels.size());
  for (double n : levels) smooths.emplace_back(conj, n, beta);
  for (const auto& s : smooths)
    for (double y : ys)
      for (double mu : mus) vmin = std::min(vmin, std::min(s.value(y) - 2.0 * beta * y,
                                                           s.value(mu * y) - 2.0 * beta * mu * y));
  if (!(vmin > 0.0)) out.shift_k2 = 1.0 - vmin;

  double c = 1.0, gamma = 0.0, base_c = 1.0;
  auto sweep = [&](auto&& f, double& cmax, double* gmax) {
    for (double y : ys) {
      double fy = f(y) + out.shift_k2;
      if (!(fy > 0.0) || !std::isfinite(fy)) return false;
      for (double mu : mus) {
        double fmu = f(mu * y) + out.shift_k2;
        if (!std::isfinite(fmu)) return false;
        double ratio = fmu / fy;
        cmax = std::max(cmax, ratio);
        if (gmax && mu < 1.0 && ratio > 0.0)
          *gmax = std::max(*gmax, std::log(ratio) / std::log(mu));
      }
    }
    return true;
  };

  bool ok = true;
  for (const auto& s : smooths)
    ok = ok && sweep([&](double y) { return s.value(y) - 2.0 * beta * y; }, c, &gamma);
  ok = sweep([&](double y) { return conj.value(y) - 2.0 * beta * y; }, base_c, nullptr) && ok;

  out.c = c;
  out.base_c = base_c;
  out.gamma = gamma;
  out.ok = ok && std::isfinite(c) && std::isfinite(base_c);
  return out;
}

}  // namespace nsdual
