#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nsdual/convex.hpp"

namespace nsdual {

struct Conjugate::Impl {
  std::string name;
  std::function<double(double)> value;      // +inf outside domain
  std::function<Interval(double)> subdiff;  // throws outside domain
  double r = kInf;
  bool r_in_domain = false;
  double at_zero = 0.0;
  double satiation = kInf;
  std::vector<AffineSegment> segments;  // nonempty iff piecewise affine
  std::vector<double> kinks;
};

struct Utility::Impl {
  std::string name;
  std::function<double(double)> value;       // -inf left of domain
  std::function<Interval(double)> superdiff;
  double domain_left = -kInf;
  double slope_sup = kInf;
  bool slope_sup_attained = false;
  double slope_inf = 0.0;
  double satiation = kInf;
  double sup_value = 0.0;
  std::vector<double> kinks;
  // Closed-form conjugate builder; null for custom utilities (numeric
  // fallback is used instead).
  std::function<std::shared_ptr<const Conjugate::Impl>()> conj_builder;
};

}  // namespace nsdual
