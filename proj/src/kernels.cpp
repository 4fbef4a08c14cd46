#include "nsdual/kernels.hpp"

#include "nsdual/parallel.hpp"

namespace nsdual {

namespace {

inline void smoothed_atom(const InfConvolution& f, const AtomBatch& d, int i, double* val,
                          double* grad) {
  double w = d.w[i];
  val[i] = d.p[i] * (f.value(w) - w * d.b[i] + d.x * w);
  grad[i] = d.p[i] * (f.deriv(w) - d.b[i] + d.x);
}

}  // namespace

void smoothed_map_serial(const InfConvolution& f, const AtomBatch& d, double* val, double* grad) {
  for (int i = 0; i < d.m; ++i) smoothed_atom(f, d, i, val, grad);
}

void smoothed_map(const InfConvolution& f, const AtomBatch& d, double* val, double* grad) {
  parallel_for(d.m, kParallelGrain, [&](int i) { smoothed_atom(f, d, i, val, grad); });
}

void conjugate_map_serial(const Conjugate& f, const AtomBatch& d, double* val) {
  for (int i = 0; i < d.m; ++i) {
    double w = d.w[i];
    val[i] = d.p[i] * (f.value(w) - w * d.b[i] + d.x * w);
  }
}

void conjugate_map(const Conjugate& f, const AtomBatch& d, double* val) {
  parallel_for(d.m, kParallelGrain, [&](int i) {
    double w = d.w[i];
    val[i] = d.p[i] * (f.value(w) - w * d.b[i] + d.x * w);
  });
}

double sum_ordered(const double* v, int m) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += v[i];
  return s;
}

}  // namespace nsdual
