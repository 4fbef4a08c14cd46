#pragma once

#include <vector>

#include "nsdual/convex.hpp"
#include "nsdual/moreau.hpp"

namespace nsdual {

/// Flattened per-atom inputs of the dual objective
///   F(W) = sum_i p[i] * ( f(W[i]) - W[i]*b[i] + x*W[i] )
/// where f is either a smoothed or an exact conjugate.  The per-atom map is
/// embarrassingly parallel; sums are always reduced in index order so the
/// parallel and serial paths produce bitwise-identical results.
struct AtomBatch {
  const double* w;
  const double* b;
  const double* p;
  int m = 0;
  double x = 0.0;
};

/// Serial reference: val[i], grad[i] per atom.
void smoothed_map_serial(const InfConvolution& f, const AtomBatch& d, double* val, double* grad);
/// OpenMP variant; identical output to the serial reference.
void smoothed_map(const InfConvolution& f, const AtomBatch& d, double* val, double* grad);

/// Unsmoothed conjugate objective values per atom (no gradient; the exact
/// conjugate may be nonsmooth).
void conjugate_map_serial(const Conjugate& f, const AtomBatch& d, double* val);
void conjugate_map(const Conjugate& f, const AtomBatch& d, double* val);

/// Fixed-order sum; the only reduction used on kernel outputs.
double sum_ordered(const double* v, int m);

/// Trip count below which the OpenMP variants stay serial.
inline constexpr int kParallelGrain = 2048;

}  // namespace nsdual
