#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <vector>

#include "nsdual/convex.hpp"
#include "nsdual/kernels.hpp"
#include "nsdual/moreau.hpp"
#include "nsdual/parallel.hpp"

namespace {

using namespace nsdual;

double run_reps(const char* label, int reps, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = wall_time();
    body();
    const double dt = wall_time() - t0;
    if (dt < best) best = dt;
  }
  std::printf("  %-22s %10.3f ms\n", label, best * 1e3);
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int m = 1 << 20;
  if (argc > 1) m = std::atoi(argv[1]);
  const int reps = 5;

  std::mt19937_64 rng(42);
  auto urand = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<double> w(m), b(m), p(m);
  double psum = 0.0;
  for (int i = 0; i < m; ++i) {
    w[i] = 0.05 + 3.0 * urand();
    b[i] = 2.0 * urand() - 1.0;
    p[i] = 0.1 + urand();
    psum += p[i];
  }
  for (int i = 0; i < m; ++i) p[i] /= psum;

  const Utility u = Utility::exponential(1.0);
  const Conjugate conj = u.conjugate();
  const InfConvolution smooth(conj, 1e4);
  AtomBatch d{w.data(), b.data(), p.data(), m, 0.3};

  std::printf("atoms: %d   threads: %d   reps: %d (best shown)\n", m, hardware_threads(), reps);

  std::vector<double> val_s(m), grad_s(m), val_p(m), grad_p(m);
  const double ts = run_reps("smoothed serial", reps,
                             [&] { smoothed_map_serial(smooth, d, val_s.data(), grad_s.data()); });
  const double tp = run_reps("smoothed parallel", reps,
                             [&] { smoothed_map(smooth, d, val_p.data(), grad_p.data()); });
  const bool smooth_same =
      std::memcmp(val_s.data(), val_p.data(), sizeof(double) * m) == 0 &&
      std::memcmp(grad_s.data(), grad_p.data(), sizeof(double) * m) == 0;

  std::vector<double> cv_s(m), cv_p(m);
  const double cs =
      run_reps("conjugate serial", reps, [&] { conjugate_map_serial(conj, d, cv_s.data()); });
  const double cp = run_reps("conjugate parallel", reps, [&] { conjugate_map(conj, d, cv_p.data()); });
  const bool conj_same = std::memcmp(cv_s.data(), cv_p.data(), sizeof(double) * m) == 0;

  std::printf("  smoothed speedup  %.2fx   bitwise match: %s\n", ts / tp,
              smooth_same ? "yes" : "NO");
  std::printf("  conjugate speedup %.2fx   bitwise match: %s\n", cs / cp, conj_same ? "yes" : "NO");
  std::printf("  reduced objective %.17g\n", sum_ordered(val_p.data(), m));

  return (smooth_same && conj_same) ? 0 : 1;
}
