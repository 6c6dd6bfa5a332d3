// Serial versus parallel timings for the pair kernel and Monte Carlo.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "netmoments/net_moments.hpp"
#include "netmoments/oracle.hpp"
#include "netmoments/synth.hpp"

using namespace netmoments;

namespace {

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const Eigen::Index hidden = argc > 1 ? std::atol(argv[1]) : 64;
  const Eigen::Index samples = argc > 2 ? std::atol(argv[2]) : 200000;
  const TruncatedNet tn = synth::random_truncated(32, hidden, 10, 0.5, 1);
  const GaussianSpec g = GaussianSpec::full(synth::random_vector(32, 0.5, 2),
                                            synth::random_covariance(32, 0.5, 3));
  std::printf("threads available: %d\n", omp_get_max_threads());

  MomentResult a, b;
  const double ts = best_of(3, [&] { a = variance_general(tn, g, {20}, Exec::kSerial); });
  const double tp = best_of(3, [&] { b = variance_general(tn, g, {20}, Exec::kParallel); });
  std::printf("variance_general p=%ld: serial %.4f s, parallel %.4f s, speedup %.2fx, identical %s\n",
              static_cast<long>(hidden), ts, tp, ts / tp,
              (a.variance - b.variance).norm() == 0.0 ? "yes" : "no");

  const PLNetwork net = tn.as_network();
  oracle::McEstimate ms, mp;
  const double ms_t = best_of(2, [&] { ms = oracle::mc_moments_serial(net, g, samples, 4); });
  const double mp_t = best_of(2, [&] { mp = oracle::mc_moments(net, g, samples, 4); });
  std::printf("mc_moments n=%ld: serial %.4f s, parallel %.4f s, speedup %.2fx, identical %s\n",
              static_cast<long>(samples), ms_t, mp_t, ms_t / mp_t,
              (ms.mean - mp.mean).norm() == 0.0 ? "yes" : "no");
  return 0;
}
