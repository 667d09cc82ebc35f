#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace detform::fft {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(int n) {
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const int cols = n / 2 + 1;
  double* r = fftw_alloc_real(static_cast<std::size_t>(n) * n);
  fftw_complex* c = fftw_alloc_complex(static_cast<std::size_t>(n) * cols);
  PlanPair p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.forward = fftw_plan_dft_r2c_2d(n, n, r, c, flags);
  p.backward = fftw_plan_dft_c2r_2d(n, n, c, r, flags);
  fftw_free(r);
  fftw_free(c);
  return cache.emplace(n, p).first->second;
}

// c2r overwrites its input, so the spectrum is copied into a scratch buffer.
thread_local std::vector<std::complex<double>> scratch;

}  // namespace

void to_physical(const std::complex<double>* spec, double* phys, int n) {
  const PlanPair& p = plans_for(n);
  const std::size_t m = static_cast<std::size_t>(n) * (n / 2 + 1);
  scratch.assign(spec, spec + m);
  fftw_execute_dft_c2r(p.backward, reinterpret_cast<fftw_complex*>(scratch.data()), phys);
}

void to_spectral(const double* phys, std::complex<double>* spec, int n) {
  const PlanPair& p = plans_for(n);
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(phys),
                       reinterpret_cast<fftw_complex*>(spec));
}

}  // namespace detform::fft
