#pragma once

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "imdd/common.hpp"

namespace imdd {

namespace detail {
// FFTW's planner is not thread-safe; execution of independent plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// In-place complex FFT. Forward is unscaled, inverse is scaled by 1/N.
inline void fft_inplace(std::vector<cplx>& x, bool inverse) {
  const auto n = x.size();
  if (n == 0) throw Error("fft_inplace: empty input");
  if (n == 1) return;
  auto* ptr = reinterpret_cast<fftw_complex*>(x.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), ptr, ptr,
                            inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  }
  if (!plan) throw Error("fft_inplace: planner failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  if (inverse) {
    const double s = 1.0 / double(n);
    for (auto& v : x) v *= s;
  }
}

inline std::vector<cplx> fft_of_real(const std::vector<double>& x) {
  std::vector<cplx> X(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) X[i] = cplx(x[i], 0.0);
  fft_inplace(X, false);
  return X;
}

// Inverse FFT of a (nominally Hermitian) spectrum; imaginary residue is
// dropped, so the caller is responsible for feeding a symmetric spectrum.
inline std::vector<double> ifft_to_real(std::vector<cplx> X) {
  fft_inplace(X, true);
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) out[i] = X[i].real();
  return out;
}

}  // namespace imdd
