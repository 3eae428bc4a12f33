#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "imdd/common.hpp"
#include "imdd/fft.hpp"

namespace imdd {

enum class SignalStage { tx, channel, rx };

inline const char* stage_name(SignalStage s) {
  switch (s) {
    case SignalStage::tx: return "tx";
    case SignalStage::channel: return "channel";
    case SignalStage::rx: return "rx";
  }
  return "?";
}

// Real-valued sampled signal. Rates are in GSa/s throughout.
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0;
  SignalStage stage = SignalStage::tx;

  std::size_t size() const { return samples.size(); }
  double duration_ns() const {
    return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
  }
};

// Complex optical field envelope; |sample|^2 is instantaneous power in mW.
struct OpticalField {
  std::vector<cplx> samples;
  double sample_rate = 0.0;

  std::size_t size() const { return samples.size(); }
};

inline double mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

inline double power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / double(x.size());
}

inline double rms(const std::vector<double>& x) { return std::sqrt(power(x)); }

inline double mean_power(const OpticalField& f) {
  if (f.samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& v : f.samples) s += std::norm(v);
  return s / double(f.samples.size());
}

inline void require_finite(const Waveform& w, const char* where) {
  for (double v : w.samples)
    if (!std::isfinite(v)) throw Error(std::string(where) + ": non-finite sample");
}

inline void require_finite(const OpticalField& f, const char* where) {
  for (const auto& v : f.samples)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(std::string(where) + ": non-finite sample");
}

namespace detail {

// Spectral resize used by the rational resampler. Copies the K = min(N, M)
// lowest bins, splitting (upsample) or folding (downsample) the Nyquist bin
// so the output spectrum stays Hermitian for real signals.
inline std::vector<cplx> resize_spectrum(const std::vector<cplx>& X, std::size_t M) {
  const std::size_t N = X.size();
  std::vector<cplx> Y(M, cplx(0.0, 0.0));
  if (M == N) return X;
  const std::size_t K = std::min(N, M);
  Y[0] = X[0];
  for (std::size_t k = 1; k < (K + 1) / 2; ++k) {
    Y[k] = X[k];
    Y[M - k] = X[N - k];
  }
  if (K % 2 == 0) {
    const std::size_t h = K / 2;
    if (M > N) {
      Y[h] = 0.5 * X[h];
      Y[M - h] = 0.5 * X[h];
    } else {
      Y[h] = X[h] + X[N - h];
    }
  }
  return Y;
}

}  // namespace detail

// Band-limited sample-rate conversion on the FFT grid. The ratio must be a
// small exact fraction p/q with q dividing the input length; callers size
// their records accordingly (see run_link). This keeps every stage of the
// chain circular, so delays through the link are exact circular shifts.
inline Waveform resample(const Waveform& w, double new_rate) {
  if (w.sample_rate <= 0.0 || new_rate <= 0.0)
    throw Error("resample: sample rates must be positive");
  if (w.samples.empty()) throw Error("resample: empty waveform");
  if (new_rate == w.sample_rate) return w;

  const Rational r = rational_from_ratio(new_rate / w.sample_rate, 1 << 12);
  const std::size_t N = w.samples.size();
  if (N % std::size_t(r.den) != 0)
    throw Error("resample: length " + std::to_string(N) + " not divisible by " +
                std::to_string(r.den) + " (ratio " + std::to_string(r.num) + "/" +
                std::to_string(r.den) + ")");
  const std::size_t M = N / std::size_t(r.den) * std::size_t(r.num);

  auto X = fft_of_real(w.samples);
  auto Y = detail::resize_spectrum(X, M);
  const double scale = double(M) / double(N);
  for (auto& v : Y) v *= scale;

  Waveform out;
  out.samples = ifft_to_real(std::move(Y));
  out.sample_rate = new_rate;
  out.stage = w.stage;
  return out;
}

struct SpectrumPoint {
  double freq_ghz = 0.0;
  double psd_db = 0.0;
};

// Averaged Hann-windowed periodogram, one-sided, relative dB. Diagnostic
// output only; accuracy tests use their own estimator.
inline std::vector<SpectrumPoint> estimate_spectrum(const Waveform& w,
                                                    std::size_t nfft = 4096) {
  if (w.samples.empty()) throw Error("estimate_spectrum: empty waveform");
  nfft = std::min(nfft, w.samples.size());
  if (nfft < 16) throw Error("estimate_spectrum: record too short");
  const std::size_t segments = w.samples.size() / nfft;

  std::vector<double> window(nfft);
  double wsum2 = 0.0;
  for (std::size_t n = 0; n < nfft; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * double(n) / double(nfft));
    wsum2 += window[n] * window[n];
  }

  std::vector<double> acc(nfft / 2 + 1, 0.0);
  std::vector<cplx> seg(nfft);
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t n = 0; n < nfft; ++n)
      seg[n] = cplx(w.samples[s * nfft + n] * window[n], 0.0);
    fft_inplace(seg, false);
    for (std::size_t k = 0; k <= nfft / 2; ++k) acc[k] += std::norm(seg[k]);
  }

  std::vector<SpectrumPoint> out(acc.size());
  const double fres = w.sample_rate / double(nfft);
  const double norm = 1.0 / (double(segments) * wsum2);
  for (std::size_t k = 0; k < acc.size(); ++k) {
    double p = acc[k] * norm * (k == 0 || k == nfft / 2 ? 1.0 : 2.0);
    out[k].freq_ghz = double(k) * fres;
    out[k].psd_db = 10.0 * std::log10(std::max(p, 1e-30));
  }
  return out;
}

}  // namespace imdd
