#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "imdd/core.hpp"
#include "imdd/fft.hpp"
#include "imdd/waveform.hpp"

namespace imdd {

// ---------------------------------------------------------------------------
// Tabulated complex frequency response with log-magnitude / unwrapped-phase
// interpolation. Grid starts at DC; queries beyond the last point hold the
// endpoint value.

class FrequencyResponse {
 public:
  FrequencyResponse() = default;

  FrequencyResponse(std::vector<double> freq_ghz, std::vector<cplx> gain)
      : freq_(std::move(freq_ghz)), gain_(std::move(gain)) {
    if (freq_.empty() || freq_.size() != gain_.size())
      throw Error("FrequencyResponse: grid and gain sizes must match and be non-empty");
    if (std::abs(freq_.front()) > 1e-9)
      throw Error("FrequencyResponse: grid must start at 0 GHz");
    freq_.front() = 0.0;
    for (std::size_t i = 1; i < freq_.size(); ++i)
      if (!(freq_[i] > freq_[i - 1]))
        throw Error("FrequencyResponse: grid must be strictly increasing");
    mag_db_.resize(gain_.size());
    phase_.resize(gain_.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < gain_.size(); ++i) {
      mag_db_[i] = 20.0 * std::log10(std::max(std::abs(gain_[i]), 1e-12));
      double ph = std::arg(gain_[i]);
      if (i > 0) {
        while (ph - prev > kPi) ph -= 2.0 * kPi;
        while (ph - prev < -kPi) ph += 2.0 * kPi;
      }
      phase_[i] = ph;
      prev = ph;
    }
  }

  static FrequencyResponse flat(double gain = 1.0) {
    return FrequencyResponse({0.0}, {cplx(gain, 0.0)});
  }

  bool empty() const { return freq_.empty(); }
  const std::vector<double>& grid() const { return freq_; }
  const std::vector<cplx>& gain() const { return gain_; }

  cplx at(double f_ghz) const {
    if (freq_.empty()) throw Error("FrequencyResponse::at: empty response");
    f_ghz = std::abs(f_ghz);
    if (f_ghz >= freq_.back()) return gain_.back();
    auto it = std::upper_bound(freq_.begin(), freq_.end(), f_ghz);
    std::size_t hi = std::size_t(it - freq_.begin());
    if (hi == 0) return gain_.front();
    std::size_t lo = hi - 1;
    double t = (f_ghz - freq_[lo]) / (freq_[hi] - freq_[lo]);
    double db = mag_db_[lo] + t * (mag_db_[hi] - mag_db_[lo]);
    double ph = phase_[lo] + t * (phase_[hi] - phase_[lo]);
    return std::polar(std::pow(10.0, db / 20.0), ph);
  }

  double magnitude_db(double f_ghz) const {
    return 20.0 * std::log10(std::max(std::abs(at(f_ghz)), 1e-12));
  }

 private:
  std::vector<double> freq_;
  std::vector<cplx> gain_;
  std::vector<double> mag_db_;
  std::vector<double> phase_;
};

// ---------------------------------------------------------------------------
// Bessel-Thomson lowpass prototype

namespace detail {

// Reverse Bessel polynomial coefficients, ascending powers.
// theta_n = (2n-1) theta_{n-1} + s^2 theta_{n-2}.
inline std::vector<double> reverse_bessel_coeffs(int order) {
  std::vector<double> t0{1.0};
  if (order == 0) return t0;
  std::vector<double> t1{1.0, 1.0};
  for (int n = 2; n <= order; ++n) {
    std::vector<double> t(n + 1, 0.0);
    for (int k = 0; k < int(t1.size()); ++k) t[k] += double(2 * n - 1) * t1[k];
    for (int k = 0; k < int(t0.size()); ++k) t[k + 2] += t0[k];
    t0 = std::move(t1);
    t1 = std::move(t);
  }
  return t1;
}

inline cplx polyval(const std::vector<double>& coeffs, cplx s) {
  cplx acc(0.0, 0.0);
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * s + coeffs[i];
  return acc;
}

// Prototype transfer H(s) = theta_n(0) / theta_n(s), evaluated at s = jw.
inline cplx bessel_prototype(const std::vector<double>& coeffs, double w) {
  return coeffs[0] / polyval(coeffs, cplx(0.0, w));
}

}  // namespace detail

// Normalized radian frequency at which the order-n prototype is 3 dB down
// (~2.114 for n = 4). Bisection on the monotone magnitude.
inline double bessel_3db_scale(int order) {
  if (order < 1 || order > 8) throw Error("bessel_3db_scale: order must be in 1..8");
  auto coeffs = detail::reverse_bessel_coeffs(order);
  const double target = 0.5;  // |H|^2 at the 3 dB point
  double lo = 1e-3, hi = 20.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    double p = std::norm(detail::bessel_prototype(coeffs, mid));
    (p > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Order-n Bessel-Thomson lowpass tabulated from DC to sample_rate/2 with
// |H(0)| = 1 and |H(cutoff)| = -3 dB. Maximally flat group delay in band.
inline FrequencyResponse design_bessel_thomson(int order, double cutoff_ghz,
                                               double sample_rate,
                                               std::size_t npoints = 2049) {
  if (order < 1 || order > 8) throw Error("design_bessel_thomson: order must be in 1..8");
  if (!(cutoff_ghz > 0)) throw Error("design_bessel_thomson: cutoff must be > 0");
  if (!(sample_rate > 0) || npoints < 16)
    throw Error("design_bessel_thomson: bad grid parameters");
  auto coeffs = detail::reverse_bessel_coeffs(order);
  const double w3 = bessel_3db_scale(order);
  std::vector<double> f(npoints);
  std::vector<cplx> g(npoints);
  const double fmax = sample_rate / 2.0;
  for (std::size_t i = 0; i < npoints; ++i) {
    f[i] = fmax * double(i) / double(npoints - 1);
    g[i] = detail::bessel_prototype(coeffs, w3 * f[i] / cutoff_ghz);
  }
  return FrequencyResponse(std::move(f), std::move(g));
}

// Instantiates a response descriptor on a grid reaching f_max_ghz.
inline FrequencyResponse materialize_response(const ResponseSpec& spec, double f_max_ghz) {
  if (!(f_max_ghz > 0)) throw Error("materialize_response: f_max must be > 0");
  switch (spec.kind) {
    case ResponseSpec::Kind::flat:
      return FrequencyResponse::flat(db_to_amplitude(spec.gain_db));
    case ResponseSpec::Kind::bessel: {
      auto resp = design_bessel_thomson(spec.order, spec.cutoff_ghz,
                                        2.0 * f_max_ghz);
      if (std::abs(spec.atten_at_cutoff_db - 3.0) < 1e-9) return resp;
      // Rescale the prototype so the named cutoff sits at a different
      // attenuation (e.g. a DAC quoted by its 6 dB bandwidth).
      auto coeffs = detail::reverse_bessel_coeffs(spec.order);
      const double target = db_to_power(-spec.atten_at_cutoff_db);
      double lo = 1e-3, hi = 40.0;
      for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (std::norm(detail::bessel_prototype(coeffs, mid)) > target ? lo : hi) = mid;
      }
      const double w_cut = 0.5 * (lo + hi);
      std::size_t n = 2049;
      std::vector<double> f(n);
      std::vector<cplx> g(n);
      for (std::size_t i = 0; i < n; ++i) {
        f[i] = f_max_ghz * double(i) / double(n - 1);
        g[i] = detail::bessel_prototype(coeffs, w_cut * f[i] / spec.cutoff_ghz);
      }
      return FrequencyResponse(std::move(f), std::move(g));
    }
    case ResponseSpec::Kind::first_order: {
      std::size_t n = 1025;
      std::vector<double> f(n);
      std::vector<cplx> g(n);
      for (std::size_t i = 0; i < n; ++i) {
        f[i] = f_max_ghz * double(i) / double(n - 1);
        g[i] = 1.0 / cplx(1.0, f[i] / spec.cutoff_ghz);
      }
      return FrequencyResponse(std::move(f), std::move(g));
    }
    case ResponseSpec::Kind::table: {
      if (spec.rows.size() < 2) throw Error("materialize_response: table needs >= 2 rows");
      std::vector<double> f;
      std::vector<cplx> g;
      for (const auto& r : spec.rows) {
        f.push_back(r[0]);
        g.push_back(std::polar(db_to_amplitude(r[1]), r[2] * kPi / 180.0));
      }
      return FrequencyResponse(std::move(f), std::move(g));
    }
  }
  throw Error("materialize_response: unknown kind");
}

// Product of several responses evaluated on a common grid.
inline FrequencyResponse cascade_responses(const std::vector<FrequencyResponse>& parts,
                                           double f_max_ghz, std::size_t npoints = 2049) {
  if (parts.empty()) return FrequencyResponse::flat();
  std::vector<double> f(npoints);
  std::vector<cplx> g(npoints, cplx(1.0, 0.0));
  for (std::size_t i = 0; i < npoints; ++i) {
    f[i] = f_max_ghz * double(i) / double(npoints - 1);
    for (const auto& p : parts) g[i] *= p.at(f[i]);
  }
  return FrequencyResponse(std::move(f), std::move(g));
}

// ---------------------------------------------------------------------------
// Linear filtering of real waveforms on the FFT grid

inline Waveform apply_response(const Waveform& w, const FrequencyResponse& resp) {
  if (w.samples.size() < 2) throw Error("apply_response: waveform too short");
  require_finite(w, "apply_response");
  const std::size_t N = w.samples.size();
  auto X = fft_of_real(w.samples);
  const double df = w.sample_rate / double(N);
  for (std::size_t k = 0; k <= N / 2; ++k) {
    cplx h = resp.at(double(k) * df);
    if (N % 2 == 0 && k == N / 2) h = cplx(h.real(), 0.0);  // keep spectrum Hermitian
    X[k] *= h;
    if (k > 0 && k < (N + 1) / 2) X[N - k] = std::conj(X[k]);
  }
  Waveform out;
  out.samples = ifft_to_real(std::move(X));
  out.sample_rate = w.sample_rate;
  out.stage = w.stage;
  return out;
}

// Electrical or optical gain in dB. Field amplitude scales by 10^(dB/20), so
// optical power scales by the full dB value.
inline Waveform apply_gain(Waveform w, double gain_db) {
  const double g = db_to_amplitude(gain_db);
  for (auto& v : w.samples) v *= g;
  return w;
}

inline OpticalField apply_gain(OpticalField f, double gain_db) {
  const double g = db_to_amplitude(gain_db);
  for (auto& v : f.samples) v *= g;
  return f;
}

// ---------------------------------------------------------------------------
// Mach-Zehnder modulator (chirp-free, push-pull)

// Field transfer E_out = sqrt(P_in) * cos(pi (v + bias Vpi) / (2 Vpi)), with
// insertion loss applied to the field. At quadrature the detected power is
// P/2 * (1 - sin(pi v / Vpi)): linear in v for small swing, compressive
// toward the rails.
inline OpticalField mzm_modulate(const Waveform& drive, const MzmSpec& mzm,
                                 double input_power_mw) {
  if (!(mzm.v_pi > 0)) throw Error("mzm_modulate: v_pi must be > 0");
  if (!(mzm.bias > 0 && mzm.bias < 1)) throw Error("mzm_modulate: bias must be in (0,1)");
  if (!(input_power_mw >= 0)) throw Error("mzm_modulate: input power must be >= 0");
  require_finite(drive, "mzm_modulate");
  const double amp = std::sqrt(input_power_mw) * db_to_amplitude(-mzm.insertion_loss_db);
  const double k = kPi / (2.0 * mzm.v_pi);
  const double off = kPi * mzm.bias / 2.0;
  OpticalField out;
  out.sample_rate = drive.sample_rate;
  out.samples.resize(drive.samples.size());
  for (std::size_t i = 0; i < drive.samples.size(); ++i)
    out.samples[i] = cplx(amp * std::cos(k * drive.samples[i] + off), 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Chromatic dispersion (all-pass on the field)

// Applies exp(j pi D L lambda^2 f^2 / c) per frequency bin. Magnitude is
// untouched; the power fading characteristic of IM/DD appears only after
// square-law detection.
inline OpticalField propagate_dispersion(const OpticalField& field, const FiberSpec& fiber,
                                         double wavelength_nm) {
  if (field.samples.empty()) throw Error("propagate_dispersion: empty field");
  require_finite(field, "propagate_dispersion");
  const double d_si = dispersion_parameter(wavelength_nm, fiber) * 1e-6;  // s/m^2
  const double l_m = fiber.length_km * 1e3;
  const double lam_m = wavelength_nm * 1e-9;
  const double coef = kPi * d_si * l_m * lam_m * lam_m / kSpeedOfLight;

  std::vector<cplx> X = field.samples;
  fft_inplace(X, false);
  const std::size_t N = X.size();
  const double df_hz = field.sample_rate * 1e9 / double(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double bin = k <= N / 2 ? double(k) : double(k) - double(N);
    const double f = bin * df_hz;
    X[k] *= std::polar(1.0, coef * f * f);
  }
  fft_inplace(X, true);
  OpticalField out;
  out.sample_rate = field.sample_rate;
  out.samples = std::move(X);
  return out;
}

// Frequencies where a dispersive IM/DD link with chirp-free modulation nulls:
// f_k = sqrt(c (1 + 2k) / (2 |D| L lambda^2)), ascending, below f_max.
inline std::vector<double> fading_nulls(double dispersion_ps_nm_km, double length_km,
                                        double wavelength_nm, double f_max_ghz) {
  if (!(f_max_ghz > 0)) throw Error("fading_nulls: f_max must be > 0");
  std::vector<double> nulls;
  const double dl = std::abs(dispersion_ps_nm_km * 1e-6 * length_km * 1e3);  // s/m
  if (dl == 0.0) return nulls;
  const double lam_m = wavelength_nm * 1e-9;
  for (int k = 0;; ++k) {
    const double f_hz = std::sqrt(kSpeedOfLight * (1.0 + 2.0 * k) / (2.0 * dl * lam_m * lam_m));
    const double f_ghz = f_hz / 1e9;
    if (f_ghz > f_max_ghz) break;
    nulls.push_back(f_ghz);
  }
  return nulls;
}

// ---------------------------------------------------------------------------
// Photodetection and receiver noise

// Square-law detector: i = R |E|^2 (mA for mW fields), followed by a 4th-order
// Bessel electrical front end. bandwidth_ghz <= 0 disables the band limit.
inline Waveform photodetect(const OpticalField& field, const PdSpec& pd) {
  if (!(pd.responsivity > 0)) throw Error("photodetect: responsivity must be > 0");
  if (field.samples.empty()) throw Error("photodetect: empty field");
  require_finite(field, "photodetect");
  Waveform out;
  out.sample_rate = field.sample_rate;
  out.stage = SignalStage::channel;
  out.samples.resize(field.samples.size());
  for (std::size_t i = 0; i < field.samples.size(); ++i)
    out.samples[i] = pd.responsivity * std::norm(field.samples[i]);
  if (pd.bandwidth_ghz > 0 && out.samples.size() >= 2) {
    auto resp = design_bessel_thomson(4, pd.bandwidth_ghz, out.sample_rate);
    out = apply_response(out, resp);
  }
  return out;
}

// Additive receiver noise. white_sigma here is the absolute RMS in waveform
// units before coloring; the coloring response has unity DC gain and a bump
// of coloring_gain_db at coloring_peak_ghz, |H| = 1 + (G-1) 2x^2/(1+x^4) with
// x = f/f_peak, so total power comes out at white_sigma^2 times the filter
// power gain.
inline Waveform add_noise(const Waveform& w, const NoiseSpec& noise, std::uint64_t seed) {
  if (!(noise.white_sigma >= 0)) throw Error("add_noise: white_sigma must be >= 0");
  if (noise.white_sigma == 0.0) return w;
  const std::size_t N = w.samples.size();
  if (N == 0) throw Error("add_noise: empty waveform");

  Rng rng(seed);
  std::vector<double> n(N);
  for (auto& v : n) v = noise.white_sigma * rng.gaussian();

  if (noise.coloring_gain_db != 0.0) {
    const double g = db_to_amplitude(noise.coloring_gain_db);
    std::vector<cplx> X = fft_of_real(n);
    const double df = w.sample_rate / double(N);
    for (std::size_t k = 0; k <= N / 2; ++k) {
      const double x = double(k) * df / noise.coloring_peak_ghz;
      const double x2 = x * x;
      const double h = 1.0 + (g - 1.0) * 2.0 * x2 / (1.0 + x2 * x2);
      X[k] *= h;
      if (k > 0 && k < (N + 1) / 2) X[N - k] = std::conj(X[k]);
    }
    n = ifft_to_real(std::move(X));
  }

  Waveform out = w;
  for (std::size_t i = 0; i < N; ++i) out.samples[i] += n[i];
  return out;
}

// Optical amplifier field noise: circular complex Gaussian per sample with
// total variance sigma^2 (sqrt(mW) units).
inline OpticalField add_field_noise(OpticalField f, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0)) throw Error("add_field_noise: sigma must be >= 0");
  if (sigma == 0.0) return f;
  Rng rng(seed);
  const double s = sigma / std::sqrt(2.0);
  for (auto& v : f.samples) v += cplx(s * rng.gaussian(), s * rng.gaussian());
  return f;
}

}  // namespace imdd
