#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "imdd/txdsp.hpp"

namespace imdd {

// ---------------------------------------------------------------------------
// Rate conversion, synchronization, normalization

// Brings the detected waveform to exactly 2 samples per symbol for the
// fractionally spaced equalizers.
inline Waveform resample_to_2sps(const Waveform& w, double symbol_rate_gbd) {
  if (!(symbol_rate_gbd > 0)) throw Error("resample_to_2sps: symbol rate must be > 0");
  if (w.sample_rate < symbol_rate_gbd)
    throw Error("resample_to_2sps: input sampled below the symbol rate");
  Waveform out = resample(w, 2.0 * symbol_rate_gbd);
  out.stage = SignalStage::rx;
  return out;
}

inline Waveform normalize(const Waveform& w) {
  if (w.samples.empty()) throw Error("normalize: empty waveform");
  Waveform out = w;
  const double m = mean(out.samples);
  for (auto& v : out.samples) v -= m;
  const double r = rms(out.samples);
  if (!(r > 0)) throw Error("normalize: waveform has no AC content");
  for (auto& v : out.samples) v /= r;
  return out;
}

struct SyncResult {
  Waveform aligned;       // sample 2k sits on symbol k
  std::size_t delay = 0;  // circular shift applied, in rx samples
  bool polarity_flipped = false;
  double peak_ratio = 0.0;  // correlation peak over correlation RMS
};

// Circular correlation against the known symbol sequence. The simulation
// chain is fully circular, so the true delay is an exact circular shift;
// residual fractional delay from analog group delay is left to the T/2
// equalizer. A negative correlation peak means the link inverted the signal
// (quadrature MZM slope); the output is flipped back and flagged.
inline SyncResult synchronize(const Waveform& rx2sps, const SymbolSequence& ref) {
  if (ref.size() < 64) throw Error("synchronize: reference too short");
  const std::size_t Nr = rx2sps.samples.size();
  const std::size_t Ns = ref.size();
  if (Nr < 2 * Ns) throw Error("synchronize: record shorter than reference");
  if (std::abs(rx2sps.sample_rate - 2.0 * ref.symbol_rate_gbd) >
      1e-9 * rx2sps.sample_rate)
    throw Error("synchronize: waveform is not at 2 samples per symbol");

  std::vector<cplx> A(Nr), B(Nr, cplx(0.0, 0.0));
  const double m = mean(rx2sps.samples);
  for (std::size_t n = 0; n < Nr; ++n) A[n] = cplx(rx2sps.samples[n] - m, 0.0);
  for (std::size_t k = 0; k < Ns; ++k) B[2 * k] = cplx(ref.level(k), 0.0);
  fft_inplace(A, false);
  fft_inplace(B, false);
  for (std::size_t n = 0; n < Nr; ++n) A[n] *= std::conj(B[n]);
  fft_inplace(A, true);

  std::size_t best = 0;
  double best_mag = -1.0, sumsq = 0.0;
  for (std::size_t d = 0; d < Nr; ++d) {
    const double c = A[d].real();
    sumsq += c * c;
    if (std::abs(c) > best_mag) {
      best_mag = std::abs(c);
      best = d;
    }
  }
  const double corr_rms = std::sqrt(sumsq / double(Nr));
  const double ratio = corr_rms > 0 ? best_mag / corr_rms : 0.0;
  if (ratio < 5.0)
    throw SyncError("synchronize: no correlation peak (ratio " +
                    std::to_string(ratio) + " < 5)");

  SyncResult res;
  res.delay = best;
  res.polarity_flipped = A[best].real() < 0.0;
  res.peak_ratio = ratio;
  res.aligned.sample_rate = rx2sps.sample_rate;
  res.aligned.stage = SignalStage::rx;
  res.aligned.samples.resize(Nr);
  const double sign = res.polarity_flipped ? -1.0 : 1.0;
  for (std::size_t n = 0; n < Nr; ++n)
    res.aligned.samples[n] = sign * rx2sps.samples[(n + best) % Nr];
  return res;
}

// ---------------------------------------------------------------------------
// Symbol decisions

inline std::int16_t slice(double y, const ModulationFormat& fmt) {
  const auto& L = fmt.levels;
  std::size_t k = 0;
  while (k + 1 < L.size() && y > 0.5 * (L[k] + L[k + 1])) ++k;
  return std::int16_t(k);
}

// Residual lag-1 postcursor of an equalized record: correlation of the
// decision error with the previous decided level over that level's power.
inline double estimate_postcursor(const std::vector<double>& soft,
                                  const std::vector<std::int16_t>& decisions,
                                  const ModulationFormat& fmt) {
  if (soft.size() != decisions.size())
    throw Error("estimate_postcursor: length mismatch");
  if (soft.size() < 1000) throw Error("estimate_postcursor: record too short");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k < soft.size(); ++k) {
    const double prev = fmt.levels[std::size_t(decisions[k - 1])];
    const double resid = soft[k] - fmt.levels[std::size_t(decisions[k])];
    num += resid * prev;
    den += prev * prev;
  }
  if (!(den > 0)) throw Error("estimate_postcursor: degenerate decisions");
  return num / den;
}

// Exact MAP sequence detector for y_k = s_k + h1 * s_{k-1} + noise, one state
// per PAM level. The symbol before the record is taken as amplitude zero;
// any consumer comparing against this detector must assume the same.
inline std::vector<std::int16_t> mlse_1tap(const std::vector<double>& soft, double h1,
                                           const ModulationFormat& fmt) {
  if (!(std::abs(h1) < 1.0)) throw Error("mlse_1tap: |h1| must be < 1");
  const std::size_t T = soft.size();
  if (T == 0) throw Error("mlse_1tap: empty input");
  const int M = fmt.order();
  const auto& L = fmt.levels;

  std::vector<double> metric(std::size_t(M), 0.0);
  std::vector<double> next(std::size_t(M), 0.0);
  std::vector<std::uint8_t> back(T * std::size_t(M));

  for (int s = 0; s < M; ++s) {
    const double e = soft[0] - L[std::size_t(s)];
    metric[std::size_t(s)] = e * e;
    back[std::size_t(s)] = 0;
  }
  for (std::size_t k = 1; k < T; ++k) {
    for (int s = 0; s < M; ++s) {
      double bestm = std::numeric_limits<double>::infinity();
      int bestp = 0;
      for (int p = 0; p < M; ++p) {
        const double e = soft[k] - L[std::size_t(s)] - h1 * L[std::size_t(p)];
        const double m = metric[std::size_t(p)] + e * e;
        if (m < bestm) {
          bestm = m;
          bestp = p;
        }
      }
      next[std::size_t(s)] = bestm;
      back[k * std::size_t(M) + std::size_t(s)] = std::uint8_t(bestp);
    }
    metric.swap(next);
  }

  int s = 0;
  for (int i = 1; i < M; ++i)
    if (metric[std::size_t(i)] < metric[std::size_t(s)]) s = i;
  std::vector<std::int16_t> out(T);
  for (std::size_t k = T; k-- > 0;) {
    out[k] = std::int16_t(s);
    s = back[k * std::size_t(M) + std::size_t(s)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adaptive equalizers
//
// Both equalizers run two passes: an LMS adaptation pass (known symbols for
// the training prefix, decision-directed after), then a re-filtering pass
// over the whole record with the converged taps so every symbol sees the
// same filter. The *_mlse1 variants keep the lag-1 postcursor out of the
// final feedback subtraction and hand it to the sequence detector.

struct EqualizeResult {
  std::vector<double> soft;            // equalized symbol-rate samples
  std::vector<std::int16_t> decisions; // level indices
  std::vector<double> ff_taps;
  std::vector<double> fb_taps;
  double h1 = 0.0;          // residual postcursor given to the MLSE
  double training_mse = 0.0;
  Waveform trace;           // optional 2 sps equalized waveform (eye plots)
};

namespace detail {

inline void check_adaptation(const std::vector<double>& taps, double mse_first,
                             double mse_last, const char* what) {
  for (double t : taps)
    if (!std::isfinite(t))
      throw AdaptationError(std::string(what) + ": taps diverged (non-finite)");
  if (!std::isfinite(mse_last) ||
      (mse_last > 10.0 * mse_first + 1e-12 && mse_last > 0.25))
    throw AdaptationError(std::string(what) + ": LMS diverged (training MSE grew from " +
                          std::to_string(mse_first) + " to " + std::to_string(mse_last) + ")");
}

// x is at 2 samples per symbol; output k taps the window centered on sample
// 2k. Out-of-range samples read as zero (record guards cover the edges).
inline double ff_dot(const std::vector<double>& x, const std::vector<double>& w,
                     std::ptrdiff_t center) {
  const std::ptrdiff_t half = std::ptrdiff_t(w.size() - 1) / 2;
  const std::ptrdiff_t n0 = center - half;
  const std::ptrdiff_t N = std::ptrdiff_t(x.size());
  double acc = 0.0;
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(w.size()); ++i) {
    const std::ptrdiff_t n = n0 + i;
    if (n >= 0 && n < N) acc += w[std::size_t(i)] * x[std::size_t(n)];
  }
  return acc;
}

inline void ff_update(const std::vector<double>& x, std::vector<double>& w,
                      std::ptrdiff_t center, double mu_e) {
  const std::ptrdiff_t half = std::ptrdiff_t(w.size() - 1) / 2;
  const std::ptrdiff_t n0 = center - half;
  const std::ptrdiff_t N = std::ptrdiff_t(x.size());
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(w.size()); ++i) {
    const std::ptrdiff_t n = n0 + i;
    if (n >= 0 && n < N) w[std::size_t(i)] += mu_e * x[std::size_t(n)];
  }
}

}  // namespace detail

// T/2-spaced LMS feed-forward equalizer.
inline EqualizeResult ffe_equalize(const Waveform& rx2sps, const EqualizerConfig& cfg,
                                   const SymbolSequence& ref, bool want_trace = false) {
  {
    std::vector<std::string> issues;
    cfg.validate(issues, "equalizer.");
    if (!issues.empty()) throw ValidationError(issues);
  }
  const std::size_t Nsym = ref.size();
  if (rx2sps.samples.size() < 2 * Nsym)
    throw Error("ffe_equalize: record shorter than reference");
  if (std::size_t(cfg.training_symbols) > Nsym)
    throw Error("ffe_equalize: training prefix longer than record");
  const Waveform xw = normalize(rx2sps);
  const auto& x = xw.samples;
  const auto& fmt = ref.format;

  std::vector<double> w(std::size_t(cfg.ff_taps), 0.0);
  w[std::size_t(cfg.ff_taps) / 2] = 1.0;
  const double mu = cfg.step_size;
  const std::size_t T = std::size_t(cfg.training_symbols);

  double se_first = 0.0, se_last = 0.0;
  std::size_t n_first = 0, n_last = 0;
  for (std::size_t k = 0; k < Nsym; ++k) {
    const double y = detail::ff_dot(x, w, std::ptrdiff_t(2 * k));
    const double target =
        k < T ? ref.level(k) : fmt.levels[std::size_t(slice(y, fmt))];
    const double e = target - y;
    detail::ff_update(x, w, std::ptrdiff_t(2 * k), mu * e);
    if (k >= T / 8 && k < T / 4) { se_first += e * e; ++n_first; }
    if (k >= 3 * T / 4 && k < T) { se_last += e * e; ++n_last; }
  }
  const double mse_first = n_first ? se_first / double(n_first) : 0.0;
  const double mse_last = n_last ? se_last / double(n_last) : 0.0;
  detail::check_adaptation(w, mse_first, mse_last, "ffe");

  EqualizeResult res;
  res.ff_taps = w;
  res.training_mse = mse_last;
  res.soft.resize(Nsym);
  res.decisions.resize(Nsym);
  for (std::size_t k = 0; k < Nsym; ++k) {
    res.soft[k] = detail::ff_dot(x, w, std::ptrdiff_t(2 * k));
    res.decisions[k] = slice(res.soft[k], fmt);
  }
  if (want_trace) {
    res.trace.sample_rate = rx2sps.sample_rate;
    res.trace.stage = SignalStage::rx;
    res.trace.samples.resize(x.size());
    for (std::size_t n = 0; n < x.size(); ++n)
      res.trace.samples[n] = detail::ff_dot(x, w, std::ptrdiff_t(n));
  }
  return res;
}

// T/2-spaced feed-forward section plus symbol-spaced decision feedback.
// Training uses known symbols in the feedback path; after the prefix the
// loop is decision-directed. For kind dfe_mlse1 the converged lag-1 tap is
// excluded from the final subtraction pass so the sequence detector sees it.
inline EqualizeResult dfe_equalize(const Waveform& rx2sps, const EqualizerConfig& cfg,
                                   const SymbolSequence& ref, bool want_trace = false) {
  {
    std::vector<std::string> issues;
    cfg.validate(issues, "equalizer.");
    if (!issues.empty()) throw ValidationError(issues);
  }
  if (cfg.fb_taps < 1) throw Error("dfe_equalize: fb_taps must be >= 1");
  const std::size_t Nsym = ref.size();
  if (rx2sps.samples.size() < 2 * Nsym)
    throw Error("dfe_equalize: record shorter than reference");
  if (std::size_t(cfg.training_symbols) > Nsym)
    throw Error("dfe_equalize: training prefix longer than record");
  const Waveform xw = normalize(rx2sps);
  const auto& x = xw.samples;
  const auto& fmt = ref.format;
  const std::size_t B = std::size_t(cfg.fb_taps);

  std::vector<double> w(std::size_t(cfg.ff_taps), 0.0);
  w[std::size_t(cfg.ff_taps) / 2] = 1.0;
  std::vector<double> b(B, 0.0);
  const double mu = cfg.step_size;
  const std::size_t T = std::size_t(cfg.training_symbols);

  // Adaptation pass. past[j] holds the decided level at lag j+1.
  std::vector<double> past(B, 0.0);
  double se_first = 0.0, se_last = 0.0;
  std::size_t n_first = 0, n_last = 0;
  for (std::size_t k = 0; k < Nsym; ++k) {
    double y = detail::ff_dot(x, w, std::ptrdiff_t(2 * k));
    for (std::size_t j = 0; j < B; ++j) y -= b[j] * past[j];
    const double target =
        k < T ? ref.level(k) : fmt.levels[std::size_t(slice(y, fmt))];
    const double e = target - y;
    detail::ff_update(x, w, std::ptrdiff_t(2 * k), mu * e);
    for (std::size_t j = 0; j < B; ++j) b[j] -= mu * e * past[j];
    for (std::size_t j = B; j-- > 1;) past[j] = past[j - 1];
    past[0] = target;  // true level in training, decided level after
    if (k >= T / 8 && k < T / 4) { se_first += e * e; ++n_first; }
    if (k >= 3 * T / 4 && k < T) { se_last += e * e; ++n_last; }
  }
  const double mse_first = n_first ? se_first / double(n_first) : 0.0;
  const double mse_last = n_last ? se_last / double(n_last) : 0.0;
  detail::check_adaptation(w, mse_first, mse_last, "dfe");
  detail::check_adaptation(b, mse_first, mse_last, "dfe");

  EqualizeResult res;
  res.ff_taps = w;
  res.fb_taps = b;
  res.training_mse = mse_last;

  // Decision pass with frozen taps and live decision feedback (this is where
  // DFE error propagation exists, deliberately).
  std::vector<double> soft0(Nsym);
  std::vector<std::int16_t> dec0(Nsym);
  std::fill(past.begin(), past.end(), 0.0);
  for (std::size_t k = 0; k < Nsym; ++k) {
    double y = detail::ff_dot(x, w, std::ptrdiff_t(2 * k));
    for (std::size_t j = 0; j < B; ++j) y -= b[j] * past[j];
    soft0[k] = y;
    dec0[k] = slice(y, fmt);
    for (std::size_t j = B; j-- > 1;) past[j] = past[j - 1];
    past[0] = fmt.levels[std::size_t(dec0[k])];
  }

  if (cfg.kind != EqKind::dfe_mlse1) {
    res.soft = std::move(soft0);
    res.decisions = std::move(dec0);
  } else {
    // Re-subtract lags 2..B only, using the plain-DFE decisions; lag 1 stays
    // in the soft output for the sequence detector.
    res.soft.resize(Nsym);
    for (std::size_t k = 0; k < Nsym; ++k) {
      double y = detail::ff_dot(x, w, std::ptrdiff_t(2 * k));
      for (std::size_t j = 1; j < B; ++j)
        if (k >= j + 1) y -= b[j] * fmt.levels[std::size_t(dec0[k - j - 1])];
      res.soft[k] = y;
    }
    res.decisions = std::move(dec0);  // provisional; harness runs the MLSE
  }

  if (want_trace) {
    // Eye trace: feed-forward output minus a zero-order-hold of the feedback
    // sum, so the plotted eye matches what the slicer saw.
    res.trace.sample_rate = rx2sps.sample_rate;
    res.trace.stage = SignalStage::rx;
    res.trace.samples.resize(x.size());
    std::vector<double> fbsum(Nsym, 0.0);
    std::fill(past.begin(), past.end(), 0.0);
    for (std::size_t k = 0; k < Nsym; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < B; ++j)
        if (k >= j + 1) s += b[j] * fmt.levels[std::size_t(res.decisions[k - j - 1])];
      fbsum[k] = s;
    }
    for (std::size_t n = 0; n < x.size(); ++n) {
      const std::size_t k = std::min(n / 2, Nsym - 1);
      res.trace.samples[n] = detail::ff_dot(x, w, std::ptrdiff_t(n)) - fbsum[k];
    }
  }
  return res;
}

// Dispatch by configured kind; for the *_mlse1 kinds this estimates the
// residual lag-1 tap from the equalized record and runs the detector. The
// soft record is replayed with frozen taps, so the training prefix carries
// the converged filter over known symbols: estimating there is immune to
// decision errors, which otherwise wash the correlation out at high BER.
inline EqualizeResult equalize(const Waveform& rx2sps, const EqualizerConfig& cfg,
                               const SymbolSequence& ref, bool want_trace = false) {
  EqualizeResult res = cfg.uses_feedback() ? dfe_equalize(rx2sps, cfg, ref, want_trace)
                                           : ffe_equalize(rx2sps, cfg, ref, want_trace);
  if (cfg.uses_mlse()) {
    const std::size_t T = std::min(std::size_t(cfg.training_symbols), ref.size());
    double h1;
    if (T >= 2000) {
      const std::vector<double> soft(res.soft.begin() + std::ptrdiff_t(T / 2),
                                     res.soft.begin() + std::ptrdiff_t(T));
      const std::vector<std::int16_t> pilots(ref.indices.begin() + std::ptrdiff_t(T / 2),
                                             ref.indices.begin() + std::ptrdiff_t(T));
      h1 = estimate_postcursor(soft, pilots, ref.format);
    } else {
      h1 = estimate_postcursor(res.soft, res.decisions, ref.format);
    }
    // The detector model needs |h1| < 1; a healthy residual is well inside.
    h1 = std::clamp(h1, -0.95, 0.95);
    res.h1 = h1;
    res.decisions = mlse_1tap(res.soft, h1, ref.format);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Demapping and error counting

// Inverse of map_symbols. Invalid PAM6 pairs (both symbols decided at an
// extreme level) are replaced by the nearest valid pair in squared level
// distance, lexicographically smallest on ties.
inline BitSequence demap(const std::vector<std::int16_t>& indices,
                         const ModulationFormat& fmt) {
  if (fmt.kind == PamFormat::pam6) {
    if (indices.size() % 2 != 0) throw Error("demap: pam6 needs an even symbol count");
    const auto& val = detail::pam6_pair_to_value();
    const auto& pairs = detail::pam6_pairs();
    const auto& L = fmt.levels;
    BitSequence bits(indices.size() / 2 * 5);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < indices.size(); p += 2) {
      int i = indices[p], j = indices[p + 1];
      int v = val[std::size_t(i)][std::size_t(j)];
      if (v < 0) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < int(pairs.size()); ++c) {
          const double di = L[std::size_t(pairs[std::size_t(c)][0])] - L[std::size_t(i)];
          const double dj = L[std::size_t(pairs[std::size_t(c)][1])] - L[std::size_t(j)];
          const double d = di * di + dj * dj;
          if (d < best - 1e-15) {
            best = d;
            v = c;
          }
        }
      }
      for (int bit = 4; bit >= 0; --bit) bits.set(pos++, (v >> bit) & 1);
    }
    return bits;
  }
  const int bps = fmt.bits_per_symbol.num;
  BitSequence bits(indices.size() * std::size_t(bps));
  std::size_t pos = 0;
  for (std::int16_t idx : indices) {
    const unsigned v = detail::gray_encode(unsigned(idx));
    for (int bit = bps - 1; bit >= 0; --bit) bits.set(pos++, (v >> bit) & 1);
  }
  return bits;
}

inline BitSequence demap(const SymbolSequence& syms) {
  return demap(syms.indices, syms.format);
}

struct BerReport {
  std::uint64_t bit_errors = 0;
  std::uint64_t bits_compared = 0;
  double ber = 0.0;
  // With fewer than ~3 errors the estimate is statistically hollow; flag it
  // and carry 3/bits as the value to quote.
  bool upper_bound = false;
  double ber_reported = 0.0;
};

// Exact error counting over the interior of the record; guard_symbols at
// each end are excluded from the comparison.
inline BerReport measure_ber(const BitSequence& rx, const BitSequence& tx,
                             std::size_t guard_symbols, const ModulationFormat& fmt) {
  if (rx.size() != tx.size()) throw Error("measure_ber: bit lengths differ");
  const double bps = fmt.bits_per_symbol.value();
  const std::size_t guard_bits =
      std::size_t(std::ceil(double(guard_symbols) * bps - 1e-9));
  if (rx.size() <= 2 * guard_bits)
    throw Error("measure_ber: guard consumes the whole record");
  const std::size_t lo = guard_bits, hi = rx.size() - guard_bits;

  std::uint64_t errors = 0;
  const auto& wr = rx.words();
  const auto& wt = tx.words();
  const std::size_t w_lo = lo / 64, w_hi = (hi + 63) / 64;
  for (std::size_t w = w_lo; w < w_hi; ++w) {
    std::uint64_t diff = wr[w] ^ wt[w];
    if (w == w_lo && lo % 64) diff &= ~0ull << (lo % 64);
    if (w == w_hi - 1 && hi % 64) diff &= ~0ull >> (64 - hi % 64);
    errors += std::uint64_t(std::popcount(diff));
  }

  BerReport rep;
  rep.bit_errors = errors;
  rep.bits_compared = hi - lo;
  rep.ber = double(errors) / double(rep.bits_compared);
  rep.upper_bound = errors < 3;
  rep.ber_reported = rep.upper_bound ? 3.0 / double(rep.bits_compared) : rep.ber;
  return rep;
}

}  // namespace imdd
