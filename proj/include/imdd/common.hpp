#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace imdd {

using cplx = std::complex<double>;

// c expressed as nm*GHz (numerically identical to m/s).
inline constexpr double kSpeedOfLight = 299792458.0;
// c expressed as nm*THz, convenient for optical grids.
inline constexpr double kSpeedOfLightNmThz = 299792.458;

inline constexpr double kPi = 3.14159265358979323846;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Carries every problem found in one pass so callers see the full list.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "configuration invalid:";
    for (const auto& e : v) {
      s += "\n  - ";
      s += e;
    }
    return s;
  }
  std::vector<std::string> issues_;
};

class SyncError : public Error {
 public:
  using Error::Error;
};

class AdaptationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double power_to_db(double p) { return 10.0 * std::log10(p); }
inline double amplitude_to_db(double a) { return 20.0 * std::log10(a); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

// Reconstructs an exact small-denominator fraction from a floating ratio via
// continued fractions. Rates in this codebase are ratios of round numbers
// (e.g. 450/225, 225/190), so the expansion terminates almost immediately.
inline Rational rational_from_ratio(double ratio, std::int64_t max_den = 1 << 20) {
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw Error("rational_from_ratio: ratio must be finite and positive");
  double x = ratio;
  std::int64_t h0 = 0, h1 = 1;  // numerator convergents
  std::int64_t k0 = 1, k1 = 0;  // denominator convergents
  for (int iter = 0; iter < 64; ++iter) {
    double af = std::floor(x);
    if (af > 9e18) break;
    auto a = static_cast<std::int64_t>(af);
    std::int64_t h = a * h1 + h0;
    std::int64_t k = a * k1 + k0;
    if (k > max_den) break;
    if (std::abs(ratio - double(h) / double(k)) <= 1e-12 * ratio)
      return {h, k};
    h0 = h1; h1 = h;
    k0 = k1; k1 = k;
    double frac = x - af;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  throw Error("rational_from_ratio: " + std::to_string(ratio) +
              " has no exact fraction with denominator <= " + std::to_string(max_den));
}

// splitmix64 finalizer; decorrelates seeds that differ in a single bit.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic per-point / per-stream seed derivation. Every consumer of
// randomness gets its seed through here so reruns are reproducible and
// parallel sweeps are order-independent.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index,
                                 std::uint64_t stream = 0) {
  return splitmix64(splitmix64(base ^ 0x6a09e667f3bcc908ull) + splitmix64(index) +
                    0x9e3779b97f4a7c15ull * stream);
}

// mt19937_64 with an explicit Box-Muller Gaussian so the byte stream is
// identical across platforms (std::normal_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t u64() { return state_(); }

  // uniform on (0,1), never exactly 0 or 1
  double uniform() {
    return (double(state_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace imdd
