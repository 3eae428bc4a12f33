#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "imdd/channel.hpp"
#include "imdd/core.hpp"
#include "imdd/waveform.hpp"

namespace imdd {

// ---------------------------------------------------------------------------
// Bit storage

class BitSequence {
 public:
  BitSequence() = default;
  explicit BitSequence(std::size_t nbits)
      : nbits_(nbits), words_((nbits + 63) / 64, 0) {}

  std::size_t size() const { return nbits_; }
  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& mutable_words() { return words_; }

  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1ull;
  }
  void set(std::size_t i, bool v) {
    const std::uint64_t m = 1ull << (i & 63);
    if (v)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }

 private:
  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

// Uniform random bits drawn from mt19937_64, 64 at a time, LSB first.
inline BitSequence generate_bits(std::uint64_t seed, std::size_t count) {
  if (count == 0) throw Error("generate_bits: count must be > 0");
  BitSequence bits(count);
  std::mt19937_64 gen(seed);
  for (auto& w : bits.mutable_words()) w = gen();
  // Mask tail bits beyond count so word-level comparisons stay exact.
  const std::size_t rem = count & 63;
  if (rem) bits.mutable_words().back() &= (1ull << rem) - 1;
  return bits;
}

// ---------------------------------------------------------------------------
// Symbol mapping

struct SymbolSequence {
  std::vector<std::int16_t> indices;  // level indices, 0..M-1 ascending
  ModulationFormat format;
  double symbol_rate_gbd = 0.0;

  std::size_t size() const { return indices.size(); }
  double level(std::size_t i) const { return format.levels[std::size_t(indices[i])]; }
};

namespace detail {

inline unsigned gray_encode(unsigned k) { return k ^ (k >> 1); }

// index -> bit block for reflected-Gray alphabets (PAM4/PAM8): block value v
// placed at level index k satisfies gray_encode(k) == v, so "00,01,11,10"
// climbs the PAM4 levels in order.
inline std::vector<unsigned> gray_value_to_index(int M) {
  std::vector<unsigned> inv(std::size_t(M), 0u);
  for (int k = 0; k < M; ++k) inv[gray_encode(unsigned(k))] = unsigned(k);
  return inv;
}

// The 32 valid PAM6 pairs in row-major (first, second) order, skipping the
// four corners where both symbols sit at an extreme level.
inline const std::vector<std::array<std::int16_t, 2>>& pam6_pairs() {
  static const std::vector<std::array<std::int16_t, 2>> table = [] {
    std::vector<std::array<std::int16_t, 2>> t;
    for (std::int16_t i = 0; i < 6; ++i)
      for (std::int16_t j = 0; j < 6; ++j) {
        const bool corner = (i == 0 || i == 5) && (j == 0 || j == 5);
        if (!corner) t.push_back({i, j});
      }
    return t;
  }();
  return table;
}

inline const std::array<std::array<int, 6>, 6>& pam6_pair_to_value() {
  static const std::array<std::array<int, 6>, 6> table = [] {
    std::array<std::array<int, 6>, 6> t{};
    for (auto& row : t) row.fill(-1);
    const auto& pairs = pam6_pairs();
    for (int v = 0; v < int(pairs.size()); ++v)
      t[std::size_t(pairs[v][0])][std::size_t(pairs[v][1])] = v;
    return t;
  }();
  return table;
}

}  // namespace detail

// Maps a bit stream onto PAM symbols. Blocks are read MSB first. PAM4/PAM8
// use reflected Gray labeling; PAM6 consumes 5 bits per symbol pair.
inline SymbolSequence map_symbols(const BitSequence& bits, const ModulationFormat& fmt,
                                  double symbol_rate_gbd) {
  SymbolSequence out;
  out.format = fmt;
  out.symbol_rate_gbd = symbol_rate_gbd;
  if (fmt.kind == PamFormat::pam6) {
    if (bits.size() % 5 != 0)
      throw Error("map_symbols: pam6 needs a multiple of 5 bits");
    const auto& pairs = detail::pam6_pairs();
    const std::size_t npairs = bits.size() / 5;
    out.indices.reserve(2 * npairs);
    for (std::size_t p = 0; p < npairs; ++p) {
      unsigned v = 0;
      for (int b = 0; b < 5; ++b) v = (v << 1) | unsigned(bits.get(p * 5 + std::size_t(b)));
      out.indices.push_back(pairs[v][0]);
      out.indices.push_back(pairs[v][1]);
    }
    return out;
  }
  const int bps = fmt.bits_per_symbol.num;
  if (bits.size() % std::size_t(bps) != 0)
    throw Error("map_symbols: bit count not a multiple of bits per symbol");
  const auto inv = detail::gray_value_to_index(fmt.order());
  const std::size_t nsym = bits.size() / std::size_t(bps);
  out.indices.reserve(nsym);
  for (std::size_t s = 0; s < nsym; ++s) {
    unsigned v = 0;
    for (int b = 0; b < bps; ++b) v = (v << 1) | unsigned(bits.get(s * std::size_t(bps) + std::size_t(b)));
    out.indices.push_back(std::int16_t(inv[v]));
  }
  return out;
}

inline Waveform waveform_from_symbols(const SymbolSequence& syms) {
  if (syms.indices.empty()) throw Error("waveform_from_symbols: empty sequence");
  Waveform w;
  w.sample_rate = syms.symbol_rate_gbd;
  w.stage = SignalStage::tx;
  w.samples.resize(syms.size());
  for (std::size_t i = 0; i < syms.size(); ++i) w.samples[i] = syms.level(i);
  return w;
}

// Band-limited interpolation of the symbol stream onto the DAC grid. The
// rate ratio must be an exact fraction whose denominator divides the symbol
// count (run_link sizes records to guarantee this).
inline Waveform resample_to_dac(const SymbolSequence& syms, double dac_rate_gsa) {
  if (!(dac_rate_gsa >= syms.symbol_rate_gbd))
    throw Error("resample_to_dac: DAC rate below symbol rate");
  return resample(waveform_from_symbols(syms), dac_rate_gsa);
}

// Inverts a reference analog response up to max_boost_db of boost per bin;
// bins where the reference has effectively no transmission get boost capped
// at the limit with zero phase correction.
inline Waveform apply_preemphasis(const Waveform& w, const FrequencyResponse& reference,
                                  double max_boost_db) {
  if (w.samples.size() < 2) throw Error("apply_preemphasis: waveform too short");
  if (!(max_boost_db >= 0)) throw Error("apply_preemphasis: max boost must be >= 0");
  require_finite(w, "apply_preemphasis");
  const double gmax = db_to_amplitude(max_boost_db);
  const std::size_t N = w.samples.size();
  auto X = fft_of_real(w.samples);
  const double df = w.sample_rate / double(N);
  for (std::size_t k = 0; k <= N / 2; ++k) {
    const cplx h = reference.at(double(k) * df);
    const double mag = std::abs(h);
    cplx inv;
    if (mag < 1.0 / gmax || mag < 1e-12)
      inv = cplx(gmax, 0.0);
    else
      inv = std::polar(std::min(1.0 / mag, gmax), -std::arg(h));
    if (N % 2 == 0 && k == N / 2) inv = cplx(inv.real(), 0.0);
    X[k] *= inv;
    if (k > 0 && k < (N + 1) / 2) X[N - k] = std::conj(X[k]);
  }
  Waveform out;
  out.samples = ifft_to_real(std::move(X));
  out.sample_rate = w.sample_rate;
  out.stage = w.stage;
  return out;
}

// Symmetric clipping at clip_ratio times the input RMS.
inline Waveform clip(const Waveform& w, double clip_ratio) {
  if (!(clip_ratio > 0)) throw Error("clip: ratio must be > 0");
  if (w.samples.empty()) throw Error("clip: empty waveform");
  const double limit = clip_ratio * rms(w.samples);
  Waveform out = w;
  for (auto& v : out.samples) v = std::clamp(v, -limit, limit);
  return out;
}

// Mid-rise uniform quantizer over [-full_scale/2, +full_scale/2]. Values
// beyond full scale saturate to the outermost codes.
inline Waveform quantize(const Waveform& w, int bits, double full_scale) {
  if (bits < 2 || bits > 16) throw Error("quantize: bits must be in 2..16");
  if (!(full_scale > 0)) throw Error("quantize: full_scale must be > 0");
  if (w.samples.empty()) throw Error("quantize: empty waveform");
  const double half = full_scale / 2.0;
  const double nlev = double(1 << bits);
  const double step = full_scale / nlev;
  Waveform out = w;
  for (auto& v : out.samples) {
    double idx = std::floor((std::clamp(v, -half, half - step * 1e-9) + half) / step);
    idx = std::clamp(idx, 0.0, nlev - 1.0);
    v = -half + (idx + 0.5) * step;
  }
  return out;
}

}  // namespace imdd
