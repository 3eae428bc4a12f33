#include <catch2/catch_amalgamated.hpp>

#include "imdd/rxdsp.hpp"
#include "support/oracles.hpp"

using namespace imdd;

namespace {

SymbolSequence random_symbols(PamFormat kind, std::size_t nsym, std::uint64_t seed,
                              double rate = 100.0) {
  const auto fmt = ModulationFormat::make(kind);
  const std::size_t nbits = kind == PamFormat::pam6
                                ? nsym / 2 * 5
                                : nsym * std::size_t(fmt.bits_per_symbol.num);
  return map_symbols(generate_bits(seed, nbits), fmt, rate);
}

Waveform two_sps(const SymbolSequence& syms) {
  return resample(waveform_from_symbols(syms), 2.0 * syms.symbol_rate_gbd);
}

Waveform rotate_right(const Waveform& w, std::size_t shift) {
  Waveform out = w;
  const std::size_t n = w.samples.size();
  for (std::size_t i = 0; i < n; ++i) out.samples[(i + shift) % n] = w.samples[i];
  return out;
}

// y_k = s_k + h1 s_{k-1} at 2 samples per symbol, circular.
Waveform postcursor_channel(const Waveform& w2, double h1) {
  Waveform out = w2;
  const std::size_t n = w2.samples.size();
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = w2.samples[i] + h1 * w2.samples[(i + n - 2) % n];
  return out;
}

EqualizerConfig make_eq(EqKind kind, int ff, int fb, int training) {
  EqualizerConfig cfg;
  cfg.kind = kind;
  cfg.ff_taps = ff;
  cfg.fb_taps = fb;
  cfg.step_size = 2e-3;
  cfg.training_symbols = training;
  return cfg;
}

std::size_t interior_index_errors(const std::vector<std::int16_t>& got,
                                  const SymbolSequence& want, std::size_t guard) {
  std::size_t errs = 0;
  for (std::size_t k = guard; k + guard < want.size(); ++k)
    if (got[k] != want.indices[k]) ++errs;
  return errs;
}

}  // namespace

TEST_CASE("resample_to_2sps lands on two samples per symbol") {
  auto syms = random_symbols(PamFormat::pam4, 1024, 1);
  auto w4 = resample(waveform_from_symbols(syms), 4.0 * syms.symbol_rate_gbd);
  auto w2 = resample_to_2sps(w4, syms.symbol_rate_gbd);
  REQUIRE(w2.sample_rate == 200.0);
  REQUIRE(w2.samples.size() == 2048);
  REQUIRE_THROWS_AS(resample_to_2sps(w4, 0.0), Error);
  REQUIRE_THROWS_AS(resample_to_2sps(w4, 500.0), Error);
}

TEST_CASE("normalize removes mean and unit-scales") {
  Rng rng(4);
  Waveform w;
  w.sample_rate = 10.0;
  w.samples.resize(1024);
  for (auto& v : w.samples) v = 3.0 + 0.5 * rng.gaussian();
  auto out = normalize(w);
  REQUIRE_THAT(mean(out.samples), Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(rms(out.samples), Catch::Matchers::WithinAbs(1.0, 1e-12));
  Waveform flat;
  flat.sample_rate = 1.0;
  flat.samples.assign(64, 2.0);
  REQUIRE_THROWS_AS(normalize(flat), Error);
}

TEST_CASE("synchronize finds a circular shift") {
  auto syms = random_symbols(PamFormat::pam4, 512, 7);
  auto w2 = two_sps(syms);
  const std::size_t shift = 137;
  auto rx = rotate_right(w2, shift);
  auto res = synchronize(rx, syms);
  REQUIRE(res.delay == shift);
  REQUIRE_FALSE(res.polarity_flipped);
  REQUIRE(res.peak_ratio > 5.0);
  for (std::size_t i = 0; i < w2.samples.size(); ++i)
    REQUIRE_THAT(res.aligned.samples[i], Catch::Matchers::WithinAbs(w2.samples[i], 1e-9));
}

TEST_CASE("synchronize corrects an inverted link") {
  auto syms = random_symbols(PamFormat::pam4, 512, 8);
  auto w2 = two_sps(syms);
  auto rx = rotate_right(w2, 64);
  for (auto& v : rx.samples) v = -v;
  auto res = synchronize(rx, syms);
  REQUIRE(res.polarity_flipped);
  for (std::size_t i = 0; i < w2.samples.size(); ++i)
    REQUIRE_THAT(res.aligned.samples[i], Catch::Matchers::WithinAbs(w2.samples[i], 1e-9));
}

TEST_CASE("synchronize refuses noise-only records") {
  auto syms = random_symbols(PamFormat::pam4, 512, 9);
  Rng rng(10);
  Waveform rx;
  rx.sample_rate = 2.0 * syms.symbol_rate_gbd;
  rx.samples.resize(2048);
  for (auto& v : rx.samples) v = rng.gaussian();
  REQUIRE_THROWS_AS(synchronize(rx, syms), SyncError);
}

TEST_CASE("synchronize validates rates and lengths") {
  auto syms = random_symbols(PamFormat::pam4, 512, 11);
  auto w4 = resample(waveform_from_symbols(syms), 4.0 * syms.symbol_rate_gbd);
  REQUIRE_THROWS_AS(synchronize(w4, syms), Error);  // 4 sps, not 2
  auto w2 = two_sps(syms);
  w2.samples.resize(600);  // shorter than the reference needs
  REQUIRE_THROWS_AS(synchronize(w2, syms), Error);
}

TEST_CASE("slice picks the nearest level") {
  auto fmt = ModulationFormat::make(PamFormat::pam4);
  REQUIRE(slice(-5.0, fmt) == 0);
  REQUIRE(slice(-0.5, fmt) == 1);
  REQUIRE(slice(0.001, fmt) == 2);
  REQUIRE(slice(0.9, fmt) == 3);
  REQUIRE(slice(100.0, fmt) == 3);
}

TEST_CASE("estimate_postcursor recovers a known lag-1 tap") {
  auto syms = random_symbols(PamFormat::pam4, 4000, 13);
  Rng rng(14);
  std::vector<double> soft(syms.size());
  soft[0] = syms.level(0);
  for (std::size_t k = 1; k < syms.size(); ++k)
    soft[k] = syms.level(k) + 0.3 * syms.level(k - 1) + 0.01 * rng.gaussian();
  REQUIRE_THAT(estimate_postcursor(soft, syms.indices, syms.format),
               Catch::Matchers::WithinAbs(0.3, 0.01));
  std::vector<double> shorty(10, 0.0);
  std::vector<std::int16_t> shortd(10, 0);
  REQUIRE_THROWS_AS(estimate_postcursor(shorty, shortd, syms.format), Error);
}

TEST_CASE("1-tap MLSE is exact on a noiseless postcursor channel") {
  auto syms = random_symbols(PamFormat::pam4, 2000, 15);
  std::vector<double> y(syms.size());
  for (std::size_t k = 0; k < syms.size(); ++k) {
    const double prev = k == 0 ? 0.0 : syms.level(k - 1);
    y[k] = syms.level(k) + 0.5 * prev;
  }
  auto dec = mlse_1tap(y, 0.5, syms.format);
  REQUIRE(dec == syms.indices);
  REQUIRE_THROWS_AS(mlse_1tap(y, 1.0, syms.format), Error);
}

TEST_CASE("1-tap MLSE matches the exhaustive detector under noise") {
  const auto fmt = ModulationFormat::make(PamFormat::pam4);
  Rng rng(16);
  for (double h1 : {0.2, 0.5}) {
    for (int block = 0; block < 40; ++block) {
      auto syms = random_symbols(PamFormat::pam4, 12, derive_seed(17, std::uint64_t(block)));
      std::vector<double> y(12);
      for (std::size_t k = 0; k < 12; ++k) {
        const double prev = k == 0 ? 0.0 : syms.level(k - 1);
        y[k] = syms.level(k) + h1 * prev + 0.3 * rng.gaussian();
      }
      auto fast = mlse_1tap(y, h1, fmt);
      auto slow = oracle::exhaustive_mlse(y, h1, fmt.levels);
      for (std::size_t k = 0; k < 12; ++k) REQUIRE(int(fast[k]) == slow[k]);
    }
  }
}

TEST_CASE("FFE equalizes a mild low-pass channel") {
  auto syms = random_symbols(PamFormat::pam4, 8192, 19);
  auto w2 = two_sps(syms);
  ResponseSpec spec;
  spec.kind = ResponseSpec::Kind::first_order;
  spec.cutoff_ghz = 40.0;
  auto rx = apply_response(w2, materialize_response(spec, w2.sample_rate / 2.0));
  auto res = ffe_equalize(rx, make_eq(EqKind::ffe, 31, 0, 4096), syms);
  REQUIRE(res.training_mse < 0.01);
  REQUIRE(interior_index_errors(res.decisions, syms, 100) == 0);
  REQUIRE(res.ff_taps.size() == 31);
}

TEST_CASE("FFE trace exposes the equalized waveform at 2 sps") {
  auto syms = random_symbols(PamFormat::pam4, 2048, 20);
  auto w2 = two_sps(syms);
  auto res = ffe_equalize(w2, make_eq(EqKind::ffe, 15, 0, 1024), syms, true);
  REQUIRE(res.trace.samples.size() == w2.samples.size());
  for (std::size_t k = 200; k < 1800; ++k)
    REQUIRE_THAT(res.trace.samples[2 * k], Catch::Matchers::WithinAbs(res.soft[k], 1e-12));
}

TEST_CASE("DFE feedback learns a pure symbol-spaced postcursor") {
  auto syms = random_symbols(PamFormat::pam4, 8192, 21);
  auto rx = postcursor_channel(two_sps(syms), 0.4);
  auto res = dfe_equalize(rx, make_eq(EqKind::dfe, 1, 4, 4096), syms);
  REQUIRE_THAT(res.fb_taps[0], Catch::Matchers::WithinAbs(0.4, 0.02));
  for (std::size_t j = 1; j < res.fb_taps.size(); ++j)
    REQUIRE(std::abs(res.fb_taps[j]) < 0.02);
  REQUIRE(interior_index_errors(res.decisions, syms, 100) == 0);
}

TEST_CASE("dfe_mlse1 leaves the lag-1 tap for the sequence detector") {
  auto syms = random_symbols(PamFormat::pam4, 8192, 22);
  auto rx = postcursor_channel(two_sps(syms), 0.4);
  auto res = equalize(rx, make_eq(EqKind::dfe_mlse1, 1, 4, 4096), syms);
  REQUIRE_THAT(res.h1, Catch::Matchers::WithinAbs(0.4, 0.05));
  REQUIRE(interior_index_errors(res.decisions, syms, 100) == 0);
  // The soft output still carries the postcursor it reports.
  REQUIRE_THAT(estimate_postcursor(res.soft, syms.indices, syms.format),
               Catch::Matchers::WithinAbs(0.4, 0.05));
}

TEST_CASE("ffe_mlse1 hands the residual postcursor to the detector") {
  // Postcursor small enough that slicer decisions stay exact (max ISI under
  // half the eye), so the residual regression sees the true tap.
  auto syms = random_symbols(PamFormat::pam4, 8192, 23);
  auto rx = postcursor_channel(two_sps(syms), 0.25);
  auto res = equalize(rx, make_eq(EqKind::ffe_mlse1, 1, 0, 4096), syms);
  REQUIRE(res.h1 > 0.15);
  REQUIRE(res.h1 < 0.35);
  REQUIRE(interior_index_errors(res.decisions, syms, 100) == 0);
}

TEST_CASE("an unstable step size raises AdaptationError") {
  auto syms = random_symbols(PamFormat::pam4, 4096, 24);
  Rng rng(25);
  Waveform rx;
  rx.sample_rate = 2.0 * syms.symbol_rate_gbd;
  rx.samples.resize(2 * syms.size());
  for (auto& v : rx.samples) v = rng.gaussian();
  auto cfg = make_eq(EqKind::ffe, 31, 0, 2048);
  cfg.step_size = 0.5;
  REQUIRE_THROWS_AS(ffe_equalize(rx, cfg, syms), AdaptationError);
}

TEST_CASE("equalizer configuration is validated") {
  auto syms = random_symbols(PamFormat::pam4, 4096, 26);
  auto w2 = two_sps(syms);
  REQUIRE_THROWS_AS(ffe_equalize(w2, make_eq(EqKind::ffe, 30, 0, 2048), syms),
                    ValidationError);  // even tap count
  REQUIRE_THROWS_AS(ffe_equalize(w2, make_eq(EqKind::ffe, 31, 2, 2048), syms),
                    ValidationError);  // feedback taps on a feed-forward kind
  REQUIRE_THROWS_AS(dfe_equalize(w2, make_eq(EqKind::dfe, 31, 0, 2048), syms),
                    ValidationError);
  REQUIRE_THROWS_AS(ffe_equalize(w2, make_eq(EqKind::ffe, 31, 0, 100), syms),
                    ValidationError);  // training prefix too short
  REQUIRE_THROWS_AS(ffe_equalize(w2, make_eq(EqKind::ffe, 31, 0, 8192), syms),
                    Error);  // training prefix longer than the record
}

TEST_CASE("demap inverts the gray labeling") {
  auto fmt = ModulationFormat::make(PamFormat::pam4);
  auto bits = demap(std::vector<std::int16_t>{0, 1, 2, 3}, fmt);
  const bool expect[8] = {0, 0, 0, 1, 1, 1, 1, 0};
  REQUIRE(bits.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) REQUIRE(bits.get(i) == expect[i]);

  auto fmt8 = ModulationFormat::make(PamFormat::pam8);
  auto tx = generate_bits(27, 3 * 1000);
  auto syms = map_symbols(tx, fmt8, 100.0);
  REQUIRE(demap(syms).words() == tx.words());
}

TEST_CASE("invalid PAM6 pairs are repaired to the nearest valid pair") {
  auto fmt = ModulationFormat::make(PamFormat::pam6);
  // (0,0) is a forbidden corner; its nearest valid pairs are (0,1) and (1,0)
  // at equal distance, and (0,1) wins as the lexicographically smaller one.
  auto bits = demap(std::vector<std::int16_t>{0, 0, 2, 3}, fmt);
  REQUIRE(bits.size() == 10);
  const bool expect_first[5] = {0, 0, 0, 0, 0};   // pair value 0 = (0,1)
  const bool expect_second[5] = {0, 1, 1, 0, 1};  // pair value 13 = (2,3)
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(bits.get(i) == expect_first[i]);
    REQUIRE(bits.get(5 + i) == expect_second[i]);
  }
  REQUIRE_THROWS_AS(demap(std::vector<std::int16_t>{0, 0, 2}, fmt), Error);
}

TEST_CASE("ber counting excludes the guard and counts exactly") {
  auto fmt = ModulationFormat::make(PamFormat::pam4);
  auto tx = generate_bits(1, 1000);
  auto rx = tx;
  for (std::size_t pos : {5ul, 500ul, 700ul, 999ul})
    rx.set(pos, !rx.get(pos));  // 5 and 999 fall inside the 20-bit guards
  auto rep = measure_ber(rx, tx, 10, fmt);
  REQUIRE(rep.bits_compared == 960);
  REQUIRE(rep.bit_errors == 2);
  REQUIRE(rep.ber == Catch::Approx(2.0 / 960.0));
  REQUIRE(rep.upper_bound);
  REQUIRE(rep.ber_reported == Catch::Approx(3.0 / 960.0));

  rx.set(600, !rx.get(600));
  auto rep3 = measure_ber(rx, tx, 10, fmt);
  REQUIRE(rep3.bit_errors == 3);
  REQUIRE_FALSE(rep3.upper_bound);
  REQUIRE(rep3.ber_reported == Catch::Approx(rep3.ber));

  auto other = generate_bits(2, 999);
  REQUIRE_THROWS_AS(measure_ber(other, tx, 10, fmt), Error);
  REQUIRE_THROWS_AS(measure_ber(rx, tx, 250, fmt), Error);
}

TEST_CASE("fractional bits per symbol round the guard up") {
  auto fmt6 = ModulationFormat::make(PamFormat::pam6);
  auto tx = generate_bits(3, 100);
  auto rx = tx;
  rx.set(7, !rx.get(7));   // inside the ceil(3 * 2.5) = 8 bit guard
  rx.set(50, !rx.get(50));
  auto rep = measure_ber(rx, tx, 3, fmt6);
  REQUIRE(rep.bits_compared == 84);
  REQUIRE(rep.bit_errors == 1);
}
