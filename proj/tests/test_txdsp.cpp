#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "imdd/rxdsp.hpp"
#include "imdd/txdsp.hpp"
#include "support/oracles.hpp"

using namespace imdd;

TEST_CASE("bit generation is deterministic in the seed") {
  auto a = generate_bits(42, 10000);
  auto b = generate_bits(42, 10000);
  auto c = generate_bits(43, 10000);
  REQUIRE(a.words() == b.words());
  REQUIRE(a.words() != c.words());
  REQUIRE(a.size() == 10000);
}

TEST_CASE("generated bits are balanced") {
  auto bits = generate_bits(7, 1 << 18);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) ones += bits.get(i);
  const double n = double(bits.size());
  const double sigma = 0.5 * std::sqrt(n);
  REQUIRE(std::abs(double(ones) - 0.5 * n) < 5.0 * sigma);
}

TEST_CASE("tail bits beyond the requested count are zero") {
  auto bits = generate_bits(3, 67);
  REQUIRE(bits.words().size() == 2);
  REQUIRE((bits.words()[1] >> 3) == 0);
}

TEST_CASE("gray code orders PAM4 blocks as 00 01 11 10 up the levels") {
  auto inv = detail::gray_value_to_index(4);
  REQUIRE(inv[0b00] == 0);
  REQUIRE(inv[0b01] == 1);
  REQUIRE(inv[0b11] == 2);
  REQUIRE(inv[0b10] == 3);
  for (unsigned k = 0; k < 8; ++k) REQUIRE(detail::gray_value_to_index(8)[detail::gray_encode(k)] == k);
}

TEST_CASE("adjacent levels differ by one bit under gray mapping") {
  for (unsigned m : {4u, 8u}) {
    for (unsigned i = 0; i + 1 < m; ++i) {
      unsigned diff = detail::gray_encode(i) ^ detail::gray_encode(i + 1);
      REQUIRE(diff != 0);
      REQUIRE((diff & (diff - 1)) == 0);  // power of two: single changed bit
    }
  }
}

TEST_CASE("PAM4 mapping consumes MSB-first bit pairs") {
  BitSequence bits(8);
  auto set2 = [&](std::size_t sym, bool msb, bool lsb) {
    bits.set(2 * sym, msb);
    bits.set(2 * sym + 1, lsb);
  };
  set2(0, 0, 0);
  set2(1, 0, 1);
  set2(2, 1, 1);
  set2(3, 1, 0);
  auto fmt = ModulationFormat::make(PamFormat::pam4);
  auto syms = map_symbols(bits, fmt, 100.0);
  REQUIRE(syms.indices == std::vector<std::int16_t>{0, 1, 2, 3});
  for (std::size_t i = 0; i + 1 < 4; ++i) REQUIRE(syms.level(i) < syms.level(i + 1));
}

TEST_CASE("PAM6 pair table excludes the four outer corners") {
  const auto& pairs = detail::pam6_pairs();
  REQUIRE(pairs.size() == 32);
  std::set<std::pair<int, int>> seen;
  for (const auto& p : pairs) {
    REQUIRE(p[0] >= 0);
    REQUIRE(p[0] < 6);
    REQUIRE(p[1] >= 0);
    REQUIRE(p[1] < 6);
    seen.insert({p[0], p[1]});
  }
  REQUIRE(seen.size() == 32);
  REQUIRE(seen.count({0, 0}) == 0);
  REQUIRE(seen.count({0, 5}) == 0);
  REQUIRE(seen.count({5, 0}) == 0);
  REQUIRE(seen.count({5, 5}) == 0);
}

TEST_CASE("PAM6 mapping carries 2.5 bits per symbol and round-trips") {
  auto fmt = ModulationFormat::make(PamFormat::pam6);
  REQUIRE(fmt.bits_per_symbol.value() == 2.5);
  auto bits = generate_bits(99, 5 * 2000);
  auto syms = map_symbols(bits, fmt, 225.0);
  REQUIRE(syms.indices.size() == 4000);
  auto back = demap(syms);
  REQUIRE(back.size() == bits.size());
  REQUIRE(back.words() == bits.words());
}

TEST_CASE("random data exercises every level of each alphabet") {
  for (auto kind : {PamFormat::pam4, PamFormat::pam6, PamFormat::pam8}) {
    auto fmt = ModulationFormat::make(kind);
    auto bits = generate_bits(5, 3000);  // 3000 divides by 2, 3 and 5
    auto syms = map_symbols(bits, fmt, 100.0);
    std::set<std::int16_t> used(syms.indices.begin(), syms.indices.end());
    REQUIRE(used.size() == std::size_t(fmt.order()));
  }
}

TEST_CASE("symbol mapping rejects bit counts that do not divide") {
  auto fmt4 = ModulationFormat::make(PamFormat::pam4);
  REQUIRE_THROWS_AS(map_symbols(generate_bits(1, 7), fmt4, 100.0), Error);
  auto fmt6 = ModulationFormat::make(PamFormat::pam6);
  REQUIRE_THROWS_AS(map_symbols(generate_bits(1, 12), fmt6, 100.0), Error);
}

TEST_CASE("pre-emphasis flattens a smooth roll-off") {
  // Run a waveform through a known low-pass, pre-emphasize with the exact
  // response, and check the cascade is unity wherever the boost is not capped.
  const std::size_t n = 4096;
  Rng rng(17);
  Waveform w;
  w.sample_rate = 160.0;
  w.samples.resize(n);
  for (auto& v : w.samples) v = rng.gaussian();

  ResponseSpec spec;
  spec.kind = ResponseSpec::Kind::bessel;
  spec.order = 4;
  spec.cutoff_ghz = 40.0;
  auto resp = materialize_response(spec, w.sample_rate / 2.0);

  auto attenuated = apply_response(w, resp);
  auto restored = apply_preemphasis(attenuated, resp, 18.0);

  auto X = fft_of_real(w.samples);
  auto Y = fft_of_real(restored.samples);
  const double df = w.sample_rate / double(n);
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double mag = std::abs(resp.at(df * double(k)));
    if (mag < db_to_amplitude(-17.0)) continue;  // near or past the boost cap
    if (std::abs(X[k]) < 1e-6) continue;
    REQUIRE_THAT(std::abs(Y[k]) / std::abs(X[k]), Catch::Matchers::WithinAbs(1.0, 1e-6));
  }
}

TEST_CASE("pre-emphasis boost is capped") {
  const std::size_t n = 2048;
  Rng rng(18);
  Waveform w;
  w.sample_rate = 160.0;
  w.samples.resize(n);
  for (auto& v : w.samples) v = rng.gaussian();

  ResponseSpec spec;
  spec.kind = ResponseSpec::Kind::bessel;
  spec.order = 4;
  spec.cutoff_ghz = 15.0;  // deep attenuation well inside the band
  auto resp = materialize_response(spec, w.sample_rate / 2.0);
  auto out = apply_preemphasis(w, resp, 18.0);

  auto X = fft_of_real(w.samples);
  auto Y = fft_of_real(out.samples);
  const double gmax = db_to_amplitude(18.0);
  for (std::size_t k = 1; k < n / 2; ++k) {
    if (std::abs(X[k]) < 1e-9) continue;
    REQUIRE(std::abs(Y[k]) / std::abs(X[k]) <= gmax * (1.0 + 1e-9));
  }
}

TEST_CASE("clipping limits peaks relative to the rms") {
  Rng rng(21);
  Waveform w;
  w.sample_rate = 100.0;
  w.samples.resize(1 << 14);
  for (auto& v : w.samples) v = rng.gaussian();
  const double limit = 2.0 * rms(w.samples);
  auto clipped = clip(w, 2.0);
  double peak = 0.0;
  for (double v : clipped.samples) peak = std::max(peak, std::abs(v));
  REQUIRE(peak <= limit * (1.0 + 1e-12));
  // Gaussian noise certainly exceeds 2 sigma somewhere, so the clip engages.
  REQUIRE(peak == Catch::Approx(limit));
  // A generous ratio leaves the signal untouched.
  auto loose = clip(w, 50.0);
  REQUIRE(loose.samples == w.samples);
}

TEST_CASE("mid-rise quantizer reconstruction levels and saturation") {
  Waveform w;
  w.sample_rate = 1.0;
  w.samples = {-2.0, -1.0, -0.3, 0.0, 0.3, 1.0, 2.0};
  auto q = quantize(w, 3, 2.0);  // half scale 1.0, step 0.25
  for (double v : q.samples) REQUIRE(std::abs(v) <= 1.0);
  REQUIRE(q.samples[0] == Catch::Approx(-0.875));  // saturates
  REQUIRE(q.samples[1] == Catch::Approx(-0.875));  // top code
  REQUIRE(q.samples[2] == Catch::Approx(-0.375));
  REQUIRE(q.samples[3] == Catch::Approx(0.125));   // mid-rise has no zero level
  REQUIRE(q.samples[6] == Catch::Approx(0.875));

  // Quantizing an already-quantized waveform changes nothing.
  auto q2 = quantize(q, 3, 2.0);
  REQUIRE(q2.samples == q.samples);
}

TEST_CASE("quantizer error stays within half a step inside full scale") {
  Rng rng(30);
  Waveform w;
  w.sample_rate = 1.0;
  w.samples.resize(4096);
  for (auto& v : w.samples) v = 0.4 * rng.gaussian();
  const int bits = 7;
  const double full_scale = 2.0;
  auto q = quantize(w, bits, full_scale);
  const double step = full_scale / double(1 << bits);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    if (std::abs(w.samples[i]) >= full_scale / 2.0) continue;
    REQUIRE(std::abs(q.samples[i] - w.samples[i]) <= 0.5 * step + 1e-12);
  }
}

TEST_CASE("quantizer rejects out-of-range settings") {
  Waveform w;
  w.sample_rate = 1.0;
  w.samples = {0.1};
  REQUIRE_THROWS_AS(quantize(w, 1, 1.0), Error);
  REQUIRE_THROWS_AS(quantize(w, 17, 1.0), Error);
  REQUIRE_THROWS_AS(quantize(w, 8, 0.0), Error);
}

TEST_CASE("dac resampling hits the requested rate") {
  auto fmt = ModulationFormat::make(PamFormat::pam4);
  auto bits = generate_bits(2, 2 * 4800);
  auto syms = map_symbols(bits, fmt, 225.0);
  auto dac = resample_to_dac(syms, 300.0);
  REQUIRE(dac.sample_rate == 300.0);
  REQUIRE(dac.samples.size() == 4800 * 4 / 3);
  REQUIRE_THROWS_AS(resample_to_dac(syms, 200.0), Error);
}
