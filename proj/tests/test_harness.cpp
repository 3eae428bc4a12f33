#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "imdd/harness.hpp"
#include "imdd/io.hpp"

using namespace imdd;

namespace {

// Back-to-back, memoryless, noiseless link that a linear equalizer must
// recover exactly.
LinkConfig loopback_config(PamFormat kind, std::size_t nsym = 4096) {
  LinkConfig cfg;
  cfg.modulation = kind;
  cfg.num_symbols = nsym;
  cfg.seed = 1;
  cfg.fiber.length_km = 0.0;
  cfg.channel.pd.bandwidth_ghz = 0.0;
  cfg.channel.noise.white_sigma = 0.0;
  EqualizerConfig eq;
  eq.kind = EqKind::ffe;
  eq.ff_taps = 31;
  eq.fb_taps = 0;
  eq.training_symbols = 2048;
  cfg.rx.equalizers = {eq};
  return cfg;
}

bool has_warning(const LinkResult& res, const std::string& needle) {
  for (const auto& w : res.warnings)
    if (w.find(needle) != std::string::npos) return true;
  return false;
}

Waveform square_wave(std::size_t nsym, std::size_t sps, double rate) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(nsym * sps);
  for (std::size_t k = 0; k < nsym; ++k)
    for (std::size_t s = 0; s < sps; ++s) w.samples[k * sps + s] = k % 2 ? -1.0 : 1.0;
  return w;
}

}  // namespace

TEST_CASE("eye histogram puts one sample per trace in every column") {
  // 8 samples per symbol at the dense rate already, so no interpolation
  // overshoot: all samples are exactly +/-1. The pattern period equals the
  // two-symbol trace length, so every trace is identical and each column
  // collects all its samples on a single rail.
  auto w = square_wave(400, 8, 80.0);
  auto eye = eye_diagram(w, 10.0, 1, 16, 32);
  REQUIRE(eye.time_bins == 16);
  REQUIRE(eye.amplitude_bins == 32);
  REQUIRE(eye.amp_min == -1.0);
  REQUIRE(eye.amp_max == 1.0);
  REQUIRE(std::accumulate(eye.counts.begin(), eye.counts.end(), 0u) == 3200u);
  for (int t = 0; t < 16; ++t) {
    std::uint32_t col = 0;
    for (int a = 0; a < 32; ++a) col += eye.at(t, a);
    REQUIRE(col == 200u);
    REQUIRE(eye.at(t, 0) + eye.at(t, 31) == 200u);
  }
  REQUIRE(eye.at(0, 31) == 200u);  // +1 half-cycle fills the top bin
  REQUIRE(eye.at(8, 0) == 200u);   // -1 half-cycle fills the bottom bin
}

TEST_CASE("eye averaging shrinks the noise spread of a periodic pattern") {
  auto w = square_wave(400, 8, 80.0);
  Rng rng(3);
  for (auto& v : w.samples) v += 0.3 * rng.gaussian();
  auto one = eye_diagram(w, 10.0, 1, 16, 32);
  auto avg = eye_diagram(w, 10.0, 8, 16, 32);
  REQUIRE(avg.averages == 8);
  REQUIRE(avg.amp_max - avg.amp_min < one.amp_max - one.amp_min);
}

TEST_CASE("eye histogram validates its inputs") {
  auto w = square_wave(400, 8, 80.0);
  REQUIRE_THROWS_AS(eye_diagram(w, 10.0, 1, 15, 32), Error);  // odd columns
  REQUIRE_THROWS_AS(eye_diagram(w, 10.0, 1, 6, 32), Error);
  REQUIRE_THROWS_AS(eye_diagram(w, 10.0, 0, 16, 32), Error);
  REQUIRE_THROWS_AS(eye_diagram(w, 10.0, 7, 16, 32), Error);  // 3200 % 7 != 0
  auto tiny = square_wave(50, 8, 80.0);
  REQUIRE_THROWS_AS(eye_diagram(tiny, 10.0, 1, 16, 32), Error);
}

TEST_CASE("noiseless back-to-back link is error free for PAM4") {
  auto res = run_link(loopback_config(PamFormat::pam4));
  REQUIRE(res.ok());
  REQUIRE(res.symbols_used == 4096);
  REQUIRE(res.wavelength_nm == 1310.0);
  REQUIRE(res.laser_power_dbm == 9.0);
  REQUIRE_THAT(res.dispersion_ps_nm_km, Catch::Matchers::WithinAbs(0.0, 1e-12));
  // Quadrature-biased modulator inverts drive polarity; sync must flag it.
  REQUIRE(has_warning(res, "polarity inverted"));
  REQUIRE(res.equalizers.size() == 1);
  const auto& eq = res.equalizers[0];
  REQUIRE(eq.ok());
  REQUIRE(eq.ber.bit_errors == 0);
  REQUIRE(eq.ber.bits_compared == (4096 - 128) * 2);
  REQUIRE(eq.ber.upper_bound);
  REQUIRE(eq.fec.has_value());
  REQUIRE(eq.fec->name == "hd7");  // 3/7936 sits between the kp4 and hd7 limits
  REQUIRE(eq.net_rate_gbps == Catch::Approx(420.5));
}

TEST_CASE("noiseless back-to-back link is error free for PAM8") {
  auto res = run_link(loopback_config(PamFormat::pam8));
  REQUIRE(res.ok());
  const auto& eq = res.equalizers[0];
  REQUIRE(eq.ber.bit_errors == 0);
  REQUIRE(eq.ber.bits_compared == (4096 - 128) * 3);
  REQUIRE(eq.fec.has_value());
  REQUIRE(eq.net_rate_gbps == Catch::Approx(630.8));
}

TEST_CASE("PAM6 runs end to end and trims to whole pairs") {
  auto cfg = loopback_config(PamFormat::pam6, 4097);
  auto res = run_link(cfg);
  REQUIRE(res.ok());
  REQUIRE(res.symbols_used == 4096);
  REQUIRE(res.config.num_symbols == 4096);
  REQUIRE(has_warning(res, "trimmed"));
  REQUIRE(res.equalizers[0].ber.bit_errors == 0);
}

TEST_CASE("symbol count is trimmed to keep resampling exact") {
  auto cfg = loopback_config(PamFormat::pam4, 5000);
  cfg.dac_rate_gsa = 300.0;  // 4/3 oversampling needs a multiple of 3
  auto res = run_link(cfg);
  REQUIRE(res.symbols_used == 4998);
  REQUIRE(has_warning(res, "trimmed to 4998"));
  REQUIRE(res.equalizers[0].ber.bit_errors == 0);
}

TEST_CASE("temperature anchors reproduce the calibration table") {
  auto cfg = loopback_config(PamFormat::pam4);
  cfg.temperature_c = 30.0;
  auto cold = run_link(cfg);
  REQUIRE(cold.wavelength_nm == Catch::Approx(1308.3));
  REQUIRE(cold.laser_power_dbm == Catch::Approx(9.0));
  REQUIRE(cold.dispersion_ps_nm_km < 0.0);

  cfg.temperature_c = 85.0;
  auto hot = run_link(cfg);
  REQUIRE(hot.wavelength_nm == Catch::Approx(1315.7));
  REQUIRE(hot.laser_power_dbm == Catch::Approx(9.0));
  REQUIRE(hot.dispersion_ps_nm_km > 0.0);

  cfg.temperature_c = 32.75;  // quarter period of the 11 C power ripple
  auto mid = run_link(cfg);
  REQUIRE(mid.laser_power_dbm == Catch::Approx(9.4));
  REQUIRE(mid.wavelength_nm == Catch::Approx(1308.3 + 7.4 * 2.75 / 55.0));
}

TEST_CASE("identical configs produce byte-identical reports") {
  auto cfg = loopback_config(PamFormat::pam4);
  cfg.channel.noise.white_sigma = 0.01;
  auto a = run_link(cfg);
  auto b = run_link(cfg);
  REQUIRE(emit_tabular({a}) == emit_tabular({b}));
  REQUIRE(emit_structured({a}) == emit_structured({b}));
}

TEST_CASE("sweep records per-point failures without stopping") {
  SweepSpec spec;
  spec.base = loopback_config(PamFormat::pam4);
  spec.variable = SweepVariable::symbol_rate;
  spec.values = {225.0, 500.0, 112.5};  // 500 GBd exceeds the 225 GSa/s DAC
  auto results = sweep(spec);
  REQUIRE(results.size() == 3);
  REQUIRE(results[0].ok());
  REQUIRE(results[0].sweep_variable == "symbol_rate");
  REQUIRE(results[0].sweep_value == 225.0);
  REQUIRE_FALSE(results[1].ok());
  REQUIRE_FALSE(results[1].error.empty());
  REQUIRE(results[2].ok());
  REQUIRE(results[2].sweep_value == 112.5);

  REQUIRE_THROWS_AS(sweep(SweepSpec{spec.base, spec.variable, {}, {}, {}}), Error);
  REQUIRE_THROWS_AS(sweep(spec, 0), Error);
}

TEST_CASE("sweep output does not depend on the worker count") {
  SweepSpec spec;
  spec.base = loopback_config(PamFormat::pam4);
  spec.base.channel.noise.white_sigma = 0.01;
  spec.variable = SweepVariable::rop;
  spec.values = {0.0, -2.0, -4.0};
  auto serial = sweep(spec, 1);
  auto threaded = sweep(spec, 3);
  REQUIRE(emit_tabular(serial) == emit_tabular(threaded));
  REQUIRE(emit_structured(serial) == emit_structured(threaded));
}

TEST_CASE("ber is non-increasing in received optical power") {
  // Noise level chosen so the five points span ~3e-2 down to 0 with error
  // counts separated far beyond counting noise at 2^16 symbols.
  SweepSpec spec;
  spec.base = loopback_config(PamFormat::pam4, 65536);
  spec.base.channel.noise.white_sigma = 0.05;
  spec.base.rx.equalizers[0].training_symbols = 4096;
  spec.variable = SweepVariable::rop;
  spec.values = {-3.0, -2.0, -1.0, 0.0, 1.0};
  auto results = sweep(spec);
  REQUIRE(results.size() == 5);
  double prev = 1.0;
  for (const auto& r : results) {
    REQUIRE(r.ok());
    const double ber = r.equalizers[0].ber.ber;
    REQUIRE(ber <= prev);
    prev = ber;
  }
  REQUIRE(results.front().equalizers[0].ber.ber >
          30.0 * results.back().equalizers[0].ber.ber);
  REQUIRE(results.front().equalizers[0].ber.bit_errors > 1000);
}

TEST_CASE("wdm runs evaluate the selected grid channel") {
  auto base = loopback_config(PamFormat::pam4);
  auto plan = build_wdm_grid(1295.56, 400.0, 8);
  REQUIRE(plan.channels.size() == 8);
  REQUIRE_THAT(plan.channels[6].wavelength_nm, Catch::Matchers::WithinAbs(1309.14, 0.05));

  auto res = run_wdm(base, plan, 1, 997);
  REQUIRE(res.ok());
  REQUIRE(res.wavelength_nm == Catch::Approx(1295.56));
  REQUIRE(res.dispersion_ps_nm_km < -1.0);
  REQUIRE(res.sweep_variable == "wdm_channel");
  REQUIRE(res.sweep_value == 1.0);
  REQUIRE(res.seed == derive_seed(base.seed, 1, 997 + 11));

  auto corr = run_wdm(base, plan, 2, 0);
  REQUIRE(has_warning(corr, "correlated"));

  REQUIRE_THROWS_AS(run_wdm(base, plan, 0, 997), Error);
  REQUIRE_THROWS_AS(run_wdm(base, plan, 9, 997), Error);
}

TEST_CASE("dr8 lanes share a split high-power source") {
  auto base = loopback_config(PamFormat::pam4);
  Dr8Settings dr8;
  auto res = run_dr8(base, 3, dr8);
  REQUIRE(res.ok());
  REQUIRE_THAT(res.laser_power_dbm,
               Catch::Matchers::WithinAbs(23.0 - 10.0 * std::log10(8.0) - 1.5, 1e-9));
  REQUIRE(res.config.channel.mzm.v_pi == 4.5);
  REQUIRE(res.sweep_variable == "dr8_lane");
  REQUIRE(res.seed == derive_seed(base.seed, 3, 21));
  REQUIRE_THROWS_AS(run_dr8(base, 0, dr8), Error);
  REQUIRE_THROWS_AS(run_dr8(base, 9, dr8), Error);
}

TEST_CASE("aggregate rate multiplies the per-lane net rate") {
  auto cfg = loopback_config(PamFormat::pam4);
  std::vector<LinkResult> lanes;
  for (std::uint64_t s : {1ull, 2ull}) {
    cfg.seed = s;
    lanes.push_back(run_link(cfg));
  }
  auto v = aggregate_verdict(lanes, EqKind::ffe);
  REQUIRE(v.lanes == 2);
  REQUIRE(v.worst_ber == Catch::Approx(3.0 / 7936.0));
  REQUIRE(v.fec.has_value());
  REQUIRE(v.fec->name == "hd7");
  REQUIRE(v.lane_net_gbps == Catch::Approx(420.5));
  REQUIRE(v.aggregate_gbps == Catch::Approx(841.0));

  REQUIRE_THROWS_AS(aggregate_verdict(lanes, EqKind::dfe), Error);
  REQUIRE_THROWS_AS(aggregate_verdict({}, EqKind::ffe), Error);
  LinkResult bad;
  bad.error = "boom";
  lanes.push_back(bad);
  REQUIRE_THROWS_AS(aggregate_verdict(lanes, EqKind::ffe), Error);
}

TEST_CASE("optional spectrum and eye outputs are attached to the result") {
  auto cfg = loopback_config(PamFormat::pam4);
  cfg.output.spectrum = true;
  cfg.output.eye = true;
  auto res = run_link(cfg);
  REQUIRE(res.spectrum.size() == 4096 / 2 + 1);
  REQUIRE(res.eye.has_value());
  REQUIRE(res.eye->time_bins == cfg.output.eye_time_bins);
  REQUIRE(res.eye->amplitude_bins == cfg.output.eye_amplitude_bins);
  // The dense eye record carries time_bins/2 samples per symbol.
  const std::uint64_t total =
      std::accumulate(res.eye->counts.begin(), res.eye->counts.end(), std::uint64_t(0));
  REQUIRE(total == std::uint64_t(4096) * std::uint64_t(cfg.output.eye_time_bins / 2));
}
