#pragma once

#include <atomic>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "imdd/channel.hpp"
#include "imdd/core.hpp"
#include "imdd/rxdsp.hpp"
#include "imdd/txdsp.hpp"

namespace imdd {

// ---------------------------------------------------------------------------
// Results

struct EqOutcome {
  EqualizerConfig config;
  BerReport ber;
  double h1 = 0.0;
  std::optional<FecCode> fec;       // nullopt: no ledger entry covers the BER
  double net_rate_gbps = 0.0;       // reported (0.1 Gbps truncation), 0 if no FEC
  std::string error;                // per-equalizer failure, stage-tagged

  bool ok() const { return error.empty(); }
};

struct EyeHistogram {
  int time_bins = 0;
  int amplitude_bins = 0;
  double symbol_rate_gbd = 0.0;
  int averages = 1;
  double amp_min = 0.0;
  double amp_max = 0.0;
  std::vector<std::uint32_t> counts;  // row-major [time][amplitude]

  std::uint32_t at(int t, int a) const {
    return counts[std::size_t(t) * std::size_t(amplitude_bins) + std::size_t(a)];
  }
};

struct LinkResult {
  LinkConfig config;                 // as executed (after symbol-count trim)
  std::uint64_t seed = 0;
  double wavelength_nm = 0.0;        // effective, after temperature model
  double laser_power_dbm = 0.0;      // effective
  double dispersion_ps_nm_km = 0.0;  // at the effective wavelength
  std::size_t symbols_used = 0;
  std::string sweep_variable;        // empty for single runs
  double sweep_value = 0.0;
  std::vector<EqOutcome> equalizers;
  std::vector<std::string> warnings;
  std::vector<SpectrumPoint> spectrum;
  std::optional<EyeHistogram> eye;
  std::string error;                 // whole-point failure (sweeps record these)

  bool ok() const { return error.empty(); }
};

// ---------------------------------------------------------------------------
// Eye diagram

// Folds a waveform onto a 2 UI window. The waveform is first resampled so
// each trace lands exactly once in every time bin; with averages > 1 the
// record is split into that many equal chunks which are averaged pointwise
// first (meaningful when the pattern repeats chunk-periodically).
inline EyeHistogram eye_diagram(const Waveform& w, double symbol_rate_gbd,
                                int averages = 1, int time_bins = 64,
                                int amplitude_bins = 128) {
  if (!(symbol_rate_gbd > 0)) throw Error("eye_diagram: symbol rate must be > 0");
  if (time_bins < 8 || time_bins % 2 != 0)
    throw Error("eye_diagram: time_bins must be even and >= 8");
  if (amplitude_bins < 8) throw Error("eye_diagram: amplitude_bins must be >= 8");
  if (averages < 1) throw Error("eye_diagram: averages must be >= 1");
  if (double(w.size()) < 100.0 * 2.0 * w.sample_rate / symbol_rate_gbd ||
      w.size() < 200)
    throw Error("eye_diagram: record must span at least 100 symbols");

  Waveform src = w;
  if (averages > 1) {
    if (w.size() % std::size_t(averages) != 0)
      throw Error("eye_diagram: record length not divisible by averages");
    const std::size_t chunk = w.size() / std::size_t(averages);
    src.samples.assign(w.samples.begin(), w.samples.begin() + std::ptrdiff_t(chunk));
    for (int a = 1; a < averages; ++a)
      for (std::size_t n = 0; n < chunk; ++n)
        src.samples[n] += w.samples[std::size_t(a) * chunk + n];
    for (auto& v : src.samples) v /= double(averages);
  }

  // time_bins samples per 2 UI puts one sample in each column per trace
  const double dense_rate = symbol_rate_gbd * double(time_bins) / 2.0;
  Waveform dense = resample(src, dense_rate);

  EyeHistogram eye;
  eye.time_bins = time_bins;
  eye.amplitude_bins = amplitude_bins;
  eye.symbol_rate_gbd = symbol_rate_gbd;
  eye.averages = averages;
  eye.amp_min = *std::min_element(dense.samples.begin(), dense.samples.end());
  eye.amp_max = *std::max_element(dense.samples.begin(), dense.samples.end());
  if (!(eye.amp_max > eye.amp_min)) {
    eye.amp_min -= 0.5;
    eye.amp_max += 0.5;
  }
  eye.counts.assign(std::size_t(time_bins) * std::size_t(amplitude_bins), 0);
  const double span = eye.amp_max - eye.amp_min;
  for (std::size_t n = 0; n < dense.samples.size(); ++n) {
    const int t = int(n % std::size_t(time_bins));
    int a = int(std::floor((dense.samples[n] - eye.amp_min) / span * amplitude_bins));
    a = std::clamp(a, 0, amplitude_bins - 1);
    eye.counts[std::size_t(t) * std::size_t(amplitude_bins) + std::size_t(a)] += 1;
  }
  return eye;
}

// ---------------------------------------------------------------------------
// End-to-end link

namespace detail {

inline std::size_t lcm_size(std::size_t a, std::size_t b) {
  return a / std::gcd(a, b) * b;
}

// Record lengths must let every rate conversion in the chain stay on the FFT
// grid: symbol count divisible by the resampling denominator (and by 2 for
// the PAM6 pair code).
inline std::size_t usable_symbols(const LinkConfig& cfg) {
  const Rational r = rational_from_ratio(cfg.dac_rate_gsa / cfg.symbol_rate_gbd, 1 << 12);
  std::size_t group = std::size_t(r.den);
  if (cfg.modulation == PamFormat::pam6) group = lcm_size(group, 2);
  // Bits per PAM6 pair force symbol pairs; PAM4/PAM8 have integer bits.
  std::size_t n = cfg.num_symbols - cfg.num_symbols % group;
  if (n == 0) throw Error("run_link: num_symbols too small for the rate ratio");
  return n;
}

}  // namespace detail

// Runs one complete transmission: PRBS, PAM mapping, DAC-side shaping, the
// modulator/fiber/detector chain, receiver DSP, and error counting for every
// configured equalizer on the same received record.
inline LinkResult run_link(const LinkConfig& cfg) {
  {
    auto issues = cfg.validate();
    if (!issues.empty()) throw ValidationError(issues);
  }
  const ModulationFormat fmt = ModulationFormat::make(cfg.modulation);

  LinkResult result;
  result.config = cfg;
  result.seed = cfg.seed;

  // Effective laser operating point.
  double wavelength = cfg.laser.wavelength_nm;
  double power_dbm = cfg.laser.power_dbm;
  if (cfg.has_temperature()) {
    wavelength = wavelength_from_temperature(cfg.temperature_c, cfg.laser);
    power_dbm = laser_power_at_temperature(cfg.temperature_c, cfg.laser);
  }
  result.wavelength_nm = wavelength;
  result.laser_power_dbm = power_dbm;
  result.dispersion_ps_nm_km = dispersion_parameter(wavelength, cfg.fiber);

  const std::size_t nsym = detail::usable_symbols(cfg);
  result.symbols_used = nsym;
  result.config.num_symbols = nsym;
  if (nsym != cfg.num_symbols)
    result.warnings.push_back("num_symbols trimmed to " + std::to_string(nsym) +
                              " to keep resampling exact");

  // --- transmitter ---------------------------------------------------------
  const std::size_t nbits =
      fmt.kind == PamFormat::pam6 ? nsym / 2 * 5 : nsym * std::size_t(fmt.bits_per_symbol.num);
  const BitSequence tx_bits = generate_bits(derive_seed(cfg.seed, 0, 1), nbits);
  const SymbolSequence tx_syms = map_symbols(tx_bits, fmt, cfg.symbol_rate_gbd);

  Waveform dac = resample_to_dac(tx_syms, cfg.dac_rate_gsa);

  const double sim_rate = cfg.dac_rate_gsa * double(cfg.channel.sim_oversampling);
  std::vector<FrequencyResponse> responses;
  responses.reserve(cfg.channel.responses.size());
  for (const auto& spec : cfg.channel.responses)
    responses.push_back(materialize_response(spec, sim_rate / 2.0));

  if (cfg.tx.preemphasis_enabled && !cfg.tx.preemphasis_reference.empty()) {
    std::vector<FrequencyResponse> refs;
    for (int idx : cfg.tx.preemphasis_reference) refs.push_back(responses[std::size_t(idx)]);
    const FrequencyResponse combined = cascade_responses(refs, cfg.dac_rate_gsa / 2.0);
    dac = apply_preemphasis(dac, combined, cfg.tx.preemphasis_max_boost_db);
  }

  // Clip, then place the clip level at DAC full scale before quantizing.
  const double clip_level = cfg.tx.clip_ratio * rms(dac.samples);
  dac = clip(dac, cfg.tx.clip_ratio);
  const double vscale = (cfg.tx.full_scale_vpp / 2.0) / clip_level;
  for (auto& v : dac.samples) v *= vscale;
  dac = quantize(dac, cfg.tx.quantizer_bits, cfg.tx.full_scale_vpp);

  // --- channel --------------------------------------------------------------
  Waveform drive = resample(dac, sim_rate);
  drive.stage = SignalStage::channel;
  for (const auto& resp : responses) drive = apply_response(drive, resp);
  if (cfg.channel.rf_gain_db != 0.0) drive = apply_gain(drive, cfg.channel.rf_gain_db);

  OpticalField field = mzm_modulate(drive, cfg.channel.mzm, dbm_to_mw(power_dbm));
  field = propagate_dispersion(field, cfg.fiber, wavelength);
  const double optical_gain_db = -cfg.fiber.loss_db_km * cfg.fiber.length_km +
                                 cfg.channel.extra_gain_db + cfg.channel.rop_offset_db;
  if (optical_gain_db != 0.0) field = apply_gain(field, optical_gain_db);
  if (cfg.channel.excess_noise_sigma > 0.0)
    field = add_field_noise(std::move(field), cfg.channel.excess_noise_sigma,
                            derive_seed(cfg.seed, 0, 3));

  Waveform elec = photodetect(field, cfg.channel.pd);

  // Receiver noise is calibrated against the photocurrent of 1 mW incident
  // power, so attenuating the signal degrades SNR as it would on the bench.
  NoiseSpec noise_abs = cfg.channel.noise;
  noise_abs.white_sigma *= cfg.channel.pd.responsivity * 1.0;
  elec = add_noise(elec, noise_abs, derive_seed(cfg.seed, 0, 2));

  if (cfg.output.spectrum) result.spectrum = estimate_spectrum(elec);

  // --- receiver --------------------------------------------------------------
  Waveform rx2 = resample_to_2sps(elec, cfg.symbol_rate_gbd);
  const SyncResult sync = synchronize(rx2, tx_syms);
  if (sync.polarity_flipped)
    result.warnings.push_back("synchronize: polarity inverted by the link, corrected");

  bool eye_done = false;
  for (const auto& eqcfg : cfg.rx.equalizers) {
    EqOutcome out;
    out.config = eqcfg;
    const bool want_trace = cfg.output.eye && !eye_done;
    try {
      const EqualizeResult eq = equalize(sync.aligned, eqcfg, tx_syms, want_trace);
      out.h1 = eq.h1;
      const BitSequence rx_bits = demap(eq.decisions, fmt);
      const std::size_t guard =
          cfg.rx.guard_symbols >= 0
              ? std::size_t(cfg.rx.guard_symbols)
              : std::size_t(std::max({eqcfg.ff_taps, eqcfg.fb_taps, 64}));
      out.ber = measure_ber(rx_bits, tx_bits, guard, fmt);
      out.fec = select_fec(out.ber.ber_reported, cfg.fec_ledger);
      if (out.fec)
        out.net_rate_gbps =
            reported_rate_gbps(net_rate_gbps(cfg.symbol_rate_gbd, fmt, *out.fec));
      if (want_trace && !eq.trace.samples.empty()) {
        result.eye = eye_diagram(eq.trace, cfg.symbol_rate_gbd, cfg.output.eye_averages,
                                 cfg.output.eye_time_bins, cfg.output.eye_amplitude_bins);
        eye_done = true;
      }
    } catch (const AdaptationError& e) {
      out.error = std::string("equalize/") + eq_kind_name(eqcfg.kind) + ": " + e.what();
    }
    result.equalizers.push_back(std::move(out));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepVariable { symbol_rate, rop, temperature, wdm_channel, dr8_lane };

inline std::string sweep_variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::symbol_rate: return "symbol_rate";
    case SweepVariable::rop: return "rop";
    case SweepVariable::temperature: return "temperature";
    case SweepVariable::wdm_channel: return "wdm_channel";
    case SweepVariable::dr8_lane: return "dr8_lane";
  }
  return "?";
}

inline std::optional<SweepVariable> parse_sweep_variable(const std::string& s) {
  if (s == "symbol_rate") return SweepVariable::symbol_rate;
  if (s == "rop") return SweepVariable::rop;
  if (s == "temperature") return SweepVariable::temperature;
  if (s == "wdm_channel") return SweepVariable::wdm_channel;
  if (s == "dr8_lane") return SweepVariable::dr8_lane;
  return std::nullopt;
}

struct WdmSettings {
  double start_nm = 1295.56;
  double spacing_ghz = 400.0;
  int count = 8;
  // Symbol shift applied per channel index so neighbors carry decorrelated
  // data; 0 keeps identical patterns and earns a warning.
  int decorrelation_delay_symbols = 997;
};

struct Dr8Settings {
  double laser_power_dbm = 23.0;    // shared source feeding the 1:8 split
  double splitter_excess_db = 1.5;  // beyond the ideal 9.03 dB split loss
  double v_pi = 4.5;                // differential drive on the DR8 modulator
};

struct SweepSpec {
  LinkConfig base;
  SweepVariable variable = SweepVariable::rop;
  std::vector<double> values;
  WdmSettings wdm;
  Dr8Settings dr8;
};

// Single WDM channel evaluated at its grid wavelength. The cut index selects
// the lane; data decorrelation between lanes is a per-lane seed plus a
// symbol delay, mirroring odd/even pattern staggering on real hardware.
inline LinkResult run_wdm(const LinkConfig& base, const WdmChannelPlan& plan,
                          int cut_index, int decorrelation_delay_symbols) {
  if (cut_index < 1 || std::size_t(cut_index) > plan.channels.size())
    throw Error("run_wdm: cut index out of range");
  LinkConfig cfg = base;
  const WdmChannel& ch = plan.channels[std::size_t(cut_index - 1)];
  cfg.laser.wavelength_nm = ch.wavelength_nm;
  cfg.temperature_c = std::numeric_limits<double>::quiet_NaN();
  cfg.seed = derive_seed(base.seed, std::uint64_t(cut_index),
                         std::uint64_t(std::max(decorrelation_delay_symbols, 0)) + 11);
  LinkResult res = run_link(cfg);
  res.sweep_variable = "wdm_channel";
  res.sweep_value = double(cut_index);
  if (decorrelation_delay_symbols == 0)
    res.warnings.push_back("wdm: zero decorrelation delay, neighbor data correlated");
  return res;
}

// One lane of a DR8-style parallel link: a shared high-power source split
// 1:8 (ideal split plus excess loss), driving a higher-Vpi modulator.
inline LinkResult run_dr8(const LinkConfig& base, int lane, const Dr8Settings& dr8) {
  if (lane < 1 || lane > 8) throw Error("run_dr8: lane must be in 1..8");
  LinkConfig cfg = base;
  cfg.laser.power_dbm =
      dr8.laser_power_dbm - 10.0 * std::log10(8.0) - dr8.splitter_excess_db;
  cfg.channel.mzm.v_pi = dr8.v_pi;
  cfg.seed = derive_seed(base.seed, std::uint64_t(lane), 21);
  LinkResult res = run_link(cfg);
  res.sweep_variable = "dr8_lane";
  res.sweep_value = double(lane);
  return res;
}

namespace detail {

inline LinkResult sweep_point(const SweepSpec& spec, std::size_t index) {
  const double value = spec.values[index];
  LinkConfig cfg = spec.base;
  cfg.seed = derive_seed(spec.base.seed, index, 7);
  switch (spec.variable) {
    case SweepVariable::symbol_rate:
      cfg.symbol_rate_gbd = value;
      break;
    case SweepVariable::rop:
      cfg.channel.rop_offset_db = value;
      break;
    case SweepVariable::temperature:
      cfg.temperature_c = value;
      break;
    case SweepVariable::wdm_channel: {
      const WdmChannelPlan plan =
          build_wdm_grid(spec.wdm.start_nm, spec.wdm.spacing_ghz, spec.wdm.count);
      LinkConfig b = spec.base;  // run_wdm derives its own per-lane seed
      return run_wdm(b, plan, int(value), spec.wdm.decorrelation_delay_symbols);
    }
    case SweepVariable::dr8_lane:
      return run_dr8(spec.base, int(value), spec.dr8);
  }
  LinkResult res = run_link(cfg);
  res.sweep_variable = sweep_variable_name(spec.variable);
  res.sweep_value = value;
  return res;
}

}  // namespace detail

// Runs every sweep point; failures are recorded on the point and do not stop
// the sweep. Results are ordered by point index regardless of worker count,
// and per-point seeds depend only on (base seed, index), so the output is
// identical for any jobs value.
inline std::vector<LinkResult> sweep(const SweepSpec& spec, int jobs = 1) {
  if (spec.values.empty()) throw Error("sweep: no values");
  if (jobs < 1) throw Error("sweep: jobs must be >= 1");
  {
    auto issues = spec.base.validate();
    if (!issues.empty()) throw ValidationError(issues);
  }
  std::vector<LinkResult> results(spec.values.size());
  auto work = [&](std::size_t i) {
    try {
      results[i] = detail::sweep_point(spec, i);
    } catch (const std::exception& e) {
      LinkResult fail;
      fail.config = spec.base;
      fail.sweep_variable = sweep_variable_name(spec.variable);
      fail.sweep_value = spec.values[i];
      fail.error = e.what();
      results[i] = std::move(fail);
    }
  };
  const int nthreads = std::min<std::size_t>(std::size_t(jobs), spec.values.size());
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < spec.values.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthreads));
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < spec.values.size();
             i = next.fetch_add(1))
          work(i);
      });
    for (auto& th : pool) th.join();
  }
  return results;
}

inline std::vector<LinkResult> sweep_temperature(const LinkConfig& base,
                                                 const std::vector<double>& temps,
                                                 int jobs = 1) {
  SweepSpec spec;
  spec.base = base;
  spec.variable = SweepVariable::temperature;
  spec.values = temps;
  return sweep(spec, jobs);
}

// ---------------------------------------------------------------------------
// Aggregate accounting across parallel lanes

struct AggregateVerdict {
  int lanes = 0;
  double worst_ber = 0.0;
  std::optional<FecCode> fec;
  double lane_net_gbps = 0.0;   // reported resolution
  double aggregate_gbps = 0.0;  // lanes * lane rate
};

// The FEC must cover the worst lane; every lane then runs the same code, so
// the aggregate is lanes times the per-lane net rate.
inline AggregateVerdict aggregate_verdict(const std::vector<LinkResult>& lanes,
                                          EqKind which) {
  if (lanes.empty()) throw Error("aggregate_verdict: no results");
  AggregateVerdict v;
  const LinkConfig& cfg = lanes.front().config;
  const ModulationFormat fmt = ModulationFormat::make(cfg.modulation);
  for (const auto& lane : lanes) {
    if (!lane.ok()) throw Error("aggregate_verdict: failed lane present: " + lane.error);
    const EqOutcome* match = nullptr;
    for (const auto& eq : lane.equalizers)
      if (eq.config.kind == which) match = &eq;
    if (!match || !match->ok())
      throw Error("aggregate_verdict: missing equalizer result on a lane");
    v.worst_ber = std::max(v.worst_ber, match->ber.ber_reported);
    v.lanes += 1;
  }
  v.fec = select_fec(v.worst_ber, cfg.fec_ledger);
  if (v.fec) {
    v.lane_net_gbps = reported_rate_gbps(net_rate_gbps(cfg.symbol_rate_gbd, fmt, *v.fec));
    v.aggregate_gbps = double(v.lanes) * v.lane_net_gbps;
  }
  return v;
}

}  // namespace imdd
