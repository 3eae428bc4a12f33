#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "imdd/common.hpp"

namespace imdd {

// ---------------------------------------------------------------------------
// Modulation formats

enum class PamFormat { pam4, pam6, pam8 };

struct Fraction {
  int num = 1;
  int den = 1;
  double value() const { return double(num) / double(den); }
};

// Amplitude alphabet with unit average symbol power. PAM6 is transmitted as
// coded pairs: 5 bits select one of 32 valid (first, second) level pairs, the
// four (+-max, +-max) corner pairs being excluded.
struct ModulationFormat {
  PamFormat kind = PamFormat::pam4;
  std::vector<double> levels;
  Fraction bits_per_symbol;

  int order() const { return int(levels.size()); }

  std::string name() const {
    switch (kind) {
      case PamFormat::pam4: return "pam4";
      case PamFormat::pam6: return "pam6";
      case PamFormat::pam8: return "pam8";
    }
    return "?";
  }

  static ModulationFormat make(PamFormat kind) {
    ModulationFormat m;
    m.kind = kind;
    int M = kind == PamFormat::pam4 ? 4 : kind == PamFormat::pam6 ? 6 : 8;
    // Average power of the 32 valid PAM6 pairs works out to 10 per symbol on
    // the raw +-{1,3,5} grid; the square alphabets follow (M^2-1)/3.
    double norm = kind == PamFormat::pam6
                      ? std::sqrt(10.0)
                      : std::sqrt((double(M) * M - 1.0) / 3.0);
    m.levels.resize(M);
    for (int i = 0; i < M; ++i) m.levels[i] = double(2 * i - M + 1) / norm;
    m.bits_per_symbol = kind == PamFormat::pam4   ? Fraction{2, 1}
                        : kind == PamFormat::pam6 ? Fraction{5, 2}
                                                  : Fraction{3, 1};
    return m;
  }

  static std::optional<PamFormat> parse(const std::string& s) {
    if (s == "pam4") return PamFormat::pam4;
    if (s == "pam6") return PamFormat::pam6;
    if (s == "pam8") return PamFormat::pam8;
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// FEC ledger and net-rate accounting

struct FecCode {
  std::string name;
  double overhead = 0.0;       // fractional, e.g. 0.07 for 7%
  double ber_threshold = 0.0;  // pre-FEC BER at which the code still corrects
};

// Thresholds are industry operating points, not outputs of this simulator:
// KP4 RS(544,514) at 2.2e-4, a 7% HD code at 4.5e-3, and soft-decision
// codes at 2.4e-2 / 5e-2.
inline std::vector<FecCode> default_fec_ledger() {
  return {
      {"kp4", 0.058, 2.2e-4},
      {"hd7", 0.070, 4.5e-3},
      {"sd20", 0.200, 2.4e-2},
      {"sd25", 0.250, 5.0e-2},
  };
}

// Lowest-overhead code whose threshold covers the measured BER; nullopt when
// even the biggest code in the ledger cannot.
inline std::optional<FecCode> select_fec(double ber, const std::vector<FecCode>& ledger) {
  if (ledger.empty()) throw Error("select_fec: empty ledger");
  if (!(ber >= 0.0) || ber > 1.0) throw Error("select_fec: BER out of range");
  for (std::size_t i = 1; i < ledger.size(); ++i)
    if (!(ledger[i].overhead > ledger[i - 1].overhead) ||
        !(ledger[i].ber_threshold > ledger[i - 1].ber_threshold))
      throw Error("select_fec: ledger must be sorted by overhead and threshold");
  for (const auto& c : ledger)
    if (ber <= c.ber_threshold) return c;
  return std::nullopt;
}

inline double net_rate_gbps(double symbol_rate_gbd, const ModulationFormat& fmt,
                            const FecCode& fec) {
  if (symbol_rate_gbd <= 0) throw Error("net_rate_gbps: symbol rate must be positive");
  return symbol_rate_gbd * fmt.bits_per_symbol.value() / (1.0 + fec.overhead);
}

// Rates are quoted truncated to 0.1 Gbps (e.g. 450 GBd PAM4 inside 7% OH is
// 420.5607... -> 420.5).
inline double reported_rate_gbps(double gbps) {
  return std::floor(gbps * 10.0 + 1e-9) / 10.0;
}

// Aggregate throughputs are quoted truncated to 0.01 Tbps (8 x 420.5 Gbps
// reads as 3.36 Tbps).
inline double reported_aggregate_tbps(double gbps) {
  return std::floor(gbps / 10.0 + 1e-9) / 100.0;
}

// ---------------------------------------------------------------------------
// WDM grid

struct WdmChannel {
  int index = 0;  // 1-based
  double frequency_thz = 0.0;
  double wavelength_nm = 0.0;
};

struct WdmChannelPlan {
  std::vector<WdmChannel> channels;
};

// Frequency grid anchored at the shortest wavelength and descending in
// frequency, so wavelengths ascend with channel index.
inline WdmChannelPlan build_wdm_grid(double start_nm, double spacing_ghz, int count) {
  if (!(start_nm > 0) || !(spacing_ghz > 0) || count < 1)
    throw Error("build_wdm_grid: invalid grid parameters");
  WdmChannelPlan plan;
  const double f1 = kSpeedOfLightNmThz / start_nm;
  for (int i = 0; i < count; ++i) {
    WdmChannel ch;
    ch.index = i + 1;
    ch.frequency_thz = f1 - double(i) * spacing_ghz / 1000.0;
    if (ch.frequency_thz <= 0) throw Error("build_wdm_grid: grid walks past DC");
    ch.wavelength_nm = kSpeedOfLightNmThz / ch.frequency_thz;
    plan.channels.push_back(ch);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Fiber and laser

struct FiberSpec {
  double length_km = 0.0;
  double zero_dispersion_nm = 1310.0;
  double dispersion_slope_ps_nm2_km = 0.092;  // S0 at the zero-dispersion point
  double loss_db_km = 0.32;

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (!(length_km >= 0)) issues.push_back(p + "length_km must be >= 0");
    if (!(zero_dispersion_nm > 1200 && zero_dispersion_nm < 1400))
      issues.push_back(p + "zero_dispersion_nm outside O-band model range");
    if (!(dispersion_slope_ps_nm2_km > 0))
      issues.push_back(p + "dispersion_slope_ps_nm2_km must be > 0");
    if (!(loss_db_km >= 0)) issues.push_back(p + "loss_db_km must be >= 0");
  }
};

// Standard single-mode dispersion model around the zero-dispersion wavelength:
// D(l) = S0/4 * (l - l0^4 / l^3), in ps/(nm km).
inline double dispersion_parameter(double wavelength_nm, const FiberSpec& fiber) {
  if (!(wavelength_nm > 1200 && wavelength_nm < 1400))
    throw Error("dispersion_parameter: wavelength outside O-band model range");
  const double l = wavelength_nm;
  const double l0 = fiber.zero_dispersion_nm;
  return fiber.dispersion_slope_ps_nm2_km / 4.0 * (l - (l0 * l0 * l0 * l0) / (l * l * l));
}

struct LaserSpec {
  double power_dbm = 9.0;
  double wavelength_nm = 1310.0;
  // Two (temperature C, wavelength nm) anchors of the uncooled-drift line.
  std::array<std::array<double, 2>, 2> temperature_calibration{{{30.0, 1308.3},
                                                                {85.0, 1315.7}}};
  double power_ripple_db = 0.8;   // peak-to-peak over temperature
  double ripple_period_c = 11.0;

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (!(wavelength_nm > 1200 && wavelength_nm < 1400))
      issues.push_back(p + "wavelength_nm outside O-band model range");
    if (temperature_calibration[1][0] == temperature_calibration[0][0])
      issues.push_back(p + "temperature_calibration anchors must differ in temperature");
    if (!(power_ripple_db >= 0)) issues.push_back(p + "power_ripple_db must be >= 0");
    if (!(ripple_period_c > 0)) issues.push_back(p + "ripple_period_c must be > 0");
  }
};

inline double wavelength_from_temperature(double t_c, const LaserSpec& laser) {
  const auto& a = laser.temperature_calibration[0];
  const auto& b = laser.temperature_calibration[1];
  return a[1] + (t_c - a[0]) * (b[1] - a[1]) / (b[0] - a[0]);
}

// Etalon-like output power ripple across temperature, centered on the rated
// power, peak-to-peak power_ripple_db.
inline double laser_power_at_temperature(double t_c, const LaserSpec& laser) {
  const double t0 = laser.temperature_calibration[0][0];
  return laser.power_dbm + 0.5 * laser.power_ripple_db *
                               std::sin(2.0 * kPi * (t_c - t0) / laser.ripple_period_c);
}

// ---------------------------------------------------------------------------
// Component specs referenced by the link configuration

struct MzmSpec {
  double v_pi = 2.0;
  double bias = 0.5;  // fraction of Vpi; 0.5 = quadrature
  double insertion_loss_db = 4.0;

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (!(v_pi > 0)) issues.push_back(p + "v_pi must be > 0");
    if (!(bias > 0 && bias < 1)) issues.push_back(p + "bias must be in (0, 1)");
    if (!(insertion_loss_db >= 0)) issues.push_back(p + "insertion_loss_db must be >= 0");
  }
};

struct PdSpec {
  double responsivity = 0.5;    // A/W
  double bandwidth_ghz = 110.0; // 4th-order Bessel 3 dB point; <= 0 disables
  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (!(responsivity > 0)) issues.push_back(p + "responsivity must be > 0");
  }
};

struct NoiseSpec {
  // RMS of the additive receiver noise relative to the photocurrent of 1 mW
  // incident power, before coloring.
  double white_sigma = 0.0;
  double coloring_peak_ghz = 110.0;
  double coloring_gain_db = 0.0;  // extra gain at the peak; 0 = white

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (!(white_sigma >= 0)) issues.push_back(p + "white_sigma must be >= 0");
    if (coloring_gain_db != 0.0 && !(coloring_peak_ghz > 0))
      issues.push_back(p + "coloring_peak_ghz must be > 0 when coloring is enabled");
  }
};

enum class EqKind { ffe, ffe_mlse1, dfe, dfe_mlse1 };

inline std::string eq_kind_name(EqKind k) {
  switch (k) {
    case EqKind::ffe: return "ffe";
    case EqKind::ffe_mlse1: return "ffe_mlse1";
    case EqKind::dfe: return "dfe";
    case EqKind::dfe_mlse1: return "dfe_mlse1";
  }
  return "?";
}

inline std::optional<EqKind> parse_eq_kind(const std::string& s) {
  if (s == "ffe") return EqKind::ffe;
  if (s == "ffe_mlse1") return EqKind::ffe_mlse1;
  if (s == "dfe") return EqKind::dfe;
  if (s == "dfe_mlse1") return EqKind::dfe_mlse1;
  return std::nullopt;
}

struct EqualizerConfig {
  EqKind kind = EqKind::dfe;
  int ff_taps = 51;           // T/2-spaced, odd
  int fb_taps = 21;           // symbol-spaced; 0 for pure FFE
  double step_size = 2e-3;
  int training_symbols = 12000;

  bool uses_feedback() const { return kind == EqKind::dfe || kind == EqKind::dfe_mlse1; }
  bool uses_mlse() const { return kind == EqKind::ffe_mlse1 || kind == EqKind::dfe_mlse1; }

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (ff_taps < 1 || ff_taps % 2 == 0) issues.push_back(p + "ff_taps must be odd and >= 1");
    if (fb_taps < 0) issues.push_back(p + "fb_taps must be >= 0");
    if (uses_feedback() && fb_taps < 1)
      issues.push_back(p + "fb_taps must be >= 1 for decision-feedback kinds");
    if (!uses_feedback() && fb_taps != 0)
      issues.push_back(p + "fb_taps must be 0 for feed-forward kinds");
    if (!(step_size > 0 && step_size < 1)) issues.push_back(p + "step_size must be in (0, 1)");
    if (training_symbols < 256) issues.push_back(p + "training_symbols must be >= 256");
  }
};

// Analog response descriptor; materialized into a FrequencyResponse by the
// channel module. "table" carries measured rows of (GHz, dB, deg).
struct ResponseSpec {
  enum class Kind { flat, bessel, first_order, table };
  Kind kind = Kind::bessel;
  std::string label;
  double gain_db = 0.0;     // flat
  int order = 4;            // bessel
  double cutoff_ghz = 110;  // bessel / first_order
  double atten_at_cutoff_db = 3.0;
  std::vector<std::array<double, 3>> rows;  // table: freq_ghz, mag_db, phase_deg
  std::string source_file;

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    switch (kind) {
      case Kind::flat:
        break;
      case Kind::bessel:
        if (order < 1 || order > 8) issues.push_back(p + "order must be in 1..8");
        if (!(cutoff_ghz > 0)) issues.push_back(p + "cutoff_ghz must be > 0");
        if (!(atten_at_cutoff_db > 0)) issues.push_back(p + "atten_at_cutoff_db must be > 0");
        break;
      case Kind::first_order:
        if (!(cutoff_ghz > 0)) issues.push_back(p + "cutoff_ghz must be > 0");
        break;
      case Kind::table:
        if (rows.size() < 2) issues.push_back(p + "table needs at least 2 rows");
        break;
    }
  }
};

struct TxSettings {
  bool preemphasis_enabled = true;
  std::vector<int> preemphasis_reference;  // indices into channel.responses
  double preemphasis_max_boost_db = 18.0;
  double clip_ratio = 2.5;   // clip level relative to pre-clip RMS
  int quantizer_bits = 7;
  double full_scale_vpp = 0.6;

  void validate(std::vector<std::string>& issues, const std::string& p,
                std::size_t n_responses) const {
    if (!(preemphasis_max_boost_db >= 0))
      issues.push_back(p + "preemphasis_max_boost_db must be >= 0");
    if (!(clip_ratio > 0)) issues.push_back(p + "clip_ratio must be > 0");
    if (quantizer_bits < 2 || quantizer_bits > 16)
      issues.push_back(p + "quantizer_bits must be in 2..16");
    if (!(full_scale_vpp > 0)) issues.push_back(p + "full_scale_vpp must be > 0");
    for (int idx : preemphasis_reference)
      if (idx < 0 || std::size_t(idx) >= n_responses)
        issues.push_back(p + "preemphasis_reference index " + std::to_string(idx) +
                         " out of range");
  }
};

struct ChannelSettings {
  int sim_oversampling = 2;  // simulation rate as multiple of the DAC rate
  std::vector<ResponseSpec> responses;
  double rf_gain_db = 0.0;        // electrical gain ahead of the modulator
  MzmSpec mzm;
  PdSpec pd;
  NoiseSpec noise;
  double extra_gain_db = 0.0;     // optical amplifier, flat
  double excess_noise_sigma = 0.0;  // optical white field noise, sqrt(mW) units
  double rop_offset_db = 0.0;     // received-power offset (attenuator sweep)

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (sim_oversampling < 1 || sim_oversampling > 8)
      issues.push_back(p + "sim_oversampling must be in 1..8");
    if (!(excess_noise_sigma >= 0)) issues.push_back(p + "excess_noise_sigma must be >= 0");
    for (std::size_t i = 0; i < responses.size(); ++i)
      responses[i].validate(issues, p + "responses[" + std::to_string(i) + "].");
    mzm.validate(issues, p + "mzm.");
    pd.validate(issues, p + "pd.");
    noise.validate(issues, p + "noise.");
  }
};

struct RxSettings {
  std::vector<EqualizerConfig> equalizers;
  int guard_symbols = -1;  // -1: per-equalizer max(ff_taps, fb_taps, 64)

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (equalizers.empty()) issues.push_back(p + "equalizers must not be empty");
    for (std::size_t i = 0; i < equalizers.size(); ++i)
      equalizers[i].validate(issues, p + "equalizers[" + std::to_string(i) + "].");
  }
};

struct OutputSettings {
  bool spectrum = false;
  bool eye = false;
  int eye_time_bins = 64;
  int eye_amplitude_bins = 128;
  int eye_averages = 1;

  void validate(std::vector<std::string>& issues, const std::string& p) const {
    if (eye_time_bins < 8) issues.push_back(p + "eye_time_bins must be >= 8");
    if (eye_amplitude_bins < 8) issues.push_back(p + "eye_amplitude_bins must be >= 8");
    if (eye_averages < 1) issues.push_back(p + "eye_averages must be >= 1");
  }
};

// Everything needed to run one link end to end, in physical units.
struct LinkConfig {
  PamFormat modulation = PamFormat::pam4;
  double symbol_rate_gbd = 225.0;
  double dac_rate_gsa = 225.0;
  std::size_t num_symbols = 1 << 16;
  std::uint64_t seed = 1;
  // When set, the laser wavelength and power are derived from the uncooled
  // temperature model instead of laser.wavelength_nm / power_dbm.
  double temperature_c = std::numeric_limits<double>::quiet_NaN();

  FiberSpec fiber;
  LaserSpec laser;
  TxSettings tx;
  ChannelSettings channel;
  RxSettings rx;
  OutputSettings output;
  std::vector<FecCode> fec_ledger = default_fec_ledger();

  bool has_temperature() const { return !std::isnan(temperature_c); }

  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    if (!(symbol_rate_gbd > 0)) issues.push_back("symbol_rate_gbd must be > 0");
    if (!(dac_rate_gsa > 0)) issues.push_back("dac_rate_gsa must be > 0");
    if (symbol_rate_gbd > dac_rate_gsa)
      issues.push_back("symbol_rate_gbd must not exceed dac_rate_gsa");
    if (num_symbols < 4096) issues.push_back("num_symbols must be >= 4096");
    if (has_temperature() && (temperature_c < -40 || temperature_c > 120))
      issues.push_back("temperature_c outside supported range");
    fiber.validate(issues, "fiber.");
    laser.validate(issues, "laser.");
    tx.validate(issues, "tx.", channel.responses.size());
    channel.validate(issues, "channel.");
    rx.validate(issues, "rx.");
    output.validate(issues, "output.");
    if (fec_ledger.empty()) issues.push_back("fec_ledger must not be empty");
    return issues;
  }
};

}  // namespace imdd
