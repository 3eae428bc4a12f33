#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "imdd/config.hpp"
#include "imdd/harness.hpp"

namespace imdd {

// ---------------------------------------------------------------------------
// Shared numeric formatting. Both output formats quote BERs to three
// significant digits and net rates to 0.1 Gbps so their numeric fields agree
// exactly; the raw error counts travel alongside.

namespace detail {

inline std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline double round_sig3(double v) {
  return std::stod(format_double("%.3g", v));
}

inline std::string csv_escape(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n') c = ';';
  return s;
}

}  // namespace detail

inline std::string format_ber(double ber) { return detail::format_double("%.3g", ber); }
inline std::string format_rate(double gbps) { return detail::format_double("%.1f", gbps); }

// ---------------------------------------------------------------------------
// Tabular output: one row per (run, equalizer), fixed column order.

inline const char* kTabularHeader =
    "run,variable,value,equalizer,modulation,symbol_rate_gbd,wavelength_nm,"
    "dispersion_ps_nm_km,symbols,bits_compared,bit_errors,ber,ber_upper_bound,"
    "fec,fec_overhead,net_rate_gbps,h1,status";

inline std::string emit_tabular(const std::vector<LinkResult>& results) {
  std::string out = kTabularHeader;
  out += '\n';
  for (std::size_t i = 0; i < results.size(); ++i) {
    const LinkResult& r = results[i];
    const std::string mod = ModulationFormat::make(r.config.modulation).name();
    const std::string var = r.sweep_variable.empty() ? "none" : r.sweep_variable;
    const std::string val =
        r.sweep_variable.empty() ? "" : detail::format_double("%.6g", r.sweep_value);
    if (!r.ok()) {
      out += std::to_string(i) + "," + var + "," + val + ",,," +
             detail::format_double("%.6g", r.config.symbol_rate_gbd) + ",,,,,,,,,,,," +
             detail::csv_escape(r.error) + "\n";
      continue;
    }
    for (const auto& eq : r.equalizers) {
      out += std::to_string(i);
      out += ',';
      out += var;
      out += ',';
      out += val;
      out += ',';
      out += eq_kind_name(eq.config.kind);
      out += ',';
      out += mod;
      out += ',';
      out += detail::format_double("%.6g", r.config.symbol_rate_gbd);
      out += ',';
      out += detail::format_double("%.6g", r.wavelength_nm);
      out += ',';
      out += detail::format_double("%.6g", r.dispersion_ps_nm_km);
      out += ',';
      out += std::to_string(r.symbols_used);
      out += ',';
      if (eq.ok()) {
        out += std::to_string(eq.ber.bits_compared);
        out += ',';
        out += std::to_string(eq.ber.bit_errors);
        out += ',';
        out += format_ber(eq.ber.ber_reported);
        out += ',';
        out += eq.ber.upper_bound ? "1" : "0";
        out += ',';
        out += eq.fec ? eq.fec->name : "none";
        out += ',';
        out += eq.fec ? detail::format_double("%.4g", eq.fec->overhead) : "";
        out += ',';
        out += eq.fec ? format_rate(eq.net_rate_gbps) : "";
        out += ',';
        out += detail::format_double("%.4f", eq.h1);
        out += ",ok\n";
      } else {
        out += ",,,,,,,," + detail::csv_escape(eq.error) + "\n";
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structured output: self-describing document with config snapshot, seeds,
// raw counts and quoted values. Emission is deterministic (sorted keys,
// fixed float handling), so re-emitting the same results is byte-identical.

inline Json result_to_json(const LinkResult& r) {
  Json j;
  j["config"] = link_to_json(r.config);
  j["seed"] = r.seed;
  if (!r.ok()) {
    j["error"] = r.error;
    if (!r.sweep_variable.empty()) {
      j["sweep"] = {{"variable", r.sweep_variable}, {"value", r.sweep_value}};
    }
    return j;
  }
  j["wavelength_nm"] = r.wavelength_nm;
  j["laser_power_dbm"] = r.laser_power_dbm;
  j["dispersion_ps_nm_km"] = r.dispersion_ps_nm_km;
  j["symbols_used"] = r.symbols_used;
  if (!r.sweep_variable.empty())
    j["sweep"] = {{"variable", r.sweep_variable}, {"value", r.sweep_value}};
  Json eqs = Json::array();
  for (const auto& eq : r.equalizers) {
    Json e;
    e["kind"] = eq_kind_name(eq.config.kind);
    e["ff_taps"] = eq.config.ff_taps;
    e["fb_taps"] = eq.config.fb_taps;
    e["step_size"] = eq.config.step_size;
    e["training_symbols"] = eq.config.training_symbols;
    if (eq.ok()) {
      e["bits_compared"] = eq.ber.bits_compared;
      e["bit_errors"] = eq.ber.bit_errors;
      e["ber"] = detail::round_sig3(eq.ber.ber_reported);
      e["ber_upper_bound"] = eq.ber.upper_bound;
      e["h1"] = std::stod(detail::format_double("%.4f", eq.h1));
      if (eq.fec) {
        e["fec"] = {{"name", eq.fec->name},
                    {"overhead", eq.fec->overhead},
                    {"ber_threshold", eq.fec->ber_threshold}};
        e["net_rate_gbps"] = reported_rate_gbps(eq.net_rate_gbps);
      } else {
        e["fec"] = nullptr;
        e["net_rate_gbps"] = nullptr;
      }
    } else {
      e["error"] = eq.error;
    }
    eqs.push_back(std::move(e));
  }
  j["equalizers"] = std::move(eqs);
  j["warnings"] = r.warnings;
  if (!r.spectrum.empty()) {
    Json spec = Json::array();
    for (const auto& pt : r.spectrum)
      spec.push_back({std::stod(detail::format_double("%.6g", pt.freq_ghz)),
                      std::stod(detail::format_double("%.4f", pt.psd_db))});
    j["spectrum"] = std::move(spec);
  }
  if (r.eye) {
    j["eye"] = {{"time_bins", r.eye->time_bins},
                {"amplitude_bins", r.eye->amplitude_bins},
                {"symbol_rate_gbd", r.eye->symbol_rate_gbd},
                {"averages", r.eye->averages},
                {"amp_min", r.eye->amp_min},
                {"amp_max", r.eye->amp_max}};
  }
  return j;
}

inline std::string emit_structured(const std::vector<LinkResult>& results) {
  Json doc;
  doc["version"] = 1;
  Json arr = Json::array();
  for (const auto& r : results) arr.push_back(result_to_json(r));
  doc["results"] = std::move(arr);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Eye histogram as a plain-text matrix: header with dimensions and ranges,
// then amplitude_bins rows (top amplitude first) of time_bins counts.

inline std::string emit_eye(const EyeHistogram& eye) {
  std::string out = "# eye time_bins=" + std::to_string(eye.time_bins) +
                    " amplitude_bins=" + std::to_string(eye.amplitude_bins) +
                    " symbol_rate_gbd=" + detail::format_double("%.6g", eye.symbol_rate_gbd) +
                    " ui_span=2 averages=" + std::to_string(eye.averages) +
                    " amp_min=" + detail::format_double("%.6g", eye.amp_min) +
                    " amp_max=" + detail::format_double("%.6g", eye.amp_max) + "\n";
  for (int a = eye.amplitude_bins - 1; a >= 0; --a) {
    for (int t = 0; t < eye.time_bins; ++t) {
      if (t) out += ' ';
      out += std::to_string(eye.at(t, a));
    }
    out += '\n';
  }
  return out;
}

}  // namespace imdd
