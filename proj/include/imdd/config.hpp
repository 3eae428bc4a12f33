#pragma once

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "imdd/harness.hpp"

namespace imdd {

using Json = nlohmann::json;

struct ParsedConfig {
  LinkConfig link;
  std::optional<SweepSpec> sweep;  // sweep.base mirrors link
};

// ---------------------------------------------------------------------------
// File helpers

inline std::string load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Measured response tables: lines of "freq_ghz mag_db phase_deg", '#' or
// empty lines skipped, comma or whitespace separated.

struct ResponseTable {
  std::vector<std::array<double, 3>> rows;
  std::vector<std::string> warnings;
};

inline ResponseTable parse_response_table(const std::string& text) {
  ResponseTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string cleaned;
    for (char c : line) cleaned += (c == ',' ? ' ' : c);
    const auto hash = cleaned.find('#');
    if (hash != std::string::npos) cleaned.erase(hash);
    std::istringstream ls(cleaned);
    double f, m, p;
    if (!(ls >> f)) continue;  // blank or comment-only line
    if (!(ls >> m >> p))
      throw IoError("response table line " + std::to_string(lineno) +
                    ": expected 'freq_ghz mag_db phase_deg'");
    double extra;
    if (ls >> extra)
      throw IoError("response table line " + std::to_string(lineno) +
                    ": more than 3 columns");
    if (f < 0)
      throw IoError("response table line " + std::to_string(lineno) +
                    ": negative frequency");
    table.rows.push_back({f, m, p});
  }
  if (table.rows.empty()) throw IoError("response table: no data rows");
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (!(table.rows[i][0] > table.rows[i - 1][0]))
      throw IoError("response table: frequencies must be strictly increasing");
  if (table.rows.front()[0] > 1e-9) {
    // Hold the first magnitude down to DC with zero phase so the response
    // stays physical at the bottom of the band.
    table.rows.insert(table.rows.begin(), {0.0, table.rows.front()[1], 0.0});
    table.warnings.push_back(
        "response table: no DC row; synthesized one from the first point");
  }
  return table;
}

// ---------------------------------------------------------------------------
// Strict schema walker

namespace detail {

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Accumulates every schema problem instead of stopping at the first one.
struct ConfigCursor {
  std::vector<std::string>& errors;
  std::string base_dir;

  void fail(const std::string& path, const std::string& msg) {
    errors.push_back(path + ": " + msg);
  }

  void check_keys(const Json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const char* k : allowed)
        if (it.key() == k) { known = true; break; }
      if (known) continue;
      std::string best;
      std::size_t best_d = 4;
      for (const char* k : allowed) {
        const std::size_t d = levenshtein(it.key(), k);
        if (d < best_d) { best_d = d; best = k; }
      }
      std::string msg = "unknown key '" + it.key() + "'";
      if (!best.empty()) msg += " (did you mean '" + best + "'?)";
      fail(path, msg);
    }
  }

  const Json* object(const Json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) return nullptr;
    if (!obj[key].is_object()) {
      fail(path + "." + key, "must be an object");
      return nullptr;
    }
    return &obj[key];
  }

  double number(const Json& obj, const std::string& path, const char* key, double def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_number()) {
      fail(path + "." + key, "must be a number");
      return def;
    }
    return obj[key].get<double>();
  }

  std::int64_t integer(const Json& obj, const std::string& path, const char* key,
                       std::int64_t def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_number_integer()) {
      fail(path + "." + key, "must be an integer");
      return def;
    }
    return obj[key].get<std::int64_t>();
  }

  bool boolean(const Json& obj, const std::string& path, const char* key, bool def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_boolean()) {
      fail(path + "." + key, "must be a boolean");
      return def;
    }
    return obj[key].get<bool>();
  }

  std::string text(const Json& obj, const std::string& path, const char* key,
                   const std::string& def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_string()) {
      fail(path + "." + key, "must be a string");
      return def;
    }
    return obj[key].get<std::string>();
  }
};

inline ResponseSpec parse_response_spec(ConfigCursor& cur, const Json& j,
                                        const std::string& path) {
  ResponseSpec spec;
  cur.check_keys(j, path,
                 {"kind", "label", "gain_db", "order", "cutoff_ghz",
                  "atten_at_cutoff_db", "file", "rows"});
  const std::string kind = cur.text(j, path, "kind", "bessel");
  if (kind == "flat")
    spec.kind = ResponseSpec::Kind::flat;
  else if (kind == "bessel")
    spec.kind = ResponseSpec::Kind::bessel;
  else if (kind == "first_order")
    spec.kind = ResponseSpec::Kind::first_order;
  else if (kind == "table")
    spec.kind = ResponseSpec::Kind::table;
  else
    cur.fail(path + ".kind",
             "must be one of flat, bessel, first_order, table (got '" + kind + "')");
  spec.label = cur.text(j, path, "label", "");
  spec.gain_db = cur.number(j, path, "gain_db", 0.0);
  spec.order = int(cur.integer(j, path, "order", 4));
  spec.cutoff_ghz = cur.number(j, path, "cutoff_ghz", 110.0);
  spec.atten_at_cutoff_db = cur.number(j, path, "atten_at_cutoff_db", 3.0);
  spec.source_file = cur.text(j, path, "file", "");

  if (j.contains("rows")) {
    if (!j["rows"].is_array()) {
      cur.fail(path + ".rows", "must be an array of [freq_ghz, mag_db, phase_deg]");
    } else {
      for (const auto& r : j["rows"]) {
        if (!r.is_array() || r.size() != 3 || !r[0].is_number() || !r[1].is_number() ||
            !r[2].is_number()) {
          cur.fail(path + ".rows", "each row must be [freq_ghz, mag_db, phase_deg]");
          break;
        }
        spec.rows.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>()});
      }
    }
  } else if (spec.kind == ResponseSpec::Kind::table && !spec.source_file.empty()) {
    try {
      std::string full = spec.source_file;
      if (!cur.base_dir.empty() && full.front() != '/')
        full = cur.base_dir + "/" + full;
      auto table = parse_response_table(load_file(full));
      spec.rows = std::move(table.rows);
    } catch (const IoError& e) {
      cur.fail(path + ".file", e.what());
    }
  } else if (spec.kind == ResponseSpec::Kind::table) {
    cur.fail(path, "table response needs 'rows' or 'file'");
  }
  return spec;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Document parsing

inline ParsedConfig parse_config(const std::string& text, const std::string& base_dir = "") {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw IoError("config root must be a JSON object");

  std::vector<std::string> errors;
  detail::ConfigCursor cur{errors, base_dir};
  ParsedConfig out;
  LinkConfig& link = out.link;

  cur.check_keys(doc, "$", {"version", "link", "sweep", "fec_ledger"});
  const std::int64_t version = cur.integer(doc, "$", "version", 1);
  if (version != 1) cur.fail("$.version", "unsupported version (expected 1)");

  if (const Json* l = cur.object(doc, "$", "link")) {
    const std::string path = "$.link";
    cur.check_keys(*l, path,
                   {"modulation", "symbol_rate_gbd", "dac_rate_gsa", "num_symbols",
                    "seed", "temperature_c", "fiber", "laser", "tx", "channel", "rx",
                    "output"});
    const std::string mod = cur.text(*l, path, "modulation", "pam4");
    if (auto pf = ModulationFormat::parse(mod))
      link.modulation = *pf;
    else
      cur.fail(path + ".modulation", "must be pam4, pam6 or pam8 (got '" + mod + "')");
    link.symbol_rate_gbd = cur.number(*l, path, "symbol_rate_gbd", link.symbol_rate_gbd);
    link.dac_rate_gsa = cur.number(*l, path, "dac_rate_gsa", link.dac_rate_gsa);
    link.num_symbols = std::size_t(cur.integer(*l, path, "num_symbols",
                                               std::int64_t(link.num_symbols)));
    link.seed = std::uint64_t(cur.integer(*l, path, "seed", std::int64_t(link.seed)));
    if (l->contains("temperature_c") && !(*l)["temperature_c"].is_null())
      link.temperature_c = cur.number(*l, path, "temperature_c", 0.0);

    if (const Json* f = cur.object(*l, path, "fiber")) {
      const std::string p = path + ".fiber";
      cur.check_keys(*f, p, {"length_km", "zero_dispersion_nm",
                             "dispersion_slope_ps_nm2_km", "loss_db_km"});
      link.fiber.length_km = cur.number(*f, p, "length_km", link.fiber.length_km);
      link.fiber.zero_dispersion_nm =
          cur.number(*f, p, "zero_dispersion_nm", link.fiber.zero_dispersion_nm);
      link.fiber.dispersion_slope_ps_nm2_km = cur.number(
          *f, p, "dispersion_slope_ps_nm2_km", link.fiber.dispersion_slope_ps_nm2_km);
      link.fiber.loss_db_km = cur.number(*f, p, "loss_db_km", link.fiber.loss_db_km);
    }

    if (const Json* la = cur.object(*l, path, "laser")) {
      const std::string p = path + ".laser";
      cur.check_keys(*la, p, {"power_dbm", "wavelength_nm", "temperature_calibration",
                              "power_ripple_db", "ripple_period_c"});
      link.laser.power_dbm = cur.number(*la, p, "power_dbm", link.laser.power_dbm);
      link.laser.wavelength_nm =
          cur.number(*la, p, "wavelength_nm", link.laser.wavelength_nm);
      link.laser.power_ripple_db =
          cur.number(*la, p, "power_ripple_db", link.laser.power_ripple_db);
      link.laser.ripple_period_c =
          cur.number(*la, p, "ripple_period_c", link.laser.ripple_period_c);
      if (la->contains("temperature_calibration")) {
        const Json& tc = (*la)["temperature_calibration"];
        bool ok = tc.is_array() && tc.size() == 2;
        if (ok)
          for (const auto& a : tc)
            ok = ok && a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number();
        if (!ok) {
          cur.fail(p + ".temperature_calibration",
                   "must be [[temp_c, wavelength_nm], [temp_c, wavelength_nm]]");
        } else {
          for (int i = 0; i < 2; ++i)
            link.laser.temperature_calibration[std::size_t(i)] = {
                tc[i][0].get<double>(), tc[i][1].get<double>()};
        }
      }
    }

    if (const Json* t = cur.object(*l, path, "tx")) {
      const std::string p = path + ".tx";
      cur.check_keys(*t, p, {"preemphasis", "clip_ratio", "quantizer_bits",
                             "full_scale_vpp"});
      if (const Json* pe = cur.object(*t, p, "preemphasis")) {
        const std::string pp = p + ".preemphasis";
        cur.check_keys(*pe, pp, {"enabled", "max_boost_db", "reference"});
        link.tx.preemphasis_enabled =
            cur.boolean(*pe, pp, "enabled", link.tx.preemphasis_enabled);
        link.tx.preemphasis_max_boost_db =
            cur.number(*pe, pp, "max_boost_db", link.tx.preemphasis_max_boost_db);
        if (pe->contains("reference")) {
          const Json& r = (*pe)["reference"];
          if (!r.is_array()) {
            cur.fail(pp + ".reference", "must be an array of response indices");
          } else {
            link.tx.preemphasis_reference.clear();
            for (const auto& v : r) {
              if (!v.is_number_integer()) {
                cur.fail(pp + ".reference", "indices must be integers");
                break;
              }
              link.tx.preemphasis_reference.push_back(v.get<int>());
            }
          }
        }
      }
      link.tx.clip_ratio = cur.number(*t, p, "clip_ratio", link.tx.clip_ratio);
      link.tx.quantizer_bits =
          int(cur.integer(*t, p, "quantizer_bits", link.tx.quantizer_bits));
      link.tx.full_scale_vpp = cur.number(*t, p, "full_scale_vpp", link.tx.full_scale_vpp);
    }

    if (const Json* c = cur.object(*l, path, "channel")) {
      const std::string p = path + ".channel";
      cur.check_keys(*c, p,
                     {"sim_oversampling", "responses", "rf_gain_db", "mzm", "pd",
                      "noise", "extra_gain_db", "excess_noise_sigma", "rop_offset_db"});
      link.channel.sim_oversampling =
          int(cur.integer(*c, p, "sim_oversampling", link.channel.sim_oversampling));
      link.channel.rf_gain_db = cur.number(*c, p, "rf_gain_db", link.channel.rf_gain_db);
      link.channel.extra_gain_db =
          cur.number(*c, p, "extra_gain_db", link.channel.extra_gain_db);
      link.channel.excess_noise_sigma =
          cur.number(*c, p, "excess_noise_sigma", link.channel.excess_noise_sigma);
      link.channel.rop_offset_db =
          cur.number(*c, p, "rop_offset_db", link.channel.rop_offset_db);
      if (c->contains("responses")) {
        const Json& rs = (*c)["responses"];
        if (!rs.is_array()) {
          cur.fail(p + ".responses", "must be an array");
        } else {
          link.channel.responses.clear();
          for (std::size_t i = 0; i < rs.size(); ++i) {
            const std::string rp = p + ".responses[" + std::to_string(i) + "]";
            if (!rs[i].is_object()) {
              cur.fail(rp, "must be an object");
              continue;
            }
            link.channel.responses.push_back(detail::parse_response_spec(cur, rs[i], rp));
          }
        }
      }
      if (const Json* m = cur.object(*c, p, "mzm")) {
        const std::string mp = p + ".mzm";
        cur.check_keys(*m, mp, {"v_pi_v", "bias", "insertion_loss_db"});
        link.channel.mzm.v_pi = cur.number(*m, mp, "v_pi_v", link.channel.mzm.v_pi);
        link.channel.mzm.bias = cur.number(*m, mp, "bias", link.channel.mzm.bias);
        link.channel.mzm.insertion_loss_db =
            cur.number(*m, mp, "insertion_loss_db", link.channel.mzm.insertion_loss_db);
      }
      if (const Json* d = cur.object(*c, p, "pd")) {
        const std::string dp = p + ".pd";
        cur.check_keys(*d, dp, {"responsivity_a_w", "bandwidth_ghz"});
        link.channel.pd.responsivity =
            cur.number(*d, dp, "responsivity_a_w", link.channel.pd.responsivity);
        link.channel.pd.bandwidth_ghz =
            cur.number(*d, dp, "bandwidth_ghz", link.channel.pd.bandwidth_ghz);
      }
      if (const Json* n = cur.object(*c, p, "noise")) {
        const std::string np = p + ".noise";
        cur.check_keys(*n, np, {"white_sigma", "coloring_peak_ghz", "coloring_gain_db"});
        link.channel.noise.white_sigma =
            cur.number(*n, np, "white_sigma", link.channel.noise.white_sigma);
        link.channel.noise.coloring_peak_ghz =
            cur.number(*n, np, "coloring_peak_ghz", link.channel.noise.coloring_peak_ghz);
        link.channel.noise.coloring_gain_db =
            cur.number(*n, np, "coloring_gain_db", link.channel.noise.coloring_gain_db);
      }
    }

    if (const Json* r = cur.object(*l, path, "rx")) {
      const std::string p = path + ".rx";
      cur.check_keys(*r, p, {"equalizers", "guard_symbols"});
      link.rx.guard_symbols =
          int(cur.integer(*r, p, "guard_symbols", link.rx.guard_symbols));
      if (r->contains("equalizers")) {
        const Json& eqs = (*r)["equalizers"];
        if (!eqs.is_array()) {
          cur.fail(p + ".equalizers", "must be an array");
        } else {
          link.rx.equalizers.clear();
          for (std::size_t i = 0; i < eqs.size(); ++i) {
            const std::string ep = p + ".equalizers[" + std::to_string(i) + "]";
            if (!eqs[i].is_object()) {
              cur.fail(ep, "must be an object");
              continue;
            }
            cur.check_keys(eqs[i], ep,
                           {"kind", "ff_taps", "fb_taps", "step_size", "training_symbols"});
            EqualizerConfig eq;
            const std::string kind = cur.text(eqs[i], ep, "kind", "dfe");
            if (auto k = parse_eq_kind(kind))
              eq.kind = *k;
            else
              cur.fail(ep + ".kind",
                       "must be ffe, ffe_mlse1, dfe or dfe_mlse1 (got '" + kind + "')");
            const bool fb_default = eq.kind == EqKind::dfe || eq.kind == EqKind::dfe_mlse1;
            eq.ff_taps = int(cur.integer(eqs[i], ep, "ff_taps", eq.ff_taps));
            eq.fb_taps = int(cur.integer(eqs[i], ep, "fb_taps", fb_default ? 21 : 0));
            eq.step_size = cur.number(eqs[i], ep, "step_size", eq.step_size);
            eq.training_symbols =
                int(cur.integer(eqs[i], ep, "training_symbols", eq.training_symbols));
            link.rx.equalizers.push_back(eq);
          }
        }
      }
    }

    if (const Json* o = cur.object(*l, path, "output")) {
      const std::string p = path + ".output";
      cur.check_keys(*o, p, {"spectrum", "eye", "eye_time_bins", "eye_amplitude_bins",
                             "eye_averages"});
      link.output.spectrum = cur.boolean(*o, p, "spectrum", link.output.spectrum);
      link.output.eye = cur.boolean(*o, p, "eye", link.output.eye);
      link.output.eye_time_bins =
          int(cur.integer(*o, p, "eye_time_bins", link.output.eye_time_bins));
      link.output.eye_amplitude_bins =
          int(cur.integer(*o, p, "eye_amplitude_bins", link.output.eye_amplitude_bins));
      link.output.eye_averages =
          int(cur.integer(*o, p, "eye_averages", link.output.eye_averages));
    }
  }

  if (doc.contains("fec_ledger")) {
    const Json& fl = doc["fec_ledger"];
    if (!fl.is_array() || fl.empty()) {
      cur.fail("$.fec_ledger", "must be a non-empty array");
    } else {
      link.fec_ledger.clear();
      for (std::size_t i = 0; i < fl.size(); ++i) {
        const std::string p = "$.fec_ledger[" + std::to_string(i) + "]";
        if (!fl[i].is_object()) {
          cur.fail(p, "must be an object");
          continue;
        }
        cur.check_keys(fl[i], p, {"name", "overhead", "ber_threshold"});
        FecCode code;
        code.name = cur.text(fl[i], p, "name", "");
        code.overhead = cur.number(fl[i], p, "overhead", 0.0);
        code.ber_threshold = cur.number(fl[i], p, "ber_threshold", 0.0);
        if (code.name.empty()) cur.fail(p + ".name", "must be a non-empty string");
        if (!(code.overhead > 0)) cur.fail(p + ".overhead", "must be > 0");
        if (!(code.ber_threshold > 0)) cur.fail(p + ".ber_threshold", "must be > 0");
        link.fec_ledger.push_back(std::move(code));
      }
    }
  }

  if (doc.contains("sweep")) {
    if (!doc["sweep"].is_object()) {
      cur.fail("$.sweep", "must be an object");
    } else {
      const Json& s = doc["sweep"];
      const std::string p = "$.sweep";
      cur.check_keys(s, p, {"variable", "values", "wdm", "dr8"});
      SweepSpec spec;
      const std::string var = cur.text(s, p, "variable", "");
      if (auto v = parse_sweep_variable(var))
        spec.variable = *v;
      else
        cur.fail(p + ".variable",
                 "must be symbol_rate, rop, temperature, wdm_channel or dr8_lane");
      if (!s.contains("values") || !s["values"].is_array() || s["values"].empty()) {
        cur.fail(p + ".values", "must be a non-empty numeric array");
      } else {
        for (const auto& v : s["values"]) {
          if (!v.is_number()) {
            cur.fail(p + ".values", "must contain only numbers");
            break;
          }
          spec.values.push_back(v.get<double>());
        }
      }
      if (const Json* w = cur.object(s, p, "wdm")) {
        const std::string wp = p + ".wdm";
        cur.check_keys(*w, wp, {"start_nm", "spacing_ghz", "count",
                                "decorrelation_delay_symbols"});
        spec.wdm.start_nm = cur.number(*w, wp, "start_nm", spec.wdm.start_nm);
        spec.wdm.spacing_ghz = cur.number(*w, wp, "spacing_ghz", spec.wdm.spacing_ghz);
        spec.wdm.count = int(cur.integer(*w, wp, "count", spec.wdm.count));
        spec.wdm.decorrelation_delay_symbols =
            int(cur.integer(*w, wp, "decorrelation_delay_symbols",
                            spec.wdm.decorrelation_delay_symbols));
      }
      if (const Json* d = cur.object(s, p, "dr8")) {
        const std::string dp = p + ".dr8";
        cur.check_keys(*d, dp, {"laser_power_dbm", "splitter_excess_db", "v_pi_v"});
        spec.dr8.laser_power_dbm =
            cur.number(*d, dp, "laser_power_dbm", spec.dr8.laser_power_dbm);
        spec.dr8.splitter_excess_db =
            cur.number(*d, dp, "splitter_excess_db", spec.dr8.splitter_excess_db);
        spec.dr8.v_pi = cur.number(*d, dp, "v_pi_v", spec.dr8.v_pi);
      }
      out.sweep = std::move(spec);
    }
  }

  if (errors.empty())
    for (const auto& e : link.validate()) errors.push_back("$.link: " + e);
  if (!errors.empty()) throw ValidationError(errors);

  if (out.sweep) out.sweep->base = link;
  return out;
}

// ---------------------------------------------------------------------------
// Effective-config echo (all defaults made explicit). Parsing the echo
// reproduces the same effective configuration, and echoing again is
// byte-identical.

inline Json response_spec_to_json(const ResponseSpec& r) {
  Json j;
  switch (r.kind) {
    case ResponseSpec::Kind::flat: j["kind"] = "flat"; break;
    case ResponseSpec::Kind::bessel: j["kind"] = "bessel"; break;
    case ResponseSpec::Kind::first_order: j["kind"] = "first_order"; break;
    case ResponseSpec::Kind::table: j["kind"] = "table"; break;
  }
  j["label"] = r.label;
  j["gain_db"] = r.gain_db;
  j["order"] = r.order;
  j["cutoff_ghz"] = r.cutoff_ghz;
  j["atten_at_cutoff_db"] = r.atten_at_cutoff_db;
  if (!r.source_file.empty()) j["file"] = r.source_file;
  if (!r.rows.empty()) {
    Json rows = Json::array();
    for (const auto& row : r.rows) rows.push_back({row[0], row[1], row[2]});
    j["rows"] = std::move(rows);
  }
  return j;
}

inline Json link_to_json(const LinkConfig& link) {
  Json l;
  l["modulation"] = ModulationFormat::make(link.modulation).name();
  l["symbol_rate_gbd"] = link.symbol_rate_gbd;
  l["dac_rate_gsa"] = link.dac_rate_gsa;
  l["num_symbols"] = link.num_symbols;
  l["seed"] = link.seed;
  l["temperature_c"] = link.has_temperature() ? Json(link.temperature_c) : Json(nullptr);
  l["fiber"] = {{"length_km", link.fiber.length_km},
                {"zero_dispersion_nm", link.fiber.zero_dispersion_nm},
                {"dispersion_slope_ps_nm2_km", link.fiber.dispersion_slope_ps_nm2_km},
                {"loss_db_km", link.fiber.loss_db_km}};
  l["laser"] = {{"power_dbm", link.laser.power_dbm},
                {"wavelength_nm", link.laser.wavelength_nm},
                {"temperature_calibration",
                 {{link.laser.temperature_calibration[0][0],
                   link.laser.temperature_calibration[0][1]},
                  {link.laser.temperature_calibration[1][0],
                   link.laser.temperature_calibration[1][1]}}},
                {"power_ripple_db", link.laser.power_ripple_db},
                {"ripple_period_c", link.laser.ripple_period_c}};
  l["tx"] = {{"preemphasis",
              {{"enabled", link.tx.preemphasis_enabled},
               {"max_boost_db", link.tx.preemphasis_max_boost_db},
               {"reference", link.tx.preemphasis_reference}}},
             {"clip_ratio", link.tx.clip_ratio},
             {"quantizer_bits", link.tx.quantizer_bits},
             {"full_scale_vpp", link.tx.full_scale_vpp}};
  Json responses = Json::array();
  for (const auto& r : link.channel.responses) responses.push_back(response_spec_to_json(r));
  l["channel"] = {{"sim_oversampling", link.channel.sim_oversampling},
                  {"responses", std::move(responses)},
                  {"rf_gain_db", link.channel.rf_gain_db},
                  {"mzm",
                   {{"v_pi_v", link.channel.mzm.v_pi},
                    {"bias", link.channel.mzm.bias},
                    {"insertion_loss_db", link.channel.mzm.insertion_loss_db}}},
                  {"pd",
                   {{"responsivity_a_w", link.channel.pd.responsivity},
                    {"bandwidth_ghz", link.channel.pd.bandwidth_ghz}}},
                  {"noise",
                   {{"white_sigma", link.channel.noise.white_sigma},
                    {"coloring_peak_ghz", link.channel.noise.coloring_peak_ghz},
                    {"coloring_gain_db", link.channel.noise.coloring_gain_db}}},
                  {"extra_gain_db", link.channel.extra_gain_db},
                  {"excess_noise_sigma", link.channel.excess_noise_sigma},
                  {"rop_offset_db", link.channel.rop_offset_db}};
  Json eqs = Json::array();
  for (const auto& e : link.rx.equalizers)
    eqs.push_back({{"kind", eq_kind_name(e.kind)},
                   {"ff_taps", e.ff_taps},
                   {"fb_taps", e.fb_taps},
                   {"step_size", e.step_size},
                   {"training_symbols", e.training_symbols}});
  l["rx"] = {{"equalizers", std::move(eqs)}, {"guard_symbols", link.rx.guard_symbols}};
  l["output"] = {{"spectrum", link.output.spectrum},
                 {"eye", link.output.eye},
                 {"eye_time_bins", link.output.eye_time_bins},
                 {"eye_amplitude_bins", link.output.eye_amplitude_bins},
                 {"eye_averages", link.output.eye_averages}};
  return l;
}

inline Json effective_config_json(const ParsedConfig& cfg) {
  Json doc;
  doc["version"] = 1;
  doc["link"] = link_to_json(cfg.link);
  Json ledger = Json::array();
  for (const auto& c : cfg.link.fec_ledger)
    ledger.push_back({{"name", c.name},
                      {"overhead", c.overhead},
                      {"ber_threshold", c.ber_threshold}});
  doc["fec_ledger"] = std::move(ledger);
  if (cfg.sweep) {
    Json s;
    s["variable"] = sweep_variable_name(cfg.sweep->variable);
    s["values"] = cfg.sweep->values;
    s["wdm"] = {{"start_nm", cfg.sweep->wdm.start_nm},
                {"spacing_ghz", cfg.sweep->wdm.spacing_ghz},
                {"count", cfg.sweep->wdm.count},
                {"decorrelation_delay_symbols",
                 cfg.sweep->wdm.decorrelation_delay_symbols}};
    s["dr8"] = {{"laser_power_dbm", cfg.sweep->dr8.laser_power_dbm},
                {"splitter_excess_db", cfg.sweep->dr8.splitter_excess_db},
                {"v_pi_v", cfg.sweep->dr8.v_pi}};
    doc["sweep"] = std::move(s);
  }
  return doc;
}

}  // namespace imdd
