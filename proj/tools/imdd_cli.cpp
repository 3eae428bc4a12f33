// Command-line front end: run single links, sweeps, WDM/DR8 lane sets, eye
// captures and FEC lookups from a JSON scenario file.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imdd/imdd.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "both";  // csv | json | both
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
  auto* opt = cmd->add_option("-c,--config", args.config_path, "scenario JSON file");
  if (needs_config) opt->required();
  cmd->add_option("-o,--out-dir", args.out_dir, "output directory");
  cmd->add_option("-f,--format", args.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  cmd->add_option("-s,--seed", args.seed, "override the scenario seed");
  cmd->add_option("-j,--jobs", args.jobs, "worker threads for sweeps")
      ->check(CLI::PositiveNumber);
}

imdd::ParsedConfig load_config(const CommonArgs& args) {
  const std::string text = imdd::load_file(args.config_path);
  const std::string dir =
      std::filesystem::path(args.config_path).parent_path().string();
  imdd::ParsedConfig cfg = imdd::parse_config(text, dir);
  if (args.seed) {
    cfg.link.seed = *args.seed;
    if (cfg.sweep) cfg.sweep->base.seed = *args.seed;
  }
  return cfg;
}

void write_results(const CommonArgs& args, const std::vector<imdd::LinkResult>& results) {
  std::filesystem::create_directories(args.out_dir);
  if (args.format == "csv" || args.format == "both")
    imdd::write_file(args.out_dir + "/results.csv", imdd::emit_tabular(results));
  if (args.format == "json" || args.format == "both")
    imdd::write_file(args.out_dir + "/results.json", imdd::emit_structured(results));
  for (const auto& r : results) {
    if (r.eye) {
      imdd::write_file(args.out_dir + "/eye.txt", imdd::emit_eye(*r.eye));
      break;
    }
  }
}

void print_summary(const std::vector<imdd::LinkResult>& results) {
  for (const auto& r : results) {
    if (!r.ok()) {
      std::printf("point %s=%g: FAILED: %s\n", r.sweep_variable.c_str(), r.sweep_value,
                  r.error.c_str());
      continue;
    }
    for (const auto& eq : r.equalizers) {
      std::string tag = r.sweep_variable.empty()
                            ? std::string("run")
                            : r.sweep_variable + "=" +
                                  imdd::detail::format_double("%.6g", r.sweep_value);
      if (!eq.ok()) {
        std::printf("%-24s %-10s FAILED: %s\n", tag.c_str(),
                    imdd::eq_kind_name(eq.config.kind).c_str(), eq.error.c_str());
        continue;
      }
      std::printf("%-24s %-10s ber=%-10s fec=%-5s net=%s Gbps\n", tag.c_str(),
                  imdd::eq_kind_name(eq.config.kind).c_str(),
                  imdd::format_ber(eq.ber.ber_reported).c_str(),
                  eq.fec ? eq.fec->name.c_str() : "none",
                  eq.fec ? imdd::format_rate(eq.net_rate_gbps).c_str() : "-");
    }
  }
}

void print_aggregate(const std::vector<imdd::LinkResult>& results, imdd::EqKind kind) {
  try {
    const auto agg = imdd::aggregate_verdict(results, kind);
    if (agg.fec)
      std::printf("aggregate (%d lanes, %s): worst ber=%s fec=%s lane=%s Gbps total=%.2f Tbps\n",
                  agg.lanes, imdd::eq_kind_name(kind).c_str(),
                  imdd::format_ber(agg.worst_ber).c_str(), agg.fec->name.c_str(),
                  imdd::format_rate(agg.lane_net_gbps).c_str(),
                  agg.aggregate_gbps / 1000.0);
    else
      std::printf("aggregate (%d lanes): worst ber=%s exceeds every FEC threshold\n",
                  agg.lanes, imdd::format_ber(agg.worst_ber).c_str());
  } catch (const imdd::Error& e) {
    std::printf("aggregate unavailable: %s\n", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IM/DD PAM link simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, wdm_args, dr8_args, eye_args, val_args;

  auto* cmd_run = app.add_subcommand("run", "run a single link");
  add_common(cmd_run, run_args, true);

  auto* cmd_sweep = app.add_subcommand("sweep", "run the sweep described by the config");
  add_common(cmd_sweep, sweep_args, true);

  auto* cmd_wdm = app.add_subcommand("wdm", "run every channel of the WDM grid");
  int wdm_cut = 0;
  add_common(cmd_wdm, wdm_args, true);
  cmd_wdm->add_option("--cut", wdm_cut, "run only this channel index (1-based)");

  auto* cmd_dr8 = app.add_subcommand("dr8", "run all 8 lanes of the parallel link");
  add_common(cmd_dr8, dr8_args, true);

  auto* cmd_eye = app.add_subcommand("eye", "capture an equalized eye histogram");
  add_common(cmd_eye, eye_args, true);

  auto* cmd_fec = app.add_subcommand("fec", "look up FEC and net rate for a BER");
  double fec_ber = 0.0;
  double fec_baud = 225.0;
  std::string fec_mod = "pam4";
  cmd_fec->add_option("--ber", fec_ber, "pre-FEC BER")->required();
  cmd_fec->add_option("--baud", fec_baud, "symbol rate in GBd");
  cmd_fec->add_option("--modulation", fec_mod, "pam4, pam6 or pam8");

  auto* cmd_validate = app.add_subcommand("validate", "check a config and echo it");
  add_common(cmd_validate, val_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_run->parsed()) {
      auto cfg = load_config(run_args);
      std::vector<imdd::LinkResult> results{imdd::run_link(cfg.link)};
      write_results(run_args, results);
      print_summary(results);
    } else if (cmd_sweep->parsed()) {
      auto cfg = load_config(sweep_args);
      if (!cfg.sweep) throw imdd::Error("config has no sweep section");
      auto results = imdd::sweep(*cfg.sweep, sweep_args.jobs);
      write_results(sweep_args, results);
      print_summary(results);
    } else if (cmd_wdm->parsed()) {
      auto cfg = load_config(wdm_args);
      const imdd::WdmSettings wdm = cfg.sweep ? cfg.sweep->wdm : imdd::WdmSettings{};
      const auto plan = imdd::build_wdm_grid(wdm.start_nm, wdm.spacing_ghz, wdm.count);
      std::vector<imdd::LinkResult> results;
      if (wdm_cut > 0) {
        results.push_back(
            imdd::run_wdm(cfg.link, plan, wdm_cut, wdm.decorrelation_delay_symbols));
      } else {
        imdd::SweepSpec spec;
        spec.base = cfg.link;
        spec.variable = imdd::SweepVariable::wdm_channel;
        spec.wdm = wdm;
        for (int i = 1; i <= wdm.count; ++i) spec.values.push_back(double(i));
        results = imdd::sweep(spec, wdm_args.jobs);
      }
      write_results(wdm_args, results);
      print_summary(results);
      if (wdm_cut == 0 && !results.empty() && results.front().ok() &&
          !results.front().equalizers.empty())
        print_aggregate(results, results.front().equalizers.back().config.kind);
    } else if (cmd_dr8->parsed()) {
      auto cfg = load_config(dr8_args);
      const imdd::Dr8Settings dr8 = cfg.sweep ? cfg.sweep->dr8 : imdd::Dr8Settings{};
      imdd::SweepSpec spec;
      spec.base = cfg.link;
      spec.variable = imdd::SweepVariable::dr8_lane;
      spec.dr8 = dr8;
      for (int i = 1; i <= 8; ++i) spec.values.push_back(double(i));
      auto results = imdd::sweep(spec, dr8_args.jobs);
      write_results(dr8_args, results);
      print_summary(results);
      if (!results.empty() && results.front().ok() && !results.front().equalizers.empty())
        print_aggregate(results, results.front().equalizers.back().config.kind);
    } else if (cmd_eye->parsed()) {
      auto cfg = load_config(eye_args);
      cfg.link.output.eye = true;
      std::vector<imdd::LinkResult> results{imdd::run_link(cfg.link)};
      write_results(eye_args, results);
      if (results.front().eye)
        std::printf("eye histogram written to %s/eye.txt\n", eye_args.out_dir.c_str());
      print_summary(results);
    } else if (cmd_fec->parsed()) {
      const auto pf = imdd::ModulationFormat::parse(fec_mod);
      if (!pf) throw imdd::Error("unknown modulation: " + fec_mod);
      const auto fmt = imdd::ModulationFormat::make(*pf);
      const auto ledger = imdd::default_fec_ledger();
      const auto fec = imdd::select_fec(fec_ber, ledger);
      if (!fec) {
        std::printf("ber=%s: no FEC in the ledger covers this error rate\n",
                    imdd::format_ber(fec_ber).c_str());
        return 1;
      }
      const double net = imdd::reported_rate_gbps(
          imdd::net_rate_gbps(fec_baud, fmt, *fec));
      std::printf("ber=%s fec=%s overhead=%.1f%% net=%s Gbps (%s @ %.6g GBd)\n",
                  imdd::format_ber(fec_ber).c_str(), fec->name.c_str(),
                  fec->overhead * 100.0, imdd::format_rate(net).c_str(),
                  fmt.name().c_str(), fec_baud);
    } else if (cmd_validate->parsed()) {
      auto cfg = load_config(val_args);
      std::cout << imdd::effective_config_json(cfg).dump(2) << "\n";
      std::printf("config ok\n");
    }
  } catch (const imdd::ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
