/**
 * @file cli.hpp
 * @brief Command-line front end: simulate, run, validate-up, print-config.
 */
#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robod/obs/io.hpp"
#include "robod/scenario/scenario.hpp"

namespace robod::cli {

struct Options {
  std::string config;
  std::string obs;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  bool no_pruning = false;
  std::string estimator;
};

inline scenario::ScenarioConfig resolve_config(const Options& o) {
  auto cfg = o.config.empty() ? scenario::ScenarioConfig{} : scenario::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.no_pruning) cfg.pruning = false;
  if (!o.estimator.empty()) cfg.estimator = scenario::estimator_from_string(o.estimator);
  cfg.validate();
  return cfg;
}

inline std::vector<obs::Observation> load_or_simulate(const Options& o, const scenario::ScenarioConfig& cfg) {
  if (!o.obs.empty()) return obs::read_file(o.obs, [](std::istream& is) { return obs::read_observations(is); });
  return scenario::simulate(cfg);
}

inline void write_observations(const std::filesystem::path& dir, const std::vector<obs::Observation>& v,
                               const scenario::ScenarioConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "observations.csv");
  if (!os) throw std::runtime_error("cannot write " + (dir / "observations.csv").string());
  obs::write_observations(os, v);
  std::ofstream ss(dir / "sites.csv");
  obs::write_sites(ss, cfg.sites);
}

/// Runs the command line; returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Robust batch orbit determination"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sc, bool with_obs) {
    sc->add_option("--config", o.config, "scenario configuration (JSON)")->check(CLI::ExistingFile);
    sc->add_option("--out", o.out, "output directory");
    sc->add_option("--seed", o.seed, "measurement noise seed");
    if (with_obs) sc->add_option("--obs", o.obs, "observations CSV (simulated when omitted)")->check(CLI::ExistingFile);
  };
  auto* sim = app.add_subcommand("simulate", "synthesize measurements");
  add_common(sim, false);
  auto* runc = app.add_subcommand("run", "orbit determination with optional pruning");
  add_common(runc, true);
  runc->add_flag("--no-pruning", o.no_pruning, "estimate on all measurements");
  runc->add_option("--estimator", o.estimator, "ls, lsar or both")->check(CLI::IsMember({"ls", "lsar", "both"}));
  auto* up = app.add_subcommand("validate-up", "compare LF, MF and HF-DA uncertainty propagation");
  add_common(up, true);
  auto* pc = app.add_subcommand("print-config", "print the effective configuration");
  pc->add_option("--config", o.config, "scenario configuration (JSON)")->check(CLI::ExistingFile);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    const auto cfg = resolve_config(o);
    const std::filesystem::path dir = o.out;
    if (*pc) {
      out << scenario::to_json(cfg).dump(2) << '\n';
    } else if (*sim) {
      const auto v = scenario::simulate(cfg);
      write_observations(dir, v, cfg);
      out << "wrote " << v.size() << " observations to " << (dir / "observations.csv").string() << '\n';
    } else if (*runc) {
      const auto v = load_or_simulate(o, cfg);
      if (o.obs.empty()) write_observations(dir, v, cfg);
      const auto r = scenario::run(cfg, v, cfg.pruning, cfg.estimator);
      scenario::write_run(dir, r);
      for (const auto& s : r.estimates) {
        out << s.estimator << ": iterations " << s.result.iterations << ", position error "
            << util::fmt(s.error.head<3>().norm()) << " km, " << (s.within_3sigma ? "within" : "outside") << " 3 sigma\n";
      }
      if (r.confusion) {
        const auto& c = *r.confusion;
        out << "target retained " << c.target_retained << ", target rejected " << c.target_rejected
            << ", outlier rejected " << c.outlier_rejected << ", outlier retained " << c.outlier_retained << '\n';
      }
    } else if (*up) {
      const auto v = load_or_simulate(o, cfg);
      const auto r = scenario::validate_up(cfg, v);
      std::filesystem::create_directories(dir);
      std::ofstream os(dir / "up_validation.csv");
      if (!os) throw std::runtime_error("cannot write " + (dir / "up_validation.csv").string());
      scenario::write_up(os, r);
      scenario::write_up(out, r);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace robod::cli
