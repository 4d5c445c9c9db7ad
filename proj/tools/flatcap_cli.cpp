// flatcap command-line tool.
//
//   flatcap approx  --n0 2 [--params p.json] [--merge-tol 1e-7] --out-dir out
//   flatcap sim     --ref 3 --controller fb [--seed 1] [--noise 0.05] [--ts 0.2] [--np 10] --out-dir out
//   flatcap compare --ref 2 [--seed 1] [--noise 0.05] --out-dir out
//
// Every command writes a run manifest next to its outputs. FLATCAP_SEED, when
// set, overrides --seed.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "flatcap/approx.hpp"
#include "flatcap/hash.hpp"
#include "flatcap/io.hpp"
#include "flatcap/simulator.hpp"

namespace fs = std::filesystem;
using namespace flatcap;
using io::json;

namespace {

struct Common {
  std::string out_dir = ".";
  std::string params_path;
};

struct ApproxArgs {
  int n0 = 2;
  double merge_tol = 1e-7;
  double anchor_retreat = 0.01;
};

struct SimArgs {
  std::string ref = "3";
  std::string controller = "fb";
  std::uint64_t seed = 0;
  double noise = 0.0;
  double ts = 0.0;
  int np = 0;
  double duration = 0.0;
  double psi = 0.0;
  int n_l = 0;
  std::string sv_path;
  int n0 = 2;
};

/// Collects output paths (relative to --out-dir) and input hashes for the manifest.
class Run {
 public:
  Run(std::vector<std::string> argv, const Common& c) : dir_(c.out_dir) { manifest_.command = std::move(argv); }

  const fs::path& dir() const { return dir_; }
  io::RunManifest& manifest() { return manifest_; }

  void write(const std::string& name, const std::string& content) {
    io::write_atomic(dir_ / name, content);
    manifest_.outputs.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  std::string read_input(const std::string& path) {
    std::string text = io::read_file(path);
    manifest_.inputs.emplace_back(path, io::sha256_hex(text));
    return text;
  }

  void finish(const std::string& manifest_name) { io::write_json(dir_ / manifest_name, manifest_.to_json()); }

 private:
  fs::path dir_;
  io::RunManifest manifest_;
};

ConstraintParams load_params(Run& run, const Common& c) {
  if (c.params_path.empty()) return ConstraintParams{};
  return io::params_from_json(io::parse_json(run.read_input(c.params_path), c.params_path));
}

std::uint64_t resolve_seed(std::uint64_t flag) {
  const char* env = std::getenv("FLATCAP_SEED");
  if (env == nullptr || *env == '\0') return flag;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(env, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || env[used] != '\0') throw ConfigError(std::string("FLATCAP_SEED is not an unsigned integer: '") + env + "'");
  return v;
}

/// Matplotlib script that plots every SimLog CSV in its directory.
const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plot flatcap simulation logs: python3 plot_simlog.py [log.csv ...]

Without arguments every *.csv with schema flatcap-simlog in this directory is
plotted. Requires numpy and matplotlib.
"""
import glob
import os
import sys

import matplotlib.pyplot as plt
import numpy as np


def load(path):
    with open(path) as f:
        lines = f.readlines()
    if not lines or "schema=flatcap-simlog" not in lines[0]:
        return None
    body = [line for line in lines if not line.startswith("#")]
    return np.genfromtxt(body, delimiter=",", names=True)


def main(paths):
    here = os.path.dirname(os.path.abspath(__file__))
    paths = paths or sorted(glob.glob(os.path.join(here, "*.csv")))
    for path in paths:
        d = load(path)
        if d is None:
            continue
        fig, ax = plt.subplots(3, 1, sharex=True, figsize=(8, 8))
        for axis in "xyz":
            ax[0].plot(d["t"], d[axis], label=axis)
            ax[0].plot(d["t"], d[axis + "_ref"], "--", label=axis + " ref")
            ax[1].plot(d["t"], d[axis] - d[axis + "_ref"], label="e" + axis)
        for name in ("phi", "theta"):
            ax[2].plot(d["t"], d[name], label=name)
        ax[0].set_ylabel("position [m]")
        ax[1].set_ylabel("error [m]")
        ax[2].set_ylabel("angle [rad]")
        ax[2].set_xlabel("t [s]")
        for a in ax:
            a.legend(loc="upper right", fontsize="small")
            a.grid(True)
        fig.suptitle(os.path.basename(path))
        fig.tight_layout()
        fig.savefig(os.path.splitext(path)[0] + ".png", dpi=120)
        plt.close(fig)


if __name__ == "__main__":
    main(sys.argv[1:])
)PY";

// --------------------------------------------------------------------------

int cmd_approx(Run& run, const Common& c, const ApproxArgs& a) {
  const ConstraintParams p = load_params(run, c);
  ApproxConfig cfg;
  cfg.n0 = a.n0;
  cfg.hull.merge_tol = a.merge_tol;
  cfg.anchor_retreat = a.anchor_retreat;
  const ApproxResult r = algorithm1(cfg, p);
  const Polytope pv = build_Pv(p);
  const Polytope bv = build_Bv(p);

  run.write("sv_hrep.csv", io::hrep_csv(r.set));
  run.write("sv_vrep.csv", io::vrep_csv(r.set));
  run.write("pv_hrep.csv", io::hrep_csv(pv));
  run.write("pv_vrep.csv", io::vrep_csv(pv));
  run.write("bv_hrep.csv", io::hrep_csv(bv));
  run.write("bv_vrep.csv", io::vrep_csv(bv));
  run.write_json("approx_summary.json", io::approx_summary_json(r, cfg, p, pv, bv));
  run.manifest().config = {{"command", "approx"},
                           {"params", io::to_json(p)},
                           {"n0", cfg.n0},
                           {"merge_tol", cfg.hull.merge_tol},
                           {"anchor_retreat", cfg.anchor_retreat}};
  run.finish("approx_manifest.json");

  std::cout << std::left << std::setw(6) << "set" << std::right << std::setw(12) << "volume" << std::setw(10)
            << "vertices" << std::setw(14) << "inequalities" << "\n";
  auto row = [](const char* name, double vol, std::size_t nv, std::size_t nh) {
    std::cout << std::left << std::setw(6) << name << std::right << std::fixed << std::setprecision(4) << std::setw(12)
              << vol << std::setw(10) << nv << std::setw(14) << nh << "\n";
  };
  row("P_v", volume(pv), pv.num_vertices(), pv.num_halfspaces());
  row("B_v", volume(bv), bv.num_vertices(), bv.num_halfspaces());
  row("S_v", r.volume, r.num_vertices(), r.num_inequalities());
  std::cout << "n0=" << cfg.n0 << " zonotopes=" << r.fits.size() << " time=" << std::setprecision(3) << r.seconds
            << " s, outputs in " << run.dir() << "\n";
  return 0;
}

Polytope input_set(Run& run, const ConstraintParams& p, const SimArgs& a) {
  if (!a.sv_path.empty()) {
    const auto hs = io::parse_hrep(run.read_input(a.sv_path));
    const Polytope s = from_halfspaces(hs);
    if (max_vtilde_violation(s, p) > 1e-9)
      throw ConfigError("--sv: the given set is not contained in the admissible flat-input set");
    return s;
  }
  ApproxConfig cfg;
  cfg.n0 = a.n0;
  return algorithm1(cfg, p).set;
}

SimConfig sim_config(const SimArgs& a, ControllerKind controller) {
  SimConfig s;
  s.scenario = scenario_from_string(a.ref);
  s.controller = controller;
  s.seed = resolve_seed(a.seed);
  s.noise_sigma = a.noise;
  s.ts = a.ts;
  s.np = a.np;
  s.duration = a.duration;
  s.psi = a.psi;
  s.n_l = a.n_l;
  s.validate();
  return s;
}

json sim_manifest_config(const char* command, const ConstraintParams& p, const SimArgs& a,
                         const std::vector<SimConfig>& runs) {
  json cfgs = json::array();
  for (const SimConfig& s : runs) cfgs.push_back(io::to_json(s));
  return {{"command", command},
          {"params", io::to_json(p)},
          {"input_set", a.sv_path.empty() ? json{{"algorithm1_n0", a.n0}} : json{{"hrep_csv", a.sv_path}}},
          {"runs", cfgs}};
}

void write_log(Run& run, const SimLog& log) {
  const std::string stem = io::run_stem(log.config);
  run.write(stem + ".csv", io::simlog_csv(log));
  run.write_json(stem + ".json", io::summary_json(log));
  run.write(stem + "_timing.csv", io::timing_csv(log));
}

void print_summary_row(const std::string& label, const SimSummary& s, double rms_tail, double osc) {
  std::cout << std::left << std::setw(6) << label << std::right << std::scientific << std::setprecision(3)
            << std::setw(12) << s.rms << std::setw(12) << rms_tail << std::setw(12) << osc << std::setw(8)
            << s.u_violations << std::setw(8) << s.fallbacks << std::setw(12) << s.mean_solve_seconds << std::setw(12)
            << s.max_solve_seconds << "\n";
}

void print_summary_header() {
  std::cout << std::left << std::setw(6) << "ctrl" << std::right << std::setw(12) << "rms" << std::setw(12)
            << "rms>5s" << std::setw(12) << "osc" << std::setw(8) << "u_viol" << std::setw(8) << "fallbk"
            << std::setw(12) << "mean_solve" << std::setw(12) << "max_solve" << "\n";
}

int cmd_sim(Run& run, const Common& c, const SimArgs& a) {
  const ConstraintParams p = load_params(run, c);
  const SimConfig cfg = sim_config(a, controller_from_string(a.controller));
  const Polytope sv = input_set(run, p, a);
  const SimLog log = run_closed_loop(cfg, sv, p);
  const std::string stem = io::run_stem(cfg);
  write_log(run, log);
  run.write(stem + "_reference.csv", io::trajectory_csv(generate(cfg.scenario, log.gains.ts, p, cfg.psi)));
  run.write("plot_simlog.py", kPlotScript);
  run.manifest().config = sim_manifest_config("sim", p, a, {cfg});
  run.finish(stem + "_manifest.json");

  print_summary_header();
  print_summary_row(to_string(cfg.controller), log.summary(), log.rms(5.0), oscillation_metric(log).mean);
  return 0;
}

int cmd_compare(Run& run, const Common& c, const SimArgs& a) {
  const ConstraintParams p = load_params(run, c);
  const SimConfig fb = sim_config(a, ControllerKind::FB);
  const SimConfig pwa = sim_config(a, ControllerKind::PWA);
  const Polytope sv = input_set(run, p, a);
  const ComparisonReport r = compare(fb, pwa, sv, p);
  for (const SimLog& l : r.logs) write_log(run, l);
  const std::string stem = std::string("compare_") + to_string(fb.scenario) + "_" + std::to_string(fb.seed);
  // timings vary between runs, so they stay out of the comparison file
  json report = io::comparison_json(r);
  for (auto& row : report["rows"]) {
    row.erase("mean_solve_seconds");
    row.erase("max_solve_seconds");
  }
  run.write_json(stem + ".json", report);
  run.write("plot_simlog.py", kPlotScript);
  run.manifest().config = sim_manifest_config("compare", p, a, {fb, pwa});
  run.finish(stem + "_manifest.json");

  print_summary_header();
  for (const ComparisonRow& row : r.rows)
    print_summary_row(row.label, row.summary, row.rms_after_transient, row.oscillation.mean);
  return 0;
}

void add_sim_flags(CLI::App* cmd, SimArgs& a, bool with_controller) {
  cmd->add_option("--ref", a.ref, "Scenario: 1..4 (ref1..ref4) or hover")->capture_default_str();
  if (with_controller)
    cmd->add_option("--controller", a.controller, "Controller: fb or pwa")
        ->check(CLI::IsMember({"fb", "pwa"}))
        ->capture_default_str();
  cmd->add_option("--seed", a.seed, "Noise seed (FLATCAP_SEED overrides)")->capture_default_str();
  cmd->add_option("--noise", a.noise, "Acceleration noise sigma [m/s^2]")->check(CLI::NonNegativeNumber);
  cmd->add_option("--ts", a.ts, "Sampling period [s] (default: scenario gains)");
  cmd->add_option("--np", a.np, "Prediction horizon (default: scenario gains)");
  cmd->add_option("--duration", a.duration, "Simulated time [s] (default: scenario length)");
  cmd->add_option("--psi", a.psi, "Constant yaw [rad]")->capture_default_str();
  cmd->add_option("--n-l", a.n_l, "PWA anchors taken from the reference (0 = every sample)")->capture_default_str();
  cmd->add_option("--sv", a.sv_path, "Flat-input set as H-rep CSV (default: computed with --n0)");
  cmd->add_option("--n0", a.n0, "Schedule size when S_v is computed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flatcap: constrained flatness-based MPC toolkit"};
  app.set_version_flag("--version", io::kToolVersion);
  app.require_subcommand(1);
  Common common;
  app.add_option("--out-dir", common.out_dir, "Directory for all outputs")->capture_default_str();
  app.add_option("--params", common.params_path, "Constraint parameters JSON {g, t_max, phi_max, theta_max}");

  ApproxArgs approx;
  CLI::App* c_approx = app.add_subcommand("approx", "Inner-approximate the admissible flat-input set");
  c_approx->add_option("--n0", approx.n0, "Zonotopes between the two end points")->check(CLI::NonNegativeNumber)->capture_default_str();
  c_approx->add_option("--merge-tol", approx.merge_tol, "Coplanar facet merge tolerance")->capture_default_str();
  c_approx->add_option("--anchor-retreat", approx.anchor_retreat, "Fraction by which boundary anchors move inward")
      ->capture_default_str();

  SimArgs sim, cmp;
  CLI::App* c_sim = app.add_subcommand("sim", "Closed-loop simulation of one controller");
  add_sim_flags(c_sim, sim, true);
  CLI::App* c_cmp = app.add_subcommand("compare", "Run FB and PWA controllers on one scenario");
  cmp.ref = "2";
  add_sim_flags(c_cmp, cmp, false);

  // allow the global flags after the subcommand as well
  for (CLI::App* sub : {c_approx, c_sim, c_cmp}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  Run run(std::vector<std::string>(argv, argv + argc), common);
  try {
    if (c_approx->parsed()) return cmd_approx(run, common, approx);
    if (c_sim->parsed()) return cmd_sim(run, common, sim);
    if (c_cmp->parsed()) return cmd_compare(run, common, cmp);
  } catch (const ConfigError& e) {
    std::cerr << "flatcap: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const FallbackLimitExceeded& e) {
    std::cerr << "flatcap: aborted: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "flatcap: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
