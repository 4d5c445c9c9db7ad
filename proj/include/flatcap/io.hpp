#ifndef FLATCAP_IO_HPP
#define FLATCAP_IO_HPP

/**
 * File formats: JSON for parameters, zonotopes, summaries and run manifests;
 * versioned CSV for polytopes, trajectories and simulation logs. Every CSV
 * starts with a "# schema=<name> version=<n>" line; readers reject other
 * schemas and versions.
 */

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "flatcap/approx.hpp"
#include "flatcap/errors.hpp"
#include "flatcap/flatmap.hpp"
#include "flatcap/geomhull.hpp"
#include "flatcap/simulator.hpp"
#include "flatcap/trajectories.hpp"
#include "flatcap/zonotope.hpp"

namespace flatcap::io {

using json = nlohmann::ordered_json;

inline constexpr int kHrepVersion = 1;
inline constexpr int kVrepVersion = 1;
inline constexpr int kTrajectoryVersion = 1;
inline constexpr int kSimLogVersion = 1;
inline constexpr int kTimingVersion = 1;
#ifdef FLATCAP_VERSION
inline constexpr const char* kToolVersion = FLATCAP_VERSION;
#else
inline constexpr const char* kToolVersion = "0.3.0";
#endif

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest round-trip representation of a double.
inline std::string fmt(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Writes through a temporary file in the same directory and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw ConfigError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string schema_line(const std::string& name, int version) {
  return "# schema=" + name + " version=" + std::to_string(version) + "\n";
}

/// Parsed CSV: metadata from "# key=value" lines, the header row and numeric rows.
struct CsvTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline CsvTable parse_csv(const std::string& text, const std::string& schema, int version,
                          const std::vector<std::string>& expected_header) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ms(line.substr(1));
      std::string kv;
      while (ms >> kv) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) t.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      continue;
    }
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                        " fields, found " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) throw ConfigError("CSV line " + std::to_string(lineno) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.meta["schema"] != schema) throw ConfigError("CSV: expected schema '" + schema + "', found '" + t.meta["schema"] + "'");
  if (t.meta["version"] != std::to_string(version))
    throw ConfigError("CSV: unsupported " + schema + " version '" + t.meta["version"] + "'");
  if (t.header != expected_header) throw ConfigError("CSV: unexpected header for " + schema);
  return t;
}

inline std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s + "\n";
}

// ---------------------------------------------------------------------------
// Parameters

inline json to_json(const ConstraintParams& p) {
  return {{"g", p.g}, {"t_max", p.t_max}, {"phi_max", p.phi_max}, {"theta_max", p.theta_max}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ConstraintParams params_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("params: expected a JSON object");
  ConstraintParams p;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ConfigError("params: '" + k + "' must be a number");
    if (k == "g") p.g = v.get<double>();
    else if (k == "t_max") p.t_max = v.get<double>();
    else if (k == "phi_max") p.phi_max = v.get<double>();
    else if (k == "theta_max") p.theta_max = v.get<double>();
    else throw ConfigError("params: unknown key '" + k + "'");
  }
  p.validate();
  return p;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline ConstraintParams load_params(const std::filesystem::path& path) {
  return params_from_json(parse_json(read_file(path), path.string()));
}

inline json to_json(const MpcConfig& c) {
  json q = json::array(), r = json::array();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) q.push_back(c.Q(i, j));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(c.R(i, j));
  return {{"Q", q}, {"R", r}, {"np", c.np}, {"ts", c.ts}};
}

inline json to_json(const SimConfig& c) {
  json j = {{"scenario", to_string(c.scenario)},
            {"controller", to_string(c.controller)},
            {"duration", c.resolved_duration()},
            {"psi", c.psi},
            {"noise_sigma", c.noise_sigma},
            {"seed", c.seed},
            {"n_l", c.n_l},
            {"max_fallback_fraction", c.max_fallback_fraction}};
  j["gains"] = to_json(c.resolved_gains());
  return j;
}

// ---------------------------------------------------------------------------
// Zonotopes: {"G": row-major 3 x n, "c": [3], "delta": [n]}

inline json to_json(const Zonotope& z) {
  json g = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < z.num_generators(); ++k) g.push_back(z.generators(i, k));
  json d = json::array();
  for (int k = 0; k < z.num_generators(); ++k) d.push_back(z.scaling(k));
  return {{"G", g}, {"c", {z.center(0), z.center(1), z.center(2)}}, {"delta", d}};
}

inline Zonotope zonotope_from_json(const json& j) {
  if (!j.is_object() || !j.contains("G") || !j.contains("c") || !j.contains("delta"))
    throw ConfigError("zonotope: expected keys G, c, delta");
  const auto g = j.at("G").get<std::vector<double>>();
  const auto c = j.at("c").get<std::vector<double>>();
  const auto d = j.at("delta").get<std::vector<double>>();
  if (c.size() != 3) throw SizeError("zonotope: c must have 3 entries");
  if (g.size() != 3 * d.size()) throw SizeError("zonotope: G must hold 3 x len(delta) entries");
  const int n = static_cast<int>(d.size());
  Generators G(3, n);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < n; ++k) G(i, k) = g[static_cast<std::size_t>(i * n + k)];
  return Zonotope(G, Vec3(c[0], c[1], c[2]), Eigen::Map<const Eigen::VectorXd>(d.data(), n));
}

// ---------------------------------------------------------------------------
// Polytopes

inline std::string hrep_csv(const Polytope& p) {
  std::string s = schema_line("flatcap-hrep", kHrepVersion) + "a1,a2,a3,b\n";
  for (const Halfspace& h : p.halfspaces())
    s += join({fmt(h.normal(0)), fmt(h.normal(1)), fmt(h.normal(2)), fmt(h.offset)});
  return s;
}

inline std::string vrep_csv(const Polytope& p) {
  std::string s = schema_line("flatcap-vrep", kVrepVersion) + "x,y,z\n";
  for (const Vec3& v : p.vertices()) s += join({fmt(v(0)), fmt(v(1)), fmt(v(2))});
  return s;
}

inline std::vector<Halfspace> parse_hrep(const std::string& text) {
  const CsvTable t = parse_csv(text, "flatcap-hrep", kHrepVersion, {"a1", "a2", "a3", "b"});
  std::vector<Halfspace> hs;
  for (const auto& r : t.rows) hs.push_back({Vec3(r[0], r[1], r[2]), r[3]});
  return hs;
}

inline std::vector<Vec3> parse_vrep(const std::string& text) {
  const CsvTable t = parse_csv(text, "flatcap-vrep", kVrepVersion, {"x", "y", "z"});
  std::vector<Vec3> vs;
  for (const auto& r : t.rows) vs.emplace_back(r[0], r[1], r[2]);
  return vs;
}

// ---------------------------------------------------------------------------
// Trajectories: t, sigma(3), sigma'(3), v_ref(3), u_ref(3)

inline const std::vector<std::string>& trajectory_header() {
  static const std::vector<std::string> h = {"t",  "sx", "sy", "sz", "dsx", "dsy",   "dsz",
                                             "vx", "vy", "vz", "T",  "phi", "theta"};
  return h;
}

inline std::string trajectory_csv(const ReferenceTrajectory& r) {
  std::string s = schema_line("flatcap-trajectory", kTrajectoryVersion);
  s += "# name=" + r.name + " ts=" + fmt(r.ts) + " psi=" + fmt(r.psi) + " smooth=" + (r.smooth ? "1" : "0") + "\n";
  s += join(trajectory_header());
  for (std::size_t k = 0; k < r.size(); ++k) {
    const Vec3 &p = r.position[k], &v = r.velocity[k], &a = r.acceleration[k];
    const BodyInput& u = r.input[k];
    s += join({fmt(r.t[k]), fmt(p(0)), fmt(p(1)), fmt(p(2)), fmt(v(0)), fmt(v(1)), fmt(v(2)), fmt(a(0)), fmt(a(1)),
               fmt(a(2)), fmt(u.thrust), fmt(u.roll), fmt(u.pitch)});
  }
  return s;
}

inline ReferenceTrajectory parse_trajectory(const std::string& text) {
  CsvTable t = parse_csv(text, "flatcap-trajectory", kTrajectoryVersion, trajectory_header());
  ReferenceTrajectory r;
  r.name = t.meta.count("name") ? t.meta["name"] : "imported";
  r.ts = t.meta.count("ts") ? std::stod(t.meta["ts"]) : (t.rows.size() > 1 ? t.rows[1][0] - t.rows[0][0] : 0.0);
  r.psi = t.meta.count("psi") ? std::stod(t.meta["psi"]) : 0.0;
  r.smooth = !t.meta.count("smooth") || t.meta["smooth"] != "0";
  for (const auto& row : t.rows) {
    r.t.push_back(row[0]);
    r.position.emplace_back(row[1], row[2], row[3]);
    r.velocity.emplace_back(row[4], row[5], row[6]);
    r.acceleration.emplace_back(row[7], row[8], row[9]);
    r.input.push_back({row[10], row[11], row[12]});
  }
  r.validate();
  r.start = r.state(0);
  return r;
}

// ---------------------------------------------------------------------------
// Simulation logs

/// "{scenario}_{controller}_{seed}"
inline std::string run_stem(const SimConfig& c) {
  return std::string(to_string(c.scenario)) + "_" + to_string(c.controller) + "_" + std::to_string(c.seed);
}

inline const std::vector<std::string>& simlog_header() {
  static const std::vector<std::string> h = {
      "k",     "t",     "x",      "y",      "z",      "dx",      "dy",       "dz",          "x_ref",
      "y_ref", "z_ref", "dx_ref", "dy_ref", "dz_ref", "T",       "phi",      "theta",       "v1",
      "v2",    "v3",    "w1",     "w2",     "w3",     "u_violation", "fallback", "model", "qp_iterations",
      "kkt_residual", "prediction_error"};
  return h;
}

/// Per-step log. Solver wall times are kept out of this file so that repeated
/// runs produce identical bytes; see timing_csv.
inline std::string simlog_csv(const SimLog& log) {
  std::string s = schema_line("flatcap-simlog", kSimLogVersion);
  s += "# scenario=" + std::string(to_string(log.config.scenario)) + " controller=" + to_string(log.config.controller) +
       " seed=" + std::to_string(log.config.seed) + " ts=" + fmt(log.gains.ts) + "\n";
  s += join(simlog_header());
  for (std::size_t k = 0; k < log.size(); ++k) {
    const SimStep& r = log.steps[k];
    std::vector<std::string> c = {std::to_string(k), fmt(r.t)};
    for (int i = 0; i < 6; ++i) c.push_back(fmt(r.xi(i)));
    for (int i = 0; i < 6; ++i) c.push_back(fmt(r.xi_ref(i)));
    c.insert(c.end(), {fmt(r.u.thrust), fmt(r.u.roll), fmt(r.u.pitch)});
    for (int i = 0; i < 3; ++i) c.push_back(fmt(r.v(i)));
    for (int i = 0; i < 3; ++i) c.push_back(fmt(r.noise(i)));
    c.insert(c.end(), {r.u_violation ? "1" : "0", r.fallback ? "1" : "0", std::to_string(r.model),
                       std::to_string(r.qp_iterations), fmt(r.kkt_residual), fmt(r.prediction_error)});
    s += join(c);
  }
  return s;
}

inline std::string timing_csv(const SimLog& log) {
  std::string s = schema_line("flatcap-timing", kTimingVersion) + "k,solve_seconds\n";
  for (std::size_t k = 0; k < log.size(); ++k) s += join({std::to_string(k), fmt(log.steps[k].solve_seconds)});
  return s;
}

inline json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Deterministic run summary (no wall-clock fields).
inline json summary_json(const SimLog& log, double transient = 5.0, double settle = 1.0) {
  const SimSummary s = log.summary();
  const OscillationMetric osc = oscillation_metric(log, settle);
  return {{"schema", "flatcap-simsummary"},
          {"version", 1},
          {"config", to_json(log.config)},
          {"steps", log.size()},
          {"rms", s.rms},
          {"rms_axis", vec_json(s.rms_axis)},
          {"rms_after_transient", log.rms(transient)},
          {"transient_seconds", transient},
          {"final_error", s.final_error},
          {"max_abs_u", vec_json(s.max_abs_u)},
          {"u_violations", s.u_violations},
          {"fallbacks", s.fallbacks},
          {"max_kkt_residual", s.max_kkt_residual},
          {"max_prediction_error", s.max_prediction_error},
          {"oscillation", {{"settle_seconds", settle}, {"mean", osc.mean}, {"max", osc.max}, {"per_segment", osc.per_segment}}}};
}

inline json comparison_json(const ComparisonReport& r, double settle = 1.0) {
  json rows = json::array();
  for (const ComparisonRow& row : r.rows)
    rows.push_back({{"controller", row.label},
                    {"rms", row.summary.rms},
                    {"rms_after_transient", row.rms_after_transient},
                    {"oscillation_mean", row.oscillation.mean},
                    {"oscillation_max", row.oscillation.max},
                    {"u_violations", row.summary.u_violations},
                    {"fallbacks", row.summary.fallbacks},
                    {"mean_solve_seconds", row.summary.mean_solve_seconds},
                    {"max_solve_seconds", row.summary.max_solve_seconds}});
  return {{"schema", "flatcap-comparison"},
          {"version", 1},
          {"scenario", to_string(r.scenario)},
          {"transient_seconds", r.transient},
          {"settle_seconds", settle},
          {"rows", rows}};
}

// ---------------------------------------------------------------------------
// Approximation summary

inline json approx_summary_json(const ApproxResult& r, const ApproxConfig& cfg, const ConstraintParams& p,
                                const Polytope& pv, const Polytope& bv) {
  json per_k = json::array();
  for (std::size_t k = 0; k < r.fits.size(); ++k) {
    const ZonotopeFit& f = r.fits[k];
    per_k.push_back({{"k", k},
                     {"anchor", {f.anchor(0), f.anchor(1), f.anchor(2)}},
                     {"zonotope", to_json(f.zonotope)},
                     {"objective", f.objective},
                     {"euclidean_volume", euclidean_volume(f.zonotope)},
                     {"outer_iterations", f.outer_iterations},
                     {"newton_iterations", f.newton_iterations},
                     {"max_residual", f.max_residual},
                     {"gap", f.gap}});
  }
  return {{"schema", "flatcap-approx"},
          {"version", 1},
          {"params", to_json(p)},
          {"n0", cfg.n0},
          {"merge_tol", cfg.hull.merge_tol},
          {"volume", r.volume},
          {"n_vertices", r.num_vertices()},
          {"n_inequalities", r.num_inequalities()},
          {"max_vtilde_violation", max_vtilde_violation(r.set, p)},
          {"per_k", per_k},
          {"table",
           {{{"set", "P_v"}, {"volume", volume(pv)}, {"n_vertices", pv.num_vertices()}, {"n_inequalities", pv.num_halfspaces()}},
            {{"set", "B_v"}, {"volume", volume(bv)}, {"n_vertices", bv.num_vertices()}, {"n_inequalities", bv.num_halfspaces()}},
            {{"set", "S_v"}, {"volume", r.volume}, {"n_vertices", r.num_vertices()}, {"n_inequalities", r.num_inequalities()}}}}};
}

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
  std::vector<std::string> command;
  json config = json::object();
  /// (path, sha256 hex) of every input file read.
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::string> outputs;
  std::string version = kToolVersion;

  json to_json() const {
    json in = json::array();
    for (const auto& [path, hash] : inputs) in.push_back({{"path", path}, {"sha256", hash}});
    return {{"schema", "flatcap-manifest"}, {"version", 1}, {"tool_version", version}, {"command", command},
            {"config", config}, {"inputs", in}, {"outputs", outputs}};
  }
};

inline void write_json(const std::filesystem::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

}  // namespace flatcap::io

#endif  // FLATCAP_IO_HPP
