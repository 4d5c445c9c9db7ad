#ifndef FLATCAP_SIMULATOR_HPP
#define FLATCAP_SIMULATOR_HPP

/**
 * Closed-loop simulation of the quadcopter in flat coordinates. The plant is
 * the exact double integrator driven by h_psi(u) held over each period, plus
 * optional additive acceleration noise.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flatcap/errors.hpp"
#include "flatcap/flatmap.hpp"
#include "flatcap/geomhull.hpp"
#include "flatcap/mpc.hpp"
#include "flatcap/trajectories.hpp"

namespace flatcap {

enum class ControllerKind { FB, PWA };

inline const char* to_string(ControllerKind c) { return c == ControllerKind::FB ? "fb" : "pwa"; }

inline ControllerKind controller_from_string(const std::string& s) {
  if (s == "fb" || s == "FB") return ControllerKind::FB;
  if (s == "pwa" || s == "PWA") return ControllerKind::PWA;
  throw ConfigError("unknown controller '" + s + "' (expected fb or pwa)");
}

struct SimConfig {
  Scenario scenario = Scenario::Ref3;
  ControllerKind controller = ControllerKind::FB;
  /// Seconds; <= 0 selects the scenario default.
  double duration = 0.0;
  /// Sampling period and horizon; <= 0 selects the scenario gains.
  double ts = 0.0;
  int np = 0;
  double psi = 0.0;
  /// Standard deviation of the additive acceleration noise (m/s^2); 0 disables it.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Number of PWA anchors taken evenly from the reference; 0 uses every sample.
  int n_l = 0;
  /// The run aborts once fallbacks exceed this fraction of the total steps.
  double max_fallback_fraction = 0.1;
  /// Overrides the scenario gains (Q, R, ts, np) when set.
  std::optional<MpcConfig> gains;

  /// Controller configuration after applying scenario defaults and overrides.
  MpcConfig resolved_gains() const {
    const ScenarioGains g = scenario_gains(scenario);
    MpcConfig c = gains ? *gains : (controller == ControllerKind::FB ? g.fb : g.pwa);
    if (ts > 0.0) c.ts = ts;
    if (np > 0) c.np = np;
    return c;
  }

  double resolved_duration() const { return duration > 0.0 ? duration : default_duration(scenario); }

  std::size_t steps() const {
    const double d = resolved_duration(), t = resolved_gains().ts;
    return static_cast<std::size_t>(std::llround(d / t));
  }

  void validate() const {
    const MpcConfig c = resolved_gains();
    c.validate();
    const double d = resolved_duration();
    const double n = d / c.ts;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
      throw ConfigError("SimConfig: duration must be a multiple of ts");
    if (std::round(n) < 1.0) throw ConfigError("SimConfig: duration shorter than one step");
    if (!(noise_sigma >= 0.0)) throw ConfigError("SimConfig: noise sigma must be non-negative");
    if (n_l < 0) throw ConfigError("SimConfig: n_l must be non-negative");
    if (!(max_fallback_fraction >= 0.0 && max_fallback_fraction <= 1.0))
      throw ConfigError("SimConfig: max_fallback_fraction must lie in [0, 1]");
  }
};

/// Per-step record. Row k holds the state before the move and the move applied.
struct SimStep {
  double t = 0.0;
  Vec6 xi = Vec6::Zero();
  Vec6 xi_ref = Vec6::Zero();
  BodyInput u;
  /// Commanded flat input (FB) or h_psi(u) (PWA).
  FlatInput v = FlatInput::Zero();
  Vec3 noise = Vec3::Zero();
  bool u_violation = false;
  bool fallback = false;
  int model = -1;
  int qp_iterations = 0;
  double kkt_residual = 0.0;
  /// |xi_{k+1} - prediction|_inf for the controller's own one-step model
  /// (A xi + B v for FB, the selected Taylor model for PWA).
  double prediction_error = 0.0;
  double solve_seconds = 0.0;
};

struct SimSummary {
  Vec3 rms_axis = Vec3::Zero();
  double rms = 0.0;
  Vec3 max_abs_u = Vec3::Zero();
  std::size_t u_violations = 0;
  std::size_t fallbacks = 0;
  double max_kkt_residual = 0.0;
  double max_prediction_error = 0.0;
  double final_error = 0.0;
  double mean_solve_seconds = 0.0;
  double max_solve_seconds = 0.0;
};

struct SimLog {
  SimConfig config;
  MpcConfig gains;
  std::vector<SimStep> steps;
  Vec6 xi_final = Vec6::Zero();
  Vec6 xi_ref_final = Vec6::Zero();
  /// false when the reference is a sequence of set points.
  bool reference_smooth = true;

  std::size_t size() const { return steps.size(); }

  /// Position RMS over rows with t >= t_from (all rows by default).
  double rms(double t_from = -1.0) const { return rms_axis(t_from).norm(); }

  Vec3 rms_axis(double t_from = -1.0) const {
    Vec3 acc = Vec3::Zero();
    std::size_t n = 0;
    for (const SimStep& s : steps) {
      if (s.t < t_from - 1e-9) continue;
      acc += (s.xi.head<3>() - s.xi_ref.head<3>()).cwiseAbs2();
      ++n;
    }
    if (n == 0) return Vec3::Zero();
    return (acc / static_cast<double>(n)).cwiseSqrt();
  }

  SimSummary summary() const {
    SimSummary s;
    s.rms_axis = rms_axis();
    s.rms = s.rms_axis.norm();
    for (const SimStep& r : steps) {
      s.max_abs_u = s.max_abs_u.cwiseMax(r.u.as_vector().cwiseAbs());
      s.u_violations += r.u_violation ? 1 : 0;
      s.fallbacks += r.fallback ? 1 : 0;
      s.max_kkt_residual = std::max(s.max_kkt_residual, r.kkt_residual);
      s.max_prediction_error = std::max(s.max_prediction_error, r.prediction_error);
      s.mean_solve_seconds += r.solve_seconds;
      s.max_solve_seconds = std::max(s.max_solve_seconds, r.solve_seconds);
    }
    if (!steps.empty()) s.mean_solve_seconds /= static_cast<double>(steps.size());
    s.final_error = (xi_final.head<3>() - xi_ref_final.head<3>()).norm();
    return s;
  }
};

/// Peak-to-peak tracking error within each constant-reference segment, after
/// a settling time. Smooth references form a single segment.
struct OscillationMetric {
  std::vector<double> per_segment;
  double mean = 0.0;
  double max = 0.0;
};

inline OscillationMetric oscillation_metric(const SimLog& log, double settle = 1.0) {
  OscillationMetric m;
  std::size_t begin = 0;
  auto close_segment = [&](std::size_t end) {
    if (end <= begin) return;
    const double t0 = log.steps[begin].t + settle;
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    bool any = false;
    for (std::size_t k = begin; k < end; ++k) {
      if (log.steps[k].t < t0 - 1e-9) continue;
      const Vec3 e = log.steps[k].xi.head<3>() - log.steps[k].xi_ref.head<3>();
      lo = lo.cwiseMin(e);
      hi = hi.cwiseMax(e);
      any = true;
    }
    if (any) m.per_segment.push_back((hi - lo).maxCoeff());
  };
  for (std::size_t k = 1; k < log.steps.size(); ++k) {
    const bool jump = (log.steps[k].xi_ref.head<3>() - log.steps[k - 1].xi_ref.head<3>()).norm() > 1e-12 &&
                      !log.reference_smooth;
    if (jump) {
      close_segment(k);
      begin = k;
    }
  }
  close_segment(log.steps.size());
  for (double v : m.per_segment) {
    m.mean += v;
    m.max = std::max(m.max, v);
  }
  if (!m.per_segment.empty()) m.mean /= static_cast<double>(m.per_segment.size());
  return m;
}

/// xi+ = A xi + B (h_psi(u) + noise).
inline Vec6 step_plant(const Vec6& xi, const BodyInput& u, double psi, double ts, const Vec3& noise,
                       const ConstraintParams& p) {
  const DiscreteModel m = discretize(ts);
  return m.A * xi + m.B * (inverse_map(u, psi, p) + noise);
}

/// Runs reference -> controller -> input map -> plant for cfg.steps() periods.
/// input_set is S_v (used by the FB controller only).
inline SimLog run_closed_loop(const SimConfig& cfg, const Polytope& input_set, const ConstraintParams& p,
                              QpOptions qp = {}) {
  cfg.validate();
  p.validate();
  SimLog log;
  log.config = cfg;
  log.gains = cfg.resolved_gains();
  const MpcConfig& g = log.gains;
  const std::size_t n = cfg.steps();
  const ReferenceTrajectory ref =
      generate(cfg.scenario, g.ts, p, cfg.psi, static_cast<double>(n + static_cast<std::size_t>(g.np)) * g.ts);
  log.reference_smooth = ref.smooth;
  const DiscreteModel model = discretize(g.ts);

  std::optional<FbMpc> fb;
  std::optional<PwaMpc> pwa;
  if (cfg.controller == ControllerKind::FB) {
    fb.emplace(g, input_set, p, qp);
  } else {
    const std::size_t anchors = cfg.n_l > 0 ? static_cast<std::size_t>(cfg.n_l) : ref.size();
    pwa.emplace(g, pwa_linearize(ref.states(), ref.input, static_cast<int>(anchors), g.ts, cfg.psi, p), p, qp);
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t limit = static_cast<std::size_t>(std::floor(cfg.max_fallback_fraction * static_cast<double>(n)));
  std::size_t fallbacks = 0;

  Vec6 xi = ref.start;
  log.steps.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    SimStep s;
    s.t = static_cast<double>(k) * g.ts;
    s.xi = xi;
    s.xi_ref = ref.state(k);
    Vec6 predicted;
    if (fb) {
      const FbMpcOutput o = fb->step(xi, ref.flat_horizon(k, g.np), cfg.psi);
      s.u = o.u;
      s.v = o.v;
      predicted = model.A * xi + model.B * o.v;
      s.fallback = o.stats.fallback;
      s.qp_iterations = o.stats.iterations;
      s.kkt_residual = o.stats.kkt_residual;
      s.solve_seconds = o.stats.solve_seconds;
    } else {
      const PwaMpcOutput o = pwa->step(xi, ref.body_horizon(k, g.np));
      s.u = o.u;
      s.v = inverse_map(o.u, cfg.psi, p);
      s.model = o.stats.model;
      const PwaModel& m = pwa->linearization().models[static_cast<std::size_t>(s.model)];
      predicted = m.A * xi + m.B * o.u.as_vector() + m.r;
      s.fallback = o.stats.fallback;
      s.qp_iterations = o.stats.iterations;
      s.kkt_residual = o.stats.kkt_residual;
      s.solve_seconds = o.stats.solve_seconds;
    }
    s.u_violation = !in_U(s.u, p);
    if (cfg.noise_sigma > 0.0) s.noise = Vec3(gauss(rng), gauss(rng), gauss(rng)) * cfg.noise_sigma;
    const Vec6 next = step_plant(xi, s.u, cfg.psi, g.ts, s.noise, p);
    s.prediction_error = (next - predicted).cwiseAbs().maxCoeff();
    if (s.fallback && ++fallbacks > limit) {
      std::ostringstream os;
      os << "run_closed_loop: controller fell back on " << fallbacks << " of " << n << " steps (limit "
         << limit << ") at t = " << s.t << " s (" << to_string(cfg.controller) << " controller)";
      throw FallbackLimitExceeded(os.str());
    }
    log.steps.push_back(s);
    xi = next;
  }
  log.xi_final = xi;
  log.xi_ref_final = ref.state(n);
  return log;
}

struct ComparisonRow {
  std::string label;
  SimSummary summary;
  double rms_after_transient = 0.0;
  OscillationMetric oscillation;
};

struct ComparisonReport {
  Scenario scenario = Scenario::Ref3;
  double transient = 5.0;
  std::vector<SimLog> logs;
  std::vector<ComparisonRow> rows;
};

/// Runs both configurations (same scenario) and tabulates RMS, oscillation,
/// solver timing and violation counts.
inline ComparisonReport compare(const SimConfig& a, const SimConfig& b, const Polytope& input_set,
                                const ConstraintParams& p, double transient = 5.0, double settle = 1.0) {
  if (a.scenario != b.scenario) throw ConfigError("compare: configurations must share a scenario");
  ComparisonReport r;
  r.scenario = a.scenario;
  r.transient = transient;
  for (const SimConfig* c : {&a, &b}) {
    r.logs.push_back(run_closed_loop(*c, input_set, p));
    const SimLog& l = r.logs.back();
    ComparisonRow row;
    row.label = to_string(c->controller);
    row.summary = l.summary();
    row.rms_after_transient = l.rms(transient);
    row.oscillation = oscillation_metric(l, settle);
    r.rows.push_back(row);
  }
  return r;
}

}  // namespace flatcap

#endif  // FLATCAP_SIMULATOR_HPP
