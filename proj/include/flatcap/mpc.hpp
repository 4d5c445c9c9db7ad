#ifndef FLATCAP_MPC_HPP
#define FLATCAP_MPC_HPP

/**
 * Receding-horizon controllers for the quadcopter translational dynamics.
 *
 *  - FbMpc works in flat coordinates: the plant is the exact double integrator
 *    xi+ = A xi + B v, the input set is the polytope S_v, and the applied body
 *    input is u = forward_map(v, psi).
 *  - PwaMpc works in body coordinates on a Taylor linearization of
 *    f_d(xi, u) = A xi + B h_psi(u) around the nearest of a set of anchors,
 *    with the box U on u.
 *
 * Both build a condensed QP over the horizon inputs; the state cost covers the
 * predicted states xi_{k+1} .. xi_{k+N_p} and the input cost v_k .. v_{k+N_p-1}.
 */

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flatcap/errors.hpp"
#include "flatcap/flatmap.hpp"
#include "flatcap/geomhull.hpp"
#include "flatcap/qpsolver.hpp"

namespace flatcap {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

struct MpcConfig {
  Mat6 Q = Mat6::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  int np = 10;
  double ts = 0.1;

  void validate() const {
    std::ostringstream err;
    if (np < 1) err << "np must be >= 1; ";
    if (!(ts > 0.0)) err << "ts must be positive; ";
    if (!Q.allFinite() || !R.allFinite()) err << "non-finite weights; ";
    else {
      if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff()))
        err << "Q must be symmetric; ";
      else if (Eigen::SelfAdjointEigenSolver<Mat6>(Q).eigenvalues().minCoeff() < -1e-12)
        err << "Q must be positive semidefinite; ";
      if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + R.cwiseAbs().maxCoeff()))
        err << "R must be symmetric; ";
      else if (!(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(R).eigenvalues().minCoeff() > 0.0))
        err << "R must be positive definite; ";
    }
    if (!err.str().empty()) throw ConfigError("MpcConfig: " + err.str());
  }
};

/// xi+ = A xi + B v for a piecewise-constant acceleration held over ts.
struct DiscreteModel {
  Mat6 A = Mat6::Identity();
  Mat63 B = Mat63::Zero();
};

inline DiscreteModel discretize(double ts) {
  if (!(ts >= 0.0)) throw ConfigError("discretize: ts must be non-negative");
  DiscreteModel m;
  m.A.topRightCorner<3, 3>() = ts * Eigen::Matrix3d::Identity();
  m.B.topRows<3>() = 0.5 * ts * ts * Eigen::Matrix3d::Identity();
  m.B.bottomRows<3>() = ts * Eigen::Matrix3d::Identity();
  return m;
}

/// References over one horizon. state[i] is the target for xi_{k+i+1} and
/// input[i] the nominal input at step k+i, for i = 0..N_p-1.
struct HorizonReference {
  std::vector<Vec6> state;
  std::vector<Vec3> input;
};

struct MpcStats {
  QpStatus status = QpStatus::Optimal;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool fallback = false;
  /// Index of the linearization used (PWA only, -1 otherwise).
  int model = -1;
  double solve_seconds = 0.0;
};

namespace detail {

/// Stacked prediction X = Phi xi + Gamma V + c over N_p steps of xi+ = A xi + B w + r.
struct Prediction {
  Eigen::MatrixXd Phi;    // 6N x 6
  Eigen::MatrixXd Gamma;  // 6N x 3N
  Eigen::VectorXd c;      // 6N
};

inline Prediction predict(const Mat6& A, const Mat63& B, const Vec6& r, int np) {
  Prediction p;
  p.Phi.resize(6 * np, 6);
  p.Gamma = Eigen::MatrixXd::Zero(6 * np, 3 * np);
  p.c.resize(6 * np);
  Mat6 Ai = Mat6::Identity();
  Vec6 ci = Vec6::Zero();
  std::vector<Mat63> AkB(static_cast<std::size_t>(np));
  Mat6 Ak = Mat6::Identity();
  for (int k = 0; k < np; ++k) {
    AkB[static_cast<std::size_t>(k)] = Ak * B;
    Ak = A * Ak;
  }
  for (int i = 0; i < np; ++i) {
    Ai = A * Ai;
    ci = A * ci + r;
    p.Phi.block(6 * i, 0, 6, 6) = Ai;
    p.c.segment(6 * i, 6) = ci;
    for (int j = 0; j <= i; ++j) p.Gamma.block(6 * i, 3 * j, 6, 3) = AkB[static_cast<std::size_t>(i - j)];
  }
  return p;
}

inline void check_reference(const HorizonReference& ref, int np) {
  if (static_cast<int>(ref.state.size()) != np || static_cast<int>(ref.input.size()) != np) {
    std::ostringstream os;
    os << "MPC reference must have " << np << " states and inputs (got " << ref.state.size() << ", "
       << ref.input.size() << ")";
    throw SizeError(os.str());
  }
}

/// Objective min sum ||X - Xr||_Q^2 + ||W - Wr||_R^2 over W with X = Phi xi + Gamma W + c,
/// normalized so the largest Hessian diagonal entry is 1 (the argmin is unchanged).
inline QProblem condensed_cost(const Prediction& pr, const MpcConfig& cfg, const Vec6& xi,
                               const HorizonReference& ref) {
  const int np = cfg.np;
  Eigen::VectorXd Xr(6 * np), Wr(3 * np);
  for (int i = 0; i < np; ++i) {
    Xr.segment(6 * i, 6) = ref.state[static_cast<std::size_t>(i)];
    Wr.segment(3 * i, 3) = ref.input[static_cast<std::size_t>(i)];
  }
  Eigen::MatrixXd QG(6 * np, 3 * np);
  for (int i = 0; i < np; ++i) QG.middleRows(6 * i, 6) = cfg.Q * pr.Gamma.middleRows(6 * i, 6);
  Eigen::MatrixXd Rb = Eigen::MatrixXd::Zero(3 * np, 3 * np);
  for (int i = 0; i < np; ++i) Rb.block(3 * i, 3 * i, 3, 3) = cfg.R;
  QProblem q;
  q.H = 2.0 * (pr.Gamma.transpose() * QG + Rb);
  q.H = 0.5 * (q.H + q.H.transpose()).eval();
  q.f = 2.0 * (QG.transpose() * (pr.Phi * xi + pr.c - Xr) - Rb * Wr);
  const double s = 1.0 / std::max(1e-300, q.H.diagonal().maxCoeff());
  q.H *= s;
  q.f *= s;
  return q;
}

inline Eigen::VectorXd shifted(const Eigen::VectorXd& w, int np) {
  Eigen::VectorXd out(w.size());
  out.head(3 * (np - 1)) = w.tail(3 * (np - 1));
  out.tail(3) = w.tail(3);
  return out;
}

}  // namespace detail

/// Euclidean projection of y onto {x : A x <= b}. Returns nullopt if the QP fails.
inline std::optional<Vec3> project_onto(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Vec3& y) {
  QProblem q{Eigen::Matrix3d::Identity(), -y, A, b};
  const auto res = QpSolver().solve(q);
  if (!res.ok()) return std::nullopt;
  return Vec3(res.x);
}

struct FbMpcOutput {
  BodyInput u;
  FlatInput v = FlatInput::Zero();
  MpcStats stats;
  /// Optimal input sequence over the horizon (3 N_p).
  Eigen::VectorXd plan;
};

/// Flatness-based MPC: linear MPC on the exact double integrator with v in S_v.
class FbMpc {
 public:
  FbMpc(const MpcConfig& cfg, const Polytope& input_set, const ConstraintParams& params, QpOptions qp = {})
      : cfg_(cfg), params_(params), solver_(qp) {
    cfg_.validate();
    if (input_set.num_halfspaces() == 0) throw ConfigError("FbMpc: empty input set");
    Av_ = input_set.A();
    bv_ = input_set.b();
    fallback_point_ = input_set.centroid_of_vertices();
    const auto model = discretize(cfg_.ts);
    model_ = model;
    pred_ = detail::predict(model.A, model.B, Vec6::Zero(), cfg_.np);
    const int nv = static_cast<int>(Av_.rows());
    Ab_ = Eigen::MatrixXd::Zero(nv * cfg_.np, 3 * cfg_.np);
    bb_.resize(nv * cfg_.np);
    for (int i = 0; i < cfg_.np; ++i) {
      Ab_.block(nv * i, 3 * i, nv, 3) = Av_;
      bb_.segment(nv * i, nv) = bv_;
    }
  }

  const MpcConfig& config() const { return cfg_; }
  const DiscreteModel& model() const { return model_; }

  /// One receding-horizon step from xi with references over the horizon.
  FbMpcOutput step(const Vec6& xi, const HorizonReference& ref, double psi = 0.0) {
    detail::check_reference(ref, cfg_.np);
    const auto t0 = std::chrono::steady_clock::now();
    QProblem q = detail::condensed_cost(pred_, cfg_, xi, ref);
    q.A = Ab_;
    q.b = bb_;
    std::optional<Eigen::VectorXd> warm;
    if (last_.size() == 3 * cfg_.np) warm = detail::shifted(last_, cfg_.np);
    const QpResult res = solver_.solve(q, warm);
    FbMpcOutput out;
    out.stats.status = res.status;
    out.stats.iterations = res.iterations;
    out.stats.kkt_residual = res.kkt_residual;
    if (res.ok()) {
      out.plan = res.x;
      out.v = res.x.head<3>();
      last_ = res.x;
    } else {
      out.stats.fallback = true;
      out.v = fallback(ref.input.front());
      out.plan = Eigen::VectorXd::Zero(3 * cfg_.np);
      for (int i = 0; i < cfg_.np; ++i) out.plan.segment<3>(3 * i) = out.v;
      last_.resize(0);
    }
    out.u = forward_map(out.v, psi, params_);
    out.stats.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  /// Input applied when the QP fails: the projection of v_ref onto S_v.
  FlatInput fallback(const FlatInput& v_ref) const {
    if (auto p = project_onto(Av_, bv_, v_ref)) return *p;
    return fallback_point_;
  }

  void reset() { last_.resize(0); }

 private:
  MpcConfig cfg_;
  ConstraintParams params_;
  QpSolver solver_;
  DiscreteModel model_;
  detail::Prediction pred_;
  Eigen::MatrixXd Av_, Ab_;
  Eigen::VectorXd bv_, bb_;
  Vec3 fallback_point_ = Vec3::Zero();
  Eigen::VectorXd last_;
};

/// One Taylor model xi+ ~ A xi + B u + r valid near (xi_ref, u_ref).
struct PwaModel {
  Vec6 xi = Vec6::Zero();
  Vec3 u = Vec3::Zero();
  Mat6 A = Mat6::Identity();
  Mat63 B = Mat63::Zero();
  Vec6 r = Vec6::Zero();
};

struct PwaLinearization {
  std::vector<PwaModel> models;
  double ts = 0.0;
  double psi = 0.0;

  /// Index of the anchor closest to xi in Euclidean state distance (first on ties).
  int nearest(const Vec6& xi) const {
    if (models.empty()) throw ConfigError("PwaLinearization: no models");
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(models.size()); ++j) {
      const double d = (models[static_cast<std::size_t>(j)].xi - xi).squaredNorm();
      if (d < bd) bd = d, best = j;
    }
    return best;
  }
};

/// f_d(xi, u) = A xi + B h_psi(u).
inline Vec6 discrete_dynamics(const DiscreteModel& m, const Vec6& xi, const BodyInput& u, double psi,
                              const ConstraintParams& p) {
  return m.A * xi + m.B * inverse_map(u, psi, p);
}

/// Taylor models of f_d at each (xi_j, u_j): A_j = df/dxi, B_j = df/du, and
/// r_j = f_d(xi_j, u_j) - A_j xi_j - B_j u_j.
inline PwaLinearization pwa_linearize(const std::vector<Vec6>& states, const std::vector<BodyInput>& inputs,
                                      double ts, double psi, const ConstraintParams& p) {
  if (states.size() != inputs.size()) throw SizeError("pwa_linearize: states and inputs differ in length");
  if (states.empty()) throw ConfigError("pwa_linearize: need at least one anchor");
  const auto m = discretize(ts);
  PwaLinearization lin;
  lin.ts = ts;
  lin.psi = psi;
  lin.models.reserve(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) {
    PwaModel pm;
    pm.xi = states[j];
    pm.u = inputs[j].as_vector();
    pm.A = m.A;
    pm.B = m.B * input_jacobian(inputs[j], psi);
    pm.r = discrete_dynamics(m, pm.xi, inputs[j], psi, p) - pm.A * pm.xi - pm.B * pm.u;
    lin.models.push_back(pm);
  }
  return lin;
}

/// Anchor subset: n_l samples evenly spread over the given trajectory samples.
inline PwaLinearization pwa_linearize(const std::vector<Vec6>& states, const std::vector<BodyInput>& inputs,
                                      int n_l, double ts, double psi, const ConstraintParams& p) {
  if (n_l < 1) throw ConfigError("pwa_linearize: n_l must be >= 1");
  if (states.size() != inputs.size() || states.empty()) throw SizeError("pwa_linearize: bad trajectory");
  const std::size_t n = states.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(n_l), n);
  std::vector<Vec6> xs;
  std::vector<BodyInput> us;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t idx = k == 1 ? 0 : (i * (n - 1)) / (k - 1);
    xs.push_back(states[idx]);
    us.push_back(inputs[idx]);
  }
  return pwa_linearize(xs, us, ts, psi, p);
}

/// Box U as bounds on (T, phi, theta).
inline Vec3 input_lower(const ConstraintParams& p) { return {0.0, -p.phi_max, -p.theta_max}; }
inline Vec3 input_upper(const ConstraintParams& p) { return {p.t_max, p.phi_max, p.theta_max}; }

struct PwaMpcOutput {
  BodyInput u;
  MpcStats stats;
  Eigen::VectorXd plan;
};

/// MPC on the PWA Taylor models with the body-input box constraint.
class PwaMpc {
 public:
  PwaMpc(const MpcConfig& cfg, PwaLinearization lin, const ConstraintParams& params, QpOptions qp = {})
      : cfg_(cfg), lin_(std::move(lin)), params_(params), solver_(qp) {
    cfg_.validate();
    if (lin_.models.empty()) throw ConfigError("PwaMpc: no linearization models");
    const int n = 3 * cfg_.np;
    Ab_ = Eigen::MatrixXd::Zero(2 * n, n);
    Ab_.topRows(n).setIdentity();
    Ab_.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
    bb_.resize(2 * n);
    for (int i = 0; i < cfg_.np; ++i) {
      bb_.segment<3>(3 * i) = input_upper(params_);
      bb_.segment<3>(n + 3 * i) = -input_lower(params_);
    }
  }

  const PwaLinearization& linearization() const { return lin_; }

  PwaMpcOutput step(const Vec6& xi, const HorizonReference& ref) {
    detail::check_reference(ref, cfg_.np);
    const auto t0 = std::chrono::steady_clock::now();
    const int j = lin_.nearest(xi);
    const PwaModel& m = lin_.models[static_cast<std::size_t>(j)];
    const auto pred = detail::predict(m.A, m.B, m.r, cfg_.np);
    QProblem q = detail::condensed_cost(pred, cfg_, xi, ref);
    q.A = Ab_;
    q.b = bb_;
    std::optional<Eigen::VectorXd> warm;
    if (last_.size() == 3 * cfg_.np) warm = detail::shifted(last_, cfg_.np);
    const QpResult res = solver_.solve(q, warm);
    PwaMpcOutput out;
    out.stats.model = j;
    out.stats.status = res.status;
    out.stats.iterations = res.iterations;
    out.stats.kkt_residual = res.kkt_residual;
    Vec3 u;
    if (res.ok()) {
      out.plan = res.x;
      u = res.x.head<3>();
      last_ = res.x;
    } else {
      out.stats.fallback = true;
      u = fallback(ref.input.front());
      out.plan = u.replicate(cfg_.np, 1);
      last_.resize(0);
    }
    out.u = BodyInput::from_vector(u);
    out.stats.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  /// Input applied when the QP fails: u_ref clamped into U.
  Vec3 fallback(const Vec3& u_ref) const { return u_ref.cwiseMax(input_lower(params_)).cwiseMin(input_upper(params_)); }

  void reset() { last_.resize(0); }

 private:
  MpcConfig cfg_;
  PwaLinearization lin_;
  ConstraintParams params_;
  QpSolver solver_;
  Eigen::MatrixXd Ab_;
  Eigen::VectorXd bb_;
  Eigen::VectorXd last_;
};

}  // namespace flatcap

#endif  // FLATCAP_MPC_HPP
