#ifndef FLATCAP_APPROX_HPP
#define FLATCAP_APPROX_HPP

/**
 * Polytopic inner approximation of the convex flat-input set Vtilde.
 *
 * For a fixed generator basis G the largest scaled zonotope
 *
 *     max C(delta)  s.t.  every vertex candidate of Z(G diag(delta), c) lies in Vtilde,
 *                         v_int in Z(G diag(delta), c)
 *
 * is solved for a sequence of anchor points on the thrust axis, and the union of
 * the resulting zonotopes is hulled into the final set S_v.
 *
 * Writing the anchor as v_int = c + G gamma with |gamma_i| <= delta_i eliminates
 * the center, so every vertex candidate is affine in (delta, gamma). Vtilde is an
 * intersection of a ball and a second-order cone, and log C(delta) is concave
 * (C^(1/3) is concave by Brunn-Minkowski because Z is Minkowski-linear in delta).
 * The problem is therefore convex and is solved with a log-barrier Newton method.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "flatcap/errors.hpp"
#include "flatcap/flatmap.hpp"
#include "flatcap/geomhull.hpp"
#include "flatcap/zonotope.hpp"

namespace flatcap {

struct ApproxConfig {
  Generators generators = default_generators();
  int n0 = 2;
  /// Largest allowed Vtilde residual of a vertex candidate at exit.
  double feasibility_tol = 1e-8;
  /// Duality-gap target of the barrier method, relative to log C.
  double objective_tol = 1e-8;
  int max_outer_iterations = 60;
  int max_newton_iterations = 200;
  /// Anchors on the boundary of Vtilde only admit flat zonotopes, so the two
  /// schedule end points are pulled this fraction of the way toward the middle
  /// of the thrust axis before solving.
  double anchor_retreat = 0.01;
  HullOptions hull{};

  void validate() const {
    std::ostringstream err;
    if (n0 < 0) err << "n0 must be >= 0; ";
    if (generators.cols() < 3) err << "need at least 3 generators; ";
    if (!generators.allFinite()) err << "non-finite generators; ";
    else if (generators.cols() >= 3) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(generators);
      if (svd.singularValues()(2) <= 1e-12 * svd.singularValues()(0)) err << "generators must have full row rank; ";
    }
    if (!(feasibility_tol > 0.0) || !(objective_tol > 0.0)) err << "tolerances must be positive; ";
    if (max_outer_iterations < 1 || max_newton_iterations < 1) err << "iteration limits must be positive; ";
    if (!(anchor_retreat >= 0.0 && anchor_retreat < 1.0)) err << "anchor_retreat must lie in [0, 1); ";
    if (!err.str().empty()) throw ConfigError("ApproxConfig: " + err.str());
  }
};

/// Restrictions on the zonotope family searched by maximize_zonotope.
struct ZonotopeShape {
  /// Force c = v_int instead of merely v_int in Z.
  bool fixed_center = false;
  /// Force all scalings equal.
  bool tied_scaling = false;
};

struct ZonotopeFit {
  Zonotope zonotope;
  Vec3 anchor = Vec3::Zero();
  /// Barrier parameter updates and total Newton steps.
  int outer_iterations = 0;
  int newton_iterations = 0;
  /// Largest Vtilde residual over the vertex candidates (<= 0 means feasible).
  double max_residual = 0.0;
  /// Final duality-gap bound on log C.
  double gap = 0.0;
  double objective = 0.0;
};

/// v_int_k = (0, 0, (1 - k/N0) t_max - g) for k = 0..N0; a single top point for N0 = 0.
inline std::vector<Vec3> interior_schedule(const ConstraintParams& p, int n0) {
  if (n0 < 0) throw ConfigError("interior_schedule: n0 must be >= 0");
  if (n0 == 0) return {Vec3(0, 0, p.t_max - p.g)};
  std::vector<Vec3> out;
  out.reserve(n0 + 1);
  for (int k = 0; k <= n0; ++k) out.emplace_back(0.0, 0.0, (1.0 - static_cast<double>(k) / n0) * p.t_max - p.g);
  return out;
}

/// Largest Vtilde residual of a point, scaled so each component is in units of
/// squared acceleration (the floor term is multiplied by t_max).
inline double vtilde_violation(const Vec3& v, const ConstraintParams& p) {
  const Vec3 r = vtilde_residuals(v, p);
  return std::max({r(0), r(1), r(2) * p.t_max});
}

namespace detail {

/// Barrier objective of the zonotope problem over x = (theta, eta), with
/// delta = D theta and gamma = E eta.
class ZonotopeBarrier {
 public:
  ZonotopeBarrier(const Generators& G, const Vec3& anchor, const ConstraintParams& p, const ZonotopeShape& shape)
      : G_(G), anchor_(anchor), p_(p), ng_(static_cast<int>(G.cols())) {
    const int nt = shape.tied_scaling ? 1 : ng_;
    const int ne = shape.fixed_center ? 0 : ng_;
    D_ = shape.tied_scaling ? Eigen::MatrixXd(Eigen::MatrixXd::Ones(ng_, 1))
                            : Eigen::MatrixXd(Eigen::MatrixXd::Identity(ng_, ng_));
    E_ = Eigen::MatrixXd::Identity(ng_, ne);
    nx_ = nt + ne;
    nt_ = nt;
    te2_ = std::tan(p.eps_max()) * std::tan(p.eps_max());
    const int nv = 1 << ng_;
    P_.reserve(nv);
    for (int mask = 0; mask < nv; ++mask) {
      Eigen::VectorXd alpha(ng_);
      for (int i = 0; i < ng_; ++i) alpha(i) = (mask >> i) & 1 ? 1.0 : -1.0;
      Eigen::Matrix<double, 3, Eigen::Dynamic> P(3, nx_);
      P.leftCols(nt) = G * alpha.asDiagonal() * D_;
      if (ne > 0) P.rightCols(ne) = -G * E_;
      P_.push_back(P);
    }
    // linear rows L x >= 0: delta +- gamma, or delta alone when gamma is pinned
    if (ne > 0) {
      L_.resize(2 * ng_, nx_);
      L_ << D_, E_, D_, -E_;
    } else {
      L_ = D_;
    }
  }

  int dim() const { return nx_; }
  /// Number of logarithmic barrier terms (the barrier parameter of the method).
  int barrier_count() const { return 2 * static_cast<int>(P_.size()) + static_cast<int>(L_.rows()); }

  Eigen::VectorXd delta(const Eigen::VectorXd& x) const { return D_ * x.head(nt_); }
  Eigen::VectorXd gamma(const Eigen::VectorXd& x) const { return E_ * x.tail(nx_ - nt_); }
  Vec3 center(const Eigen::VectorXd& x) const { return anchor_ - G_ * gamma(x); }

  /// Shifted vertex u = p + g e3 for candidate j.
  Vec3 lifted(int j, const Eigen::VectorXd& x) const { return anchor_ + P_[j] * x + Vec3(0, 0, p_.g); }

  /// True iff every barrier argument is strictly positive at x.
  bool strictly_feasible(const Eigen::VectorXd& x) const {
    if (((L_ * x).array() <= 0.0).any()) return false;
    const double T2 = p_.t_max * p_.t_max;
    for (int j = 0; j < static_cast<int>(P_.size()); ++j) {
      const Vec3 u = lifted(j, x);
      if (!(u(2) > 0.0)) return false;
      if (!(te2_ * u(2) * u(2) - u(0) * u(0) - u(1) * u(1) > 0.0)) return false;
      if (!(T2 - u.squaredNorm() > 0.0)) return false;
    }
    return volume_objective(G_, delta(x)) > 0.0;
  }

  /// f(x) = -t log C(delta) - sum log s_k; infinity outside the domain.
  double value(const Eigen::VectorXd& x, double t) const {
    if (!strictly_feasible(x)) return std::numeric_limits<double>::infinity();
    double f = -t * std::log(volume_objective(G_, delta(x)));
    f -= (L_ * x).array().log().sum();
    const double T2 = p_.t_max * p_.t_max;
    for (int j = 0; j < static_cast<int>(P_.size()); ++j) {
      const Vec3 u = lifted(j, x);
      f -= std::log(te2_ * u(2) * u(2) - u(0) * u(0) - u(1) * u(1));
      f -= std::log(T2 - u.squaredNorm());
    }
    return f;
  }

  void derivatives(const Eigen::VectorXd& x, double t, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    grad.setZero(nx_);
    hess.setZero(nx_, nx_);
    // -t log C on theta
    const Eigen::VectorXd d = delta(x);
    double C = 0.0;
    Eigen::VectorXd dC = Eigen::VectorXd::Zero(ng_);
    Eigen::MatrixXd d2C = Eigen::MatrixXd::Zero(ng_, ng_);
    for (int i = 0; i < ng_; ++i)
      for (int j = i + 1; j < ng_; ++j)
        for (int k = j + 1; k < ng_; ++k) {
          Eigen::Matrix3d M;
          M << G_.col(i), G_.col(j), G_.col(k);
          const double w = std::abs(M.determinant());
          C += w * d(i) * d(j) * d(k);
          dC(i) += w * d(j) * d(k);
          dC(j) += w * d(i) * d(k);
          dC(k) += w * d(i) * d(j);
          d2C(i, j) += w * d(k);
          d2C(i, k) += w * d(j);
          d2C(j, k) += w * d(i);
        }
    d2C = (d2C + d2C.transpose()).eval();
    const Eigen::VectorXd gl = dC / C;
    const Eigen::MatrixXd hl = d2C / C - gl * gl.transpose();
    grad.head(nt_) -= t * D_.transpose() * gl;
    hess.topLeftCorner(nt_, nt_) -= t * D_.transpose() * hl * D_;
    // linear barriers
    const Eigen::VectorXd s = L_ * x;
    for (Eigen::Index r = 0; r < L_.rows(); ++r) {
      const Eigen::VectorXd a = L_.row(r).transpose();
      grad -= a / s(r);
      hess += a * a.transpose() / (s(r) * s(r));
    }
    // conic barriers, chain rule through u = anchor + P x + g e3
    const double T2 = p_.t_max * p_.t_max;
    const Eigen::Matrix3d Hcone = Eigen::Vector3d(-2.0, -2.0, 2.0 * te2_).asDiagonal();
    for (int j = 0; j < static_cast<int>(P_.size()); ++j) {
      const Vec3 u = lifted(j, x);
      const auto& P = P_[j];
      const double sc = te2_ * u(2) * u(2) - u(0) * u(0) - u(1) * u(1);
      const Vec3 gc(-2.0 * u(0), -2.0 * u(1), 2.0 * te2_ * u(2));
      const double sb = T2 - u.squaredNorm();
      const Vec3 gb = -2.0 * u;
      const Eigen::Matrix3d Hu = -Hcone / sc + gc * gc.transpose() / (sc * sc) +
                                 2.0 * Eigen::Matrix3d::Identity() / sb + gb * gb.transpose() / (sb * sb);
      grad -= P.transpose() * (gc / sc + gb / sb);
      hess += P.transpose() * Hu * P;
    }
  }

 private:
  Generators G_;
  Vec3 anchor_;
  ConstraintParams p_;
  int ng_;
  int nx_ = 0;
  int nt_ = 0;
  double te2_ = 0.0;
  Eigen::MatrixXd D_, E_, L_;
  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> P_;
};

}  // namespace detail

/// Largest scaled zonotope Z(G diag(delta), c) with all vertex candidates in
/// Vtilde and v_int in Z. Throws InfeasibleStart when no zonotope of positive
/// volume fits around v_int (v_int outside Vtilde or on its boundary), and
/// ToleranceError if the returned candidates violate Vtilde by more than 1e-6.
inline ZonotopeFit maximize_zonotope(const Generators& G, const Vec3& v_int, const ConstraintParams& p,
                                     const ApproxConfig& cfg, const ZonotopeShape& shape = {}) {
  const int ng = static_cast<int>(G.cols());
  if (ng < 3) throw ConfigError("maximize_zonotope: need at least 3 generators");
  if (ng > kMaxEnumeratedGenerators) throw SizeError("maximize_zonotope: too many generators");
  if (!(p.g > 0.0) || !(p.t_max >= 0.0)) throw ConfigError("maximize_zonotope: invalid constraint parameters");

  detail::ZonotopeBarrier bar(G, v_int, p, shape);
  const int nx = bar.dim();
  const int nt = shape.tied_scaling ? 1 : ng;

  // Initial point: c = v_int, delta = s * 1 with s half the largest feasible
  // uniform scaling (found by bisection on the vertex candidates).
  auto start = [&](double s) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(nx);
    x.head(nt).setConstant(s);
    return x;
  };
  const double span = std::max(1.0, G.cwiseAbs().colwise().sum().maxCoeff());
  double lo = 0.0, hi = 2.0 * (p.t_max + p.g) / span;
  if (bar.strictly_feasible(start(hi))) throw SolverError("maximize_zonotope: Vtilde appears unbounded");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (bar.strictly_feasible(start(mid)) ? lo : hi) = mid;
  }
  if (!(lo > 1e-9 * (p.t_max + p.g) / span)) {
    std::ostringstream os;
    os << "maximize_zonotope: no zonotope of positive volume contains the anchor (" << v_int.transpose() << ")";
    throw InfeasibleStart(os.str());
  }

  Eigen::VectorXd x = start(0.5 * lo);
  const int m = bar.barrier_count();
  double t = 1.0;
  const double mu = 20.0;
  ZonotopeFit fit;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
    ++fit.outer_iterations;
    for (int it = 0; it < cfg.max_newton_iterations; ++it) {
      bar.derivatives(x, t, grad, hess);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd dx = -ldlt.solve(grad);
      if (ldlt.info() != Eigen::Success || !dx.allFinite() || grad.dot(dx) >= 0.0) {
        const double reg = 1e-10 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
        Eigen::LLT<Eigen::MatrixXd> llt(hess + reg * Eigen::MatrixXd::Identity(nx, nx));
        dx = -llt.solve(grad);
        if (llt.info() != Eigen::Success || !dx.allFinite()) dx = -grad;
      }
      const double decrement = -grad.dot(dx);
      ++fit.newton_iterations;
      if (decrement <= 1e-12) break;
      const double f0 = bar.value(x, t);
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, step *= 0.5) {
        const Eigen::VectorXd xn = x + step * dx;
        if (bar.value(xn, t) <= f0 - 0.25 * step * decrement) {
          x = xn;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    fit.gap = m / t;
    if (fit.gap <= cfg.objective_tol) break;
    t *= mu;
  }

  fit.anchor = v_int;
  fit.zonotope = Zonotope(G, bar.center(x), bar.delta(x).cwiseMax(0.0));
  fit.objective = volume_objective(fit.zonotope);
  fit.max_residual = -std::numeric_limits<double>::infinity();
  for (const auto& v : vertex_candidates(fit.zonotope))
    fit.max_residual = std::max(fit.max_residual, vtilde_violation(v, p));
  if (fit.max_residual > 1e-6) {
    std::ostringstream os;
    os << "maximize_zonotope: vertex candidates violate Vtilde by " << fit.max_residual;
    throw ToleranceError(os.str());
  }
  if (fit.gap > cfg.objective_tol) {
    std::ostringstream os;
    os << "maximize_zonotope: barrier gap " << fit.gap << " above tolerance after " << fit.outer_iterations
       << " updates";
    throw ToleranceError(os.str());
  }
  return fit;
}

struct ApproxResult {
  std::vector<Vec3> schedule;
  std::vector<ZonotopeFit> fits;
  Polytope set;
  double volume = 0.0;
  double seconds = 0.0;

  std::size_t num_vertices() const { return set.num_vertices(); }
  std::size_t num_inequalities() const { return set.num_halfspaces(); }
};

/// Interior schedule with the boundary end points pulled inward by cfg.anchor_retreat.
inline std::vector<Vec3> solve_anchors(const ConstraintParams& p, const ApproxConfig& cfg) {
  auto pts = interior_schedule(p, cfg.n0);
  const Vec3 mid(0.0, 0.0, 0.5 * p.t_max - p.g);
  auto pull = [&](Vec3& v) { v += cfg.anchor_retreat * (mid - v); };
  pull(pts.front());
  if (pts.size() > 1) pull(pts.back());
  return pts;
}

/// Solve one zonotope per anchor and hull their vertex candidates.
inline ApproxResult algorithm1(const ApproxConfig& cfg, const ConstraintParams& p) {
  cfg.validate();
  p.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ApproxResult res;
  res.schedule = solve_anchors(p, cfg);
  std::vector<Vec3> cloud;
  for (std::size_t k = 0; k < res.schedule.size(); ++k) {
    res.fits.push_back(maximize_zonotope(cfg.generators, res.schedule[k], p, cfg));
    const auto pts = vertex_candidates(res.fits.back().zonotope);
    cloud.insert(cloud.end(), pts.begin(), pts.end());
  }
  res.set = convex_hull(cloud, cfg.hull);
  res.volume = volume(res.set);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Largest Vtilde violation over the vertices of a polytope. Vtilde is convex,
/// so a non-positive value certifies containment of the whole polytope.
inline double max_vtilde_violation(const Polytope& poly, const ConstraintParams& p) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& v : poly.vertices()) worst = std::max(worst, vtilde_violation(v, p));
  return worst;
}

/// Half-width a of the largest origin-centred cube in Vtilde: the bottom
/// corners bind the cone, sqrt(2) a = (g - a) tan(eps_max), unless the top
/// corners hit the thrust ball first.
inline double pv_half_width(const ConstraintParams& p) {
  const double te = std::tan(p.eps_max());
  double a = p.g * te / (std::sqrt(2.0) + te);
  // ball at the top corners: 2a^2 + (a + g)^2 <= t_max^2
  const double ball = (-p.g + std::sqrt(p.g * p.g - 3.0 * (p.g * p.g - p.t_max * p.t_max))) / 3.0;
  return std::min(a, ball);
}

inline Polytope build_Pv(const ConstraintParams& p) {
  p.validate();
  const double a = pv_half_width(p);
  return Polytope::box(Vec3::Constant(-a), Vec3::Constant(a));
}

/// Half-widths (w, w, w3) of the largest origin-centred box in Vtilde with equal
/// horizontal sides. The bottom corners bind the cone, 2 w^2 <= (g - w3)^2 tan^2(eps_max),
/// and the top corners the ball, 2 w^2 + (w3 + g)^2 <= t_max^2. With the ball slack,
/// maximizing w^2 w3 gives w3 = g / 3; otherwise w^2 w3 is the minimum of two unimodal
/// functions of w3 (hence quasi-concave) and is maximized by golden-section search.
inline Vec3 bv_half_widths(const ConstraintParams& p) {
  const double te = std::tan(p.eps_max());
  auto w2 = [&](double w3) {
    const double cone = (p.g - w3) * (p.g - w3) * te * te;
    const double ball = p.t_max * p.t_max - (w3 + p.g) * (w3 + p.g);
    return std::max(0.0, 0.5 * std::min(cone, ball));
  };
  double w3 = p.g / 3.0;
  const double cone_w2 = 0.5 * (p.g - w3) * (p.g - w3) * te * te;
  if (w2(w3) < cone_w2) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = std::min(p.g, p.t_max - p.g);
    auto f = [&](double x) { return w2(x) * x; };
    for (int it = 0; it < 200; ++it) {
      const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
      (f(a) < f(b) ? lo : hi) = (f(a) < f(b) ? a : b);
    }
    w3 = 0.5 * (lo + hi);
  }
  const double w = std::sqrt(w2(w3));
  return {w, w, w3};
}

inline Polytope build_Bv(const ConstraintParams& p) {
  p.validate();
  const Vec3 w = bv_half_widths(p);
  return Polytope::box(-w, w);
}

}  // namespace flatcap

#endif  // FLATCAP_APPROX_HPP
