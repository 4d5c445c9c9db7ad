#ifndef FLATCAP_TRAJECTORIES_HPP
#define FLATCAP_TRAJECTORIES_HPP

/**
 * Reference trajectories for the flat output sigma = position. Each reference
 * is sampled at the controller period and carries the flat state
 * (sigma, sigma'), the flat input v_ref = sigma'' and the body input
 * u_ref = forward_map(v_ref, psi).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "flatcap/errors.hpp"
#include "flatcap/flatmap.hpp"
#include "flatcap/mpc.hpp"

namespace flatcap {

enum class Scenario { Ref1, Ref2, Ref3, Ref4, Hover };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Ref1: return "ref1";
    case Scenario::Ref2: return "ref2";
    case Scenario::Ref3: return "ref3";
    case Scenario::Ref4: return "ref4";
    case Scenario::Hover: return "hover";
  }
  return "unknown";
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "ref1" || s == "1") return Scenario::Ref1;
  if (s == "ref2" || s == "2") return Scenario::Ref2;
  if (s == "ref3" || s == "3") return Scenario::Ref3;
  if (s == "ref4" || s == "4") return Scenario::Ref4;
  if (s == "hover" || s == "0") return Scenario::Hover;
  throw ConfigError("unknown scenario '" + s + "' (expected ref1..ref4 or hover)");
}

struct ReferenceTrajectory {
  std::string name;
  double ts = 0.0;
  double psi = 0.0;
  /// false for piecewise-constant set points (v_ref = 0 by convention).
  bool smooth = true;
  std::vector<double> t;
  std::vector<Vec3> position;
  std::vector<Vec3> velocity;
  std::vector<Vec3> acceleration;  // v_ref
  std::vector<BodyInput> input;    // u_ref
  /// Initial plant state; the first reference state unless the scenario says otherwise.
  Vec6 start = Vec6::Zero();

  std::size_t size() const { return t.size(); }

  Vec6 state(std::size_t k) const {
    k = std::min(k, size() - 1);
    Vec6 x;
    x << position[k], velocity[k];
    return x;
  }

  /// Flat-input horizon from step k (FB-MPC): states for k+1..k+N_p, inputs v_ref for k..k+N_p-1.
  /// Samples past the end repeat the last one.
  HorizonReference flat_horizon(std::size_t k, int np) const {
    HorizonReference h;
    for (int i = 0; i < np; ++i) {
      h.state.push_back(state(k + static_cast<std::size_t>(i) + 1));
      h.input.push_back(acceleration[std::min(k + static_cast<std::size_t>(i), size() - 1)]);
    }
    return h;
  }

  /// Body-input horizon from step k (PWA-MPC): inputs are u_ref.
  HorizonReference body_horizon(std::size_t k, int np) const {
    HorizonReference h;
    for (int i = 0; i < np; ++i) {
      h.state.push_back(state(k + static_cast<std::size_t>(i) + 1));
      h.input.push_back(input[std::min(k + static_cast<std::size_t>(i), size() - 1)].as_vector());
    }
    return h;
  }

  std::vector<Vec6> states() const {
    std::vector<Vec6> out;
    for (std::size_t k = 0; k < size(); ++k) out.push_back(state(k));
    return out;
  }

  void validate() const {
    const std::size_t n = t.size();
    if (n == 0) throw ConfigError("ReferenceTrajectory: empty");
    if (position.size() != n || velocity.size() != n || acceleration.size() != n || input.size() != n)
      throw SizeError("ReferenceTrajectory: column lengths differ");
    if (!(ts > 0.0)) throw ConfigError("ReferenceTrajectory: ts must be positive");
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(t[k] - t[k - 1] - ts) > 1e-9 * (1.0 + t[k])) throw ConfigError("ReferenceTrajectory: uneven sampling");
  }
};

/// Number of samples covering [0, duration] at period ts (end point included when it lands on the grid).
inline std::size_t sample_count(double duration, double ts) {
  if (!(ts > 0.0)) throw ConfigError("sample period must be positive");
  if (!(duration >= 0.0)) throw ConfigError("duration must be non-negative");
  return static_cast<std::size_t>(std::floor(duration / ts + 1e-9)) + 1;
}

namespace detail {

/// Fill a trajectory from analytic sigma, sigma', sigma'' callbacks.
template <class P, class V, class A>
ReferenceTrajectory sample_analytic(std::string name, double duration, double ts, double psi,
                                    const ConstraintParams& p, P pos, V vel, A acc) {
  ReferenceTrajectory r;
  r.name = std::move(name);
  r.ts = ts;
  r.psi = psi;
  const std::size_t n = sample_count(duration, ts);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * ts;
    r.t.push_back(t);
    r.position.push_back(pos(t));
    r.velocity.push_back(vel(t));
    r.acceleration.push_back(acc(t));
    r.input.push_back(forward_map(r.acceleration.back(), psi, p));
  }
  r.start = r.state(0);
  return r;
}

}  // namespace detail

/// Clamped B-spline basis of a given degree over a non-decreasing knot vector.
class BSplineBasis {
 public:
  BSplineBasis(int degree, std::vector<double> knots) : p_(degree), U_(std::move(knots)) {
    if (p_ < 0) throw ConfigError("BSplineBasis: negative degree");
    if (static_cast<int>(U_.size()) < 2 * (p_ + 1)) throw ConfigError("BSplineBasis: too few knots");
    for (std::size_t i = 1; i < U_.size(); ++i)
      if (U_[i] < U_[i - 1]) throw ConfigError("BSplineBasis: knots must be non-decreasing");
  }

  /// Clamped knot vector with end multiplicity degree+1 and simple interior knots at breaks.
  static BSplineBasis clamped(int degree, const std::vector<double>& breaks) {
    std::vector<double> U(static_cast<std::size_t>(degree + 1), breaks.front());
    for (std::size_t i = 1; i + 1 < breaks.size(); ++i) U.push_back(breaks[i]);
    U.insert(U.end(), static_cast<std::size_t>(degree + 1), breaks.back());
    return BSplineBasis(degree, U);
  }

  int degree() const { return p_; }
  int size() const { return static_cast<int>(U_.size()) - p_ - 1; }
  double front() const { return U_.front(); }
  double back() const { return U_.back(); }
  const std::vector<double>& knots() const { return U_; }

  /// Row d holds the d-th derivative of every basis function at t, d = 0..nd.
  Eigen::MatrixXd eval(double t, int nd) const {
    const int n = size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nd + 1, n);
    t = std::clamp(t, front(), back());
    // knot span: U[span] <= t < U[span+1], last non-empty span at the right end
    int span = p_;
    while (span < n - 1 && t >= U_[static_cast<std::size_t>(span + 1)]) ++span;
    // all non-zero basis functions of degree 0..p (lower triangle) and knot differences (upper)
    Eigen::MatrixXd ndu(p_ + 1, p_ + 1);
    std::vector<double> left(static_cast<std::size_t>(p_ + 1)), right(static_cast<std::size_t>(p_ + 1));
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p_; ++j) {
      left[static_cast<std::size_t>(j)] = t - U_[static_cast<std::size_t>(span + 1 - j)];
      right[static_cast<std::size_t>(j)] = U_[static_cast<std::size_t>(span + j)] - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        ndu(j, r) = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
        const double tmp = ndu(r, j - 1) / ndu(j, r);
        ndu(r, j) = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
        saved = left[static_cast<std::size_t>(j - r)] * tmp;
      }
      ndu(j, j) = saved;
    }
    const int nder = std::min(nd, p_);
    Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(nd + 1, p_ + 1);
    for (int j = 0; j <= p_; ++j) ders(0, j) = ndu(j, p_);
    Eigen::MatrixXd a(2, p_ + 1);
    for (int r = 0; r <= p_; ++r) {
      int s1 = 0, s2 = 1;
      a.setZero();
      a(0, 0) = 1.0;
      for (int k = 1; k <= nder; ++k) {
        double d = 0.0;
        const int rk = r - k, pk = p_ - k;
        if (r >= k) {
          a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
          d = a(s2, 0) * ndu(rk, pk);
        }
        const int j1 = rk >= -1 ? 1 : -rk;
        const int j2 = r - 1 <= pk ? k - 1 : p_ - r;
        for (int j = j1; j <= j2; ++j) {
          a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
          d += a(s2, j) * ndu(rk + j, pk);
        }
        if (r <= pk) {
          a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
          d += a(s2, k) * ndu(r, pk);
        }
        ders(k, r) = d;
        std::swap(s1, s2);
      }
    }
    double fac = p_;
    for (int k = 1; k <= nder; ++k) {
      ders.row(k) *= fac;
      fac *= (p_ - k);
    }
    for (int j = 0; j <= p_; ++j) out.col(span - p_ + j) = ders.col(j);
    return out;
  }

 private:
  int p_;
  std::vector<double> U_;
};

/// Ref. 1 way-points (m) and their pass times (s).
inline std::vector<Vec3> ref1_waypoints() {
  return {Vec3(0, 0, 0.35),  Vec3(0.3, -0.3, 0.4), Vec3(0.6, 0, 0.75), Vec3(0.6, 0.3, 0.8), Vec3(0.3, 0.6, 0.8),
          Vec3(0, 0.6, 0.8), Vec3(-0.3, 0.3, 0.8), Vec3(-0.3, 0, 0.5), Vec3(0, 0, 0.35)};
}

inline std::vector<double> ref1_times() {
  std::vector<double> t;
  for (int k = 0; k < 9; ++k) t.push_back(k * 30.0 / 8.0);
  return t;
}

/// Degree-7 clamped spline through the way-points with zero velocity and
/// acceleration at both ends, free coefficients minimizing the integral of the
/// squared fourth derivative. Returns control points (one row per coefficient).
struct MinSnapSpline {
  BSplineBasis basis;
  Eigen::MatrixXd control;  // n x 3

  Vec3 derivative(double t, int d) const { return (basis.eval(t, d).row(d) * control).transpose(); }
};

inline MinSnapSpline fit_min_snap(const std::vector<Vec3>& waypoints, const std::vector<double>& times,
                                  int degree = 7) {
  if (waypoints.size() != times.size() || waypoints.size() < 2)
    throw ConfigError("fit_min_snap: need matching way-points and times (at least 2)");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("fit_min_snap: times must increase");
  BSplineBasis basis = BSplineBasis::clamped(degree, times);
  const int n = basis.size();
  const int m = static_cast<int>(waypoints.size());

  // equality constraints: interpolation plus zero velocity/acceleration at the ends
  const int nc = m + 4;
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(nc, n);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nc, 3);
  for (int i = 0; i < m; ++i) {
    E.row(i) = basis.eval(times[static_cast<std::size_t>(i)], 0).row(0);
    rhs.row(i) = waypoints[static_cast<std::size_t>(i)].transpose();
  }
  E.row(m) = basis.eval(times.front(), 1).row(1);
  E.row(m + 1) = basis.eval(times.front(), 2).row(2);
  E.row(m + 2) = basis.eval(times.back(), 1).row(1);
  E.row(m + 3) = basis.eval(times.back(), 2).row(2);

  // snap Gram matrix by Gauss-Legendre (4 nodes per span is exact for degree-6 integrands)
  const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t s = 0; s + 1 < times.size(); ++s) {
    const double a = times[s], b = times[s + 1];
    for (int q = 0; q < 4; ++q) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
      const Eigen::RowVectorXd d4 = basis.eval(t, 4).row(4);
      W += 0.5 * (b - a) * gw[q] * d4.transpose() * d4;
    }
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + nc, n + nc);
  K.topLeftCorner(n, n) = 2.0 * W;
  K.topRightCorner(n, nc) = E.transpose();
  K.bottomLeftCorner(nc, n) = E;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n + nc, 3);
  R.bottomRows(nc) = rhs;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) throw SolverError("fit_min_snap: singular interpolation system");
  const Eigen::MatrixXd sol = lu.solve(R);
  return {basis, sol.topRows(n)};
}

/// Ref. 1: minimum-snap spline through the way-points.
inline ReferenceTrajectory gen_ref1(const std::vector<Vec3>& waypoints, const std::vector<double>& times, double ts,
                                    const ConstraintParams& p, double psi = 0.0) {
  const MinSnapSpline s = fit_min_snap(waypoints, times);
  const double t0 = times.front();
  return detail::sample_analytic(
      "ref1", times.back() - t0, ts, psi, p, [&](double t) { return s.derivative(t0 + t, 0); },
      [&](double t) { return s.derivative(t0 + t, 1); }, [&](double t) { return s.derivative(t0 + t, 2); });
}

inline ReferenceTrajectory gen_ref1(double ts, const ConstraintParams& p, double psi = 0.0) {
  return gen_ref1(ref1_waypoints(), ref1_times(), ts, p, psi);
}

/// Ref. 2: set points held for hold_times[i] seconds each; zero velocity and v_ref.
inline ReferenceTrajectory gen_ref2(const std::vector<Vec3>& waypoints, const std::vector<double>& hold_times,
                                    double ts, const ConstraintParams& p, double psi = 0.0) {
  if (waypoints.empty() || waypoints.size() != hold_times.size())
    throw ConfigError("gen_ref2: need one hold time per way-point");
  std::vector<double> ends;
  double acc = 0.0;
  for (double h : hold_times) {
    if (!(h > 0.0)) throw ConfigError("gen_ref2: hold times must be positive");
    ends.push_back(acc += h);
  }
  auto pos = [&](double t) {
    for (std::size_t i = 0; i < ends.size(); ++i)
      if (t < ends[i] - 1e-9) return waypoints[i];
    return waypoints.back();
  };
  auto zero = [](double) { return Vec3::Zero().eval(); };
  ReferenceTrajectory r = detail::sample_analytic("ref2", ends.back(), ts, psi, p, pos, zero, zero);
  r.smooth = false;
  return r;
}

inline ReferenceTrajectory gen_ref2(double ts, const ConstraintParams& p, double psi = 0.0) {
  const auto w = ref1_waypoints();
  return gen_ref2(w, std::vector<double>(w.size(), 30.0 / 8.0), ts, p, psi);
}

/// Ref. 3: horizontal circle of radius 0.5 m at 0.3 m, omega = 0.3 pi.
inline ReferenceTrajectory gen_ref3(double ts, const ConstraintParams& p, double duration = 20.0, double psi = 0.0) {
  const double w = 0.3 * std::numbers::pi;
  return detail::sample_analytic(
      "ref3", duration, ts, psi, p, [&](double t) { return Vec3(0.5 * std::cos(w * t), 0.5 * std::sin(w * t), 0.3); },
      [&](double t) { return Vec3(-0.5 * w * std::sin(w * t), 0.5 * w * std::cos(w * t), 0.0); },
      [&](double t) { return Vec3(-0.5 * w * w * std::cos(w * t), -0.5 * w * w * std::sin(w * t), 0.0); });
}

/// Ref. 4: circle with a slow vertical sinusoid, omega = pi / 15.
inline ReferenceTrajectory gen_ref4(double ts, const ConstraintParams& p, double duration = 60.0, double psi = 0.0) {
  const double w = std::numbers::pi / 15.0;
  const double h = 0.5 * w;
  return detail::sample_analytic(
      "ref4", duration, ts, psi, p,
      [&](double t) { return Vec3(0.5 * std::cos(w * t), 0.5 * std::sin(w * t), 0.5 * std::sin(h * t) + 0.5); },
      [&](double t) {
        return Vec3(-0.5 * w * std::sin(w * t), 0.5 * w * std::cos(w * t), 0.5 * h * std::cos(h * t));
      },
      [&](double t) {
        return Vec3(-0.5 * w * w * std::cos(w * t), -0.5 * w * w * std::sin(w * t), -0.5 * h * h * std::sin(h * t));
      });
}

/// Constant set point; the plant starts displaced by `offset` from it at rest.
inline ReferenceTrajectory gen_hover(double ts, const ConstraintParams& p, double duration = 20.0,
                                     const Vec3& target = Vec3(0, 0, 0.5), const Vec3& offset = Vec3(0.3, -0.2, -0.4),
                                     double psi = 0.0) {
  auto zero = [](double) { return Vec3::Zero().eval(); };
  ReferenceTrajectory r =
      detail::sample_analytic("hover", duration, ts, psi, p, [&](double) { return target; }, zero, zero);
  r.start.head<3>() = target + offset;
  return r;
}

/// Default duration of each scenario (s).
inline double default_duration(Scenario s) {
  switch (s) {
    case Scenario::Ref1: return 30.0;
    case Scenario::Ref2: return 9 * 30.0 / 8.0;
    case Scenario::Ref3: return 20.0;
    case Scenario::Ref4: return 60.0;
    case Scenario::Hover: return 20.0;
  }
  return 0.0;
}

/// Scenario reference sampled at ts. Periodic scenarios are sampled over at
/// least `duration` seconds so that horizons near the end stay on the path;
/// way-point scenarios end at rest and hold their last sample.
inline ReferenceTrajectory generate(Scenario s, double ts, const ConstraintParams& p, double psi = 0.0,
                                    double duration = 0.0) {
  const double d = std::max(duration, default_duration(s));
  switch (s) {
    case Scenario::Ref1: return gen_ref1(ts, p, psi);
    case Scenario::Ref2: return gen_ref2(ts, p, psi);
    case Scenario::Ref3: return gen_ref3(ts, p, d, psi);
    case Scenario::Ref4: return gen_ref4(ts, p, d, psi);
    case Scenario::Hover: return gen_hover(ts, p, d);
  }
  throw ConfigError("generate: unknown scenario");
}

/// Controller gains of each scenario: FB-MPC weights Q, R on (xi, v) and PWA-MPC
/// weights on (xi, u), with the sampling period and horizon.
struct ScenarioGains {
  MpcConfig fb;
  MpcConfig pwa;
};

inline ScenarioGains scenario_gains(Scenario s) {
  using D6 = Eigen::Matrix<double, 6, 1>;
  auto cfg = [](const D6& q, const Vec3& r, double ts, int np) {
    MpcConfig c;
    c.Q = q.asDiagonal();
    c.R = r.asDiagonal();
    c.ts = ts;
    c.np = np;
    return c;
  };
  const D6 q_ref1 = (D6() << 35, 35, 50, 5, 5, 5).finished();
  switch (s) {
    case Scenario::Ref1:
      return {cfg(q_ref1, Vec3(1, 1, 1), 0.1, 20), cfg(q_ref1, Vec3(5, 75, 75), 0.1, 20)};
    case Scenario::Ref2: {
      const D6 q = (D6() << 50, 50, 50, 5, 5, 5).finished();
      return {cfg(q, Vec3(5, 5, 5), 0.25, 20), cfg(q, Vec3(5, 75, 75), 0.25, 20)};
    }
    case Scenario::Ref3:
      return {cfg((D6() << 180, 180, 180, 10, 10, 10).finished(), Vec3(5, 5, 5), 0.2, 10),
              cfg((D6() << 50, 50, 50, 5, 5, 5).finished(), Vec3(5, 80, 80), 0.2, 10)};
    case Scenario::Ref4:
      return {cfg((D6() << 90, 90, 90, 5, 5, 5).finished(), Vec3(5, 5, 5), 0.25, 20),
              cfg(q_ref1, Vec3(5, 75, 75), 0.25, 20)};
    case Scenario::Hover:
      return {cfg((D6() << 50, 50, 50, 5, 5, 5).finished(), Vec3(5, 5, 5), 0.2, 10),
              cfg((D6() << 50, 50, 50, 5, 5, 5).finished(), Vec3(5, 75, 75), 0.2, 10)};
  }
  throw ConfigError("scenario_gains: unknown scenario");
}

}  // namespace flatcap

#endif  // FLATCAP_TRAJECTORIES_HPP
