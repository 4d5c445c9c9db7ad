#ifndef FLATCAP_FLATMAP_HPP
#define FLATCAP_FLATMAP_HPP

/**
 * Flat coordinate change for the quadcopter translational dynamics.
 *
 *   sigma'' = h_psi(u),   u = (T, phi, theta)
 *
 * forward_map is the linearizing input transformation v -> u, inverse_map is
 * h_psi itself. The three constraint sets live here as predicates:
 *   U       box on (T, phi, theta)
 *   V       image of U in flat coordinates (non-convex, depends on yaw)
 *   Vtilde  ball-intersect-cone inner subset of V (convex, yaw independent)
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "flatcap/errors.hpp"

namespace flatcap {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Commanded acceleration in flat coordinates (m/s^2).
using FlatInput = Vec3;

struct ConstraintParams {
  double g = 9.81;
  double t_max = 19.62;
  double phi_max = 0.1745;
  double theta_max = 0.1745;

  double eps_max() const { return std::min(phi_max, theta_max); }

  /// Throws ConfigError unless g > 0, t_max > g and both tilt bounds lie in (0, pi/2).
  void validate() const {
    std::ostringstream err;
    if (!(g > 0.0)) err << "g must be positive; ";
    if (!(t_max > g)) err << "t_max must exceed g; ";
    if (!(phi_max > 0.0 && phi_max < std::numbers::pi / 2)) err << "phi_max must lie in (0, pi/2); ";
    if (!(theta_max > 0.0 && theta_max < std::numbers::pi / 2)) err << "theta_max must lie in (0, pi/2); ";
    if (!err.str().empty()) throw ConfigError("ConstraintParams: " + err.str());
  }
};

struct BodyInput {
  double thrust = 0.0;  // normalized, m/s^2
  double roll = 0.0;    // rad
  double pitch = 0.0;   // rad

  Vec3 as_vector() const { return {thrust, roll, pitch}; }
  static BodyInput from_vector(const Vec3& u) { return {u(0), u(1), u(2)}; }
};

/// xi = [sigma; sigma_dot]
struct FlatState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();

  Vec6 as_vector() const {
    Vec6 xi;
    xi << position, velocity;
    return xi;
  }
  static FlatState from_vector(const Vec6& xi) { return {xi.head<3>(), xi.tail<3>()}; }
  bool is_finite() const { return position.allFinite() && velocity.allFinite(); }
};

/// u = phi_psi(v). Requires v3 > -g.
inline BodyInput forward_map(const FlatInput& v, double psi, const ConstraintParams& p) {
  const double w = v(2) + p.g;
  if (!(w > 0.0)) {
    std::ostringstream os;
    os << "forward_map: v3 = " << v(2) << " must exceed -g = " << -p.g;
    throw DomainError(os.str());
  }
  const double s = std::sin(psi), c = std::cos(psi);
  const double thrust = std::sqrt(v(0) * v(0) + v(1) * v(1) + w * w);
  const double roll_arg = std::clamp((v(0) * s - v(1) * c) / thrust, -1.0, 1.0);
  return {thrust, std::asin(roll_arg), std::atan((v(0) * c + v(1) * s) / w)};
}

/// v = h_psi(u), the translational acceleration produced by u.
inline FlatInput inverse_map(const BodyInput& u, double psi, const ConstraintParams& p) {
  const double cphi = std::cos(u.roll), sphi = std::sin(u.roll);
  const double cth = std::cos(u.pitch), sth = std::sin(u.pitch);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);
  return {u.thrust * (cphi * sth * cpsi + sphi * spsi), u.thrust * (cphi * sth * spsi - sphi * cpsi),
          u.thrust * cphi * cth - p.g};
}

/// d h_psi / d u, columns ordered (T, phi, theta).
inline Eigen::Matrix3d input_jacobian(const BodyInput& u, double psi) {
  const double cphi = std::cos(u.roll), sphi = std::sin(u.roll);
  const double cth = std::cos(u.pitch), sth = std::sin(u.pitch);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);
  const double T = u.thrust;
  Eigen::Matrix3d J;
  J << cphi * sth * cpsi + sphi * spsi, T * (-sphi * sth * cpsi + cphi * spsi), T * cphi * cth * cpsi,
      cphi * sth * spsi - sphi * cpsi, T * (-sphi * sth * spsi - cphi * cpsi), T * cphi * cth * spsi,
      cphi * cth, -T * sphi * cth, -T * cphi * sth;
  return J;
}

/// Membership in U. tol widens every bound.
inline bool in_U(const BodyInput& u, const ConstraintParams& p, double tol = 0.0) {
  return u.thrust >= -tol && u.thrust <= p.t_max + tol && std::abs(u.roll) <= p.phi_max + tol &&
         std::abs(u.pitch) <= p.theta_max + tol;
}

/// Signed constraint values of Vtilde at v: (ball, cone, floor), each <= 0 inside.
/// The cone term uses (v3 + g)^2.
inline Vec3 vtilde_residuals(const FlatInput& v, const ConstraintParams& p) {
  const double w = v(2) + p.g;
  const double horiz = v(0) * v(0) + v(1) * v(1);
  const double te = std::tan(p.eps_max());
  return {horiz + w * w - p.t_max * p.t_max, horiz - w * w * te * te, -w};
}

inline bool in_Vtilde(const FlatInput& v, const ConstraintParams& p, double tol = 0.0) {
  return (vtilde_residuals(v, p).array() <= tol).all();
}

inline bool in_V(const FlatInput& v, double psi, const ConstraintParams& p, double tol = 0.0) {
  if (!(v(2) > -p.g)) return false;
  return in_U(forward_map(v, psi, p), p, tol);
}

/// h_psi(T_max, +-phi_max, +-theta_max) with the two sign choices given separately.
inline FlatInput corner_image(double roll_sign, double pitch_sign, double psi, const ConstraintParams& p) {
  return inverse_map({p.t_max, roll_sign * p.phi_max, pitch_sign * p.theta_max}, psi, p);
}

}  // namespace flatcap

#endif  // FLATCAP_FLATMAP_HPP
