#ifndef FLATCAP_ZONOTOPE_HPP
#define FLATCAP_ZONOTOPE_HPP

/**
 * Scaled zonotopes in R^3:
 *
 *   Z(G diag(delta), c) = { c + sum_i beta_i delta_i g_i : |beta_i| <= 1 }
 *
 * The generator basis G is fixed and only the per-generator scaling delta and
 * the center c vary, which is the family the inner approximation optimizes over.
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "flatcap/errors.hpp"
#include "flatcap/flatmap.hpp"

namespace flatcap {

using Generators = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Largest generator count accepted by vertex_candidates (2^20 points).
inline constexpr int kMaxEnumeratedGenerators = 20;

/// The generator basis used for the flat-input approximation.
inline Generators default_generators() {
  Generators G(3, 5);
  G << 1, 0, 0, 0, 0,
       0, 1, 0, 1, -1,
       0, 0, 1, 2, 2;
  return G;
}

struct Zonotope {
  Generators generators;
  Vec3 center = Vec3::Zero();
  Eigen::VectorXd scaling;

  Zonotope() = default;
  Zonotope(Generators G, Vec3 c, Eigen::VectorXd delta)
      : generators(std::move(G)), center(std::move(c)), scaling(std::move(delta)) {
    validate();
  }
  /// Unscaled zonotope (delta = 1).
  Zonotope(Generators G, Vec3 c) : Zonotope(G, c, Eigen::VectorXd::Ones(G.cols())) {}

  int num_generators() const { return static_cast<int>(generators.cols()); }

  /// Columns delta_i g_i.
  Generators scaled_generators() const { return generators * scaling.asDiagonal(); }

  /// Rank of the scaled generator matrix; < 3 means zero volume.
  int rank(double tol = 1e-12) const {
    const Generators S = scaled_generators();
    if (S.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    const auto& sv = svd.singularValues();
    const double ref = std::max(sv(0), 1e-300);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol * ref) ++r;
    return r;
  }
  bool is_degenerate() const { return rank() < 3; }

  void validate() const {
    std::ostringstream err;
    if (generators.cols() < 3) err << "need at least 3 generators; ";
    if (scaling.size() != generators.cols()) err << "scaling length must equal generator count; ";
    if (!generators.allFinite() || !center.allFinite() || !scaling.allFinite()) err << "non-finite entries; ";
    if (scaling.size() > 0 && scaling.minCoeff() < 0.0) err << "scaling must be non-negative; ";
    if (!err.str().empty()) throw ConfigError("Zonotope: " + err.str());
  }
};

/// All 2^n_g points c + sum alpha_i delta_i g_i with alpha in {-1,+1}^n_g. Bit i of the
/// point's index set means alpha_i = +1.
inline std::vector<Vec3> vertex_candidates(const Zonotope& z) {
  const int ng = z.num_generators();
  if (ng > kMaxEnumeratedGenerators) {
    std::ostringstream os;
    os << "vertex_candidates: " << ng << " generators exceeds the limit of " << kMaxEnumeratedGenerators;
    throw SizeError(os.str());
  }
  const Generators S = z.scaled_generators();
  const std::uint64_t count = std::uint64_t{1} << ng;
  std::vector<Vec3> pts;
  pts.reserve(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    Vec3 p = z.center;
    for (int i = 0; i < ng; ++i) p += ((mask >> i) & 1u ? 1.0 : -1.0) * S.col(i);
    pts.push_back(p);
  }
  return pts;
}

/// Sum over 3-subsets of |det(G_{k1 k2 k3})| delta_k1 delta_k2 delta_k3.
/// The Euclidean volume of the zonotope is 8 times this value.
inline double volume_objective(const Generators& G, const Eigen::VectorXd& delta) {
  const Eigen::Index ng = G.cols();
  double c = 0.0;
  for (Eigen::Index i = 0; i < ng; ++i)
    for (Eigen::Index j = i + 1; j < ng; ++j) {
      const Vec3 gij = G.col(i).cross(G.col(j));
      const double dij = delta(i) * delta(j);
      for (Eigen::Index k = j + 1; k < ng; ++k) c += std::abs(gij.dot(G.col(k))) * dij * delta(k);
    }
  return c;
}

inline double volume_objective(const Zonotope& z) { return volume_objective(z.generators, z.scaling); }

inline double euclidean_volume(const Zonotope& z) { return 8.0 * volume_objective(z); }

/// Support function sum_i |n . delta_i g_i| about the center.
inline double support(const Zonotope& z, const Vec3& n) {
  return (n.transpose() * z.scaled_generators()).cwiseAbs().sum();
}

/// Membership x in Z, i.e. exists |beta| <= 1 with x = c + sum beta_i delta_i g_i.
/// Tested against every facet normal of Z (pairwise generator cross products),
/// or the in-plane / in-line normals when the scaled generators are rank deficient.
inline bool contains_point(const Zonotope& z, const Vec3& x, double tol = 1e-9) {
  const Generators S = z.scaled_generators();
  const Vec3 d = x - z.center;
  const double scale = 1.0 + S.cwiseAbs().sum() + d.norm();
  std::vector<Vec3> normals;
  const int r = z.rank();
  if (r == 3) {
    for (Eigen::Index i = 0; i < S.cols(); ++i)
      for (Eigen::Index j = i + 1; j < S.cols(); ++j) {
        const Vec3 n = S.col(i).cross(S.col(j));
        if (n.norm() > 1e-12 * S.col(i).norm() * S.col(j).norm() && n.norm() > 0.0) normals.push_back(n.normalized());
      }
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeFullU);
    const Eigen::Matrix3d U = svd.matrixU();
    // directions orthogonal to the span: the zonotope has zero width there
    for (int k = r; k < 3; ++k) normals.push_back(U.col(k));
    if (r == 2) {
      const Vec3 n0 = U.col(2);
      for (Eigen::Index i = 0; i < S.cols(); ++i)
        if (S.col(i).norm() > 0.0) normals.push_back(S.col(i).cross(n0).normalized());
    } else if (r == 1) {
      normals.push_back(U.col(0));
    }
  }
  for (const auto& n : normals)
    if (std::abs(n.dot(d)) > support(z, n) + tol * scale) return false;
  return true;
}

}  // namespace flatcap

#endif  // FLATCAP_ZONOTOPE_HPP
