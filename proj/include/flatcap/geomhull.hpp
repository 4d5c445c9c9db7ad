#ifndef FLATCAP_GEOMHULL_HPP
#define FLATCAP_GEOMHULL_HPP

/**
 * Convex polytopes in R^3 kept in both representations:
 *   V-rep  extreme points only
 *   H-rep  one unit-normal half-space a.x <= b per facet (coplanar hull
 *          triangles merged into a single facet)
 *
 * convex_hull() runs an incremental hull over the points sorted by distance
 * from an interior point (ties broken lexicographically), then merges coplanar
 * triangles and drops points that are not extreme. Zonotope vertex sets are
 * full of coplanar and collinear points, so everything is decided with
 * explicit tolerances relative to the coordinate scale.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flatcap/errors.hpp"
#include "flatcap/flatmap.hpp"

namespace flatcap {

struct Halfspace {
  Vec3 normal;  // unit length
  double offset;

  double slack(const Vec3& x) const { return offset - normal.dot(x); }
};

struct HullOptions {
  /// Facets merge when unit normals differ by less than this (radians) and
  /// offsets by less than this times the coordinate scale.
  double merge_tol = 1e-7;
};

class Polytope {
 public:
  Polytope() = default;
  Polytope(std::vector<Vec3> vertices, std::vector<Halfspace> halfspaces)
      : vertices_(std::move(vertices)), halfspaces_(std::move(halfspaces)) {}

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Halfspace>& halfspaces() const { return halfspaces_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_halfspaces() const { return halfspaces_.size(); }
  bool empty() const { return vertices_.empty(); }

  /// Stacked H-rep: rows of A are normals, A x <= b.
  Eigen::MatrixXd A() const {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(halfspaces_.size()), 3);
    for (std::size_t i = 0; i < halfspaces_.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = halfspaces_[i].normal;
    return a;
  }
  Eigen::VectorXd b() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(halfspaces_.size()));
    for (std::size_t i = 0; i < halfspaces_.size(); ++i) v(static_cast<Eigen::Index>(i)) = halfspaces_[i].offset;
    return v;
  }

  Vec3 centroid_of_vertices() const {
    Vec3 c = Vec3::Zero();
    for (const auto& v : vertices_) c += v;
    return vertices_.empty() ? c : Vec3(c / static_cast<double>(vertices_.size()));
  }

  double scale() const {
    double s = 1.0;
    for (const auto& v : vertices_) s = std::max(s, v.cwiseAbs().maxCoeff());
    return s;
  }

  /// Indices of vertices lying on facet i, ordered counter-clockwise seen from outside.
  std::vector<std::size_t> facet_vertices(std::size_t i, double tol = 1e-7) const {
    const Halfspace& h = halfspaces_[i];
    const double t = tol * scale();
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < vertices_.size(); ++k)
      if (std::abs(h.slack(vertices_[k])) <= t) idx.push_back(k);
    if (idx.size() < 3) return idx;
    Vec3 c = Vec3::Zero();
    for (auto k : idx) c += vertices_[k];
    c /= static_cast<double>(idx.size());
    Vec3 e1 = (vertices_[idx[0]] - c);
    e1 -= h.normal * h.normal.dot(e1);
    e1.normalize();
    const Vec3 e2 = h.normal.cross(e1);
    std::vector<std::pair<double, std::size_t>> ang;
    for (auto k : idx) {
      const Vec3 d = vertices_[k] - c;
      ang.emplace_back(std::atan2(d.dot(e2), d.dot(e1)), k);
    }
    std::sort(ang.begin(), ang.end());
    std::vector<std::size_t> out;
    for (auto& a : ang) out.push_back(a.second);
    return out;
  }

  /// Axis-aligned box [lo, hi].
  static Polytope box(const Vec3& lo, const Vec3& hi) {
    std::vector<Vec3> v;
    for (int mask = 0; mask < 8; ++mask)
      v.emplace_back(mask & 1 ? hi.x() : lo.x(), mask & 2 ? hi.y() : lo.y(), mask & 4 ? hi.z() : lo.z());
    std::vector<Halfspace> h;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e(k) = 1.0;
      h.push_back({e, hi(k)});
      h.push_back({-e, -lo(k)});
    }
    return Polytope(std::move(v), std::move(h));
  }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Halfspace> halfspaces_;
};

namespace detail {

struct HullTri {
  int a, b, c;
  Vec3 n;
  double d;
  bool alive = true;
};

inline void orient(HullTri& t, const std::vector<Vec3>& P, const Vec3& interior) {
  Vec3 n = (P[t.b] - P[t.a]).cross(P[t.c] - P[t.a]);
  const double len = n.norm();
  n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  if (n.dot(interior - P[t.a]) > 0.0) {
    std::swap(t.b, t.c);
    n = -n;
  }
  t.n = n;
  t.d = n.dot(P[t.a]);
}

// Unit normal of the best-fit plane through pts (smallest principal axis).
inline Vec3 fit_normal(const std::vector<Vec3>& pts, const Vec3& hint) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) M += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
  Vec3 n = es.eigenvectors().col(0);
  if (n.dot(hint) < 0.0) n = -n;
  return n;
}

}  // namespace detail

/// Convex hull of a 3-D point set. Throws DegenerateError when the points do
/// not span a full-dimensional body.
inline Polytope convex_hull(const std::vector<Vec3>& input, const HullOptions& opts = {}) {
  if (input.size() < 4) throw DegenerateError("convex_hull: need at least 4 points");
  double scale = 1.0;
  for (const auto& p : input) {
    if (!p.allFinite()) throw DegenerateError("convex_hull: non-finite point");
    scale = std::max(scale, p.cwiseAbs().maxCoeff());
  }
  const double eps = 1e-10 * scale;  // visibility threshold

  // lexicographic order, then drop near-duplicates
  std::vector<Vec3> P(input);
  auto lex = [](const Vec3& a, const Vec3& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  };
  std::sort(P.begin(), P.end(), lex);
  {
    std::vector<Vec3> uniq;
    for (const auto& p : P) {
      bool dup = false;
      for (auto it = uniq.rbegin(); it != uniq.rend() && it->x() >= p.x() - 1e-12 * scale; ++it)
        if ((*it - p).cwiseAbs().maxCoeff() <= 1e-12 * scale) {
          dup = true;
          break;
        }
      if (!dup) uniq.push_back(p);
    }
    P.swap(uniq);
  }
  const int n = static_cast<int>(P.size());
  if (n < 4) throw DegenerateError("convex_hull: fewer than 4 distinct points");

  // initial simplex
  int i0 = 0, i1 = -1, i2 = -1, i3 = -1;
  double best = -1.0;
  for (int i = 0; i < n; ++i)
    if ((P[i] - P[i0]).norm() > best) best = (P[i] - P[i0]).norm(), i1 = i;
  if (best <= 1e-9 * scale) throw DegenerateError("convex_hull: all points coincide");
  const Vec3 dir = (P[i1] - P[i0]).normalized();
  best = -1.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = P[i] - P[i0];
    const double dist = (d - dir * dir.dot(d)).norm();
    if (dist > best) best = dist, i2 = i;
  }
  if (best <= 1e-9 * scale) throw DegenerateError("convex_hull: points are collinear");
  const Vec3 pn = (P[i1] - P[i0]).cross(P[i2] - P[i0]).normalized();
  best = -1.0;
  for (int i = 0; i < n; ++i) {
    const double dist = std::abs(pn.dot(P[i] - P[i0]));
    if (dist > best) best = dist, i3 = i;
  }
  if (best <= 1e-9 * scale) throw DegenerateError("convex_hull: points are coplanar");

  const Vec3 interior = 0.25 * (P[i0] + P[i1] + P[i2] + P[i3]);
  std::vector<detail::HullTri> tris;
  // directed edge (a, b) -> owning live triangle; every edge appears once per direction
  std::unordered_map<long long, int> edge_owner;
  auto key = [n](int a, int b) { return static_cast<long long>(a) * n + b; };
  auto link = [&](int t) {
    const auto& T = tris[static_cast<std::size_t>(t)];
    edge_owner[key(T.a, T.b)] = t;
    edge_owner[key(T.b, T.c)] = t;
    edge_owner[key(T.c, T.a)] = t;
  };
  auto unlink = [&](int t) {
    auto& T = tris[static_cast<std::size_t>(t)];
    edge_owner.erase(key(T.a, T.b));
    edge_owner.erase(key(T.b, T.c));
    edge_owner.erase(key(T.c, T.a));
    T.alive = false;
  };
  auto set_plane = [&](detail::HullTri& t) {
    const Vec3 cr = (P[t.b] - P[t.a]).cross(P[t.c] - P[t.a]);
    const double len = cr.norm();
    t.n = len > 0.0 ? Vec3(cr / len) : Vec3::Zero();
    t.d = t.n.dot(P[t.a]);
  };
  {
    const std::array<std::array<int, 3>, 4> faces{{{i0, i1, i2}, {i0, i1, i3}, {i0, i2, i3}, {i1, i2, i3}}};
    for (const auto& f : faces) {
      detail::HullTri t{f[0], f[1], f[2], Vec3::Zero(), 0.0, true};
      detail::orient(t, P, interior);
      tris.push_back(t);
      link(static_cast<int>(tris.size()) - 1);
    }
  }

  // far points first so near-coplanar interior points are rejected early
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (i != i0 && i != i1 && i != i2 && i != i3) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return (P[a] - interior).norm() > (P[b] - interior).norm(); });

  std::vector<int> visible, stack;
  std::vector<char> vis;
  for (int pi : order) {
    const Vec3& p = P[pi];
    int seed = -1;
    double far = eps;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (!tris[t].alive) continue;
      const double dist = tris[t].n.dot(p) - tris[t].d;
      if (dist > far) far = dist, seed = t;
    }
    if (seed < 0) continue;

    // visible region grown from the most-visible face, so it is connected and
    // its boundary is a single closed horizon
    vis.assign(tris.size(), 0);
    visible.clear();
    stack.assign(1, seed);
    vis[static_cast<std::size_t>(seed)] = 1;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      visible.push_back(t);
      const auto& T = tris[static_cast<std::size_t>(t)];
      const std::array<std::pair<int, int>, 3> edges{{{T.a, T.b}, {T.b, T.c}, {T.c, T.a}}};
      for (const auto& e : edges) {
        auto it = edge_owner.find(key(e.second, e.first));
        if (it == edge_owner.end()) continue;
        const int nb = it->second;
        if (vis[static_cast<std::size_t>(nb)]) continue;
        if (tris[nb].n.dot(p) - tris[nb].d > eps) {
          vis[static_cast<std::size_t>(nb)] = 1;
          stack.push_back(nb);
        }
      }
    }
    std::vector<std::pair<int, int>> horizon;
    for (int t : visible) {
      const auto& T = tris[static_cast<std::size_t>(t)];
      const std::array<std::pair<int, int>, 3> edges{{{T.a, T.b}, {T.b, T.c}, {T.c, T.a}}};
      for (const auto& e : edges) {
        auto it = edge_owner.find(key(e.second, e.first));
        if (it == edge_owner.end() || !vis[static_cast<std::size_t>(it->second)]) horizon.push_back(e);
      }
    }
    for (int t : visible) unlink(t);
    // the horizon keeps the outward orientation of the removed faces
    for (const auto& e : horizon) {
      detail::HullTri t{e.first, e.second, pi, Vec3::Zero(), 0.0, true};
      set_plane(t);
      tris.push_back(t);
      link(static_cast<int>(tris.size()) - 1);
    }
  }

  std::vector<detail::HullTri> live;
  for (const auto& t : tris)
    if (t.alive) live.push_back(t);

  // group triangles by supporting plane
  const int nt = static_cast<int>(live.size());
  std::vector<int> group(nt, -1);
  std::vector<std::vector<int>> groups;
  for (int t = 0; t < nt; ++t) {
    if (group[t] >= 0) continue;
    group[t] = static_cast<int>(groups.size());
    groups.push_back({t});
    for (int s = t + 1; s < nt; ++s) {
      if (group[s] >= 0) continue;
      const double ang = std::atan2(live[t].n.cross(live[s].n).norm(), live[t].n.dot(live[s].n));
      if (std::abs(ang) <= opts.merge_tol && std::abs(live[t].d - live[s].d) <= opts.merge_tol * scale) {
        group[s] = group[t];
        groups.back().push_back(s);
      }
    }
  }

  std::vector<Halfspace> hs;
  std::vector<std::vector<int>> facet_points;
  for (const auto& g : groups) {
    std::vector<int> ids;
    Vec3 hint = Vec3::Zero();
    for (int t : g) {
      ids.insert(ids.end(), {live[t].a, live[t].b, live[t].c});
      const Vec3 cr = (P[live[t].b] - P[live[t].a]).cross(P[live[t].c] - P[live[t].a]);
      hint += cr;
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<Vec3> pts;
    for (int id : ids) pts.push_back(P[id]);
    Vec3 nrm = ids.size() == 3 ? Vec3(hint.normalized()) : detail::fit_normal(pts, hint);
    double off = -std::numeric_limits<double>::infinity();
    for (const auto& q : pts) off = std::max(off, nrm.dot(q));
    hs.push_back({nrm, off});
    facet_points.push_back(ids);
  }

  // extreme points: tight on facets whose normals span R^3
  std::vector<std::vector<int>> touching(static_cast<std::size_t>(n));
  for (std::size_t f = 0; f < hs.size(); ++f)
    for (int id : facet_points[f]) touching[static_cast<std::size_t>(id)].push_back(static_cast<int>(f));
  std::vector<int> vert_ids;
  for (int id = 0; id < n; ++id) {
    const auto& fs = touching[static_cast<std::size_t>(id)];
    if (fs.size() < 3) continue;
    Eigen::MatrixXd N(static_cast<Eigen::Index>(fs.size()), 3);
    for (std::size_t k = 0; k < fs.size(); ++k) N.row(static_cast<Eigen::Index>(k)) = hs[fs[k]].normal;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(N);
    if (svd.singularValues()(2) > 1e-6) vert_ids.push_back(id);
  }
  std::vector<Vec3> verts;
  for (int id : vert_ids) verts.push_back(P[id]);

  // refit facets through their extreme points only
  for (std::size_t f = 0; f < hs.size(); ++f) {
    std::vector<Vec3> pts;
    for (int id : facet_points[f])
      if (std::binary_search(vert_ids.begin(), vert_ids.end(), id)) pts.push_back(P[id]);
    if (pts.size() < 3) continue;
    const Vec3 nrm = detail::fit_normal(pts, hs[f].normal);
    double off = -std::numeric_limits<double>::infinity();
    for (const auto& q : pts) off = std::max(off, nrm.dot(q));
    hs[f] = {nrm, off};
  }
  return Polytope(std::move(verts), std::move(hs));
}

/// Vertices and facets rebuilt from the vertex list alone.
inline Polytope rebuild(const Polytope& p, const HullOptions& opts = {}) { return convex_hull(p.vertices(), opts); }

/// Exact volume: fan-triangulate every facet and sum signed tetrahedra against
/// the vertex centroid.
inline double volume(const Polytope& p) {
  if (p.num_vertices() < 4) return 0.0;
  const Vec3 c = p.centroid_of_vertices();
  double vol = 0.0;
  for (std::size_t f = 0; f < p.num_halfspaces(); ++f) {
    const auto idx = p.facet_vertices(f);
    if (idx.size() < 3) continue;
    const Vec3& a = p.vertices()[idx[0]];
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
      const Vec3& b = p.vertices()[idx[k]];
      const Vec3& d = p.vertices()[idx[k + 1]];
      vol += std::abs((a - c).dot((b - c).cross(d - c))) / 6.0;
    }
  }
  return vol;
}

/// a.x <= b + tol for every facet.
inline bool contains(const Polytope& p, const Vec3& x, double tol = 1e-9) {
  for (const auto& h : p.halfspaces())
    if (h.normal.dot(x) > h.offset + tol) return false;
  return !p.halfspaces().empty();
}

/// Polytope from an H-rep alone, by enumerating plane triples. Intended for
/// reloading exported sets; cost is cubic in the facet count.
inline Polytope from_halfspaces(const std::vector<Halfspace>& hs, const HullOptions& opts = {}) {
  std::vector<Vec3> pts;
  const std::size_t m = hs.size();
  double scale = 1.0;
  for (const auto& h : hs) scale = std::max(scale, std::abs(h.offset));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const Vec3 nij = hs[i].normal.cross(hs[j].normal);
      if (nij.norm() < 1e-9) continue;
      for (std::size_t k = j + 1; k < m; ++k) {
        Eigen::Matrix3d M;
        M.row(0) = hs[i].normal;
        M.row(1) = hs[j].normal;
        M.row(2) = hs[k].normal;
        const double det = nij.dot(hs[k].normal);
        if (std::abs(det) < 1e-9) continue;
        const Vec3 x = M.partialPivLu().solve(Vec3(hs[i].offset, hs[j].offset, hs[k].offset));
        bool ok = true;
        for (const auto& h : hs)
          if (h.normal.dot(x) > h.offset + 1e-9 * scale) {
            ok = false;
            break;
          }
        if (ok) pts.push_back(x);
      }
    }
  return convex_hull(pts, opts);
}

}  // namespace flatcap

#endif  // FLATCAP_GEOMHULL_HPP
