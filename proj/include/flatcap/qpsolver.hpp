#ifndef FLATCAP_QPSOLVER_HPP
#define FLATCAP_QPSOLVER_HPP

/**
 * Dense strictly convex QP solver
 *
 *     minimize    0.5 x'Hx + f'x
 *     subject to  A x <= b
 *
 * Dual active-set method of Goldfarb and Idnani: starts from the
 * unconstrained minimizer and adds violated constraints one at a time while
 * keeping dual feasibility. The factorization J = L^{-T} Q, R (with H = LL' and
 * N_active = L Q [R; 0]) is updated with Givens rotations on every add/drop,
 * so no feasible starting point and no phase-1 problem are needed.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace flatcap {

struct QProblem {
  Eigen::MatrixXd H;  // n x n, symmetric positive definite
  Eigen::VectorXd f;  // n
  Eigen::MatrixXd A;  // m x n (m may be 0)
  Eigen::VectorXd b;  // m

  Eigen::Index num_vars() const { return H.rows(); }
  Eigen::Index num_constraints() const { return A.rows(); }

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(H * x) + f.dot(x); }
};

enum class QpStatus { Optimal, Infeasible, MaxIterations, NotConvex };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIterations: return "max_iterations";
    case QpStatus::NotConvex: return "not_convex";
  }
  return "unknown";
}

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;  // multipliers for A x <= b, >= 0
  QpStatus status = QpStatus::MaxIterations;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double max_violation = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<Eigen::Index> active;

  bool ok() const { return status == QpStatus::Optimal; }
};

struct QpOptions {
  int max_iterations = 0;          // 0 -> 10 * (n + m) + 50
  double feasibility_tol = 1e-11;  // relative to 1 + |b_i| + |A_i| |x|
};

/// Stationarity, feasibility and complementarity residual of a primal-dual pair.
inline double kkt_residual(const QProblem& q, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) {
  Eigen::VectorXd grad = q.H * x + q.f;
  if (q.num_constraints() > 0) grad += q.A.transpose() * lambda;
  double res = grad.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < q.num_constraints(); ++i) {
    const double slack = q.A.row(i).dot(x) - q.b(i);
    res = std::max(res, std::max(slack, 0.0));
    res = std::max(res, std::max(-lambda(i), 0.0));
    res = std::max(res, std::abs(lambda(i) * slack));
  }
  return res;
}

class QpSolver {
 public:
  QpSolver() = default;
  explicit QpSolver(QpOptions opts) : opts_(opts) {}

  /// Solve q. warm_start, when given, is a previous solution: constraints tight
  /// there are tried first when several are violated. The optimum is unique, so
  /// the hint only changes the path, not the answer.
  QpResult solve(const QProblem& q, const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
    const Eigen::Index n = q.num_vars();
    const Eigen::Index m = q.num_constraints();
    QpResult res;
    res.lambda = Eigen::VectorXd::Zero(m);

    Eigen::LLT<Eigen::MatrixXd> llt(q.H);
    if (llt.info() != Eigen::Success) {
      res.status = QpStatus::NotConvex;
      res.x = Eigen::VectorXd::Zero(n);
      return res;
    }
    const Eigen::MatrixXd L = llt.matrixL();
    // J = L^{-T}
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
    R_.setZero(n, n);
    active_.clear();
    u_.clear();

    Eigen::VectorXd x = -llt.solve(q.f);

    std::vector<char> hinted(static_cast<std::size_t>(m), 0);
    if (warm_start && warm_start->size() == n) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const double s = q.b(i) - q.A.row(i).dot(*warm_start);
        if (std::abs(s) <= 1e-6 * (1.0 + std::abs(q.b(i)))) hinted[static_cast<std::size_t>(i)] = 1;
      }
    }

    const int max_iter = opts_.max_iterations > 0 ? opts_.max_iterations : static_cast<int>(10 * (n + m) + 50);
    std::vector<char> is_active(static_cast<std::size_t>(m), 0);
    Eigen::VectorXd row_norm(m);
    for (Eigen::Index i = 0; i < m; ++i) row_norm(i) = q.A.row(i).norm();

    int iter = 0;
    bool done = false;
    bool infeasible = false;
    while (!done && iter < max_iter) {
      // Step 1: pick a violated constraint.
      Eigen::Index p = -1;
      double worst = 0.0;
      bool worst_hinted = false;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (is_active[static_cast<std::size_t>(i)]) continue;
        const double s = q.b(i) - q.A.row(i).dot(x);
        const double tol = opts_.feasibility_tol * (1.0 + std::abs(q.b(i)) + row_norm(i) * x.norm());
        if (s >= -tol) continue;
        const double scaled = s / std::max(row_norm(i), 1e-300);
        const bool h = hinted[static_cast<std::size_t>(i)] != 0;
        if (p < 0 || (h && !worst_hinted) || (h == worst_hinted && scaled < worst)) {
          p = i;
          worst = scaled;
          worst_hinted = h;
        }
      }
      if (p < 0) {
        done = true;
        break;
      }

      // constraint p in ">=" form: np' x >= -b_p with np = -A_p'
      const Eigen::VectorXd np = -q.A.row(p).transpose();
      double u_plus = 0.0;

      // Step 2: move until p becomes active (full step) or an active
      // constraint has to be dropped (partial step).
      while (true) {
        ++iter;
        if (iter > max_iter) break;
        const Eigen::Index qa = static_cast<Eigen::Index>(active_.size());
        const Eigen::VectorXd d = J_.transpose() * np;
        Eigen::VectorXd z = J_.rightCols(n - qa) * d.tail(n - qa);
        Eigen::VectorXd r(qa);
        if (qa > 0) r = R_.topLeftCorner(qa, qa).triangularView<Eigen::Upper>().solve(d.head(qa));

        double t1 = std::numeric_limits<double>::infinity();
        Eigen::Index drop = -1;
        for (Eigen::Index j = 0; j < qa; ++j) {
          if (r(j) > 1e-14 * (1.0 + std::abs(u_[static_cast<std::size_t>(j)]))) {
            const double ratio = u_[static_cast<std::size_t>(j)] / r(j);
            if (ratio < t1) {
              t1 = ratio;
              drop = j;
            }
          }
        }
        double t2 = std::numeric_limits<double>::infinity();
        const double znp = z.dot(np);
        const double sp = np.dot(x) + q.b(p);  // slack in ">=" form, negative while violated
        if (z.norm() > 1e-13 * (1.0 + np.norm()) && znp > 0.0) t2 = -sp / znp;

        if (!std::isfinite(t1) && !std::isfinite(t2)) {
          infeasible = true;
          break;
        }
        if (!std::isfinite(t2)) {
          // dual step only
          for (Eigen::Index j = 0; j < qa; ++j) u_[static_cast<std::size_t>(j)] -= t1 * r(j);
          u_plus += t1;
          is_active[static_cast<std::size_t>(active_[static_cast<std::size_t>(drop)])] = 0;
          drop_constraint(drop);
          continue;
        }
        const double t = std::min(t1, t2);
        x += t * z;
        for (Eigen::Index j = 0; j < qa; ++j) u_[static_cast<std::size_t>(j)] -= t * r(j);
        u_plus += t;
        if (t2 <= t1) {
          add_constraint(np, n);
          active_.push_back(p);
          u_.push_back(u_plus);
          is_active[static_cast<std::size_t>(p)] = 1;
          break;
        }
        is_active[static_cast<std::size_t>(active_[static_cast<std::size_t>(drop)])] = 0;
        drop_constraint(drop);
      }
      if (infeasible) break;
    }

    res.x = x;
    res.iterations = iter;
    for (std::size_t j = 0; j < active_.size(); ++j) res.lambda(active_[j]) = std::max(u_[j], 0.0);
    res.active = active_;
    res.max_violation = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) res.max_violation = std::max(res.max_violation, q.A.row(i).dot(x) - q.b(i));
    res.kkt_residual = kkt_residual(q, x, res.lambda);
    if (infeasible)
      res.status = QpStatus::Infeasible;
    else if (done)
      res.status = QpStatus::Optimal;
    else
      res.status = QpStatus::MaxIterations;
    return res;
  }

 private:
  static void givens(double a, double b, double& c, double& s) {
    const double h = std::hypot(a, b);
    if (h == 0.0) {
      c = 1.0;
      s = 0.0;
    } else {
      c = a / h;
      s = b / h;
    }
  }

  void add_constraint(const Eigen::VectorXd& np, Eigen::Index n) {
    const Eigen::Index qa = static_cast<Eigen::Index>(active_.size());
    Eigen::VectorXd d = J_.transpose() * np;
    for (Eigen::Index j = n - 1; j > qa; --j) {
      double c, s;
      givens(d(j - 1), d(j), c, s);
      if (s == 0.0) continue;
      d(j - 1) = c * d(j - 1) + s * d(j);
      d(j) = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double a = J_(k, j - 1);
        const double b = J_(k, j);
        J_(k, j - 1) = c * a + s * b;
        J_(k, j) = -s * a + c * b;
      }
    }
    R_.col(qa).head(qa + 1) = d.head(qa + 1);
  }

  void drop_constraint(Eigen::Index l) {
    const Eigen::Index qa = static_cast<Eigen::Index>(active_.size());
    const Eigen::Index n = J_.rows();
    for (Eigen::Index j = l; j < qa - 1; ++j) R_.col(j) = R_.col(j + 1);
    R_.col(qa - 1).setZero();
    for (Eigen::Index j = l; j < qa - 1; ++j) {
      double c, s;
      givens(R_(j, j), R_(j + 1, j), c, s);
      if (s == 0.0) continue;
      for (Eigen::Index k = j; k < qa - 1; ++k) {
        const double a = R_(j, k);
        const double b = R_(j + 1, k);
        R_(j, k) = c * a + s * b;
        R_(j + 1, k) = -s * a + c * b;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double a = J_(k, j);
        const double b = J_(k, j + 1);
        J_(k, j) = c * a + s * b;
        J_(k, j + 1) = -s * a + c * b;
      }
    }
    active_.erase(active_.begin() + l);
    u_.erase(u_.begin() + l);
  }

  QpOptions opts_{};
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  std::vector<Eigen::Index> active_;
  std::vector<double> u_;
};

/// Convenience wrapper around a throwaway solver instance.
inline QpResult solve(const QProblem& q, const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
  QpSolver solver;
  return solver.solve(q, warm_start);
}

}  // namespace flatcap

#endif  // FLATCAP_QPSOLVER_HPP
