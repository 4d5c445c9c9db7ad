#include "flatcap/qpsolver.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using flatcap::QProblem;
using flatcap::QpSolver;
using flatcap::QpStatus;

namespace {

QProblem make(Eigen::MatrixXd H, Eigen::VectorXd f, Eigen::MatrixXd A, Eigen::VectorXd b) {
  return QProblem{std::move(H), std::move(f), std::move(A), std::move(b)};
}

QProblem random_problem(std::mt19937_64& rng, int n, int m, bool feasible = true) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = N(rng);
  Eigen::MatrixXd H = M * M.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd f(n), xf(n);
  for (int i = 0; i < n; ++i) {
    f(i) = 3.0 * N(rng);
    xf(i) = N(rng);
  }
  Eigen::MatrixXd A(m, n);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = N(rng);
    b(i) = feasible ? A.row(i).dot(xf) + U(rng) : N(rng);
  }
  return make(H, f, A, b);
}

}  // namespace

TEST(QpSolver, ActiveBoundConstraint) {
  // min (x-1)^2  s.t. x <= 0
  auto q = make(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, -2.0),
                Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1));
  auto r = flatcap::solve(q);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_NEAR(r.x(0), 0.0, 1e-12);
  EXPECT_NEAR(r.lambda(0), 2.0, 1e-12);
}

TEST(QpSolver, Unconstrained) {
  auto q = make(2.0 * Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Eigen::MatrixXd(0, 3),
                Eigen::VectorXd(0));
  auto r = flatcap::solve(q);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_LT(r.x.norm(), 1e-14);
}

TEST(QpSolver, HalfSpaceProjection) {
  // min |x - (2,2)|^2  s.t. x1 + x2 <= 2  ->  (1,1)
  Eigen::MatrixXd A(1, 2);
  A << 1, 1;
  auto q = make(2.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-4, -4), A, Eigen::VectorXd::Constant(1, 2.0));
  auto r = flatcap::solve(q);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-12);
  EXPECT_NEAR(r.x(1), 1.0, 1e-12);
}

TEST(QpSolver, DetectsInfeasibility) {
  // x <= -1 and -x <= -1 (x >= 1)
  Eigen::MatrixXd A(2, 1);
  A << 1, -1;
  auto q = make(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), A, Eigen::Vector2d(-1, -1));
  EXPECT_EQ(flatcap::solve(q).status, QpStatus::Infeasible);
}

TEST(QpSolver, RejectsIndefiniteHessian) {
  Eigen::MatrixXd H(2, 2);
  H << 1, 0, 0, -1;
  auto q = make(H, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
  EXPECT_EQ(flatcap::solve(q).status, QpStatus::NotConvex);
}

TEST(QpSolver, DuplicateAndRedundantConstraints) {
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, 1, 0, 2, 0, 0, 1;
  Eigen::VectorXd b(4);
  b << 1, 1, 2, 5;
  auto q = make(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-3, -1), A, b);
  auto r = flatcap::solve(q);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-12);
  EXPECT_NEAR(r.x(1), 1.0, 1e-12);
  EXPECT_LE(r.kkt_residual, 1e-9);
}

TEST(QpSolver, MatchesEnumerationOracle) {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> nd(1, 4), md(0, 6);
  int compared = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = nd(rng), m = md(rng);
    auto q = random_problem(rng, n, m);
    auto expect = oracle::enumerate_qp(q.H, q.f, q.A, q.b);
    ASSERT_TRUE(expect.has_value());
    auto r = flatcap::solve(q);
    ASSERT_EQ(r.status, QpStatus::Optimal) << "trial " << trial;
    EXPECT_LE((r.x - *expect).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    EXPECT_LE(r.max_violation, 1e-8);
    EXPECT_LE(r.kkt_residual, 1e-6);
    ++compared;
  }
  EXPECT_EQ(compared, 500);
}

TEST(QpSolver, InfeasibleRandomAgreesWithOracle) {
  std::mt19937_64 rng(7);
  int infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto q = random_problem(rng, 2, 6, /*feasible=*/false);
    auto expect = oracle::enumerate_qp(q.H, q.f, q.A, q.b);
    auto r = flatcap::solve(q);
    if (!expect) {
      EXPECT_EQ(r.status, QpStatus::Infeasible) << "trial " << trial;
      ++infeasible;
    } else {
      ASSERT_EQ(r.status, QpStatus::Optimal) << "trial " << trial;
      EXPECT_LE((r.x - *expect).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
  EXPECT_GT(infeasible, 0);
}

TEST(QpSolver, WarmStartNeverDegrades) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    auto q = random_problem(rng, 4, 12);
    QpSolver solver;
    auto cold = solver.solve(q);
    ASSERT_TRUE(cold.ok());
    // perturb the linear term and resolve with and without the old solution
    q.f *= 1.05;
    auto cold2 = solver.solve(q);
    auto warm = solver.solve(q, cold.x);
    ASSERT_TRUE(warm.ok());
    EXPECT_GE(q.objective(warm.x), q.objective(cold2.x) - 1e-9);
    EXPECT_LE(q.objective(warm.x), q.objective(cold2.x) + 1e-9);
  }
}

TEST(QpSolver, ArgminInvariantUnderObjectiveScaling) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto q = random_problem(rng, 3, 6);
    auto r1 = flatcap::solve(q);
    q.H *= 37.5;
    q.f *= 37.5;
    auto r2 = flatcap::solve(q);
    ASSERT_TRUE(r1.ok() && r2.ok());
    EXPECT_LE((r1.x - r2.x).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(QpSolver, LargerProblemKkt) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    auto q = random_problem(rng, 60, 400);
    auto r = flatcap::solve(q);
    ASSERT_TRUE(r.ok());
    EXPECT_LE(r.max_violation, 1e-8);
    EXPECT_LE(r.kkt_residual, 1e-6);
  }
}
