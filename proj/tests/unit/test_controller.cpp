#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "feedopt/controller.hpp"
#include "feedopt/error.hpp"
#include "feedopt/objective.hpp"
#include "feedopt/plant.hpp"
#include "support.hpp"

using namespace feedopt;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Vector vec1(double v) { return Vector::Constant(1, v); }

// x' = -x + u (+ w), Phi = 1/2 (x^2 + u^2).
struct ScalarExample {
  LtiPlant plant{scalar(-1), scalar(1), scalar(1), scalar(1), scalar(0)};
  SteadyStateMap ssm = steady_state_map(plant);
  std::shared_ptr<const QuadraticObjective> objective =
      std::make_shared<QuadraticObjective>(1, Matrix::Identity(2, 2), Vector::Zero(2));
};

}  // namespace

TEST(Certificate, Formulas) {
  EXPECT_DOUBLE_EQ(epsilon_star(1.0, 0.5), 1.0);
  EXPECT_NEAR(delta_star(1.0, 0.5), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(epsilon_star(0.0, 1.0), Error);
  EXPECT_THROW(delta_star(1.0, -1.0), Error);
}

TEST(Certificate, ScalarExample) {
  const ScalarExample ex;
  const double ell = lipschitz_bound_analytic(*ex.objective, ex.ssm);
  const StabilityCertificate c = build_certificate(ex.plant, ex.ssm, ell);
  EXPECT_NEAR(c.p_matrix(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(ex.ssm.h(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(c.beta, 0.5, 1e-12);
  EXPECT_NEAR(c.ell, 1.0, 1e-12);
  EXPECT_NEAR(c.epsilon_star, 1.0, 1e-12);
  EXPECT_NEAR(c.delta_star, 2.0 / 3.0, 1e-12);
}

TEST(Certificate, NotHurwitzPropagates) {
  const LtiPlant unstable(scalar(0.5), scalar(1), scalar(1), scalar(1), scalar(0));
  SteadyStateMap ssm;
  ssm.h = scalar(-2);
  ssm.r = scalar(-2);
  ssm.h_tilde_t.resize(1, 2);
  ssm.h_tilde_t << -2, 1;
  try {
    build_certificate(unstable, ssm, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotHurwitz);
  }
}

TEST(Certificate, RecomputedBetaIsConsistent) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 7, p = 1 + trial % 3;
    Matrix b(n, p);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
    const LtiPlant plant(testkit::random_hurwitz(rng, n), b, Matrix::Ones(n, 1), Matrix::Identity(n, n),
                         Matrix::Zero(n, p));
    const SteadyStateMap ssm = steady_state_map(plant);
    const StabilityCertificate c = build_certificate(plant, ssm, 2.0);
    const Matrix p_fresh = testkit::kronecker_lyapunov(plant.a());
    const double beta = (p_fresh * ssm.h).jacobiSvd().singularValues()(0);
    const double eps = 1.0 / (2.0 * 2.0 * beta);
    EXPECT_LE(std::abs(eps - c.epsilon_star) / eps, 1e-9) << "trial " << trial;
  }
}

TEST(Controller, ScalarDerivative) {
  const ScalarExample ex;
  const GradientController ctrl(0.25, ex.ssm, ex.objective);
  EXPECT_NEAR(ctrl.reduced_gradient(vec1(1.0), vec1(1.0))(0), 2.0, 1e-12);
  EXPECT_NEAR(ctrl.control_derivative(vec1(1.0), vec1(1.0))(0), -0.5, 1e-12);
  EXPECT_NEAR(ctrl.control_derivative(vec1(0.0), vec1(0.0))(0), 0.0, 0.0);
}

TEST(Controller, RejectsBadConstruction) {
  const ScalarExample ex;
  EXPECT_THROW(GradientController(0.0, ex.ssm, ex.objective), Error);
  EXPECT_THROW(GradientController(0.1, ex.ssm, nullptr), Error);
  auto wrong = std::make_shared<QuadraticObjective>(2, Matrix::Identity(3, 3), Vector::Zero(3));
  EXPECT_THROW(GradientController(0.1, ex.ssm, wrong), Error);
}

TEST(Controller, EqualsReducedGradientOnManifold) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 3, p = 2;
    Matrix b(n, p), w(n + p, n + p);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
    w = (w * w.transpose()).eval();
    const LtiPlant plant(testkit::random_hurwitz(rng, n), b, Matrix::Ones(n, 1), Matrix::Identity(n, n),
                         Matrix::Zero(n, p));
    const SteadyStateMap ssm = steady_state_map(plant);
    auto obj = std::make_shared<QuadraticObjective>(n, w, testkit::random_vector(rng, n + p, -1, 1));
    const double eps = 0.3;
    const GradientController ctrl(eps, ssm, obj);
    const Vector u = testkit::random_vector(rng, p, -1, 1);
    const Vector wd = testkit::random_vector(rng, 1, -1, 1);
    const Vector fd =
        testkit::central_difference([&](const Vector& v) { return reduced_value(*obj, ssm, v, wd); }, u);
    const Vector du = ctrl.control_derivative(ssm.state(u, wd), u);
    EXPECT_LE((du + eps * fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
  }
}

TEST(Residual, ZeroOnKernelOfHTilde) {
  std::mt19937_64 rng(29);
  const Eigen::Index n = 4, p = 2;
  Matrix b(n, p);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
  const LtiPlant plant(testkit::random_hurwitz(rng, n), b, Matrix::Ones(n, 1), Matrix::Identity(n, n),
                       Matrix::Zero(n, p));
  const SteadyStateMap ssm = steady_state_map(plant);
  // Gradient field g(x,u) = [I; -H^T] a for a fixed a lies in ker H~^T.
  const Vector a = testkit::random_vector(rng, n, -1, 1);
  Vector stacked(n + p);
  stacked << a, -ssm.h.transpose() * a;
  const FunctionObjective obj(
      n, p, [](const Vector&, const Vector&) { return 0.0; },
      [stacked](const Vector&, const Vector&) { return stacked; });
  EXPECT_LE(optimality_residual(ssm, obj, Vector::Zero(n), Vector::Zero(p)), 1e-12);
}

TEST(Residual, ScalarExample) {
  const ScalarExample ex;
  EXPECT_DOUBLE_EQ(optimality_residual(ex.ssm, *ex.objective, vec1(0.0), vec1(0.0)), 0.0);
  EXPECT_GT(optimality_residual(ex.ssm, *ex.objective, vec1(0.3), vec1(-0.7)), 0.0);
}
