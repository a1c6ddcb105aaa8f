#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "feedopt/case_io.hpp"
#include "feedopt/error.hpp"
#include "feedopt/objective.hpp"
#include "feedopt/plant.hpp"
#include "feedopt/powergrid.hpp"
#include "support.hpp"

using namespace feedopt;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector out(v.size());
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

SteadyStateMap scalar_map(double h) {
  SteadyStateMap s;
  s.h = Matrix::Constant(1, 1, h);
  s.r = Matrix::Zero(1, 1);
  s.h_tilde_t.resize(1, 2);
  s.h_tilde_t << h, 1.0;
  return s;
}

PenaltyTerms open_terms(Eigen::Index p, Eigen::Index m) {
  PenaltyTerms t;
  t.cost_quadratic = Vector::Zero(p);
  t.cost_linear = Vector::Zero(p);
  t.u_lo = Vector::Constant(p, -kInf);
  t.u_hi = Vector::Constant(p, kInf);
  t.y_lo = Vector::Constant(m, -kInf);
  t.y_hi = Vector::Constant(m, kInf);
  t.xi_u = Vector::Ones(p);
  t.xi_y = Vector::Ones(m);
  return t;
}

// Random penalty objective with finite bounds on every channel and generic D.
PenaltyObjective random_penalty(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p, Eigen::Index m,
                                bool feedthrough) {
  std::normal_distribution<double> normal;
  Matrix c(m, n), d = Matrix::Zero(m, p);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = normal(rng);
  if (feedthrough) {
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = normal(rng);
  }
  PenaltyTerms t;
  t.cost_quadratic = testkit::random_vector(rng, p, 0.5, 5.0);
  t.cost_linear = testkit::random_vector(rng, p, -2.0, 2.0);
  t.u_lo = testkit::random_vector(rng, p, -1.0, -0.2);
  t.u_hi = testkit::random_vector(rng, p, 0.2, 1.0);
  t.y_lo = testkit::random_vector(rng, m, -1.0, -0.2);
  t.y_hi = testkit::random_vector(rng, m, 0.2, 1.0);
  t.xi_u = testkit::random_vector(rng, p, 1.0, 100.0);
  t.xi_y = testkit::random_vector(rng, m, 1.0, 100.0);
  return PenaltyObjective(c, d, t);
}

// Independent evaluation of Phi from penalty_value only.
double reference_value(const PenaltyObjective& obj, const Vector& x, const Vector& u) {
  const PenaltyTerms& t = obj.terms();
  const Vector y = obj.c() * x + obj.d() * u;
  double f = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    f += 0.5 * t.cost_quadratic(i) * u(i) * u(i) + t.cost_linear(i) * u(i);
  }
  return f + penalty_value(u - t.u_hi, t.xi_u) + penalty_value(t.u_lo - u, t.xi_u) +
         penalty_value(y - t.y_hi, t.xi_y) + penalty_value(t.y_lo - y, t.xi_y);
}

}  // namespace

TEST(Penalty, Examples) {
  EXPECT_DOUBLE_EQ(penalty_value(vec({-1, -3}), vec({1, 1})), 0.0);
  EXPECT_DOUBLE_EQ(penalty_value(vec({2}), vec({1})), 2.0);
  EXPECT_DOUBLE_EQ(penalty_value(vec({1, -1, 0.5}), vec({1e3, 1e3, 1e7})), 1250500.0);
  EXPECT_THROW(penalty_value(vec({1, 2}), vec({1})), Error);
  EXPECT_THROW(penalty_gradient(vec({1, 2}), vec({1})), Error);
}

TEST(Penalty, GradientMatchesDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector xi = testkit::random_vector(rng, 5, 0.1, 10.0);
    Vector w = testkit::random_vector(rng, 5, -2.0, 2.0);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (std::abs(w(i)) < 1e-3) w(i) = 0.5;  // stay off the kink
    }
    const Vector fd = testkit::central_difference([&](const Vector& z) { return penalty_value(z, xi); }, w);
    EXPECT_LE((fd - penalty_gradient(w, xi)).norm(), 1e-6 * (1.0 + fd.norm()));
  }
}

TEST(PenaltyObjective, InactiveConstraintsGiveCostGradientOnly) {
  PenaltyTerms t = open_terms(2, 1);
  t.cost_quadratic = Vector::Ones(2);
  t.u_lo = Vector::Constant(2, -10.0);
  t.u_hi = Vector::Constant(2, 10.0);
  t.y_lo = Vector::Constant(1, -10.0);
  t.y_hi = Vector::Constant(1, 10.0);
  const PenaltyObjective obj(Matrix::Ones(1, 3), Matrix::Zero(1, 2), t);
  const Vector x = vec({0.1, 0.2, 0.3});
  const Vector u = vec({1.5, -2.0});
  const Vector g = obj.gradient(x, u);
  EXPECT_EQ(g.size(), 5);
  EXPECT_DOUBLE_EQ(g.head(3).norm(), 0.0);
  EXPECT_DOUBLE_EQ((g.tail(2) - u).norm(), 0.0);
}

TEST(PenaltyObjective, ScalarUpperBound) {
  PenaltyTerms t = open_terms(1, 1);
  t.y_hi = vec({1.0});
  const PenaltyObjective obj(Matrix::Ones(1, 1), Matrix::Zero(1, 1), t);
  EXPECT_DOUBLE_EQ(obj.gradient(vec({2.0}), vec({0.0}))(0), 1.0);
  EXPECT_DOUBLE_EQ(obj.value(vec({2.0}), vec({0.0})), 0.5);
}

TEST(PenaltyObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  for (bool feedthrough : {false, true}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Index n = 2 + trial % 6, p = 1 + trial % 4, m = 1 + trial % 5;
      const PenaltyObjective obj = random_penalty(rng, n, p, m, feedthrough);
      const Vector x = testkit::random_vector(rng, n, -1.5, 1.5);
      const Vector u = testkit::random_vector(rng, p, -1.5, 1.5);
      Vector z(n + p);
      z << x, u;
      const Vector fd = testkit::central_difference(
          [&](const Vector& s) { return reference_value(obj, s.head(n), s.tail(p)); }, z, 1e-7);
      const Vector g = obj.gradient(x, u);
      EXPECT_LE((fd - g).norm(), 1e-5 * std::max(1.0, g.norm())) << "trial " << trial;
      EXPECT_NEAR(obj.value(x, u), reference_value(obj, x, u), 1e-12 * (1.0 + std::abs(obj.value(x, u))));
    }
  }
}

TEST(PenaltyObjective, PenaltyGradientVanishesInsideBox) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    PenaltyObjective obj = random_penalty(rng, 4, 2, 3, false);
    PenaltyTerms t = obj.terms();
    t.cost_quadratic.setZero();
    t.cost_linear.setZero();
    t.y_lo = Vector::Constant(3, -1e3);
    t.y_hi = Vector::Constant(3, 1e3);
    const PenaltyObjective inner(obj.c(), obj.d(), t);
    const Vector u = 0.5 * (t.u_lo + t.u_hi);
    const Vector x = testkit::random_vector(rng, 4, -1.0, 1.0);
    EXPECT_DOUBLE_EQ(inner.gradient(x, u).norm(), 0.0);
  }
}

TEST(PenaltyObjective, RejectsBadTerms) {
  PenaltyTerms t = open_terms(1, 1);
  t.xi_u = vec({0.0});
  EXPECT_THROW(PenaltyObjective(Matrix::Ones(1, 1), Matrix::Zero(1, 1), t), Error);
  t = open_terms(1, 1);
  t.u_lo = vec({2.0});
  t.u_hi = vec({1.0});
  EXPECT_THROW(PenaltyObjective(Matrix::Ones(1, 1), Matrix::Zero(1, 1), t), Error);
  t = open_terms(1, 2);
  EXPECT_THROW(PenaltyObjective(Matrix::Ones(1, 1), Matrix::Zero(1, 1), t), Error);
}

TEST(ReducedCost, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 3, p = 2, q = 2, m = 2;
    Matrix b(n, p), qm(n, q);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < qm.size(); ++i) qm.data()[i] = normal(rng);
    const PenaltyObjective obj = random_penalty(rng, n, p, m, trial % 2 == 1);
    const LtiPlant plant(testkit::random_hurwitz(rng, n), b, qm, obj.c(), obj.d());
    const SteadyStateMap ssm = steady_state_map(plant);
    const Vector u = testkit::random_vector(rng, p, -1.0, 1.0);
    const Vector w = testkit::random_vector(rng, q, -1.0, 1.0);
    const Vector fd = testkit::central_difference(
        [&](const Vector& v) { return reduced_value(obj, ssm, v, w); }, u, 1e-7);
    const Vector g = reduced_gradient(obj, ssm, u, w);
    EXPECT_LE((fd - g).norm(), 1e-5 * std::max(1.0, g.norm())) << "trial " << trial;
  }
}

TEST(Lipschitz, ScalarIdentity) {
  PenaltyTerms t = open_terms(1, 1);
  t.y_lo = vec({0.0});
  t.y_hi = vec({0.0});
  const PenaltyObjective obj(Matrix::Ones(1, 1), Matrix::Zero(1, 1), t);
  EXPECT_NEAR(lipschitz_bound_analytic(obj, scalar_map(1.0)), 1.0, 1e-14);

  t.xi_y = vec({4.0});
  const PenaltyObjective scaled(Matrix::Ones(1, 1), Matrix::Zero(1, 1), t);
  EXPECT_NEAR(lipschitz_bound_analytic(scaled, scalar_map(1.0)), 4.0, 1e-14);
}

TEST(Lipschitz, FeedthroughUnsupported) {
  const PenaltyTerms t = open_terms(1, 1);
  const PenaltyObjective obj(Matrix::Ones(1, 1), Matrix::Ones(1, 1), t);
  try {
    lipschitz_bound_analytic(obj, scalar_map(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedObjective);
  }
}

TEST(Lipschitz, QuadraticClosedForm) {
  // Phi = 1/2 x^2 + 1/2 u^2 with H = 1: every probe ratio is exactly 1.
  const QuadraticObjective obj(1, Matrix::Identity(2, 2), Vector::Zero(2));
  const SteadyStateMap ssm = scalar_map(1.0);
  EXPECT_NEAR(lipschitz_bound_analytic(obj, ssm), 1.0, 1e-15);
  SampleRegion region{vec({-3}), vec({3}), vec({-3}), vec({3})};
  EXPECT_NEAR(lipschitz_bound_sampled(obj, ssm, 200, region, 1), 1.0, 1e-12);
}

TEST(Lipschitz, ConstantGradientSamplesZero) {
  const QuadraticObjective obj(2, Matrix::Zero(3, 3), vec({1, 2, 3}));
  SteadyStateMap ssm;
  ssm.h = Matrix::Ones(2, 1);
  ssm.r = Matrix::Zero(2, 1);
  ssm.h_tilde_t.resize(1, 3);
  ssm.h_tilde_t << 1, 1, 1;
  SampleRegion region{Vector::Constant(2, -1), Vector::Constant(2, 1), vec({-1}), vec({1})};
  EXPECT_DOUBLE_EQ(lipschitz_bound_sampled(obj, ssm, 100, region, 3), 0.0);
}

TEST(Lipschitz, SampledNeverExceedsAnalytic) {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const grid::GridCase g = testkit::random_grid(rng, 2 + trial % 5, trial % 3);
    const grid::GridPlant plant = grid::assemble_plant(g);
    const SteadyStateMap ssm = steady_state_map(plant.reduced);
    const PenaltyObjective obj = grid::make_objective(g, plant);
    const double analytic = lipschitz_bound_analytic(obj, ssm);
    const Eigen::Index n = plant.reduced.states(), p = plant.reduced.inputs();
    SampleRegion region{Vector::Constant(n, -1.0), Vector::Constant(n, 1.0), Vector::Zero(p),
                        Vector::Constant(p, 2.0)};
    const double sampled = lipschitz_bound_sampled(obj, ssm, 500, region, trial);
    EXPECT_LE(sampled, analytic + 1e-9) << "trial " << trial;
    EXPECT_GT(sampled, 0.0);
  }
}

TEST(Lipschitz, LinearGradientSampledBelowInducedNorm) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 3, p = 2;
    Matrix w(n + p, n + p);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
    w = (w + w.transpose()).eval();
    const QuadraticObjective obj(n, w, Vector::Zero(n + p), 0.0, false);
    const LtiPlant plant(testkit::random_hurwitz(rng, n), Matrix::Ones(n, p), Matrix::Ones(n, 1),
                         Matrix::Identity(n, n), Matrix::Zero(n, p));
    const SteadyStateMap ssm = steady_state_map(plant);
    SampleRegion region{Vector::Constant(n, -1), Vector::Constant(n, 1), Vector::Constant(p, -1),
                        Vector::Constant(p, 1)};
    EXPECT_LE(lipschitz_bound_sampled(obj, ssm, 300, region, trial),
              lipschitz_bound_analytic(obj, ssm) + 1e-9);
  }
}

TEST(Lipschitz, BundledCasesSampledBelowAnalytic) {
  for (const char* name : {"cases/three_bus.json", "cases/nine_bus.json"}) {
    const grid::GridCase g = load_grid_case(testkit::data_path(name));
    const grid::GridPlant plant = grid::assemble_plant(g);
    const SteadyStateMap ssm = steady_state_map(plant.reduced);
    const PenaltyObjective obj = grid::make_objective(g, plant);
    const Eigen::Index n = plant.reduced.states(), p = plant.reduced.inputs();
    SampleRegion region{Vector::Constant(n, -2.0), Vector::Constant(n, 2.0), Vector::Zero(p),
                        Vector::Constant(p, 2.0)};
    EXPECT_LE(lipschitz_bound_sampled(obj, ssm, 2000, region, 9), lipschitz_bound_analytic(obj, ssm) + 1e-9)
        << name;
  }
}

TEST(Lipschitz, MonotoneInGridWeights) {
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 20; ++trial) {
    grid::GridCase g = testkit::random_grid(rng, 3 + trial % 4, 1 + trial % 2);
    const grid::GridPlant plant = grid::assemble_plant(g);
    const SteadyStateMap ssm = steady_state_map(plant.reduced);
    g.weights.frequency = 1.0;
    double last = 0.0;
    for (double xi : {1.0, 10.0, 100.0, 1000.0}) {
      g.weights.line = xi;
      const double ell = lipschitz_bound_analytic(grid::make_objective(g, plant), ssm);
      EXPECT_GE(ell, last - 1e-9 * last) << "trial " << trial << " xi " << xi;
      last = ell;
    }
    for (double xi : {1e4, 1e5, 1e6, 1e7}) {
      g.weights.frequency = xi;
      const double ell = lipschitz_bound_analytic(grid::make_objective(g, plant), ssm);
      EXPECT_GE(ell, last - 1e-9 * last) << "trial " << trial << " frequency xi " << xi;
      last = ell;
    }
  }
}

TEST(Lipschitz, MonotoneInEachOutputWeight) {
  std::mt19937_64 rng(607);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 4, p = 2, m = 3;
    PenaltyObjective base = random_penalty(rng, n, p, m, false);
    PenaltyTerms eq = base.terms();
    eq.y_lo(0) = eq.y_hi(0) = 0.0;  // one equality channel
    base = PenaltyObjective(base.c(), base.d(), eq);
    const LtiPlant plant(testkit::random_hurwitz(rng, n), Matrix::Ones(n, p), Matrix::Ones(n, 1), base.c(),
                         base.d());
    const SteadyStateMap ssm = steady_state_map(plant);
    for (Eigen::Index ch = 0; ch < m; ++ch) {
      PenaltyTerms t = base.terms();
      const double before = lipschitz_bound_analytic(PenaltyObjective(base.c(), base.d(), t), ssm);
      t.xi_y(ch) *= 3.0;
      const double after = lipschitz_bound_analytic(PenaltyObjective(base.c(), base.d(), t), ssm);
      EXPECT_GE(after, before - 1e-12 * before);
    }
  }
}
