#pragma once

#include <vector>

#include "feedopt/numerics.hpp"
#include "feedopt/objective.hpp"
#include "feedopt/plant.hpp"
#include "feedopt/scenario.hpp"

namespace feedopt {

struct OracleOptions {
  double tolerance = 1e-8;
  long max_iterations = 100000;
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
};

struct OracleResult {
  Vector u;
  double cost = 0.0;
  double residual = 0.0;
  long iterations = 0;
};

/// Minimizes Phi~^w(u) = Phi(H u + R w, u) by gradient descent with Armijo
/// backtracking from `u0`. Throws kNotConverged at the iteration cap.
OracleResult solve_instantaneous(const Objective& obj, const SteadyStateMap& ssm, const Vector& w,
                                 const Vector& u0, const OracleOptions& options = {});

struct ReferencePoint {
  double t = 0.0;
  double cost = 0.0;
  Vector u;
};

/// Optimal cost at every load-segment start, each solve warm-started from the
/// previous optimizer. The series is held constant between points.
std::vector<ReferencePoint> reference_series(const Objective& obj, const SteadyStateMap& ssm,
                                             const LoadProfile& loads, double horizon,
                                             const Vector& u0, const OracleOptions& options = {});

/// Value of a held series at time t.
double reference_at(const std::vector<ReferencePoint>& series, double t);

}  // namespace feedopt
