#pragma once

#include <memory>

#include "feedopt/numerics.hpp"
#include "feedopt/objective.hpp"
#include "feedopt/plant.hpp"

namespace feedopt {

/// Everything the gain bound needs. epsilon_star = 1 / (2 ell beta) certifies
/// convergence of the gradient feedback loop to critical points for every
/// gain strictly below it; delta_star = ell / (ell + beta) is the convex
/// weight at which the LaSalle matrix is negative definite.
struct StabilityCertificate {
  Matrix p_matrix;
  double min_eig_p = 0.0;
  double beta = 0.0;
  double ell = 0.0;
  double epsilon_star = 0.0;
  double delta_star = 0.0;
};

double epsilon_star(double ell, double beta);
double delta_star(double ell, double beta);

/// beta = ||P H|| from the plant certification. Throws kNotHurwitz.
StabilityCertificate build_certificate(const LtiPlant& plant, const SteadyStateMap& ssm,
                                       double ell);

/// Gradient feedback law u' = -epsilon H~^T grad Phi(x, u).
class GradientController {
 public:
  GradientController(double epsilon, SteadyStateMap model, ObjectivePtr objective);

  double epsilon() const { return epsilon_; }
  const SteadyStateMap& model() const { return model_; }
  const Objective& objective() const { return *objective_; }
  const ObjectivePtr& objective_ptr() const { return objective_; }

  /// H~^T grad Phi(x, u): the controller's view of the reduced gradient.
  Vector reduced_gradient(const Vector& x, const Vector& u) const;
  Vector control_derivative(const Vector& x, const Vector& u) const;

 private:
  double epsilon_;
  SteadyStateMap model_;
  ObjectivePtr objective_;
};

/// ||H~^T grad Phi(x, u)||; zero exactly at critical points of the steady-state
/// problem when x = H u + R w.
double optimality_residual(const SteadyStateMap& ssm, const Objective& obj, const Vector& x,
                           const Vector& u);

}  // namespace feedopt
