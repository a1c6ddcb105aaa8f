#include "feedopt/controller.hpp"

#include <cmath>
#include <string>

#include "feedopt/error.hpp"

namespace feedopt {

double epsilon_star(double ell, double beta) {
  if (!(ell > 0.0) || !(beta > 0.0)) {
    throw Error(ErrorCode::kDomainError, "ell and beta must be positive");
  }
  return 1.0 / (2.0 * ell * beta);
}

double delta_star(double ell, double beta) {
  if (!(ell > 0.0) || !(beta > 0.0)) {
    throw Error(ErrorCode::kDomainError, "ell and beta must be positive");
  }
  return ell / (ell + beta);
}

StabilityCertificate build_certificate(const LtiPlant& plant, const SteadyStateMap& ssm,
                                       double ell) {
  if (!(ell > 0.0) || !std::isfinite(ell)) {
    throw Error(ErrorCode::kDomainError, "Lipschitz constant must be positive and finite");
  }
  if (ssm.states() != plant.states() || ssm.inputs() != plant.inputs()) {
    throw Error(ErrorCode::kDimensionMismatch, "steady-state map does not match plant");
  }
  const PlantCertification& pc = plant.certification();
  StabilityCertificate cert;
  cert.p_matrix = pc.p;
  cert.min_eig_p = pc.min_eigenvalue;
  cert.beta = spectral_norm(pc.p * ssm.h);
  cert.ell = ell;
  cert.epsilon_star = epsilon_star(ell, cert.beta);
  cert.delta_star = delta_star(ell, cert.beta);
  return cert;
}

GradientController::GradientController(double epsilon, SteadyStateMap model,
                                       ObjectivePtr objective)
    : epsilon_(epsilon), model_(std::move(model)), objective_(std::move(objective)) {
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) {
    throw Error(ErrorCode::kDomainError, "controller gain must be positive");
  }
  if (!objective_) throw Error(ErrorCode::kDomainError, "controller needs an objective");
  if (objective_->states() != model_.states() || objective_->inputs() != model_.inputs()) {
    throw Error(ErrorCode::kDimensionMismatch, "objective does not match the controller model");
  }
}

Vector GradientController::reduced_gradient(const Vector& x, const Vector& u) const {
  return model_.project(objective_->gradient(x, u));
}

Vector GradientController::control_derivative(const Vector& x, const Vector& u) const {
  return -epsilon_ * reduced_gradient(x, u);
}

double optimality_residual(const SteadyStateMap& ssm, const Objective& obj, const Vector& x,
                           const Vector& u) {
  return ssm.project(obj.gradient(x, u)).norm();
}

}  // namespace feedopt
