#include "feedopt/monitor.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "feedopt/error.hpp"

namespace feedopt {

LaSalleState evaluate_lasalle(const Matrix& p, double delta, const SteadyStateMap& ssm,
                              const Objective& obj, const Vector& x, const Vector& u,
                              const Vector& w) {
  const Vector steady = ssm.state(u, w);
  const Vector phi = x - steady;

  LaSalleState s;
  s.delta = delta;
  s.v_value = obj.value(steady, u);
  s.w_value = std::max(0.0, phi.dot(p * phi));
  s.z_value = (1.0 - delta) * s.v_value + delta * s.w_value;
  s.psi_norm = ssm.project(obj.gradient(x, u)).norm();
  s.phi_norm = phi.norm();
  return s;
}

LaSalleState evaluate_lasalle(const StabilityCertificate& cert, const SteadyStateMap& ssm,
                              const Objective& obj, const Vector& x, const Vector& u,
                              const Vector& w, std::optional<double> delta) {
  return evaluate_lasalle(cert.p_matrix, delta.value_or(cert.delta_star), ssm, obj, x, u, w);
}

double LambdaMatrix::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(1);
}

double LambdaMatrix::quadratic_form(double psi_norm, double phi_norm) const {
  const Eigen::Vector2d v(psi_norm, phi_norm);
  return v.dot(m * v);
}

LambdaMatrix lambda_matrix(double epsilon, double delta, double ell, double beta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kDomainError, "delta must lie in (0, 1)");
  }
  if (!(epsilon > 0.0) || !(ell > 0.0) || !(beta > 0.0)) {
    throw Error(ErrorCode::kDomainError, "epsilon, ell and beta must be positive");
  }
  const double off = 0.5 * epsilon * (ell * (1.0 - delta) + delta * beta);
  LambdaMatrix lam;
  lam.m << -epsilon * (1.0 - delta), off, off, -0.5 * delta;
  return lam;
}

MonotoneReport check_monotone(const TrajectoryRecord& record, double delta, double rel_tol) {
  MonotoneReport report;
  for (std::size_t i = 1; i < record.size(); ++i) {
    if (!record.event[i].empty()) continue;
    const double z0 = (1.0 - delta) * record.v[i - 1] + delta * record.w[i - 1];
    const double z1 = (1.0 - delta) * record.v[i] + delta * record.w[i];
    const double steps = static_cast<double>(record.step_index[i] - record.step_index[i - 1]);
    const double increment = z1 - z0;
    const double allowance = rel_tol * (1.0 + std::abs(z0)) * std::max(1.0, steps);
    ++report.compared;
    if (increment > report.max_increment) report.max_increment = increment;
    const double ratio = increment / allowance;
    if (ratio > report.worst_ratio) {
      report.worst_ratio = ratio;
      report.worst_index = i;
    }
  }
  report.pass = report.worst_ratio <= 1.0;
  return report;
}

}  // namespace feedopt
