#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "feedopt/controller.hpp"
#include "feedopt/objective.hpp"
#include "feedopt/plant.hpp"
#include "feedopt/trajectory.hpp"

namespace feedopt {

/// Z_delta = (1 - delta) V + delta W with V(u) = Phi(H u + R w, u) and
/// W = phi^T P phi, phi = x - H u - R w, psi = H~^T grad Phi(x, u).
struct LaSalleState {
  double delta = 0.0;
  double v_value = 0.0;
  double w_value = 0.0;
  double z_value = 0.0;
  double psi_norm = 0.0;
  double phi_norm = 0.0;
};

/// Evaluates the LaSalle channels; `delta` defaults to cert.delta_star.
LaSalleState evaluate_lasalle(const StabilityCertificate& cert, const SteadyStateMap& ssm,
                              const Objective& obj, const Vector& x, const Vector& u,
                              const Vector& w, std::optional<double> delta = std::nullopt);

/// Same, with P supplied directly (used after the plant changed under the run).
LaSalleState evaluate_lasalle(const Matrix& p, double delta, const SteadyStateMap& ssm,
                              const Objective& obj, const Vector& x, const Vector& u,
                              const Vector& w);

/// Bounds dZ/dt <= [|psi| |phi|] Lambda [|psi| |phi|]^T.
struct LambdaMatrix {
  Eigen::Matrix2d m;

  double determinant() const { return m.determinant(); }
  double max_eigenvalue() const;
  double quadratic_form(double psi_norm, double phi_norm) const;
};

/// Lambda = [[-eps (1 - delta), eps (l (1 - delta) + delta beta) / 2],
///           [eps (l (1 - delta) + delta beta) / 2, -delta / 2]].
/// Throws kDomainError unless 0 < delta < 1 and the other arguments are positive.
LambdaMatrix lambda_matrix(double epsilon, double delta, double ell, double beta);

struct MonotoneReport {
  bool pass = true;
  /// Largest positive increment of Z between consecutive comparable samples.
  double max_increment = 0.0;
  /// Largest increment divided by rel_tol-scaled allowance; pass iff <= 1.
  double worst_ratio = 0.0;
  std::size_t worst_index = 0;
  std::size_t compared = 0;
};

/// Checks that Z_delta = (1 - delta) V + delta W never increases by more than
/// rel_tol (1 + |Z|) per simulation step. Increments ending on a sample with
/// an event label (load change or plant event) are skipped.
MonotoneReport check_monotone(const TrajectoryRecord& record, double delta,
                              double rel_tol = 1e-6);

}  // namespace feedopt
