#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feedopt/controller.hpp"
#include "feedopt/objective.hpp"
#include "feedopt/oracle.hpp"
#include "feedopt/plant.hpp"
#include "feedopt/powergrid.hpp"
#include "feedopt/scenario.hpp"
#include "feedopt/trajectory.hpp"

namespace feedopt {

/// A plant together with the steady-state map and cost evaluated on it.
struct LoopModel {
  LtiPlant plant;
  SteadyStateMap ssm;
  ObjectivePtr objective;
};

/// Result of applying a scheduled event: the physical loop after the event,
/// and the model the controller uses from now on.
struct ModelChange {
  LoopModel truth;
  LoopModel controller;
  bool controller_is_stale = false;
};

/// Stateful callback applying one event to the loop it was created for.
using EventApplier = std::function<ModelChange(const grid::Event&, bool model_update_on_event)>;
using EventApplierFactory = std::function<EventApplier()>;

enum class Classification { kConverged, kBoundedNonconverged, kDiverged };

const char* to_string(Classification c);

struct RunResult {
  TrajectoryRecord record;
  double epsilon = 0.0;
  StabilityCertificate certificate;
  Classification classification = Classification::kBoundedNonconverged;
  /// ||H~^T grad Phi|| as seen by the controller (its model, its cost).
  double final_residual = 0.0;
  /// Same quantity on the true model.
  double final_true_residual = 0.0;
  /// ||x - H u - R w|| on the true model.
  double final_phi_norm = 0.0;
  /// Largest per-step increase of Z_delta* over (1 + |Z|), over steps
  /// without a load change or event.
  double max_z_relative_increment = 0.0;
  /// Largest [|psi| |phi|] Lambda [|psi| |phi|]^T over all steps.
  double max_lambda_form = 0.0;
  bool stale_model = false;
  bool reference_ok = true;
  std::int64_t steps = 0;
};

/// Integrates the closed loop
///   x+ = A_d x + B_d u + Q_d w(t_k),   u+ = u - step * eps H~^T grad Phi(x, u)
/// with exact plant discretization and an explicit Euler controller update.
/// Events fire at the first step boundary at or after their time. A run that
/// leaves the divergence guard is truncated and classified kDiverged.
RunResult run(const LoopModel& initial, const StabilityCertificate& certificate,
              const Scenario& scenario, const EventApplier& applier = {},
              const std::optional<Vector>& default_u0 = std::nullopt);

struct SweepRow {
  double multiplier = 0.0;
  double epsilon = 0.0;
  Classification classification = Classification::kBoundedNonconverged;
  double final_residual = 0.0;
  double final_phi_norm = 0.0;
  double divergence_time = 0.0;  // NaN unless diverged
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Smallest multiplier whose run did not converge.
  std::optional<double> first_unstable;
};

/// Runs the scenario at eps = k eps* for each k, from an initial condition
/// perturbed by `perturbation` (Gaussian, seeded by the scenario). Throws
/// kDomainError unless the multipliers are positive and sorted.
SweepResult sweep_epsilon(const LoopModel& initial, const StabilityCertificate& certificate,
                          const Scenario& base, std::span<const double> multipliers,
                          double perturbation = 0.05, const EventApplierFactory& make_applier = {},
                          const std::optional<Vector>& default_u0 = std::nullopt);

/// Grid case wired into a loop: reduced plant, soft-constrained cost, the
/// analytic Lipschitz bound (or an override) and the certificate.
struct GridSetup {
  grid::GridCase grid;
  grid::GridPlant plant;
  LoopModel model;
  double ell = 0.0;
  StabilityCertificate certificate;
  /// Equal split of the total load, clipped to the generator limits.
  Vector default_u0;
};

GridSetup make_grid_setup(const grid::GridCase& grid,
                          std::optional<double> ell_override = std::nullopt);

/// Fresh event applier that tracks the evolving case. With model updates off the
/// controller keeps the pre-event steady-state map and output map, but always
/// sees the current generator limits.
EventApplier grid_event_applier(const GridSetup& setup);

RunResult run_grid(const GridSetup& setup, const Scenario& scenario);
SweepResult sweep_grid(const GridSetup& setup, const Scenario& base,
                       std::span<const double> multipliers, double perturbation = 0.05);

}  // namespace feedopt
