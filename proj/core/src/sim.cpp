#include "feedopt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <string>

#include "feedopt/error.hpp"
#include "feedopt/monitor.hpp"

namespace feedopt {

// ---------------------------------------------------------------- scenario --

LoadProfile::LoadProfile(std::vector<LoadSegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) return;
  if (segments_.front().start_s != 0.0) {
    throw Error(ErrorCode::kDomainError, "load profile must start at t = 0");
  }
  const Eigen::Index q = segments_.front().load.size();
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const LoadSegment& s = segments_[i];
    if (i > 0 && !(s.start_s > segments_[i - 1].start_s)) {
      throw Error(ErrorCode::kDomainError, "load segments must have increasing start times");
    }
    if (s.load.size() != q || (s.end_load && s.end_load->size() != q)) {
      throw Error(ErrorCode::kDimensionMismatch, "load segments have inconsistent lengths");
    }
    if (!s.load.allFinite() || (s.end_load && !s.end_load->allFinite())) {
      throw Error(ErrorCode::kNonFinite, "load segment values must be finite");
    }
  }
}

LoadProfile LoadProfile::constant(Vector load) {
  return LoadProfile({LoadSegment{0.0, std::move(load), std::nullopt}});
}

Eigen::Index LoadProfile::dimension() const {
  return segments_.empty() ? 0 : segments_.front().load.size();
}

std::size_t LoadProfile::segment_at(double t) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].start_s <= t) idx = i;
  }
  return idx;
}

Vector LoadProfile::at(double t, double horizon) const {
  const std::size_t i = segment_at(t);
  const LoadSegment& s = segments_[i];
  if (!s.end_load) return s.load;
  const double end = (i + 1 < segments_.size()) ? segments_[i + 1].start_s : horizon;
  const double span = end - s.start_s;
  const double frac = span > 0.0 ? std::clamp((t - s.start_s) / span, 0.0, 1.0) : 1.0;
  return s.load + frac * (*s.end_load - s.load);
}

std::int64_t Scenario::step_count() const {
  return static_cast<std::int64_t>(std::llround(duration_s / step_s));
}

void Scenario::validate(Eigen::Index disturbances) const {
  if (!(step_s > 0.0) || !std::isfinite(step_s)) {
    throw Error(ErrorCode::kDomainError, "step_s must be positive");
  }
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorCode::kDomainError, "duration_s must be nonnegative");
  }
  if (record_every < 1) throw Error(ErrorCode::kDomainError, "record_every must be >= 1");
  if (!(divergence_guard > 0.0)) throw Error(ErrorCode::kDomainError, "divergence_guard must be positive");
  if (!(convergence_tol > 0.0)) throw Error(ErrorCode::kDomainError, "convergence_tol must be positive");
  if (!(initial_perturbation >= 0.0)) {
    throw Error(ErrorCode::kDomainError, "initial_perturbation must be nonnegative");
  }
  if (!(epsilon.value > 0.0) || !std::isfinite(epsilon.value)) {
    throw Error(ErrorCode::kDomainError, "epsilon must be positive");
  }
  if (!loads.empty() && loads.dimension() != disturbances) {
    throw Error(ErrorCode::kDimensionMismatch,
                "load profile has " + std::to_string(loads.dimension()) + " entries, plant expects " +
                    std::to_string(disturbances));
  }
  double last = 0.0;
  for (const ScheduledEvent& e : events) {
    if (!(e.time_s >= 0.0 && e.time_s <= duration_s)) {
      throw Error(ErrorCode::kDomainError, "event time outside [0, duration]");
    }
    if (e.time_s < last) throw Error(ErrorCode::kDomainError, "events must be time-ordered");
    last = e.time_s;
  }
}

// -------------------------------------------------------------- trajectory --

void write_trajectory_csv(const TrajectoryRecord& record, std::ostream& out) {
  const Eigen::Index n = record.empty() ? 0 : record.x.front().size();
  const Eigen::Index p = record.empty() ? 0 : record.u.front().size();
  const Eigen::Index m = record.empty() ? 0 : record.y.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < p; ++i) out << ",u_" << i;
  for (Eigen::Index i = 0; i < m; ++i) out << ",y_" << i;
  out << ",phi,phi_star,V,W,Z,psi_norm,phi_err_norm,event\n";

  const auto old_precision = out.precision(17);
  for (std::size_t k = 0; k < record.size(); ++k) {
    out << record.t[k];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << record.x[k](i);
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << record.u[k](i);
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << record.y[k](i);
    out << ',' << record.cost[k] << ',' << record.cost_star[k] << ',' << record.v[k] << ','
        << record.w[k] << ',' << record.z[k] << ',' << record.psi_norm[k] << ','
        << record.phi_norm[k] << ',' << record.event[k] << '\n';
  }
  out.precision(old_precision);
}

// --------------------------------------------------------------------- run --

const char* to_string(Classification c) {
  switch (c) {
    case Classification::kConverged: return "converged";
    case Classification::kBoundedNonconverged: return "bounded-nonconverged";
    case Classification::kDiverged: return "diverged";
  }
  return "unknown";
}

RunResult run(const LoopModel& initial, const StabilityCertificate& certificate,
              const Scenario& scenario, const EventApplier& applier,
              const std::optional<Vector>& default_u0) {
  const Eigen::Index p = initial.plant.inputs();
  const Eigen::Index q = initial.plant.disturbances();
  scenario.validate(q);
  if (!scenario.events.empty() && !applier) {
    throw Error(ErrorCode::kDomainError, "scenario schedules events but the loop has no event handler");
  }

  const double h = scenario.step_s;
  const double horizon = scenario.duration_s;
  const std::int64_t steps = scenario.step_count();
  const LoadProfile loads =
      scenario.loads.empty() ? LoadProfile::constant(Vector::Zero(q)) : scenario.loads;

  RunResult result;
  result.certificate = certificate;
  result.epsilon = scenario.epsilon.resolve(certificate.epsilon_star);
  const double eps = result.epsilon;
  const double delta = certificate.delta_star;
  const LambdaMatrix lambda = lambda_matrix(eps, delta, certificate.ell, certificate.beta);

  LoopModel truth = initial;
  LoopModel ctrl = initial;
  bool shared_model = true;
  DiscretizedPlant disc = discretize_exact(truth.plant, h);
  Matrix lyap = truth.plant.certification().p;

  Vector u = scenario.initial_u ? *scenario.initial_u
                                : (default_u0 ? *default_u0 : Vector(Vector::Zero(p)));
  if (u.size() != p) throw Error(ErrorCode::kDimensionMismatch, "initial_u has the wrong length");
  Vector w = loads.at(0.0, horizon);
  Vector x = truth.ssm.state(u, w);
  if (scenario.initial_perturbation > 0.0) {
    std::mt19937_64 rng(scenario.seed);
    std::normal_distribution<double> normal(0.0, scenario.initial_perturbation);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += normal(rng);
  }

  TrajectoryRecord& rec = result.record;
  rec.step = h;
  rec.stride = scenario.record_every;

  Vector reference_u = u;
  double cost_star = std::numeric_limits<double>::quiet_NaN();
  auto refresh_reference = [&] {
    try {
      const OracleResult r = solve_instantaneous(*truth.objective, truth.ssm, w, reference_u);
      reference_u = r.u;
      cost_star = r.cost;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotConverged) throw;
      result.reference_ok = false;
      cost_star = std::numeric_limits<double>::quiet_NaN();
    }
  };

  std::size_t next_event = 0;
  std::size_t segment = loads.segment_at(0.0);
  double z_prev = 0.0;
  bool have_prev = false;
  const double event_slack = 1e-9 * h;

  for (std::int64_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * h;
    std::string label;
    bool reference_stale = (k == 0);

    while (next_event < scenario.events.size() &&
           scenario.events[next_event].time_s <= t + event_slack) {
      const grid::Event& ev = scenario.events[next_event].event;
      ModelChange change = applier(ev, scenario.model_update_on_event);
      truth = std::move(change.truth);
      ctrl = std::move(change.controller);
      shared_model = !change.controller_is_stale && ctrl.objective == truth.objective;
      result.stale_model = result.stale_model || change.controller_is_stale;
      disc = discretize_exact(truth.plant, h);
      lyap = truth.plant.certification().p;
      if (!label.empty()) label += ';';
      label += grid::describe(ev);
      reference_stale = true;
      ++next_event;
    }

    const std::size_t seg_now = loads.segment_at(t);
    const Vector w_now = loads.at(t, horizon);
    if (k > 0 && w_now != w) {
      if (!label.empty()) label += ';';
      label += "load";
    }
    if (seg_now != segment) reference_stale = true;
    segment = seg_now;
    w = w_now;
    if (reference_stale) refresh_reference();

    const Vector grad_true = truth.objective->gradient(x, u);
    const Vector psi_true = truth.ssm.project(grad_true);
    const Vector psi_ctrl =
        shared_model ? psi_true : ctrl.ssm.project(ctrl.objective->gradient(x, u));
    const Vector steady = truth.ssm.state(u, w);
    const Vector phi = x - steady;
    const double v_val = truth.objective->value(steady, u);
    const double w_val = std::max(0.0, phi.dot(lyap * phi));
    const double z_val = (1.0 - delta) * v_val + delta * w_val;
    const double psi_norm = psi_true.norm();
    const double phi_norm = phi.norm();

    if (have_prev && label.empty()) {
      result.max_z_relative_increment =
          std::max(result.max_z_relative_increment, (z_val - z_prev) / (1.0 + std::abs(z_prev)));
    }
    z_prev = z_val;
    have_prev = true;
    result.max_lambda_form =
        (k == 0) ? lambda.quadratic_form(psi_norm, phi_norm)
                 : std::max(result.max_lambda_form, lambda.quadratic_form(psi_norm, phi_norm));

    if (k % rec.stride == 0 || !label.empty() || k == steps) {
      rec.step_index.push_back(k);
      rec.t.push_back(t);
      rec.x.push_back(x);
      rec.u.push_back(u);
      rec.y.push_back(truth.plant.output(x, u));
      rec.cost.push_back(truth.objective->value(x, u));
      rec.cost_star.push_back(cost_star);
      rec.v.push_back(v_val);
      rec.w.push_back(w_val);
      rec.z.push_back(z_val);
      rec.psi_norm.push_back(psi_norm);
      rec.phi_norm.push_back(phi_norm);
      rec.event.push_back(label);
    }

    if (k == steps) {
      result.final_residual = psi_ctrl.norm();
      result.final_true_residual = psi_norm;
      result.final_phi_norm = phi_norm;
      break;
    }

    Vector x_next = disc.advance(x, u, w);
    u -= (h * eps) * psi_ctrl;
    x = std::move(x_next);
    result.steps = k + 1;

    if (!x.allFinite() || !u.allFinite() || x.norm() > scenario.divergence_guard ||
        u.norm() > scenario.divergence_guard) {
      rec.diverged = true;
      rec.divergence_time = t + h;
      result.final_residual = std::numeric_limits<double>::infinity();
      result.final_true_residual = std::numeric_limits<double>::infinity();
      result.final_phi_norm = std::numeric_limits<double>::infinity();
      break;
    }
  }

  if (rec.diverged) {
    result.classification = Classification::kDiverged;
  } else if (result.final_residual <= scenario.convergence_tol &&
             result.final_phi_norm <= scenario.convergence_tol) {
    result.classification = Classification::kConverged;
  } else {
    result.classification = Classification::kBoundedNonconverged;
  }
  return result;
}

// ------------------------------------------------------------------- sweep --

SweepResult sweep_epsilon(const LoopModel& initial, const StabilityCertificate& certificate,
                          const Scenario& base, std::span<const double> multipliers,
                          double perturbation, const EventApplierFactory& make_applier,
                          const std::optional<Vector>& default_u0) {
  for (std::size_t i = 0; i < multipliers.size(); ++i) {
    if (!(multipliers[i] > 0.0) || (i > 0 && multipliers[i] < multipliers[i - 1])) {
      throw Error(ErrorCode::kDomainError, "multipliers must be positive and sorted");
    }
  }
  SweepResult out;
  for (double k : multipliers) {
    Scenario s = base;
    s.epsilon = EpsilonPolicy::absolute(k * certificate.epsilon_star);
    s.initial_perturbation = perturbation;
    s.record_every = std::max<std::int64_t>(s.record_every, s.step_count());
    const RunResult r =
        run(initial, certificate, s, make_applier ? make_applier() : EventApplier{}, default_u0);
    SweepRow row;
    row.multiplier = k;
    row.epsilon = r.epsilon;
    row.classification = r.classification;
    row.final_residual = r.final_residual;
    row.final_phi_norm = r.final_phi_norm;
    row.divergence_time = r.record.divergence_time;
    if (!out.first_unstable && row.classification != Classification::kConverged) {
      out.first_unstable = k;
    }
    out.rows.push_back(row);
  }
  return out;
}

// -------------------------------------------------------------------- grid --

GridSetup make_grid_setup(const grid::GridCase& grid, std::optional<double> ell_override) {
  grid::validate(grid);
  grid::GridPlant plant = grid::assemble_plant(grid);
  SteadyStateMap ssm = steady_state_map(plant.reduced);
  auto objective = std::make_shared<const PenaltyObjective>(grid::make_objective(grid, plant));
  const double ell = ell_override ? *ell_override : lipschitz_bound_analytic(*objective, ssm);
  StabilityCertificate cert = build_certificate(plant.reduced, ssm, ell);

  const auto r = static_cast<Eigen::Index>(grid.bus_count());
  const double share = grid.loads().sum() / static_cast<double>(r);
  Vector u0(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    u0(i) = std::clamp(share, grid.buses[i].gen_min_pu, grid.buses[i].gen_max_pu);
  }
  LoopModel model{plant.reduced, std::move(ssm), std::move(objective)};
  return GridSetup{grid, plant, std::move(model), ell, std::move(cert), std::move(u0)};
}

EventApplier grid_event_applier(const GridSetup& setup) {
  struct State {
    grid::GridCase truth_case;
    grid::GridPlant truth_plant;
    grid::GridPlant model_plant;
    SteadyStateMap model_ssm;
    bool topology_stale = false;
  };
  auto state = std::make_shared<State>(
      State{setup.grid, setup.plant, setup.plant, setup.model.ssm, false});

  return [state](const grid::Event& event, bool model_update) {
    auto [plant, next_case] = grid::apply_event(state->truth_plant, state->truth_case, event);
    state->truth_case = std::move(next_case);
    state->truth_plant = std::move(plant);

    const grid::GridPlant& tp = state->truth_plant;
    LoopModel truth{tp.reduced, steady_state_map(tp.reduced),
                    std::make_shared<const PenaltyObjective>(
                        grid::make_objective(state->truth_case, tp))};
    if (std::holds_alternative<grid::LineTrip>(event)) state->topology_stale = true;

    if (model_update) {
      state->model_plant = tp;
      state->model_ssm = truth.ssm;
      state->topology_stale = false;
      return ModelChange{truth, truth, false};
    }
    LoopModel controller{state->model_plant.reduced, state->model_ssm,
                         std::make_shared<const PenaltyObjective>(
                             grid::make_objective(state->truth_case, state->model_plant))};
    return ModelChange{std::move(truth), std::move(controller), state->topology_stale};
  };
}

RunResult run_grid(const GridSetup& setup, const Scenario& scenario) {
  Scenario s = scenario;
  if (s.loads.empty()) s.loads = LoadProfile::constant(setup.grid.loads());
  return run(setup.model, setup.certificate, s, grid_event_applier(setup), setup.default_u0);
}

SweepResult sweep_grid(const GridSetup& setup, const Scenario& base,
                       std::span<const double> multipliers, double perturbation) {
  Scenario s = base;
  if (s.loads.empty()) s.loads = LoadProfile::constant(setup.grid.loads());
  return sweep_epsilon(setup.model, setup.certificate, s, multipliers, perturbation,
                       [&setup] { return grid_event_applier(setup); }, setup.default_u0);
}

}  // namespace feedopt
