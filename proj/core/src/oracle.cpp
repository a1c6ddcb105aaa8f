#include "feedopt/oracle.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "feedopt/error.hpp"

namespace feedopt {

namespace {
constexpr double kMachineEpsilon = 2.220446049250313e-16;
}  // namespace

OracleResult solve_instantaneous(const Objective& obj, const SteadyStateMap& ssm, const Vector& w,
                                 const Vector& u0, const OracleOptions& options) {
  if (u0.size() != ssm.inputs() || !u0.allFinite()) {
    throw Error(ErrorCode::kDimensionMismatch, "oracle start point has the wrong size or is not finite");
  }
  OracleResult result;
  result.u = u0;
  double cost = reduced_value(obj, ssm, result.u, w);
  Vector grad = reduced_gradient(obj, ssm, result.u, w);

  for (long it = 0;; ++it) {
    result.residual = grad.norm();
    if (result.residual <= options.tolerance) {
      result.cost = cost;
      result.iterations = it;
      return result;
    }
    if (it >= options.max_iterations) break;

    const double slope = grad.squaredNorm();
    // Decreases below this are lost in the rounding of the cost itself.
    const double noise = 64.0 * kMachineEpsilon * (1.0 + std::abs(cost));
    double step = options.initial_step;
    Vector trial;
    Vector trial_grad;
    double trial_cost = 0.0;
    bool accepted = false;
    while (step > 1e-300) {
      trial = result.u - step * grad;
      trial_cost = reduced_value(obj, ssm, trial, w);
      if (options.sufficient_decrease * step * slope >= noise) {
        if (trial_cost <= cost - options.sufficient_decrease * step * slope) {
          trial_grad = reduced_gradient(obj, ssm, trial, w);
          accepted = true;
          break;
        }
      } else if (trial_cost <= cost + noise) {
        // The required decrease is below the rounding of the cost, so a
        // cost comparison is meaningless; accept on gradient-norm decrease.
        trial_grad = reduced_gradient(obj, ssm, trial, w);
        if (trial_grad.squaredNorm() < slope) {
          accepted = true;
          break;
        }
      }
      step *= options.shrink;
    }
    if (!accepted) break;  // no representable progress left
    result.u = std::move(trial);
    cost = trial_cost;
    grad = std::move(trial_grad);
    result.iterations = it + 1;
  }
  std::ostringstream msg;
  msg << "gradient descent stopped with residual " << result.residual << " after "
      << result.iterations << " iterations";
  throw Error(ErrorCode::kNotConverged, msg.str());
}

std::vector<ReferencePoint> reference_series(const Objective& obj, const SteadyStateMap& ssm,
                                             const LoadProfile& loads, double horizon,
                                             const Vector& u0, const OracleOptions& options) {
  std::vector<ReferencePoint> series;
  Vector start = u0;
  for (const LoadSegment& seg : loads.segments()) {
    if (seg.start_s > horizon) break;
    OracleResult r;
    try {
      r = solve_instantaneous(obj, ssm, seg.load, start, options);
    } catch (const Error& e) {
      throw Error(e.code(), "at t = " + std::to_string(seg.start_s) + ": " + e.what());
    }
    start = r.u;
    series.push_back({seg.start_s, r.cost, std::move(r.u)});
  }
  return series;
}

double reference_at(const std::vector<ReferencePoint>& series, double t) {
  double value = series.empty() ? 0.0 : series.front().cost;
  for (const ReferencePoint& p : series) {
    if (p.t <= t) value = p.cost;
  }
  return value;
}

}  // namespace feedopt
