#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "feedopt/numerics.hpp"

namespace feedopt {

/// Sampled closed-loop time series. Samples are taken every `stride` steps,
/// plus every step at which an event or load change is applied (those carry
/// a nonempty `event` label) and the final step.
struct TrajectoryRecord {
  double step = 0.0;
  std::int64_t stride = 1;

  std::vector<std::int64_t> step_index;
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> u;
  std::vector<Vector> y;
  std::vector<double> cost;       // Phi(x, u)
  std::vector<double> cost_star;  // oracle reference Phi*
  std::vector<double> v;
  std::vector<double> w;
  std::vector<double> z;
  std::vector<double> psi_norm;
  std::vector<double> phi_norm;
  std::vector<std::string> event;

  bool diverged = false;
  double divergence_time = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
};

/// CSV with header t,x_0..,u_0..,y_0..,phi,phi_star,V,W,Z,psi_norm,phi_err_norm,event.
void write_trajectory_csv(const TrajectoryRecord& record, std::ostream& out);

}  // namespace feedopt
