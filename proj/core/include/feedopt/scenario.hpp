#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "feedopt/numerics.hpp"
#include "feedopt/powergrid.hpp"

namespace feedopt {

/// Disturbance segment starting at `start_s`. Constant unless `end_load` is
/// set, in which case the value ramps linearly to `end_load` at the start of
/// the next segment (or the end of the run).
struct LoadSegment {
  double start_s = 0.0;
  Vector load;
  std::optional<Vector> end_load;
};

class LoadProfile {
 public:
  LoadProfile() = default;
  explicit LoadProfile(std::vector<LoadSegment> segments);
  static LoadProfile constant(Vector load);

  bool empty() const { return segments_.empty(); }
  const std::vector<LoadSegment>& segments() const { return segments_; }
  Eigen::Index dimension() const;

  /// Index of the segment active at time t.
  std::size_t segment_at(double t) const;
  /// w(t); ramps are evaluated at t itself (callers sample and hold).
  Vector at(double t, double horizon) const;

 private:
  std::vector<LoadSegment> segments_;
};

struct ScheduledEvent {
  double time_s = 0.0;
  grid::Event event;
};

struct EpsilonPolicy {
  enum class Kind { kFractionOfStar, kAbsolute };
  Kind kind = Kind::kFractionOfStar;
  double value = 0.5;

  static EpsilonPolicy fraction_of_star(double f) { return {Kind::kFractionOfStar, f}; }
  static EpsilonPolicy absolute(double eps) { return {Kind::kAbsolute, eps}; }
  double resolve(double eps_star) const { return kind == Kind::kAbsolute ? value : value * eps_star; }
};

struct Scenario {
  double duration_s = 100.0;
  double step_s = 0.01;
  /// Empty means "hold the case loads" (grid runs) or w = 0 (generic runs).
  LoadProfile loads;
  std::vector<ScheduledEvent> events;
  EpsilonPolicy epsilon;
  bool model_update_on_event = false;
  std::uint64_t seed = 0;
  std::optional<Vector> initial_u;
  /// Standard deviation of a seeded Gaussian offset added to the initial
  /// steady state.
  double initial_perturbation = 0.0;
  std::int64_t record_every = 1;
  double divergence_guard = 1e6;
  double convergence_tol = 1e-5;

  std::int64_t step_count() const;
  /// Throws kDomainError on a malformed scenario; `disturbances` is the
  /// plant's w dimension.
  void validate(Eigen::Index disturbances) const;
};

}  // namespace feedopt
