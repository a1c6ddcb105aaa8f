#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "feedopt/numerics.hpp"
#include "feedopt/objective.hpp"
#include "feedopt/plant.hpp"

namespace feedopt::grid {

/// One generator bus. Units are per unit on the system base; the droop
/// constant is in Hz/pu so frequency deviations come out in Hz.
struct Bus {
  int id = 0;
  double inertia_s = 0.0;
  double damping_pu = 0.0;
  double gov_time_s = 0.0;
  double droop_hz_per_pu = 0.0;
  double load_pu = 0.0;
  double gen_min_pu = 0.0;
  double gen_max_pu = 0.0;
  double cost_quadratic = 0.0;
  double cost_linear = 0.0;
};

struct Line {
  int from = 0;
  int to = 0;
  double susceptance_pu = 0.0;
  double rating_pu = 0.0;
  /// Tripped lines stay in the list (so output channels keep their index)
  /// but carry no flow and drop out of the Laplacian.
  bool in_service = true;
};

/// Soft-constraint weights: generation limits, line ratings, and the
/// frequency channel (omega at the first bus).
struct PenaltyWeights {
  double generation = 1e3;
  double line = 1e3;
  double frequency = 1e7;
};

struct GridCase {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  PenaltyWeights weights;

  std::size_t bus_count() const { return buses.size(); }
  std::size_t line_count() const { return lines.size(); }
  /// Position of the bus with this id. Throws kUnknownBus.
  std::size_t bus_index(int id) const;
  Vector loads() const;
};

/// Checks every case invariant: positive constants and susceptances, no
/// self loops, no duplicate lines, known endpoints, connected in-service
/// graph. Throws kInvalidCase, kUnknownBus or kDisconnectedGraph.
void validate(const GridCase& grid);

struct Laplacian {
  Matrix b_matrix;  // r x r weighted Laplacian
  Matrix b_line;    // s x r, row k = b_k (e_from - e_to)^T, zero if tripped
};

Laplacian build_laplacian(const GridCase& grid);

/// Orthonormal r x (r-1) basis of the complement of the all-ones vector:
/// columns 2..r of the Householder reflector mapping 1/sqrt(r) to e_1.
Matrix reduction_basis(std::size_t buses);

/// Swing/governor model on x = (theta, omega, p_m) and the Hurwitz reduction
/// on (theta~, omega, p_m) with theta = E theta~ (+ any multiple of 1).
/// Outputs are y = (omega_1, line flows).
struct GridPlant {
  LtiPlant full;
  LtiPlant reduced;
  Matrix basis;

  std::size_t buses() const { return static_cast<std::size_t>(basis.rows()); }
  /// Index of omega_1 in the reduced state.
  Eigen::Index frequency_index() const { return basis.cols(); }
  Vector expand_state(const Vector& reduced_x) const;
  Vector reduce_state(const Vector& full_x) const;
};

/// Builds both plants; certifies the reduced one (throws kNotHurwitz).
GridPlant assemble_plant(const GridCase& grid);

/// Soft-constrained dispatch cost on the reduced plant. Bounds and costs come
/// from `bounds_from`; the output map C comes from `model` so a controller can
/// keep a stale topology while tracking updated generator limits.
PenaltyObjective make_objective(const GridCase& bounds_from, const GridPlant& model);

/// Steady-state common frequency for setpoints u and loads w:
///   1^T (u - w) / 1^T (D + R^-1) 1.
double steady_state_frequency(const GridCase& grid, const Vector& u, const Vector& w);

struct GeneratorDerate {
  int bus = 0;
  double factor = 1.0;
};

struct LineTrip {
  std::vector<std::size_t> lines;
};

using Event = std::variant<GeneratorDerate, LineTrip>;

std::string describe(const Event& event);

/// Applies an event and returns the rebuilt plant and case. Derates scale
/// gen_max at the bus and leave the dynamics untouched; trips take lines out
/// of service and reassemble. Throws kUnknownBus, kUnknownLine,
/// kDisconnectedGraph or kInvalidCase.
std::pair<GridPlant, GridCase> apply_event(const GridPlant& plant, const GridCase& grid,
                                           const Event& event);

}  // namespace feedopt::grid
