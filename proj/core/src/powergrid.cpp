#include "feedopt/powergrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "feedopt/error.hpp"

namespace feedopt::grid {

namespace {

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

void require_positive(double v, const std::string& what) {
  if (!positive(v)) throw Error(ErrorCode::kInvalidCase, what + " must be positive and finite");
}

// Union-find over bus positions.
std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

bool connected(const GridCase& grid) {
  const std::size_t r = grid.bus_count();
  std::vector<std::size_t> parent(r);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::size_t components = r;
  for (const Line& line : grid.lines) {
    if (!line.in_service) continue;
    const std::size_t a = find_root(parent, grid.bus_index(line.from));
    const std::size_t b = find_root(parent, grid.bus_index(line.to));
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components <= 1;
}

}  // namespace

std::size_t GridCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  throw Error(ErrorCode::kUnknownBus, "no bus with id " + std::to_string(id));
}

Vector GridCase::loads() const {
  Vector w(buses.size());
  for (std::size_t i = 0; i < buses.size(); ++i) w(i) = buses[i].load_pu;
  return w;
}

void validate(const GridCase& grid) {
  if (grid.buses.empty()) throw Error(ErrorCode::kInvalidCase, "case has no buses");
  std::set<int> ids;
  for (const Bus& b : grid.buses) {
    const std::string tag = "bus " + std::to_string(b.id) + ": ";
    if (!ids.insert(b.id).second) throw Error(ErrorCode::kInvalidCase, tag + "duplicate id");
    require_positive(b.inertia_s, tag + "inertia_s");
    require_positive(b.damping_pu, tag + "damping_pu");
    require_positive(b.gov_time_s, tag + "gov_time_s");
    require_positive(b.droop_hz_per_pu, tag + "droop_hz_per_pu");
    if (!std::isfinite(b.load_pu) || !std::isfinite(b.cost_quadratic) ||
        !std::isfinite(b.cost_linear)) {
      throw Error(ErrorCode::kInvalidCase, tag + "load and cost coefficients must be finite");
    }
    if (std::isnan(b.gen_min_pu) || std::isnan(b.gen_max_pu) || b.gen_min_pu > b.gen_max_pu) {
      throw Error(ErrorCode::kInvalidCase, tag + "requires gen_min_pu <= gen_max_pu");
    }
  }
  std::set<std::pair<int, int>> keys;
  for (std::size_t k = 0; k < grid.lines.size(); ++k) {
    const Line& l = grid.lines[k];
    const std::string tag = "line " + std::to_string(k) + ": ";
    grid.bus_index(l.from);
    grid.bus_index(l.to);
    if (l.from == l.to) throw Error(ErrorCode::kInvalidCase, tag + "from and to coincide");
    require_positive(l.susceptance_pu, tag + "susceptance_pu");
    if (!(l.rating_pu > 0.0)) throw Error(ErrorCode::kInvalidCase, tag + "rating_pu must be positive");
    if (!keys.insert(std::minmax(l.from, l.to)).second) {
      throw Error(ErrorCode::kInvalidCase, tag + "duplicate line between the same buses");
    }
  }
  const PenaltyWeights& w = grid.weights;
  require_positive(w.generation, "penalty weight generation");
  require_positive(w.line, "penalty weight line");
  require_positive(w.frequency, "penalty weight frequency");
  if (!connected(grid)) {
    throw Error(ErrorCode::kDisconnectedGraph, "in-service lines do not connect all buses");
  }
}

Laplacian build_laplacian(const GridCase& grid) {
  validate(grid);
  const auto r = static_cast<Eigen::Index>(grid.bus_count());
  const auto s = static_cast<Eigen::Index>(grid.line_count());
  Laplacian lap{Matrix::Zero(r, r), Matrix::Zero(s, r)};
  for (Eigen::Index k = 0; k < s; ++k) {
    const Line& l = grid.lines[k];
    if (!l.in_service) continue;
    const auto i = static_cast<Eigen::Index>(grid.bus_index(l.from));
    const auto j = static_cast<Eigen::Index>(grid.bus_index(l.to));
    const double b = l.susceptance_pu;
    lap.b_matrix(i, i) += b;
    lap.b_matrix(j, j) += b;
    lap.b_matrix(i, j) -= b;
    lap.b_matrix(j, i) -= b;
    lap.b_line(k, i) = b;
    lap.b_line(k, j) = -b;
  }
  return lap;
}

Matrix reduction_basis(std::size_t buses) {
  const auto r = static_cast<Eigen::Index>(buses);
  if (r <= 1) return Matrix::Zero(r, 0);
  Vector v = Vector::Constant(r, 1.0 / std::sqrt(static_cast<double>(r)));
  v(0) -= 1.0;
  const Matrix reflector = Matrix::Identity(r, r) - (2.0 / v.squaredNorm()) * v * v.transpose();
  return reflector.rightCols(r - 1);
}

Vector GridPlant::expand_state(const Vector& reduced_x) const {
  const auto r = static_cast<Eigen::Index>(buses());
  Vector full(3 * r);
  full << basis * reduced_x.head(r - 1), reduced_x.tail(2 * r);
  return full;
}

Vector GridPlant::reduce_state(const Vector& full_x) const {
  const auto r = static_cast<Eigen::Index>(buses());
  Vector reduced(3 * r - 1);
  reduced << basis.transpose() * full_x.head(r), full_x.tail(2 * r);
  return reduced;
}

GridPlant assemble_plant(const GridCase& grid) {
  const Laplacian lap = build_laplacian(grid);
  const auto r = static_cast<Eigen::Index>(grid.bus_count());
  const auto s = static_cast<Eigen::Index>(grid.line_count());
  const auto m = s + 1;

  Vector m_inv(r), damping(r), t_inv(r), r_inv(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Bus& b = grid.buses[i];
    m_inv(i) = 1.0 / b.inertia_s;
    damping(i) = b.damping_pu;
    t_inv(i) = 1.0 / b.gov_time_s;
    r_inv(i) = 1.0 / b.droop_hz_per_pu;
  }

  // Full model on (theta, omega, p_m).
  Matrix a = Matrix::Zero(3 * r, 3 * r);
  a.block(0, r, r, r) = Matrix::Identity(r, r);
  a.block(r, 0, r, r) = -(m_inv.asDiagonal() * lap.b_matrix);
  a.block(r, r, r, r) = -(m_inv.cwiseProduct(damping)).asDiagonal().toDenseMatrix();
  a.block(r, 2 * r, r, r) = m_inv.asDiagonal().toDenseMatrix();
  a.block(2 * r, r, r, r) = -(t_inv.cwiseProduct(r_inv)).asDiagonal().toDenseMatrix();
  a.block(2 * r, 2 * r, r, r) = -t_inv.asDiagonal().toDenseMatrix();

  Matrix b = Matrix::Zero(3 * r, r);
  b.block(2 * r, 0, r, r) = t_inv.asDiagonal().toDenseMatrix();
  Matrix q = Matrix::Zero(3 * r, r);
  q.block(r, 0, r, r) = -m_inv.asDiagonal().toDenseMatrix();
  Matrix c = Matrix::Zero(m, 3 * r);
  c(0, r) = 1.0;
  c.block(1, 0, s, r) = lap.b_line;

  // Reduced model on (theta~, omega, p_m), n = 3r - 1.
  const Matrix e = reduction_basis(grid.bus_count());
  const auto n = 3 * r - 1;
  Matrix ar = Matrix::Zero(n, n);
  ar.block(0, r - 1, r - 1, r) = e.transpose();
  ar.block(r - 1, 0, r, r - 1) = -(m_inv.asDiagonal() * lap.b_matrix * e);
  ar.block(r - 1, r - 1, r, 2 * r) = a.block(r, r, r, 2 * r);
  ar.block(2 * r - 1, r - 1, r, 2 * r) = a.block(2 * r, r, r, 2 * r);
  Matrix br = b.bottomRows(n);
  Matrix qr = q.bottomRows(n);
  Matrix cr = Matrix::Zero(m, n);
  cr(0, r - 1) = 1.0;
  cr.block(1, 0, s, r - 1) = lap.b_line * e;

  GridPlant plant{LtiPlant(a, b, q, c, Matrix::Zero(m, r)),
                  LtiPlant(ar, br, qr, cr, Matrix::Zero(m, r)), e};
  plant.reduced.certification();
  return plant;
}

PenaltyObjective make_objective(const GridCase& bounds_from, const GridPlant& model) {
  const auto r = static_cast<Eigen::Index>(bounds_from.bus_count());
  const auto s = static_cast<Eigen::Index>(bounds_from.line_count());
  if (r != static_cast<Eigen::Index>(model.buses()) || s + 1 != model.reduced.outputs()) {
    throw Error(ErrorCode::kDimensionMismatch, "case and plant have different sizes");
  }
  PenaltyTerms t;
  t.cost_quadratic.resize(r);
  t.cost_linear.resize(r);
  t.u_lo.resize(r);
  t.u_hi.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Bus& b = bounds_from.buses[i];
    t.cost_quadratic(i) = b.cost_quadratic;
    t.cost_linear(i) = b.cost_linear;
    t.u_lo(i) = b.gen_min_pu;
    t.u_hi(i) = b.gen_max_pu;
  }
  t.y_lo.resize(s + 1);
  t.y_hi.resize(s + 1);
  t.y_lo(0) = 0.0;
  t.y_hi(0) = 0.0;
  for (Eigen::Index k = 0; k < s; ++k) {
    t.y_lo(k + 1) = -bounds_from.lines[k].rating_pu;
    t.y_hi(k + 1) = bounds_from.lines[k].rating_pu;
  }
  t.xi_u = Vector::Constant(r, bounds_from.weights.generation);
  t.xi_y = Vector::Constant(s + 1, bounds_from.weights.line);
  t.xi_y(0) = bounds_from.weights.frequency;
  return PenaltyObjective(model.reduced.c(), model.reduced.d(), std::move(t));
}

double steady_state_frequency(const GridCase& grid, const Vector& u, const Vector& w) {
  double denom = 0.0;
  for (const Bus& b : grid.buses) denom += b.damping_pu + 1.0 / b.droop_hz_per_pu;
  return (u - w).sum() / denom;
}

std::string describe(const Event& event) {
  std::ostringstream out;
  if (const auto* d = std::get_if<GeneratorDerate>(&event)) {
    out << "derate:bus=" << d->bus << ":factor=" << d->factor;
  } else {
    const auto& trip = std::get<LineTrip>(event);
    out << "trip:lines=";
    for (std::size_t i = 0; i < trip.lines.size(); ++i) out << (i ? "+" : "") << trip.lines[i];
  }
  return out.str();
}

std::pair<GridPlant, GridCase> apply_event(const GridPlant& plant, const GridCase& grid,
                                           const Event& event) {
  GridCase next = grid;
  if (const auto* d = std::get_if<GeneratorDerate>(&event)) {
    if (!(d->factor >= 0.0) || !std::isfinite(d->factor)) {
      throw Error(ErrorCode::kInvalidCase, "derate factor must be finite and nonnegative");
    }
    Bus& bus = next.buses[next.bus_index(d->bus)];
    bus.gen_max_pu *= d->factor;
    if (bus.gen_max_pu < bus.gen_min_pu) {
      throw Error(ErrorCode::kInvalidCase, "derate would push gen_max_pu below gen_min_pu");
    }
    validate(next);
    return {plant, std::move(next)};
  }

  const auto& trip = std::get<LineTrip>(event);
  for (std::size_t k : trip.lines) {
    if (k >= next.lines.size()) {
      throw Error(ErrorCode::kUnknownLine, "no line with index " + std::to_string(k));
    }
    if (!next.lines[k].in_service) {
      throw Error(ErrorCode::kUnknownLine, "line " + std::to_string(k) + " is already out of service");
    }
    next.lines[k].in_service = false;
  }
  GridPlant rebuilt = assemble_plant(next);
  return {std::move(rebuilt), std::move(next)};
}

}  // namespace feedopt::grid
