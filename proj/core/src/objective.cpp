#include "feedopt/objective.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "feedopt/error.hpp"

namespace feedopt {

namespace {

void require_size(const Vector& v, Eigen::Index expected, const char* what) {
  if (v.size() != expected) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " has length " +
                                                   std::to_string(v.size()) + ", expected " +
                                                   std::to_string(expected));
  }
}

Vector stack(const Vector& x, const Vector& u) {
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

// g(y) = max(0, y - hi) - max(0, lo - y), the derivative of the two-sided penalty
// up to the weights.
Vector two_sided_violation(const Vector& v, const Vector& lo, const Vector& hi) {
  return (v - hi).cwiseMax(0.0) - (lo - v).cwiseMax(0.0);
}

}  // namespace

QuadraticObjective::QuadraticObjective(Eigen::Index states, Matrix hessian, Vector linear,
                                       double offset, bool convex)
    : n_(states), hessian_(std::move(hessian)), linear_(std::move(linear)), offset_(offset),
      convex_(convex) {
  if (hessian_.rows() != hessian_.cols() || hessian_.rows() < n_ || n_ < 0) {
    throw Error(ErrorCode::kDimensionMismatch, "quadratic objective Hessian has wrong shape");
  }
  require_size(linear_, hessian_.rows(), "quadratic objective linear term");
  hessian_ = 0.5 * (hessian_ + hessian_.transpose());
}

double QuadraticObjective::value(const Vector& x, const Vector& u) const {
  require_size(x, states(), "x");
  require_size(u, inputs(), "u");
  const Vector z = stack(x, u);
  return 0.5 * z.dot(hessian_ * z) + linear_.dot(z) + offset_;
}

Vector QuadraticObjective::gradient(const Vector& x, const Vector& u) const {
  require_size(x, states(), "x");
  require_size(u, inputs(), "u");
  return hessian_ * stack(x, u) + linear_;
}

FunctionObjective::FunctionObjective(Eigen::Index states, Eigen::Index inputs, ValueFn value,
                                     GradientFn gradient, bool convex)
    : n_(states), p_(inputs), value_(std::move(value)), gradient_(std::move(gradient)),
      convex_(convex) {}

double penalty_value(const Vector& w, const Vector& xi) {
  require_size(xi, w.size(), "penalty weights");
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double v = std::max(0.0, w(i));
    total += xi(i) * v * v;
  }
  return 0.5 * total;
}

Vector penalty_gradient(const Vector& w, const Vector& xi) {
  require_size(xi, w.size(), "penalty weights");
  return xi.cwiseProduct(w.cwiseMax(0.0));
}

PenaltyObjective::PenaltyObjective(Matrix c, Matrix d, PenaltyTerms terms)
    : c_(std::move(c)), d_(std::move(d)), terms_(std::move(terms)) {
  const auto p = d_.cols();
  const auto m = c_.rows();
  if (d_.rows() != m) throw Error(ErrorCode::kDimensionMismatch, "D rows differ from C rows");
  require_size(terms_.cost_quadratic, p, "cost_quadratic");
  require_size(terms_.cost_linear, p, "cost_linear");
  require_size(terms_.u_lo, p, "u_lo");
  require_size(terms_.u_hi, p, "u_hi");
  require_size(terms_.y_lo, m, "y_lo");
  require_size(terms_.y_hi, m, "y_hi");
  require_size(terms_.xi_u, p, "xi_u");
  require_size(terms_.xi_y, m, "xi_y");
  require_finite(c_, "C");
  require_finite(d_, "D");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::isnan(terms_.u_lo(i)) || std::isnan(terms_.u_hi(i)) || terms_.u_lo(i) > terms_.u_hi(i)) {
      throw Error(ErrorCode::kDomainError, "input bounds violate u_lo <= u_hi at " + std::to_string(i));
    }
    if (!(terms_.xi_u(i) > 0.0) || !std::isfinite(terms_.xi_u(i))) {
      throw Error(ErrorCode::kDomainError, "input penalty weights must be positive");
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isnan(terms_.y_lo(i)) || std::isnan(terms_.y_hi(i)) || terms_.y_lo(i) > terms_.y_hi(i)) {
      throw Error(ErrorCode::kDomainError, "output bounds violate y_lo <= y_hi at " + std::to_string(i));
    }
    if (!(terms_.xi_y(i) > 0.0) || !std::isfinite(terms_.xi_y(i))) {
      throw Error(ErrorCode::kDomainError, "output penalty weights must be positive");
    }
  }
}

double PenaltyObjective::generation_cost(const Vector& u) const {
  require_size(u, inputs(), "u");
  return 0.5 * u.dot(terms_.cost_quadratic.cwiseProduct(u)) + terms_.cost_linear.dot(u);
}

double PenaltyObjective::value(const Vector& x, const Vector& u) const {
  require_size(x, states(), "x");
  const Vector y = c_ * x + d_ * u;
  return generation_cost(u) + penalty_value(u - terms_.u_hi, terms_.xi_u) +
         penalty_value(terms_.u_lo - u, terms_.xi_u) + penalty_value(y - terms_.y_hi, terms_.xi_y) +
         penalty_value(terms_.y_lo - y, terms_.xi_y);
}

Vector PenaltyObjective::gradient(const Vector& x, const Vector& u) const {
  require_size(x, states(), "x");
  require_size(u, inputs(), "u");
  const Vector y = c_ * x + d_ * u;
  const Vector gy = terms_.xi_y.cwiseProduct(two_sided_violation(y, terms_.y_lo, terms_.y_hi));
  Vector grad(states() + inputs());
  grad.head(states()) = c_.transpose() * gy;
  grad.tail(inputs()) = terms_.cost_quadratic.cwiseProduct(u) + terms_.cost_linear +
                        terms_.xi_u.cwiseProduct(two_sided_violation(u, terms_.u_lo, terms_.u_hi)) +
                        d_.transpose() * gy;
  return grad;
}

bool PenaltyObjective::convex() const { return (terms_.cost_quadratic.array() >= 0.0).all(); }

Vector PenaltyObjective::weights() const {
  Vector xi(terms_.xi_u.size() + terms_.xi_y.size());
  xi << terms_.xi_u, terms_.xi_y;
  return xi;
}

double reduced_value(const Objective& obj, const SteadyStateMap& ssm, const Vector& u,
                     const Vector& w) {
  return obj.value(ssm.state(u, w), u);
}

Vector reduced_gradient(const Objective& obj, const SteadyStateMap& ssm, const Vector& u,
                        const Vector& w) {
  return ssm.project(obj.gradient(ssm.state(u, w), u));
}

double lipschitz_bound_analytic(const PenaltyObjective& obj, const SteadyStateMap& ssm,
                                int max_enumerated_channels) {
  if (!obj.d().isZero(0.0)) {
    throw Error(ErrorCode::kUnsupportedObjective,
                "analytic Lipschitz bound requires zero feedthrough D; use the sampled estimate");
  }
  if (ssm.states() != obj.states() || ssm.inputs() != obj.inputs()) {
    throw Error(ErrorCode::kDimensionMismatch, "steady-state map does not match objective");
  }
  const PenaltyTerms& t = obj.terms();
  const Matrix& c = obj.c();
  const Matrix sensitivity = c * ssm.h;  // C H, m x p

  // Channels with any finite bound can be active. Equality channels are
  // enumerated as well: it costs at most one extra bit and keeps the bound
  // monotone in every weight.
  std::vector<Eigen::Index> toggling;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    if (std::isfinite(t.y_lo(i)) || std::isfinite(t.y_hi(i))) toggling.push_back(i);
  }

  auto norm_for = [&](const std::vector<Eigen::Index>& rows) {
    if (rows.empty()) return 0.0;
    Matrix left(rows.size(), sensitivity.cols());
    Matrix right(rows.size(), c.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      left.row(k) = t.xi_y(rows[k]) * sensitivity.row(rows[k]);
      right.row(k) = c.row(rows[k]);
    }
    return spectral_norm(left.transpose() * right);
  };

  if (static_cast<int>(toggling.size()) > max_enumerated_channels) {
    const std::vector<Eigen::Index>& rows = toggling;
    Matrix left(rows.size(), sensitivity.cols());
    Matrix right(rows.size(), c.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double s = std::sqrt(t.xi_y(rows[k]));
      left.row(k) = s * sensitivity.row(rows[k]);
      right.row(k) = s * c.row(rows[k]);
    }
    return spectral_norm(left) * spectral_norm(right);
  }

  double best = 0.0;
  const std::uint64_t patterns = std::uint64_t{1} << toggling.size();
  std::vector<Eigen::Index> rows;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    rows.clear();
    for (std::size_t k = 0; k < toggling.size(); ++k) {
      if (mask & (std::uint64_t{1} << k)) rows.push_back(toggling[k]);
    }
    best = std::max(best, norm_for(rows));
  }
  return best;
}

double lipschitz_bound_analytic(const QuadraticObjective& obj, const SteadyStateMap& ssm) {
  if (ssm.states() != obj.states() || ssm.inputs() != obj.inputs()) {
    throw Error(ErrorCode::kDimensionMismatch, "steady-state map does not match objective");
  }
  return spectral_norm(ssm.h_tilde_t * obj.hessian().leftCols(obj.states()));
}

double lipschitz_bound_sampled(const Objective& obj, const SteadyStateMap& ssm, int probes,
                               const SampleRegion& region, std::uint64_t seed) {
  const auto n = obj.states();
  const auto p = obj.inputs();
  require_size(region.x_lo, n, "region.x_lo");
  require_size(region.x_hi, n, "region.x_hi");
  require_size(region.u_lo, p, "region.u_lo");
  require_size(region.u_hi, p, "region.u_hi");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const Vector& lo, const Vector& hi) {
    Vector v(lo.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
    return v;
  };

  double best = 0.0;
  for (int k = 0; k < probes; ++k) {
    const Vector x = draw(region.x_lo, region.x_hi);
    const Vector x2 = draw(region.x_lo, region.x_hi);
    const Vector u = draw(region.u_lo, region.u_hi);
    const double dx = (x - x2).norm();
    if (dx == 0.0) continue;
    const double num = ssm.project(obj.gradient(x, u) - obj.gradient(x2, u)).norm();
    best = std::max(best, num / dx);
  }
  return best;
}

}  // namespace feedopt
