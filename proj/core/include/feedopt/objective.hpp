#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "feedopt/numerics.hpp"
#include "feedopt/plant.hpp"

namespace feedopt {

/// Cost Phi(x, u) on the plant state and input. Implementations must be pure;
/// one instance may be shared by several loops.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index states() const = 0;
  virtual Eigen::Index inputs() const = 0;

  virtual double value(const Vector& x, const Vector& u) const = 0;
  /// Stacked gradient (grad_x Phi, grad_u Phi), length n + p.
  virtual Vector gradient(const Vector& x, const Vector& u) const = 0;

  /// User-asserted convexity of Phi.
  virtual bool convex() const { return false; }
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// Phi(z) = 1/2 z^T W z + g^T z + c with z = (x, u).
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Eigen::Index states, Matrix hessian, Vector linear, double offset = 0.0,
                     bool convex = true);

  Eigen::Index states() const override { return n_; }
  Eigen::Index inputs() const override { return hessian_.rows() - n_; }
  double value(const Vector& x, const Vector& u) const override;
  Vector gradient(const Vector& x, const Vector& u) const override;
  bool convex() const override { return convex_; }

  const Matrix& hessian() const { return hessian_; }

 private:
  Eigen::Index n_;
  Matrix hessian_;
  Vector linear_;
  double offset_;
  bool convex_;
};

/// Wraps caller-supplied evaluators.
class FunctionObjective final : public Objective {
 public:
  using ValueFn = std::function<double(const Vector&, const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&, const Vector&)>;

  FunctionObjective(Eigen::Index states, Eigen::Index inputs, ValueFn value, GradientFn gradient,
                    bool convex = false);

  Eigen::Index states() const override { return n_; }
  Eigen::Index inputs() const override { return p_; }
  double value(const Vector& x, const Vector& u) const override { return value_(x, u); }
  Vector gradient(const Vector& x, const Vector& u) const override { return gradient_(x, u); }
  bool convex() const override { return convex_; }

 private:
  Eigen::Index n_, p_;
  ValueFn value_;
  GradientFn gradient_;
  bool convex_;
};

/// rho(w) = 1/2 sum_i xi_i max(0, w_i)^2.
double penalty_value(const Vector& w, const Vector& xi);
/// d rho / d w = Xi max(0, w).
Vector penalty_gradient(const Vector& w, const Vector& xi);

/// Parameters of the soft-constrained generation cost
///   Phi(x, u) = f(u) + rho([u; y] - [u_hi; y_hi]) + rho([u_lo; y_lo] - [u; y]),
///   f(u) = sum_i 1/2 a_i u_i^2 + b_i u_i,   y = C x + D u.
/// Infinite bounds disable the corresponding side of a constraint.
struct PenaltyTerms {
  Vector cost_quadratic;
  Vector cost_linear;
  Vector u_lo, u_hi;
  Vector y_lo, y_hi;
  Vector xi_u;
  Vector xi_y;
};

class PenaltyObjective final : public Objective {
 public:
  PenaltyObjective(Matrix c, Matrix d, PenaltyTerms terms);

  Eigen::Index states() const override { return c_.cols(); }
  Eigen::Index inputs() const override { return d_.cols(); }
  Eigen::Index outputs() const { return c_.rows(); }

  double value(const Vector& x, const Vector& u) const override;
  Vector gradient(const Vector& x, const Vector& u) const override;
  bool convex() const override;

  double generation_cost(const Vector& u) const;

  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }
  const PenaltyTerms& terms() const { return terms_; }
  /// Stacked weights (xi_u, xi_y).
  Vector weights() const;

 private:
  Matrix c_, d_;
  PenaltyTerms terms_;
};

/// Reduced cost Phi~^w(u) = Phi(H u + R w, u).
double reduced_value(const Objective& obj, const SteadyStateMap& ssm, const Vector& u,
                     const Vector& w);
/// Gradient of the reduced cost, H~^T grad Phi(H u + R w, u).
Vector reduced_gradient(const Objective& obj, const SteadyStateMap& ssm, const Vector& u,
                        const Vector& w);

/// Upper bound on l with ||H~^T (grad Phi(x,u) - grad Phi(x',u))|| <= l ||x - x'||.
///
/// Only grad_x Phi depends on x, through C^T Xi_y g(C x) where each component of g
/// has difference quotients in [0, 1]. The norm is convex in those quotients,
/// so the bound is
///   max over S in {0,1}^k of ||H^T C^T Xi_y S C||,
/// enumerating the k output channels that have a finite bound (channels
/// without bounds never contribute). For k > `max_enumerated_channels` the
/// product bound ||Xi^1/2 C H|| ||Xi^1/2 C|| is used instead. Both forms are
/// nondecreasing in every weight. Throws kUnsupportedObjective when D != 0.
double lipschitz_bound_analytic(const PenaltyObjective& obj, const SteadyStateMap& ssm,
                                int max_enumerated_channels = 14);

/// Exact constant for a quadratic: ||H~^T W[:, x]||.
double lipschitz_bound_analytic(const QuadraticObjective& obj, const SteadyStateMap& ssm);

/// Axis-aligned sampling box for x and u.
struct SampleRegion {
  Vector x_lo, x_hi;
  Vector u_lo, u_hi;
};

/// Empirical lower estimate of the same constant: max ratio over `probes`
/// random (x, x', u) triples drawn uniformly from `region`.
double lipschitz_bound_sampled(const Objective& obj, const SteadyStateMap& ssm, int probes,
                               const SampleRegion& region, std::uint64_t seed = 0);

}  // namespace feedopt
