#pragma once

#include <memory>
#include <mutex>

#include "feedopt/numerics.hpp"

namespace feedopt {

/// Lyapunov certificate of exponential stability: A^T P + P A = -I, P > 0.
struct PlantCertification {
  Matrix p;
  double min_eigenvalue = 0.0;
};

/// Continuous-time LTI plant
///   x' = A x + B u + Q w,   y = C x + D u.
/// Immutable once constructed; copies share the cached certification.
class LtiPlant {
 public:
  LtiPlant(Matrix a, Matrix b, Matrix q, Matrix c, Matrix d);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& q() const { return q_; }
  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }

  Eigen::Index states() const { return a_.rows(); }
  Eigen::Index inputs() const { return b_.cols(); }
  Eigen::Index disturbances() const { return q_.cols(); }
  Eigen::Index outputs() const { return c_.rows(); }

  Vector output(const Vector& x, const Vector& u) const { return c_ * x + d_ * u; }

  /// Certification computed on first use and cached. Throws kNotHurwitz.
  const PlantCertification& certification() const;

 private:
  struct Cache {
    std::once_flag once;
    std::shared_ptr<const PlantCertification> value;
  };

  Matrix a_, b_, q_, c_, d_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Solves the Lyapunov equality and checks P > 0. Throws kNotHurwitz when the
/// solve fails or P has a non-positive eigenvalue.
PlantCertification certify_stability(const LtiPlant& plant);

/// Equilibrium map x = H u + R w of a Hurwitz plant.
struct SteadyStateMap {
  Matrix h;          // n x p, -A^{-1} B
  Matrix r;          // n x q, -A^{-1} Q
  Matrix h_tilde_t;  // p x (n+p), [H^T  I_p]

  Eigen::Index states() const { return h.rows(); }
  Eigen::Index inputs() const { return h.cols(); }

  Vector state(const Vector& u, const Vector& w) const { return h * u + r * w; }
  /// Applies [H^T I] to a stacked (n+p) vector.
  Vector project(const Vector& stacked) const { return h_tilde_t * stacked; }
};

SteadyStateMap steady_state_map(const LtiPlant& plant);

/// Zero-order-hold discretization: x+ = A_d x + B_d u + Q_d w.
struct DiscretizedPlant {
  double step = 0.0;
  Matrix a_d;
  Matrix b_d;
  Matrix q_d;

  Vector advance(const Vector& x, const Vector& u, const Vector& w) const {
    return a_d * x + b_d * u + q_d * w;
  }
};

/// Exact discretization from the exponential of [[A, B, Q], [0, 0, 0]] * step.
DiscretizedPlant discretize_exact(const LtiPlant& plant, double step);

}  // namespace feedopt
