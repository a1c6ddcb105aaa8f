#include "feedopt/plant.hpp"

#include <string>

#include "feedopt/error.hpp"

namespace feedopt {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

LtiPlant::LtiPlant(Matrix a, Matrix b, Matrix q, Matrix c, Matrix d)
    : a_(std::move(a)), b_(std::move(b)), q_(std::move(q)), c_(std::move(c)), d_(std::move(d)) {
  const auto n = a_.rows();
  if (a_.cols() != n || n == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "A must be nonempty and square, got " + shape(a_));
  }
  if (b_.rows() != n) throw Error(ErrorCode::kDimensionMismatch, "B has shape " + shape(b_));
  if (q_.rows() != n) throw Error(ErrorCode::kDimensionMismatch, "Q has shape " + shape(q_));
  if (c_.cols() != n) throw Error(ErrorCode::kDimensionMismatch, "C has shape " + shape(c_));
  if (d_.rows() != c_.rows() || d_.cols() != b_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "D has shape " + shape(d_) + ", expected " + std::to_string(c_.rows()) + "x" +
                    std::to_string(b_.cols()));
  }
  require_finite(a_, "A");
  require_finite(b_, "B");
  require_finite(q_, "Q");
  require_finite(c_, "C");
  require_finite(d_, "D");
}

const PlantCertification& LtiPlant::certification() const {
  // A throwing callable leaves the flag unset, so failures are retried.
  std::call_once(cache_->once, [this] {
    cache_->value = std::make_shared<const PlantCertification>(certify_stability(*this));
  });
  return *cache_->value;
}

PlantCertification certify_stability(const LtiPlant& plant) {
  PlantCertification cert;
  try {
    cert.p = solve_lyapunov(plant.a());
  } catch (const Error& e) {
    throw Error(ErrorCode::kNotHurwitz, std::string("Lyapunov solve failed (") + e.what() + ")");
  }
  cert.min_eigenvalue = min_symmetric_eigenvalue(cert.p);
  if (!(cert.min_eigenvalue > 0.0)) {
    throw Error(ErrorCode::kNotHurwitz, "Lyapunov solution is not positive definite (min eigenvalue " +
                                            std::to_string(cert.min_eigenvalue) + ")");
  }
  return cert;
}

SteadyStateMap steady_state_map(const LtiPlant& plant) {
  const auto n = plant.states();
  const auto p = plant.inputs();
  const auto q = plant.disturbances();
  Matrix rhs(n, p + q);
  rhs << plant.b(), plant.q();
  const Matrix sol = -solve_linear(plant.a(), rhs);

  SteadyStateMap map;
  map.h = sol.leftCols(p);
  map.r = sol.rightCols(q);
  map.h_tilde_t.resize(p, n + p);
  map.h_tilde_t << map.h.transpose(), Matrix::Identity(p, p);
  return map;
}

DiscretizedPlant discretize_exact(const LtiPlant& plant, double step) {
  if (!(step > 0.0)) {
    throw Error(ErrorCode::kDomainError, "discretization step must be positive");
  }
  const auto n = plant.states();
  const auto p = plant.inputs();
  const auto q = plant.disturbances();
  Matrix aug = Matrix::Zero(n + p + q, n + p + q);
  aug.topLeftCorner(n, n) = plant.a();
  aug.block(0, n, n, p) = plant.b();
  aug.block(0, n + p, n, q) = plant.q();
  const Matrix e = matrix_exponential(aug * step);

  DiscretizedPlant d;
  d.step = step;
  d.a_d = e.topLeftCorner(n, n);
  d.b_d = e.block(0, n, n, p);
  d.q_d = e.block(0, n + p, n, q);
  return d;
}

}  // namespace feedopt
