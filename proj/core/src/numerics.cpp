#include "feedopt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "feedopt/error.hpp"

namespace feedopt {

namespace {

void require_square(const Eigen::Ref<const Matrix>& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(who) + ": expected a nonempty square matrix, got " +
                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

}  // namespace

bool all_finite(const Eigen::Ref<const Matrix>& a) { return a.allFinite(); }

void require_finite(const Eigen::Ref<const Matrix>& a, const char* what) {
  if (!a.allFinite()) {
    throw Error(ErrorCode::kNonFinite, std::string(what) + " contains NaN or Inf");
  }
}

Matrix solve_lyapunov(const Eigen::Ref<const Matrix>& a, const NumericSettings& settings) {
  require_square(a, "solve_lyapunov");
  require_finite(a, "solve_lyapunov input");
  const Eigen::Index n = a.rows();

  // A = U T U^H, so A^T = A^H = U T^H U^H and the equation becomes
  // T^H Y + Y T = -I with Y = U^H P U.
  Eigen::ComplexSchur<Matrix> schur(a);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularLyapunov, "Schur decomposition did not converge");
  }
  const Eigen::MatrixXcd& t = schur.matrixT();
  const Eigen::MatrixXcd& u = schur.matrixU();

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      std::complex<double> rhs = (i == j) ? -1.0 : 0.0;
      for (Eigen::Index k = 0; k < i; ++k) rhs -= std::conj(t(k, i)) * y(k, j);
      for (Eigen::Index k = 0; k < j; ++k) rhs -= y(i, k) * t(k, j);
      const std::complex<double> denom = std::conj(t(i, i)) + t(j, j);
      if (std::abs(denom) <= settings.lyapunov_singular * scale) {
        throw Error(ErrorCode::kSingularLyapunov,
                    "eigenvalue pair sums to zero; A is not Hurwitz");
      }
      y(i, j) = rhs / denom;
    }
  }
  Matrix p = (u * y * u.adjoint()).real();
  p = 0.5 * (p + p.transpose());
  if (!p.allFinite()) {
    throw Error(ErrorCode::kSingularLyapunov, "solution is not finite");
  }
  return p;
}

double spectral_norm(const Eigen::Ref<const Matrix>& a) {
  require_finite(a, "spectral_norm input");
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

Matrix matrix_exponential(const Eigen::Ref<const Matrix>& a) {
  require_square(a, "matrix_exponential");
  require_finite(a, "matrix_exponential input");
  Matrix result = Matrix(a).exp();
  if (!result.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "matrix exponential overflowed");
  }
  return result;
}

Matrix solve_linear(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                    const NumericSettings& settings) {
  require_square(a, "solve_linear");
  if (b.rows() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "solve_linear: right-hand side has " + std::to_string(b.rows()) +
                    " rows, expected " + std::to_string(a.rows()));
  }
  require_finite(a, "solve_linear matrix");
  require_finite(b, "solve_linear right-hand side");

  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > settings.singular_rcond)) {
    throw Error(ErrorCode::kSingularMatrix,
                "matrix is singular to working precision (rcond " + std::to_string(rcond) + ")");
  }
  Matrix x = lu.solve(b);
  Matrix residual = a * x - b;
  // One step of iterative refinement.
  x -= lu.solve(residual);
  residual = a * x - b;
  if (!x.allFinite() || residual.norm() > settings.linear_residual * std::max(b.norm(), 1e-300)) {
    throw Error(ErrorCode::kSingularMatrix, "residual of linear solve exceeds tolerance");
  }
  return x;
}

double min_symmetric_eigenvalue(const Eigen::Ref<const Matrix>& a) {
  require_square(a, "min_symmetric_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace feedopt
