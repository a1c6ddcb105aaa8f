#pragma once

#include <Eigen/Dense>

namespace feedopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerances shared by every module. Defaults are the library contract;
/// callers may tighten them but the tests are pinned to these values.
struct NumericSettings {
  /// Symmetry of Lyapunov solutions, max-abs of P - P^T.
  double lyapunov_symmetry = 1e-10;
  /// Relative size of |lambda_i + conj(lambda_j)| below which the Lyapunov
  /// operator is treated as singular.
  double lyapunov_singular = 1e-12;
  /// Reciprocal condition estimate below which a linear solve is refused.
  double singular_rcond = 1e-13;
  /// Relative residual accepted from solve_linear.
  double linear_residual = 1e-9;
};

inline constexpr NumericSettings kDefaultSettings{};

/// True when every entry is finite.
bool all_finite(const Eigen::Ref<const Matrix>& a);

/// Throws Error{kNonFinite} naming `what` if any entry of `a` is NaN/Inf.
void require_finite(const Eigen::Ref<const Matrix>& a, const char* what);

/// Solves A^T P + P A = -I for symmetric P (Bartels-Stewart on the complex
/// Schur form). Throws kSingularLyapunov when A has eigenvalues with
/// lambda_i + conj(lambda_j) ~ 0.
Matrix solve_lyapunov(const Eigen::Ref<const Matrix>& a,
                      const NumericSettings& settings = kDefaultSettings);

/// Largest singular value.
double spectral_norm(const Eigen::Ref<const Matrix>& a);

/// e^A via scaling and squaring with a Pade core.
Matrix matrix_exponential(const Eigen::Ref<const Matrix>& a);

/// Returns X with A X = B. Throws kSingularMatrix if A is singular to
/// working precision.
Matrix solve_linear(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                    const NumericSettings& settings = kDefaultSettings);

/// Smallest eigenvalue of a symmetric matrix.
double min_symmetric_eigenvalue(const Eigen::Ref<const Matrix>& a);

}  // namespace feedopt
