#pragma once

#include <Eigen/Dense>

namespace meb {

/// Outcome of a conditioned symmetric solve.
struct SymSolve {
  Eigen::VectorXd x;
  double condition_number = 1.0;  // |lambda|_max / |lambda|_min
  double regularizer = 0.0;       // ridge actually added (0 unless fallback fired)
};

struct SolveOptions {
  double condition_threshold = 1e12;
  /// When the condition estimate exceeds the threshold, add
  /// 1e-8 * tr(M)/d to the diagonal instead of failing.
  bool allow_ridge_fallback = false;
};

/// Solves M x = b for symmetric (possibly indefinite) M through a spectral
/// factorization. Throws SingularDesign when the condition estimate exceeds
/// the threshold and no fallback is allowed.
SymSolve solve_symmetric(const Eigen::MatrixXd& m, const Eigen::VectorXd& b,
                         const SolveOptions& opts = {});

/// Largest |eigenvalue| / smallest |eigenvalue| of a symmetric matrix
/// (infinity when the smallest magnitude is zero).
double symmetric_condition_number(const Eigen::MatrixXd& m);

/// Nearest PSD matrix in the spectral sense: eigenvalues clamped at zero.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m);

/// Spectral (operator) norm of a symmetric matrix.
double symmetric_operator_norm(const Eigen::MatrixXd& m);

}  // namespace meb
