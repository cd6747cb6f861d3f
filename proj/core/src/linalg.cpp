#include "meb/linalg.hpp"

#include <cmath>
#include <limits>

#include "meb/errors.hpp"

namespace meb {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> decompose(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw SingularDesign("symmetric eigendecomposition failed to converge");
  }
  return es;
}

double cond_from_eigs(const Eigen::VectorXd& eigs) {
  const double hi = eigs.cwiseAbs().maxCoeff();
  const double lo = eigs.cwiseAbs().minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

SymSolve solve_symmetric(const Eigen::MatrixXd& m, const Eigen::VectorXd& b,
                         const SolveOptions& opts) {
  auto es = decompose(m);
  double cond = cond_from_eigs(es.eigenvalues());
  double ridge = 0.0;
  if (!(cond <= opts.condition_threshold)) {
    if (!opts.allow_ridge_fallback) {
      throw SingularDesign("condition number " + std::to_string(cond) +
                           " exceeds threshold");
    }
    ridge = 1e-8 * m.trace() / static_cast<double>(m.rows());
    Eigen::MatrixXd regularized =
        m + ridge * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    es = decompose(regularized);
    cond = cond_from_eigs(es.eigenvalues());
    if (!(cond <= opts.condition_threshold)) {
      throw SingularDesign("singular even after ridge fallback");
    }
  }
  SymSolve out;
  out.condition_number = cond;
  out.regularizer = ridge;
  out.x = es.eigenvectors() *
          (es.eigenvalues().cwiseInverse().asDiagonal() *
           (es.eigenvectors().transpose() * b));
  return out;
}

double symmetric_condition_number(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return cond_from_eigs(es.eigenvalues());
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out =
      es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  // symmetrize exactly; the reconstruction can differ in the last bit
  return 0.5 * (out + out.transpose());
}

double symmetric_operator_norm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace meb
