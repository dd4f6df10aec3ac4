#include "jpose/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace jpose::linalg {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double asymmetry(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

namespace {

bool reproduces(const Eigen::MatrixXd& factor, const Eigen::MatrixXd& cov) {
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
  return ((factor * factor.transpose() - cov).cwiseAbs().maxCoeff() <= 1e-9 * scale);
}

// Symmetric square root with eigenvalues below a relative tolerance dropped,
// so exactly dependent coordinates receive identical rows.
std::optional<Eigen::MatrixXd> semidefinite_factor(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd values = eig.eigenvalues();
  const double tol = 1e-12 * std::max(values.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -tol) return std::nullopt;
    values(i) = values(i) <= tol ? 0.0 : std::sqrt(values(i));
  }
  Eigen::MatrixXd factor = eig.eigenvectors() * values.asDiagonal();
  if (!reproduces(factor, cov)) return std::nullopt;
  return factor;
}

}  // namespace

std::optional<Eigen::MatrixXd> covariance_factor(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || !cov.allFinite()) return std::nullopt;
  if (cov.size() == 0) return Eigen::MatrixXd(0, 0);
  if (cov.isZero(0.0)) return Eigen::MatrixXd::Zero(cov.rows(), cov.cols());

  // A Cholesky that only succeeds through rounding on a rank-deficient
  // matrix mixes noise into directions that should be exactly dependent.
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    const Eigen::VectorXd pivots = Eigen::MatrixXd(llt.matrixL()).diagonal().array().square();
    if (pivots.minCoeff() > 1e-10 * cov.diagonal().cwiseAbs().maxCoeff()) {
      return Eigen::MatrixXd(llt.matrixL());
    }
  }

  if (auto factor = semidefinite_factor(cov)) return factor;

  const double trace = cov.trace();
  if (!(trace > 0.0)) return std::nullopt;
  double jitter = 1e-12 * trace;
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd bumped = cov;
    bumped.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> retry(bumped);
    if (retry.info() == Eigen::Success) return Eigen::MatrixXd(retry.matrixL());
  }
  return std::nullopt;
}

double correlation(double cross, double var_a, double var_b) {
  const double denom = std::sqrt(var_a * var_b);
  return denom > 0.0 ? cross / denom : 0.0;
}

}  // namespace jpose::linalg
