#pragma once

#include <optional>

#include <Eigen/Core>

namespace jpose::linalg {

/// 0.5 (M + M^T)
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m);

/// Largest |M - M^T| entry.
double asymmetry(const Eigen::MatrixXd& m);

/// Returns a factor F with F F^T = cov, or nullopt when cov cannot be
/// factored. Policy: plain Cholesky when well conditioned, then a clipped
/// eigen square root for semidefinite input, then up to three retries with
/// 1e-12 * trace * 10^k added to the diagonal.
std::optional<Eigen::MatrixXd> covariance_factor(const Eigen::MatrixXd& cov);

/// Pearson correlation of two channels, 0 when either variance vanishes.
double correlation(double cross, double var_a, double var_b);

}  // namespace jpose::linalg
