#pragma once

// Conversion of coordinate-vector beliefs into Lie-algebra beliefs.
//
// For pose i with coordinate mean x_i, the Lie mean is T_i = f(x_i) and a
// coordinate sample x~ maps to the twist l_i(x~) = log(f(x~) f(x_i)^-1).
// The unscented transform pushes 2 L + 1 sigma points (L = stacked input
// dimension) through l and forms sum_k W_k l_k l_k^T.

#include <cstddef>
#include <vector>

#include "jpose/belief.hpp"
#include "jpose/ssc.hpp"

namespace jpose {

enum class UtMode { kStandard, kScaled };

struct UtConfig {
  /// Spread parameter. Standard mode requires L + kappa > 0.
  double kappa = 0.0;
  UtMode mode = UtMode::kStandard;
  /// Scaled mode only.
  double alpha = 1.0;
  double beta = 2.0;
};

/// Sigma-point weights for an input of dimension dim. mean[0] / cov[0]
/// belong to the central point; the 2 dim remaining points share one weight.
struct UtWeights {
  std::vector<double> mean;
  std::vector<double> cov;
  /// Scale applied to the covariance factor columns.
  double spread = 0.0;
};

UtWeights ut_weights(std::size_t dim, const UtConfig& cfg);

template <int D>
struct ConversionResult {
  JointPoseBelief<D> belief;
  /// || sum_k W_k l_k ||, the weighted mean the covariance formula ignores.
  double residual_mean_norm = 0.0;
  std::size_t sigma_point_count = 0;
};

/// Unscented conversion. Keys are 0..n-1.
/// Throws ConversionFailure when the input covariance cannot be factored and
/// SigmaPointSingularity when a sigma point lands on a log singularity.
template <int D>
ConversionResult<D> ut_convert(const SscBelief<D>& belief, const UtConfig& cfg = {});

/// First-order conversion: J Sigma J^T with J the Jacobian of l at the means.
template <int D>
JointPoseBelief<D> linearized_convert(const SscBelief<D>& belief);

/// Stacked l(x) for a stacked coordinate vector x about the belief means.
template <int D>
Eigen::VectorXd lie_residual(const SscBelief<D>& belief, const Eigen::VectorXd& x);

}  // namespace jpose
