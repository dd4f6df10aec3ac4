#pragma once

// Monte-Carlo machinery: correlated twist sampling, sample-covariance
// estimators, covariance error metrics and ellipsoid containment.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "jpose/belief.hpp"

namespace jpose {

/// N steps of identical mean and marginal covariance, each correlated with
/// its predecessor through the cross block rho * step_covariance.
template <int D>
struct ChainNoiseSpec {
  Covariance<D> step_covariance = Covariance<D>::Zero();
  Pose<D> step_mean;
  std::size_t steps = 1;
  double rho = 0.0;
};

/// Joint belief over the chain steps (keys 0..N-1). Throws InvalidSpec, with
/// the index of the failing Cholesky pivot, when the joint is not PSD.
template <int D>
JointPoseBelief<D> build_chain_joint(const ChainNoiseSpec<D>& spec);

/// M draws of a dim-vector, stored column-wise.
class SampleBatch {
 public:
  SampleBatch() = default;
  explicit SampleBatch(Eigen::MatrixXd draws) : draws_(std::move(draws)) {}

  std::size_t size() const { return static_cast<std::size_t>(draws_.cols()); }
  Eigen::Index dim() const { return draws_.rows(); }
  const Eigen::MatrixXd& draws() const { return draws_; }
  Eigen::MatrixXd::ConstColXpr draw(std::size_t m) const {
    return draws_.col(static_cast<Eigen::Index>(m));
  }

 private:
  Eigen::MatrixXd draws_;
};

/// Draws per random substream. Chunk c of a batch always uses the stream
/// derived from (seed, c), so the batch does not depend on the worker count.
inline constexpr std::size_t kSampleChunk = 4096;

/// M draws from N(0, cov) as F z with F F^T = cov. Identical seeds give
/// identical standard-normal draws z, so batches for different covariances
/// of the same size share their random numbers. Throws SamplingError when cov
/// cannot be factored.
SampleBatch sample_gaussian(const Eigen::MatrixXd& cov, std::size_t count, std::uint64_t seed,
                            unsigned jobs = 1);

template <int D>
SampleBatch sample_joint(const JointPoseBelief<D>& belief, std::size_t count, std::uint64_t seed,
                         unsigned jobs = 1);

/// Poses exp(xi_i^) T_i of draw m.
template <int D>
std::vector<Pose<D>> realize(const JointPoseBelief<D>& belief, const SampleBatch& batch,
                             std::size_t m);

template <int D>
struct RelativeSamples {
  Pose<D> mean;
  /// T_m = (exp(xi_1) T_1)^-1 exp(xi_2) T_2 for each draw.
  std::vector<Pose<D>> poses;
};

template <int D>
RelativeSamples<D> sample_relative(const PosePairBelief<D>& pair, std::size_t count,
                                   std::uint64_t seed, unsigned jobs = 1);

template <int D>
struct RelativeCovariance {
  Covariance<D> covariance = Covariance<D>::Zero();
  std::size_t used = 0;
  std::size_t excluded = 0;
};

/// Uncentered second moment (1/M) sum xi_m xi_m^T of xi_m = log(T_m T_12^-1)
/// about T_12 = T_1^-1 T_2. Samples on a log singularity are dropped; more
/// than 0.1% dropped raises SamplingError.
template <int D>
RelativeCovariance<D> mc_relative_cov(const RelativeSamples<D>& samples);

template <int D>
RelativeCovariance<D> mc_relative_cov(const PosePairBelief<D>& pair, std::size_t count,
                                      std::uint64_t seed, unsigned jobs = 1);

/// (1/M) X X^T.
Eigen::MatrixXd second_moment(const Eigen::MatrixXd& samples);
/// (1/M) sum (x - mean)(x - mean)^T.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples);

/// Frobenius norm of sigma - sigma_mc. Throws InvalidArgument on shape mismatch.
double cov_error(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& sigma_mc);

/// cov_error with both arguments divided by ||sigma_mc||_F.
double normalized_cov_error(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& sigma_mc);

/// Quantile of the chi-square distribution, by bisection on its CDF.
double chi2_quantile(double p, int dof);

enum class ContainmentMode { kFull, kPositionOnly };

/// Number of position coordinates for a twist or pose-vector dimension.
int position_dims(Eigen::Index dim);

/// Fraction of columns with x^T sigma^-1 x <= chi2_quantile(p, dof).
/// Throws InvalidArgument when sigma is singular on the selected channels.
double containment_fraction(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& sigma,
                            double p, ContainmentMode mode = ContainmentMode::kFull);

}  // namespace jpose
