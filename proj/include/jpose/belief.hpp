#pragma once

// Uncertain poses with Gaussian perturbations in the Lie algebra.
//
// A random pose is T = exp(xi^) * T_mean with xi ~ N(0, Sigma). A set of poses
// is jointly Gaussian when their perturbations are stacked into one vector
// with a single covariance; cross blocks carry the correlation between poses.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "jpose/lie.hpp"

namespace jpose {

using Key = std::uint64_t;

/// Tolerance on the smallest eigenvalue of a covariance handed to a belief.
inline constexpr double kPsdTolerance = 1e-10;
/// Tolerance on the smallest eigenvalue of a propagated covariance.
inline constexpr double kPropagationPsdTolerance = 1e-8;

template <int D>
class UncertainPose {
 public:
  /// Symmetrizes cov; throws InvalidArgument if it is not PSD within kPsdTolerance.
  UncertainPose(const Pose<D>& mean, const Covariance<D>& cov);

  /// Deterministic pose (zero covariance).
  static UncertainPose Known(const Pose<D>& mean);

  /// For covariances produced by propagation: symmetrizes and accepts
  /// eigenvalues down to -kPropagationPsdTolerance, else NumericalDegeneracy.
  static UncertainPose FromPropagated(const Pose<D>& mean, const Covariance<D>& cov);

  const Pose<D>& mean() const { return mean_; }
  const Covariance<D>& covariance() const { return cov_; }

 private:
  struct Trusted {};
  UncertainPose(const Pose<D>& mean, const Covariance<D>& cov, Trusted)
      : mean_(mean), cov_(cov) {}

  Pose<D> mean_;
  Covariance<D> cov_;
};

/// Two jointly Gaussian poses. The covariance is ordered (first, second):
///   [[Sigma_1,     Sigma_12],
///    [Sigma_12^T,  Sigma_2 ]]
template <int D>
class PosePairBelief {
 public:
  static constexpr int kDim = 2 * kDof<D>;
  using JointCovariance = Eigen::Matrix<double, kDim, kDim>;
  using CrossCovariance = Covariance<D>;

  PosePairBelief(const Pose<D>& first, const Pose<D>& second, const JointCovariance& cov);

  /// Assembles the joint covariance from its named blocks.
  static PosePairBelief FromBlocks(const Pose<D>& first, const Pose<D>& second,
                                   const Covariance<D>& sigma_first,
                                   const Covariance<D>& sigma_second,
                                   const CrossCovariance& sigma_cross);

  static PosePairBelief Independent(const UncertainPose<D>& first, const UncertainPose<D>& second);

  const Pose<D>& first() const { return first_; }
  const Pose<D>& second() const { return second_; }
  const JointCovariance& covariance() const { return cov_; }

  Covariance<D> first_covariance() const { return cov_.template topLeftCorner<kDof<D>, kDof<D>>(); }
  Covariance<D> second_covariance() const {
    return cov_.template bottomRightCorner<kDof<D>, kDof<D>>();
  }
  /// Sigma_12 = E[xi_first xi_second^T].
  CrossCovariance cross_covariance() const {
    return cov_.template topRightCorner<kDof<D>, kDof<D>>();
  }

  UncertainPose<D> first_marginal() const;
  UncertainPose<D> second_marginal() const;

 private:
  Pose<D> first_;
  Pose<D> second_;
  JointCovariance cov_;
};

/// n poses with one (m n) x (m n) covariance over the stacked perturbations.
template <int D>
class JointPoseBelief {
 public:
  static constexpr int kBlock = kDof<D>;

  /// Validates dimensions, duplicate keys and symmetric PSD covariance
  /// (covariance is symmetrized first).
  JointPoseBelief(std::vector<Key> keys, std::vector<Pose<D>> means, const Eigen::MatrixXd& cov);

  /// Keys 0..n-1.
  JointPoseBelief(std::vector<Pose<D>> means, const Eigen::MatrixXd& cov);

  std::size_t size() const { return keys_.size(); }
  const std::vector<Key>& keys() const { return keys_; }
  const std::vector<Pose<D>>& means() const { return means_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

  /// Position of key in the stacking order; throws KeyNotFound.
  std::size_t index_of(Key key) const;

  const Pose<D>& mean(Key key) const { return means_[index_of(key)]; }

  /// Covariance block (a, b) by stacking index.
  Covariance<D> block(std::size_t a, std::size_t b) const {
    return cov_.block<kBlock, kBlock>(static_cast<Eigen::Index>(a) * kBlock,
                                      static_cast<Eigen::Index>(b) * kBlock);
  }

  UncertainPose<D> marginal(Key key) const;

  /// Copy with every cross block zeroed.
  JointPoseBelief without_correlation() const;

 private:
  std::vector<Key> keys_;
  std::vector<Pose<D>> means_;
  Eigen::MatrixXd cov_;
};

/// Two-pose sub-belief (i, j). Throws KeyNotFound for an unknown key and
/// InvalidArgument when i == j.
template <int D>
PosePairBelief<D> marginal_pair(const JointPoseBelief<D>& belief, Key i, Key j);

/// Head-to-tail composition T_ik = T_ij T_jk of a correlated pair (T_ij, T_jk):
///   Sigma_ik = Sigma_ij + Ad Sigma_jk Ad^T + Sigma_ij,jk Ad^T + Ad Sigma_ij,jk^T,
/// with Ad = Ad(T_ij mean). Throws NumericalDegeneracy on an indefinite result.
template <int D>
UncertainPose<D> compose(const PosePairBelief<D>& pair);

/// Composition of independent poses.
template <int D>
UncertainPose<D> compose(const UncertainPose<D>& a, const UncertainPose<D>& b);

/// T_1 T_2 ... T_N over a joint belief listed head to tail. The covariance is
/// J Sigma J^T with block k of J equal to Ad(T_1 ... T_{k-1}).
template <int D>
UncertainPose<D> compose_chain(const JointPoseBelief<D>& chain);

/// T^-1 with covariance Ad(T^-1) Sigma Ad(T^-1)^T.
template <int D>
UncertainPose<D> inverse(const UncertainPose<D>& u);

/// Relative pose T_jk = T_ij^-1 T_ik from two correlated poses sharing base
/// frame i:
///   Sigma_jk = Ad (Sigma_ij + Sigma_ik - Sigma_ij,ik - Sigma_ij,ik^T) Ad^T,
/// Ad = Ad(T_ij mean ^-1).
template <int D>
UncertainPose<D> between(const PosePairBelief<D>& pair);

/// Relative pose of independent poses.
template <int D>
UncertainPose<D> between(const UncertainPose<D>& a, const UncertainPose<D>& b);

/// between() with the cross block treated as zero.
template <int D>
UncertainPose<D> between_ignoring_correlation(const PosePairBelief<D>& pair);

#define JPOSE_DECLARE_BELIEF(D)                                                       \
  extern template class UncertainPose<D>;                                             \
  extern template class PosePairBelief<D>;                                            \
  extern template class JointPoseBelief<D>;

JPOSE_DECLARE_BELIEF(2)
JPOSE_DECLARE_BELIEF(3)

#undef JPOSE_DECLARE_BELIEF

}  // namespace jpose
