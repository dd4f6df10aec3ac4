#pragma once

// Coordinate-vector pose beliefs in the style of the stochastic map.
//
// A pose is a vector of position and Euler angles:
//   planar:  (x, y, psi)
//   spatial: (x, y, z, phi, theta, psi), R = Rz(psi) Ry(theta) Rx(phi)
// Several poses are stacked into one vector with one joint covariance.
// Covariances are propagated through central-difference Jacobians.

#include <functional>

#include <Eigen/Core>

#include "jpose/belief.hpp"
#include "jpose/lie.hpp"

namespace jpose {

template <int D>
using SscVector = Eigen::Matrix<double, kDof<D>, 1>;

/// Finite-difference step for every Jacobian in this module.
inline constexpr double kSscJacobianStep = 1e-6;
/// pose_to_ssc refuses |pitch| within this distance of pi/2.
inline constexpr double kGimbalTolerance = 1e-6;

template <int D>
Pose<D> ssc_to_pose(const SscVector<D>& x);

/// Angles come back in (-pi, pi]; throws GimbalLock near |pitch| = pi/2.
template <int D>
SscVector<D> pose_to_ssc(const Pose<D>& pose);

/// True for the Euler-angle entries of one pose vector.
template <int D>
constexpr bool is_angle_coordinate(int index) {
  return D == 2 ? index == 2 : index >= 3;
}

/// Difference a - b with angle coordinates wrapped to (-pi, pi].
Eigen::VectorXd ssc_difference(int dim, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Central-difference Jacobian of f at x. When angle_dim > 0, every output
/// coordinate is treated as part of a stacked pose vector of that dimension
/// and angle differences are wrapped.
Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step = kSscJacobianStep,
                                   int angle_dim = 0);

template <int D>
class SscBelief {
 public:
  static constexpr int kBlock = kDof<D>;

  /// mean stacks n pose vectors; cov is (kBlock n) square, symmetrized and
  /// checked PSD (eigenvalues >= -kPsdTolerance). Angles are wrapped.
  SscBelief(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

  /// Same, but accepts eigenvalues down to -kPropagationPsdTolerance and
  /// raises NumericalDegeneracy beyond that.
  static SscBelief FromPropagated(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

  /// Two independent poses.
  static SscBelief Pair(const SscVector<D>& a, const Covariance<D>& cov_a, const SscVector<D>& b,
                        const Covariance<D>& cov_b, const Covariance<D>& cross);

  std::size_t size() const { return static_cast<std::size_t>(mean_.size() / kBlock); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

  SscVector<D> pose(std::size_t k) const {
    return mean_.segment<kBlock>(static_cast<Eigen::Index>(k) * kBlock);
  }
  Covariance<D> block(std::size_t a, std::size_t b) const {
    return cov_.block<kBlock, kBlock>(static_cast<Eigen::Index>(a) * kBlock,
                                      static_cast<Eigen::Index>(b) * kBlock);
  }

 private:
  struct Trusted {};
  SscBelief(Eigen::VectorXd mean, Eigen::MatrixXd cov, Trusted)
      : mean_(std::move(mean)), cov_(std::move(cov)) {}

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// x_ik = x_ij (+) x_jk over a two-pose belief.
template <int D>
SscBelief<D> head_to_tail(const SscBelief<D>& pair);

/// x_1 (+) x_2 (+) ... (+) x_N with one Jacobian over the whole stack.
template <int D>
SscBelief<D> head_to_tail_chain(const SscBelief<D>& chain);

/// (-) x over a one-pose belief.
template <int D>
SscBelief<D> ssc_inverse(const SscBelief<D>& single);

/// x_jk = (-) x_ij (+) x_ik over a two-pose belief.
template <int D>
SscBelief<D> tail_to_tail(const SscBelief<D>& pair);

/// Coordinate rendering of a Lie-algebra belief, linearized at the means:
/// each block is pushed through the Jacobian of xi -> pose_to_ssc(exp(xi) T).
template <int D>
SscBelief<D> ssc_from_lie_first_order(const JointPoseBelief<D>& belief);

template <> Pose<2> ssc_to_pose<2>(const SscVector<2>& x);
template <> Pose<3> ssc_to_pose<3>(const SscVector<3>& x);
template <> SscVector<2> pose_to_ssc<2>(const Pose<2>& pose);
template <> SscVector<3> pose_to_ssc<3>(const Pose<3>& pose);

extern template class SscBelief<2>;
extern template class SscBelief<3>;

}  // namespace jpose
