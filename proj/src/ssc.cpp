#include "jpose/ssc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace jpose {

namespace {

bool angle_slot(int dim, Eigen::Index i) {
  const auto local = static_cast<int>(i % dim);
  return dim == 3 ? local == 2 : local >= 3;
}

void wrap_angles(int dim, Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (angle_slot(dim, i)) v[i] = wrap_angle(v[i]);
  }
}

Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double smallest_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

template <int D>
void check_shape(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  constexpr int m = kDof<D>;
  if (mean.size() % m != 0) {
    throw InvalidArgument(fmt::format("stacked pose vector of length {} is not a multiple of {}",
                                      mean.size(), m));
  }
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw InvalidArgument(fmt::format("covariance is {}x{} for a vector of length {}", cov.rows(),
                                      cov.cols(), mean.size()));
  }
}

template <int D>
SscVector<D> pose_block(const Eigen::VectorXd& v, Eigen::Index k) {
  return v.segment<kDof<D>>(k * kDof<D>);
}

// Propagates a belief through f (stacked input -> stacked output).
template <int D>
SscBelief<D> propagate(const SscBelief<D>& in,
                       const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f) {
  const Eigen::VectorXd mean = f(in.mean());
  const Eigen::MatrixXd jac = numerical_jacobian(f, in.mean(), kSscJacobianStep, kDof<D>);
  return SscBelief<D>::FromPropagated(mean, jac * in.covariance() * jac.transpose());
}

template <int D>
void require_poses(const SscBelief<D>& b, std::size_t n, const char* op) {
  if (b.size() != n) {
    throw InvalidArgument(fmt::format("{} needs a belief over {} pose(s), got {}", op, n, b.size()));
  }
}

}  // namespace

template <>
Pose<2> ssc_to_pose<2>(const SscVector<2>& x) {
  return Pose<2>(Rotation<2>::AboutZ(x[2]), Eigen::Vector2d(x[0], x[1]));
}

template <>
Pose<3> ssc_to_pose<3>(const SscVector<3>& x) {
  const Eigen::Matrix3d r =
      (Eigen::AngleAxisd(x[5], Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(x[4], Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(x[3], Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  return Pose<3>(Rotation<3>::FromOrthonormal(r), x.head<3>());
}

template <>
SscVector<2> pose_to_ssc<2>(const Pose<2>& pose) {
  const auto& r = pose.rotation().matrix();
  SscVector<2> x;
  x << pose.translation(), std::atan2(r(1, 0), r(0, 0));
  x[2] = wrap_angle(x[2]);
  return x;
}

template <>
SscVector<3> pose_to_ssc<3>(const Pose<3>& pose) {
  const auto& r = pose.rotation().matrix();
  const double theta = -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
  if (std::abs(std::abs(theta) - 0.5 * std::numbers::pi) < kGimbalTolerance) {
    throw GimbalLock(theta);
  }
  SscVector<3> x;
  x << pose.translation(), std::atan2(r(2, 1), r(2, 2)), theta, std::atan2(r(1, 0), r(0, 0));
  x[3] = wrap_angle(x[3]);
  x[5] = wrap_angle(x[5]);
  return x;
}

Eigen::VectorXd ssc_difference(int dim, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd d = a - b;
  wrap_angles(dim, d);
  return d;
}

Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step, int angle_dim) {
  Eigen::MatrixXd jac;
  Eigen::VectorXd probe = x;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    probe[c] = x[c] + step;
    const Eigen::VectorXd plus = f(probe);
    probe[c] = x[c] - step;
    const Eigen::VectorXd minus = f(probe);
    probe[c] = x[c];
    if (c == 0) jac.resize(plus.size(), x.size());
    Eigen::VectorXd diff = plus - minus;
    if (angle_dim > 0) wrap_angles(angle_dim, diff);
    jac.col(c) = diff / (2.0 * step);
  }
  return jac;
}

template <int D>
SscBelief<D>::SscBelief(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov)
    : mean_(mean), cov_(symmetric_part(cov)) {
  check_shape<D>(mean_, cov_);
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw InvalidArgument("coordinate belief has non-finite entries");
  }
  wrap_angles(kBlock, mean_);
  const double lo = smallest_eigenvalue(cov_);
  if (lo < -kPsdTolerance) {
    throw InvalidArgument(
        fmt::format("coordinate covariance is not positive semi-definite (min eigenvalue {:.3e})", lo));
  }
}

template <int D>
SscBelief<D> SscBelief<D>::FromPropagated(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  check_shape<D>(mean, cov);
  Eigen::MatrixXd sym = symmetric_part(cov);
  if (!sym.allFinite()) throw NumericalDegeneracy("propagated covariance has non-finite entries");
  const double lo = smallest_eigenvalue(sym);
  if (lo < -kPropagationPsdTolerance) {
    throw NumericalDegeneracy(
        fmt::format("propagated covariance is indefinite (min eigenvalue {:.3e})", lo));
  }
  Eigen::VectorXd wrapped = mean;
  wrap_angles(kBlock, wrapped);
  return SscBelief(std::move(wrapped), std::move(sym), Trusted{});
}

template <int D>
SscBelief<D> SscBelief<D>::Pair(const SscVector<D>& a, const Covariance<D>& cov_a,
                                const SscVector<D>& b, const Covariance<D>& cov_b,
                                const Covariance<D>& cross) {
  constexpr int m = kBlock;
  Eigen::VectorXd mean(2 * m);
  mean << a, b;
  Eigen::MatrixXd cov(2 * m, 2 * m);
  cov << cov_a, cross, cross.transpose(), cov_b;
  return SscBelief(mean, cov);
}

template <int D>
SscBelief<D> head_to_tail(const SscBelief<D>& pair) {
  require_poses(pair, 2, "head_to_tail");
  return head_to_tail_chain(pair);
}

template <int D>
SscBelief<D> head_to_tail_chain(const SscBelief<D>& chain) {
  if (chain.size() == 0) throw InvalidArgument("head_to_tail_chain needs at least one pose");
  const auto n = static_cast<Eigen::Index>(chain.size());
  auto f = [n](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Pose<D> t = ssc_to_pose<D>(pose_block<D>(v, 0));
    for (Eigen::Index k = 1; k < n; ++k) t = t * ssc_to_pose<D>(pose_block<D>(v, k));
    return pose_to_ssc<D>(t);
  };
  return propagate<D>(chain, f);
}

template <int D>
SscBelief<D> ssc_inverse(const SscBelief<D>& single) {
  require_poses(single, 1, "ssc_inverse");
  auto f = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return pose_to_ssc<D>(ssc_to_pose<D>(pose_block<D>(v, 0)).inverse());
  };
  return propagate<D>(single, f);
}

template <int D>
SscBelief<D> tail_to_tail(const SscBelief<D>& pair) {
  require_poses(pair, 2, "tail_to_tail");
  auto f = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return pose_to_ssc<D>(ssc_to_pose<D>(pose_block<D>(v, 0)).inverse() *
                          ssc_to_pose<D>(pose_block<D>(v, 1)));
  };
  return propagate<D>(pair, f);
}

template <int D>
SscBelief<D> ssc_from_lie_first_order(const JointPoseBelief<D>& belief) {
  constexpr int m = kDof<D>;
  const auto n = static_cast<Eigen::Index>(belief.size());
  Eigen::VectorXd mean(n * m);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n * m, n * m);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Pose<D>& t = belief.means()[static_cast<std::size_t>(k)];
    mean.segment<m>(k * m) = pose_to_ssc<D>(t);
    auto f = [&t](const Eigen::VectorXd& xi) -> Eigen::VectorXd {
      return pose_to_ssc<D>(exp_map<D>(Twist<D>(xi)) * t);
    };
    jac.block<m, m>(k * m, k * m) =
        numerical_jacobian(f, Eigen::VectorXd::Zero(m), kSscJacobianStep, m);
  }
  return SscBelief<D>::FromPropagated(mean, jac * belief.covariance() * jac.transpose());
}

#define JPOSE_INSTANTIATE(D)                                                       \
  template class SscBelief<D>;                                                     \
  template SscBelief<D> head_to_tail<D>(const SscBelief<D>&);                      \
  template SscBelief<D> head_to_tail_chain<D>(const SscBelief<D>&);                \
  template SscBelief<D> ssc_inverse<D>(const SscBelief<D>&);                       \
  template SscBelief<D> tail_to_tail<D>(const SscBelief<D>&);                      \
  template SscBelief<D> ssc_from_lie_first_order<D>(const JointPoseBelief<D>&);

JPOSE_INSTANTIATE(2)
JPOSE_INSTANTIATE(3)

#undef JPOSE_INSTANTIATE

}  // namespace jpose
