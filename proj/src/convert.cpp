#include "jpose/convert.hpp"

#include <cmath>

#include <fmt/format.h>

#include "jpose/linalg.hpp"

namespace jpose {

namespace {

template <int D>
std::vector<Pose<D>> mean_poses(const SscBelief<D>& belief) {
  std::vector<Pose<D>> means;
  means.reserve(belief.size());
  for (std::size_t i = 0; i < belief.size(); ++i) means.push_back(ssc_to_pose<D>(belief.pose(i)));
  return means;
}

template <int D>
Eigen::VectorXd residual_about(const std::vector<Pose<D>>& means, const Eigen::VectorXd& x) {
  constexpr int m = kDof<D>;
  Eigen::VectorXd out(x.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    const auto o = static_cast<Eigen::Index>(i) * m;
    const Pose<D> t = ssc_to_pose<D>(x.segment<m>(o));
    out.segment<m>(o) = log_map<D>(t * means[i].inverse());
  }
  return out;
}

}  // namespace

UtWeights ut_weights(std::size_t dim, const UtConfig& cfg) {
  const double l = static_cast<double>(dim);
  UtWeights w;
  double lambda = 0.0;
  if (cfg.mode == UtMode::kStandard) {
    if (!(l + cfg.kappa > 0.0)) {
      throw InvalidArgument(
          fmt::format("unscented spread needs dim + kappa > 0 (dim {}, kappa {})", dim, cfg.kappa));
    }
    lambda = cfg.kappa;
  } else {
    if (!(cfg.alpha > 0.0)) throw InvalidArgument("scaled unscented transform needs alpha > 0");
    lambda = cfg.alpha * cfg.alpha * (l + cfg.kappa) - l;
    if (!(l + lambda > 0.0)) throw InvalidArgument("scaled unscented spread is not positive");
  }
  const double side = 1.0 / (2.0 * (l + lambda));
  w.mean.assign(2 * dim + 1, side);
  w.cov.assign(2 * dim + 1, side);
  w.mean[0] = lambda / (l + lambda);
  w.cov[0] = w.mean[0];
  if (cfg.mode == UtMode::kScaled) w.cov[0] += 1.0 - cfg.alpha * cfg.alpha + cfg.beta;
  w.spread = std::sqrt(l + lambda);
  return w;
}

template <int D>
Eigen::VectorXd lie_residual(const SscBelief<D>& belief, const Eigen::VectorXd& x) {
  return residual_about<D>(mean_poses(belief), x);
}

template <int D>
ConversionResult<D> ut_convert(const SscBelief<D>& belief, const UtConfig& cfg) {
  constexpr int m = kDof<D>;
  const Eigen::Index dim = belief.mean().size();
  const UtWeights w = ut_weights(static_cast<std::size_t>(dim), cfg);
  const std::vector<Pose<D>> means = mean_poses(belief);

  const auto factor = linalg::covariance_factor(belief.covariance());
  if (!factor) throw ConversionFailure("coordinate covariance could not be factored");

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd weighted_mean = Eigen::VectorXd::Zero(dim);
  const std::size_t count = static_cast<std::size_t>(2 * dim + 1);

  for (std::size_t k = 0; k < count; ++k) {
    Eigen::VectorXd x = belief.mean();
    if (k > 0) {
      const auto col = static_cast<Eigen::Index>((k - 1) % static_cast<std::size_t>(dim));
      const double sign = k <= static_cast<std::size_t>(dim) ? 1.0 : -1.0;
      x += sign * w.spread * factor->col(col);
    }
    Eigen::VectorXd ell(dim);
    for (std::size_t i = 0; i < means.size(); ++i) {
      const auto o = static_cast<Eigen::Index>(i) * m;
      // Blocks the sigma point leaves untouched map to exactly zero.
      if (x.segment<m>(o) == belief.mean().template segment<m>(o)) {
        ell.segment<m>(o).setZero();
        continue;
      }
      const Pose<D> t = ssc_to_pose<D>(x.segment<m>(o));
      try {
        ell.segment<m>(o) = log_map<D>(t * means[i].inverse());
      } catch (const SingularLog& e) {
        throw SigmaPointSingularity(k, i, e.angle());
      }
    }
    cov.noalias() += w.cov[k] * ell * ell.transpose();
    weighted_mean += w.mean[k] * ell;
  }

  std::vector<Pose<D>> poses = means;
  ConversionResult<D> result{JointPoseBelief<D>(std::move(poses), linalg::symmetrize(cov)),
                             weighted_mean.norm(), count};
  return result;
}

template <int D>
JointPoseBelief<D> linearized_convert(const SscBelief<D>& belief) {
  const std::vector<Pose<D>> means = mean_poses(belief);
  auto f = [&means](const Eigen::VectorXd& x) { return residual_about<D>(means, x); };
  const Eigen::MatrixXd jac = numerical_jacobian(f, belief.mean());
  std::vector<Pose<D>> poses = means;
  return JointPoseBelief<D>(std::move(poses),
                            linalg::symmetrize(jac * belief.covariance() * jac.transpose()));
}

#define JPOSE_INSTANTIATE(D)                                                                 \
  template ConversionResult<D> ut_convert<D>(const SscBelief<D>&, const UtConfig&);          \
  template JointPoseBelief<D> linearized_convert<D>(const SscBelief<D>&);                    \
  template Eigen::VectorXd lie_residual<D>(const SscBelief<D>&, const Eigen::VectorXd&);

JPOSE_INSTANTIATE(2)
JPOSE_INSTANTIATE(3)

#undef JPOSE_INSTANTIATE

}  // namespace jpose
