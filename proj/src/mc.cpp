#include "jpose/mc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "jpose/linalg.hpp"
#include "jpose/parallel.hpp"

namespace jpose {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(fmt::format("shape mismatch: {}x{} vs {}x{}", a.rows(), a.cols(),
                                      b.rows(), b.cols()));
  }
}

}  // namespace

template <int D>
JointPoseBelief<D> build_chain_joint(const ChainNoiseSpec<D>& spec) {
  constexpr int m = kDof<D>;
  if (spec.steps == 0) throw InvalidSpec("chain needs at least one step", -1);
  const auto n = static_cast<Eigen::Index>(spec.steps);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n * m, n * m);
  for (Eigen::Index k = 0; k < n; ++k) {
    cov.block<m, m>(k * m, k * m) = spec.step_covariance;
    if (k + 1 < n) {
      cov.block<m, m>(k * m, (k + 1) * m) = spec.rho * spec.step_covariance;
      cov.block<m, m>((k + 1) * m, k * m) = spec.rho * spec.step_covariance.transpose();
    }
  }

  // Cholesky with semidefinite tolerance so the failing pivot can be named.
  const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const double tol = 1e-12 * scale;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n * m, n * m);
  for (Eigen::Index j = 0; j < n * m; ++j) {
    double d = cov(j, j) - l.row(j).head(j).squaredNorm();
    if (d < -tol) {
      throw InvalidSpec(
          fmt::format("chain covariance with rho = {} over {} steps is not positive semi-definite",
                      spec.rho, spec.steps),
          static_cast<long>(j));
    }
    if (d <= tol) continue;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n * m; ++i) {
      l(i, j) = (cov(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  if ((l * l.transpose() - cov).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw InvalidSpec("chain covariance is not positive semi-definite", -1);
  }
  std::vector<Pose<D>> means(spec.steps, spec.step_mean);
  return JointPoseBelief<D>(std::move(means), cov);
}

SampleBatch sample_gaussian(const Eigen::MatrixXd& cov, std::size_t count, std::uint64_t seed,
                            unsigned jobs) {
  if (cov.rows() != cov.cols()) throw InvalidArgument("sampling covariance must be square");
  const auto factor = linalg::covariance_factor(cov);
  if (!factor) throw SamplingError("sampling covariance could not be factored");
  const Eigen::Index dim = cov.rows();
  Eigen::MatrixXd draws(dim, static_cast<Eigen::Index>(count));
  const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, jobs, [&](std::size_t c) {
    std::mt19937_64 rng(derive_seed(seed, c));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t begin = c * kSampleChunk;
    const std::size_t end = std::min(count, begin + kSampleChunk);
    Eigen::MatrixXd z(dim, static_cast<Eigen::Index>(end - begin));
    for (Eigen::Index col = 0; col < z.cols(); ++col) {
      for (Eigen::Index row = 0; row < dim; ++row) z(row, col) = normal(rng);
    }
    draws.middleCols(static_cast<Eigen::Index>(begin), z.cols()).noalias() = *factor * z;
  });
  return SampleBatch(std::move(draws));
}

template <int D>
SampleBatch sample_joint(const JointPoseBelief<D>& belief, std::size_t count, std::uint64_t seed,
                         unsigned jobs) {
  return sample_gaussian(belief.covariance(), count, seed, jobs);
}

template <int D>
std::vector<Pose<D>> realize(const JointPoseBelief<D>& belief, const SampleBatch& batch,
                             std::size_t m) {
  constexpr int b = kDof<D>;
  if (batch.dim() != belief.covariance().rows()) {
    throw InvalidArgument("sample dimension does not match the belief");
  }
  const auto draw = batch.draw(m);
  std::vector<Pose<D>> poses;
  poses.reserve(belief.size());
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const Twist<D> xi = draw.template segment<b>(static_cast<Eigen::Index>(i) * b);
    poses.push_back(exp_map<D>(xi) * belief.means()[i]);
  }
  return poses;
}

template <int D>
RelativeSamples<D> sample_relative(const PosePairBelief<D>& pair, std::size_t count,
                                   std::uint64_t seed, unsigned jobs) {
  constexpr int b = kDof<D>;
  const SampleBatch batch = sample_gaussian(pair.covariance(), count, seed, jobs);
  RelativeSamples<D> out;
  out.mean = pair.first().inverse() * pair.second();
  out.poses.resize(count);
  const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t end = std::min(count, (c + 1) * kSampleChunk);
    for (std::size_t m = c * kSampleChunk; m < end; ++m) {
      const auto draw = batch.draw(m);
      const Pose<D> t1 = exp_map<D>(Twist<D>(draw.template head<b>())) * pair.first();
      const Pose<D> t2 = exp_map<D>(Twist<D>(draw.template tail<b>())) * pair.second();
      out.poses[m] = t1.inverse() * t2;
    }
  });
  return out;
}

template <int D>
RelativeCovariance<D> mc_relative_cov(const RelativeSamples<D>& samples) {
  RelativeCovariance<D> out;
  const Pose<D> mean_inv = samples.mean.inverse();
  for (const Pose<D>& t : samples.poses) {
    try {
      const Twist<D> xi = log_map<D>(t * mean_inv);
      out.covariance.noalias() += xi * xi.transpose();
      ++out.used;
    } catch (const SingularLog&) {
      ++out.excluded;
    }
  }
  const std::size_t total = samples.poses.size();
  if (total == 0) throw SamplingError("no samples");
  if (static_cast<double>(out.excluded) > 1e-3 * static_cast<double>(total)) {
    throw SamplingError(fmt::format("{} of {} samples hit a logarithm singularity", out.excluded,
                                    total));
  }
  out.covariance /= static_cast<double>(out.used);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

template <int D>
RelativeCovariance<D> mc_relative_cov(const PosePairBelief<D>& pair, std::size_t count,
                                      std::uint64_t seed, unsigned jobs) {
  return mc_relative_cov(sample_relative(pair, count, seed, jobs));
}

Eigen::MatrixXd second_moment(const Eigen::MatrixXd& samples) {
  if (samples.cols() == 0) throw InvalidArgument("no samples");
  Eigen::MatrixXd m = samples * samples.transpose() / static_cast<double>(samples.cols());
  return 0.5 * (m + m.transpose());
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples) {
  if (samples.cols() == 0) throw InvalidArgument("no samples");
  const Eigen::VectorXd mean = samples.rowwise().mean();
  return second_moment(samples.colwise() - mean);
}

double cov_error(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& sigma_mc) {
  require_same_shape(sigma, sigma_mc);
  return (sigma - sigma_mc).norm();
}

double normalized_cov_error(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& sigma_mc) {
  require_same_shape(sigma, sigma_mc);
  const double scale = sigma_mc.norm();
  if (!(scale > 0.0)) throw InvalidArgument("reference covariance has zero norm");
  return cov_error(sigma / scale, sigma_mc / scale);
}

double chi2_quantile(double p, int dof) {
  if (dof < 1) throw InvalidArgument(fmt::format("chi-square needs dof >= 1, got {}", dof));
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument(fmt::format("probability {} not in (0, 1)", p));
  const double k = 0.5 * dof;
  auto cdf = [k](double x) { return boost::math::gamma_p(k, 0.5 * x); };
  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * dof);
  while (cdf(hi) < p) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

int position_dims(Eigen::Index dim) {
  switch (dim) {
    case 3: return 2;
    case 6: return 3;
    default: throw InvalidArgument(fmt::format("no position channels defined for dimension {}", dim));
  }
}

double containment_fraction(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& sigma,
                            double p, ContainmentMode mode) {
  if (sigma.rows() != samples.rows() || sigma.cols() != samples.rows()) {
    throw InvalidArgument("covariance does not match the sample dimension");
  }
  if (samples.cols() == 0) throw InvalidArgument("no samples");
  const Eigen::Index k =
      mode == ContainmentMode::kFull ? samples.rows() : position_dims(samples.rows());
  const Eigen::MatrixXd s = sigma.topLeftCorner(k, k);
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  const double floor = 1e-14 * std::max(s.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (llt.info() != Eigen::Success ||
      Eigen::MatrixXd(llt.matrixL()).diagonal().minCoeff() <= std::sqrt(floor)) {
    throw InvalidArgument("covariance is singular on the selected channels");
  }
  const double threshold = chi2_quantile(p, static_cast<int>(k));
  const Eigen::MatrixXd white = llt.matrixL().solve(samples.topRows(k));
  const auto inside = (white.colwise().squaredNorm().array() <= threshold).count();
  return static_cast<double>(inside) / static_cast<double>(samples.cols());
}

#define JPOSE_INSTANTIATE(D)                                                                     \
  template JointPoseBelief<D> build_chain_joint<D>(const ChainNoiseSpec<D>&);                    \
  template SampleBatch sample_joint<D>(const JointPoseBelief<D>&, std::size_t, std::uint64_t,    \
                                       unsigned);                                                \
  template std::vector<Pose<D>> realize<D>(const JointPoseBelief<D>&, const SampleBatch&,        \
                                           std::size_t);                                         \
  template RelativeSamples<D> sample_relative<D>(const PosePairBelief<D>&, std::size_t,          \
                                                 std::uint64_t, unsigned);                       \
  template RelativeCovariance<D> mc_relative_cov<D>(const RelativeSamples<D>&);                  \
  template RelativeCovariance<D> mc_relative_cov<D>(const PosePairBelief<D>&, std::size_t,       \
                                                    std::uint64_t, unsigned);

JPOSE_INSTANTIATE(2)
JPOSE_INSTANTIATE(3)

#undef JPOSE_INSTANTIATE

}  // namespace jpose
