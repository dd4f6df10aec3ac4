#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "jpose/mc.hpp"
#include "oracles.hpp"

namespace jpose {
namespace {

Covariance<3> step_covariance(double sigma_t, double sigma_r) {
  Twist<3> d;
  d << 0.001 * sigma_t, 1e-5 * sigma_t, 1e-5, 1e-5, 1e-5, 0.003 * sigma_r;
  return d.asDiagonal();
}

ChainNoiseSpec<3> chain(std::size_t steps, double rho) {
  ChainNoiseSpec<3> spec;
  spec.step_covariance = step_covariance(1, 1);
  spec.step_mean = SE3::Translation(Eigen::Vector3d(1, 0, 0));
  spec.steps = steps;
  spec.rho = rho;
  return spec;
}

TEST(ChainJoint, UncorrelatedIsBlockDiagonal) {
  const auto b = build_chain_joint(chain(4, 0.0));
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (a != c) EXPECT_TRUE(b.block(a, c).isZero(0.0));
    }
  }
}

TEST(ChainJoint, LagOneBlocks) {
  const auto b = build_chain_joint(chain(10, 0.4));
  EXPECT_EQ(b.size(), 10u);
  EXPECT_EQ(b.block(3, 4), 0.4 * step_covariance(1, 1));
  EXPECT_TRUE(b.block(3, 5).isZero(0.0));
}

// Tridiagonal Toeplitz with unit diagonal and rho off the diagonal has
// smallest eigenvalue 1 - 2 rho cos(pi / (N + 1)); for rho = 0.6 that stays
// positive up to N = 4 and turns negative at N = 5.
TEST(ChainJoint, PositiveDefinitenessBoundary) {
  EXPECT_NO_THROW(build_chain_joint(chain(3, 0.6)));
  EXPECT_NO_THROW(build_chain_joint(chain(4, 0.6)));
  try {
    build_chain_joint(chain(5, 0.6));
    FAIL() << "expected InvalidSpec";
  } catch (const InvalidSpec& e) {
    EXPECT_GE(e.failing_pivot(), 0);
  }
  EXPECT_THROW(build_chain_joint(chain(2, 1.2)), InvalidSpec);
  EXPECT_NO_THROW(build_chain_joint(chain(40, 0.499)));
}

TEST(Sampling, ZeroCovarianceGivesZeroDraws) {
  const SampleBatch b = sample_gaussian(Eigen::MatrixXd::Zero(6, 6), 100, 1);
  EXPECT_TRUE(b.draws().isZero(0.0));
}

TEST(Sampling, LawOfLargeNumbers) {
  Eigen::VectorXd d(6);
  d << 1.0, 2.0, 0.5, 0.1, 3.0, 0.25;
  const SampleBatch b = sample_gaussian(d.asDiagonal(), 1000000, 2);
  const Eigen::MatrixXd s = second_moment(b.draws());
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(s(i, i), d[i], 0.01 * d[i]);
  EXPECT_LT((s - Eigen::MatrixXd(d.asDiagonal())).cwiseAbs().maxCoeff(),
            0.01 * d.maxCoeff());
}

TEST(Sampling, DeterministicAndWorkerIndependent) {
  oracle::Random rnd(3);
  const Eigen::MatrixXd cov = rnd.spd(12, 1.0);
  const SampleBatch a = sample_gaussian(cov, 10000, 42, 1);
  const SampleBatch b = sample_gaussian(cov, 10000, 42, 1);
  const SampleBatch c = sample_gaussian(cov, 10000, 42, 4);
  EXPECT_EQ(a.draws(), b.draws());
  EXPECT_EQ(a.draws(), c.draws());
  EXPECT_NE(a.draws(), sample_gaussian(cov, 10000, 43, 1).draws());
}

TEST(Sampling, SingularCovarianceIsFactored) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(6, 6);
  cov.topLeftCorner(3, 3) = Eigen::Matrix3d::Identity();
  const SampleBatch b = sample_gaussian(cov, 1000, 4);
  EXPECT_TRUE(b.draws().bottomRows(3).isZero(0.0));
  EXPECT_THROW(sample_gaussian(-Eigen::MatrixXd::Identity(3, 3), 10, 1), SamplingError);
}

TEST(Sampling, RealizePerturbsMeans) {
  const auto joint = build_chain_joint(chain(3, 0.4));
  const SampleBatch b = sample_joint(joint, 5, 9);
  const auto poses = realize(joint, b, 2);
  ASSERT_EQ(poses.size(), 3u);
  const Twist<3> xi = b.draw(2).segment<6>(6);
  EXPECT_LT((poses[1].matrix() - (exp_map<3>(xi) * joint.means()[1]).matrix()).norm(), 1e-15);
}

TEST(RelativeCovariance, ZeroAndPerfectCorrelation) {
  oracle::Random rnd(5);
  const SE3 a = rnd.pose<3>(), b = rnd.pose<3>();
  const auto zero = mc_relative_cov(
      PosePairBelief<3>::FromBlocks(a, b, Covariance<3>::Zero(), Covariance<3>::Zero(),
                                    Covariance<3>::Zero()),
      1000, 6);
  EXPECT_LT(zero.covariance.norm(), 1e-20);

  const Eigen::MatrixXd s = rnd.spd(6, 0.01);
  const auto same = mc_relative_cov(PosePairBelief<3>::FromBlocks(a, a, s, s, s), 10000, 7);
  EXPECT_LT(same.covariance.trace(), 1e-12);
}

TEST(RelativeCovariance, EstimatorDividesByCount) {
  oracle::Random rnd(8);
  const SE3 a = rnd.pose<3>(), b = rnd.pose<3>();
  const auto pair = PosePairBelief<3>(a, b, rnd.spd(12, 0.01));
  const auto samples = sample_relative(pair, 2000, 9);
  const SE3 mean_inv = (a.inverse() * b).inverse();
  Covariance<3> expected = Covariance<3>::Zero();
  for (const SE3& t : samples.poses) {
    const Twist<3> xi = log_map<3>(t * mean_inv);
    expected += xi * xi.transpose();
  }
  expected /= 2000.0;
  EXPECT_LT((mc_relative_cov(samples).covariance - expected).norm(), 1e-14);
  EXPECT_EQ(mc_relative_cov(samples).used, 2000u);
}

TEST(RelativeCovariance, SingularSamplesAreCountedOrRejected) {
  // Rotation noise so large that many relative samples sit near pi is fine
  // as long as none is exactly singular; construct a batch with one exact hit.
  RelativeSamples<3> s;
  s.mean = SE3::Identity();
  s.poses.assign(2000, SE3::Identity());
  Eigen::Matrix4d half = Eigen::Matrix4d::Identity();
  half.topLeftCorner<2, 2>() = -Eigen::Matrix2d::Identity();
  s.poses[0] = SE3::FromMatrix(half);
  const auto out = mc_relative_cov(s);
  EXPECT_EQ(out.excluded, 1u);
  EXPECT_EQ(out.used, 1999u);
  s.poses[1] = SE3::FromMatrix(half);
  s.poses[2] = SE3::FromMatrix(half);
  EXPECT_THROW(mc_relative_cov(s), SamplingError);
}

TEST(Metrics, CovErrorDefinition) {
  oracle::Random rnd(10);
  const Eigen::MatrixXd a = rnd.spd(6, 1.0);
  EXPECT_EQ(cov_error(a, a), 0.0);
  EXPECT_NEAR(cov_error(a + Eigen::MatrixXd::Identity(6, 6), a), std::sqrt(6.0), 1e-14);
  EXPECT_THROW(cov_error(a, Eigen::MatrixXd::Zero(3, 3)), InvalidArgument);
}

TEST(Metrics, CovErrorIsAMetric) {
  oracle::Random rnd(11);
  for (int i = 0; i < 50; ++i) {
    const Eigen::MatrixXd a = rnd.spd(6, 1.0), b = rnd.spd(6, 1.0), c = rnd.spd(6, 1.0);
    EXPECT_GT(cov_error(a, b), 0.0);
    EXPECT_DOUBLE_EQ(cov_error(a, b), cov_error(b, a));
    EXPECT_LE(cov_error(a, c), cov_error(a, b) + cov_error(b, c) + 1e-15);
  }
}

TEST(Metrics, NormalizedCovError) {
  oracle::Random rnd(12);
  const Eigen::MatrixXd a = rnd.spd(6, 1.0);
  EXPECT_EQ(normalized_cov_error(a, a), 0.0);
  EXPECT_NEAR(normalized_cov_error(2.0 * a, a), 1.0, 1e-14);
  EXPECT_THROW(normalized_cov_error(a, Eigen::MatrixXd::Zero(6, 6)), InvalidArgument);
}

TEST(Chi2, QuantilesMatchDistributionOracle) {
  EXPECT_NEAR(chi2_quantile(0.999, 6), 22.4577, 1e-4);
  EXPECT_NEAR(chi2_quantile(0.95, 3), 7.8147, 1e-4);
  for (int dof = 1; dof <= 12; ++dof) {
    for (double p : {0.01, 0.5, 0.9, 0.95, 0.999}) {
      const boost::math::chi_squared dist(dof);
      EXPECT_NEAR(chi2_quantile(p, dof), boost::math::quantile(dist, p), 1e-9) << dof << " " << p;
    }
  }
  EXPECT_THROW(chi2_quantile(1.0, 3), InvalidArgument);
  EXPECT_THROW(chi2_quantile(0.5, 0), InvalidArgument);
}

TEST(Containment, CalibratedOnItsOwnDistribution) {
  oracle::Random rnd(13);
  const Eigen::MatrixXd cov = rnd.spd(6, 1.0);
  const SampleBatch b = sample_gaussian(cov, 100000, 14);
  EXPECT_NEAR(containment_fraction(b.draws(), cov, 0.999), 0.999, 0.002);
  EXPECT_NEAR(containment_fraction(b.draws(), cov, 0.95, ContainmentMode::kPositionOnly), 0.95, 0.005);
}

TEST(Containment, SingularChannelsRejected) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(6, 6);
  cov(1, 1) = 0.0;
  const Eigen::MatrixXd samples = Eigen::MatrixXd::Zero(6, 10);
  EXPECT_THROW(containment_fraction(samples, cov, 0.9), InvalidArgument);
  EXPECT_THROW(containment_fraction(samples, cov, 0.9, ContainmentMode::kPositionOnly),
               InvalidArgument);
  cov(1, 1) = 1.0;
  cov(4, 4) = 0.0;
  EXPECT_NO_THROW(containment_fraction(samples, cov, 0.9, ContainmentMode::kPositionOnly));
}

TEST(Estimator, ConvergesAtRootM) {
  oracle::Random rnd(15);
  const Eigen::MatrixXd cov = rnd.spd(6, 1.0);
  auto mean_error = [&](std::size_t m) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      total += cov_error(second_moment(sample_gaussian(cov, m, 100 + seed).draws()), cov);
    }
    return total / 20.0;
  };
  const double ratio = mean_error(1000) / mean_error(16000);
  // sqrt(16) = 4 in expectation.
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 5.3);
}

TEST(Estimator, SampleCovarianceCentres) {
  Eigen::MatrixXd x(2, 4);
  x << 1, 2, 3, 4, 0, 0, 0, 0;
  const Eigen::MatrixXd c = sample_covariance(x);
  EXPECT_NEAR(c(0, 0), 1.25, 1e-15);
  EXPECT_NEAR(second_moment(x)(0, 0), 7.5, 1e-15);
}

}  // namespace
}  // namespace jpose
