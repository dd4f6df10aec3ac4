#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "jpose/convert.hpp"
#include "oracles.hpp"

namespace jpose {
namespace {

using std::numbers::pi;

SscVector<3> yawed_mean() {
  SscVector<3> x;
  x << 3, 3, 0, 0, 0, pi / 4;
  return x;
}

Eigen::MatrixXd yaw_heavy() {
  Eigen::VectorXd d(6);
  d << 0.005, 0.005, 1e-5, 1e-5, 1e-5, 0.006;
  return d.asDiagonal();
}

// Brute force: push coordinate samples through l and take their second moment.
Eigen::MatrixXd sampled_conversion(const SscBelief<3>& b, int count, std::uint64_t seed) {
  const Eigen::MatrixXd draws = oracle::gaussian_draws(b.covariance(), count, seed);
  const SE3 mean_inv = ssc_to_pose<3>(b.pose(0)).inverse();
  Eigen::MatrixXd ell(6, count);
  for (int c = 0; c < count; ++c) {
    const SscVector<3> x = b.pose(0) + draws.col(c);
    ell.col(c) = log_map<3>(ssc_to_pose<3>(x) * mean_inv);
  }
  return oracle::moment(ell);
}

TEST(UtWeights, SumToOneAndCount) {
  for (std::size_t n : {1u, 2u, 3u}) {
    for (UtConfig cfg : {UtConfig{}, UtConfig{1.0, UtMode::kStandard, 1.0, 2.0},
                         UtConfig{0.0, UtMode::kScaled, 0.5, 2.0}}) {
      const UtWeights w = ut_weights(6 * n, cfg);
      EXPECT_EQ(w.mean.size(), 12 * n + 1);
      EXPECT_NEAR(std::accumulate(w.mean.begin(), w.mean.end(), 0.0), 1.0, 1e-12);
    }
  }
  EXPECT_THROW(ut_weights(6, UtConfig{-6.0}), InvalidArgument);
}

TEST(UtConvert, ZeroCovarianceIsFixedPoint) {
  Eigen::VectorXd mean(12);
  mean << yawed_mean(), 1, -2, 0.5, 0.1, -0.2, 2.0;
  const auto out = ut_convert(SscBelief<3>(mean, Eigen::MatrixXd::Zero(12, 12)));
  EXPECT_TRUE(out.belief.covariance().isZero(0.0));
  EXPECT_EQ(out.sigma_point_count, 25u);
  EXPECT_EQ(out.belief.means()[0].matrix(), ssc_to_pose<3>(yawed_mean()).matrix());
  EXPECT_EQ(out.belief.means()[1].matrix(), ssc_to_pose<3>(SscVector<3>(mean.tail<6>())).matrix());
  EXPECT_EQ(out.residual_mean_norm, 0.0);
}

TEST(UtConvert, TinyCovarianceAtIdentityIsUnchanged) {
  const Eigen::MatrixXd s = 1e-6 * Eigen::MatrixXd::Identity(6, 6);
  const auto out = ut_convert(SscBelief<3>(Eigen::VectorXd::Zero(6), s));
  EXPECT_LT(oracle::relative_error(out.belief.covariance(), s), 1e-3);
  EXPECT_LT(oracle::relative_error(out.belief.covariance(),
                                   sampled_conversion(SscBelief<3>(Eigen::VectorXd::Zero(6), s),
                                                      200000, 200)),
            0.02);
}

TEST(UtConvert, YawHeavyMatchesSamplingOracle) {
  const SscBelief<3> b(yawed_mean(), yaw_heavy());
  const auto out = ut_convert(b);
  EXPECT_EQ(out.sigma_point_count, 13u);
  const Eigen::MatrixXd oracle_cov = sampled_conversion(b, 1000000, 201);
  EXPECT_LT(oracle::relative_error(out.belief.covariance(), oracle_cov), 0.05);
}

TEST(UtConvert, AgreesWithLinearizationAsNoiseShrinks) {
  const SscBelief<3> big(yawed_mean(), 4.0 * yaw_heavy());
  const SscBelief<3> small(yawed_mean(), yaw_heavy());
  const double d_big =
      (ut_convert(big).belief.covariance() - linearized_convert(big).covariance()).norm();
  const double d_small =
      (ut_convert(small).belief.covariance() - linearized_convert(small).covariance()).norm();
  EXPECT_GE(d_big / d_small, 3.0);
}

TEST(UtConvert, CorrelatedPosesKeepCrossBlocks) {
  oracle::Random rnd(202);
  Eigen::VectorXd mean(12);
  mean << yawed_mean(), 1, -2, 0.5, 0.1, -0.2, 2.0;
  const Eigen::MatrixXd s = rnd.spd(12, 1e-4);
  const auto out = ut_convert(SscBelief<3>(mean, s));
  const Eigen::MatrixXd lin = linearized_convert(SscBelief<3>(mean, s)).covariance();
  EXPECT_LT(oracle::relative_error(out.belief.covariance(), lin), 0.01);
  EXPECT_GT(out.belief.covariance().topRightCorner(6, 6).norm(), 0.0);
}

TEST(UtConvert, RankDeficientInputStillConverts) {
  Eigen::MatrixXd s = yaw_heavy();
  s(2, 2) = 0.0;
  s(3, 3) = 0.0;
  const auto out = ut_convert(SscBelief<3>(yawed_mean(), s));
  EXPECT_TRUE(out.belief.covariance().allFinite());
}

TEST(UtConvert, UnfactorableCovarianceFails) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(6, 6);
  s(5, 5) = -1e-9;
  const auto b = SscBelief<3>::FromPropagated(Eigen::VectorXd::Zero(6), s);
  EXPECT_THROW(ut_convert(b), ConversionFailure);
}

TEST(UtConvert, SigmaPointOnSingularityIsNamed) {
  Eigen::MatrixXd s = 1e-4 * Eigen::MatrixXd::Identity(6, 6);
  s(5, 5) = pi * pi / 6.0;
  try {
    ut_convert(SscBelief<3>(Eigen::VectorXd::Zero(6), s));
    FAIL() << "expected SigmaPointSingularity";
  } catch (const SigmaPointSingularity& e) {
    EXPECT_EQ(e.point(), 6u);
    EXPECT_EQ(e.pose(), 0u);
  }
}

TEST(UtConvert, PlanarVersion) {
  const SscBelief<2> b(Eigen::Vector3d(3, 3, pi / 4), Eigen::Vector3d(0.005, 0.005, 0.006).asDiagonal());
  const auto out = ut_convert(b);
  EXPECT_EQ(out.sigma_point_count, 7u);
  const Eigen::MatrixXd draws = oracle::gaussian_draws(b.covariance(), 400000, 203);
  const SE2 mean_inv = ssc_to_pose<2>(b.pose(0)).inverse();
  Eigen::MatrixXd ell(3, draws.cols());
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    ell.col(c) = log_map<2>(ssc_to_pose<2>(SscVector<2>(b.pose(0) + draws.col(c))) * mean_inv);
  }
  EXPECT_LT(oracle::relative_error(out.belief.covariance(), oracle::moment(ell)), 0.05);
}

}  // namespace
}  // namespace jpose
