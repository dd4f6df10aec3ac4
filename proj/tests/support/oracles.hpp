#pragma once

// Independent reference computations for tests. Nothing here calls the
// closed forms under test.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "jpose/graph.hpp"
#include "jpose/lie.hpp"

namespace oracle {

/// exp(A) by its power series, stopped once a term drops below 1e-16.
inline Eigen::MatrixXd series_exp(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k < 200; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
    if (term.norm() < 1e-16) break;
  }
  return sum;
}

/// log(M) by the Mercator series of log(I + X); needs ||M - I|| < 1.
inline Eigen::MatrixXd series_log(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd x = m - Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  Eigen::MatrixXd power = x;
  for (int k = 1; k < 2000; ++k) {
    const Eigen::MatrixXd term = power / static_cast<double>(k);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term.norm() < 1e-17) break;
    power = power * x;
  }
  return sum;
}

/// se(3) / se(2) hat written out from the block layout.
inline Eigen::MatrixXd algebra_matrix(const Eigen::VectorXd& xi) {
  if (xi.size() == 3) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 1) = -xi[2];
    m(1, 0) = xi[2];
    m(0, 2) = xi[0];
    m(1, 2) = xi[1];
    return m;
  }
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 1) = -xi[5];
  m(0, 2) = xi[4];
  m(1, 0) = xi[5];
  m(1, 2) = -xi[3];
  m(2, 0) = -xi[4];
  m(2, 1) = xi[3];
  m.block<3, 1>(0, 3) = xi.head<3>();
  return m;
}

inline Eigen::VectorXd algebra_vector(const Eigen::MatrixXd& m) {
  if (m.rows() == 3) return Eigen::Vector3d(m(0, 2), m(1, 2), m(1, 0));
  Eigen::VectorXd v(6);
  v << m(0, 3), m(1, 3), m(2, 3), m(2, 1), m(0, 2), m(1, 0);
  return v;
}

/// log(exp(a) exp(b)) through the series maps (small arguments only).
inline Eigen::VectorXd series_bch(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return algebra_vector(series_log(series_exp(algebra_matrix(a)) * series_exp(algebra_matrix(b))));
}

class Random {
 public:
  explicit Random(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return normal_(rng_); }

  Eigen::VectorXd vector(int n, double scale) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * uniform(-1.0, 1.0);
    return v;
  }

  /// Twist with rotation angle below max_angle and translation in a box.
  template <int D>
  jpose::Twist<D> twist(double max_angle, double max_translation) {
    constexpr int m = jpose::kDof<D>;
    jpose::Twist<D> xi;
    xi.template head<D>() = vector(D, max_translation);
    if constexpr (D == 2) {
      xi[2] = uniform(-max_angle, max_angle);
    } else {
      Eigen::Vector3d axis = vector(3, 1.0);
      while (axis.norm() < 1e-3) axis = vector(3, 1.0);
      xi.template tail<3>() = axis.normalized() * uniform(0.0, max_angle);
    }
    static_cast<void>(m);
    return xi;
  }

  template <int D>
  jpose::Pose<D> pose(double max_angle = 3.0, double max_translation = 5.0) {
    return jpose::exp_map<D>(twist<D>(max_angle, max_translation));
  }

  /// Random SPD matrix with eigenvalues in scale * [0.1, 1].
  Eigen::MatrixXd spd(int n, double scale) {
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(
                                  Eigen::MatrixXd::NullaryExpr(n, n, [this] { return normal(); }))
                                  .householderQ();
    Eigen::VectorXd ev(n);
    for (int i = 0; i < n; ++i) ev[i] = scale * uniform(0.1, 1.0);
    return q * ev.asDiagonal() * q.transpose();
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// M zero-mean Gaussian draws (columns) from cov, via an eigen square root.
inline Eigen::MatrixXd gaussian_draws(const Eigen::MatrixXd& cov, int count, std::uint64_t seed) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()));
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(cov.rows(), count);
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = normal(rng);
  }
  return root * z;
}

/// (1/M) sum x x^T over the columns.
inline Eigen::MatrixXd moment(const Eigen::MatrixXd& x) {
  return x * x.transpose() / static_cast<double>(x.cols());
}

/// Relative Frobenius error ||a - b|| / ||b||.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

/// Dense information matrix of a planar graph built from scratch: stack every
/// whitened residual (and the gauge prior) into one vector, differentiate the
/// whole vector with respect to each vertex twist, and form A^T A.
inline Eigen::MatrixXd dense_information(const jpose::PoseGraph& graph, double gauge = 1e8,
                                         double step = 1e-6) {
  const auto index = graph.variable_index();
  const auto n = static_cast<Eigen::Index>(index.size());
  const jpose::Key anchor = graph.vertices().begin()->first;
  const jpose::SE2 anchor_pose = graph.vertex(anchor);

  auto stacked = [&](const std::map<jpose::Key, jpose::SE2>& poses) {
    Eigen::VectorXd r(3 * static_cast<Eigen::Index>(graph.edges().size()) + 3);
    Eigen::Index row = 0;
    for (const auto& e : graph.edges()) {
      const Eigen::Matrix3d w = Eigen::LLT<Eigen::Matrix3d>(e.information).matrixU();
      const Eigen::Matrix3d rel =
          e.measurement.matrix().inverse() * poses.at(e.from).matrix().inverse() * poses.at(e.to).matrix();
      const Eigen::Vector3d res = algebra_vector(series_log(rel));
      r.segment<3>(row) = w * res;
      row += 3;
    }
    const Eigen::Matrix3d prior = poses.at(anchor).matrix() * anchor_pose.matrix().inverse();
    r.segment<3>(row) = std::sqrt(gauge) * algebra_vector(series_log(prior));
    return r;
  };

  std::map<jpose::Key, jpose::SE2> poses = graph.vertices();
  Eigen::MatrixXd a(3 * static_cast<Eigen::Index>(graph.edges().size()) + 3, 3 * n);
  for (const auto& [key, col] : index) {
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(3);
      d[c] = step;
      const jpose::SE2 base = poses.at(key);
      poses.at(key) = jpose::SE2::FromMatrixNearest(series_exp(algebra_matrix(d)) * base.matrix());
      const Eigen::VectorXd plus = stacked(poses);
      poses.at(key) = jpose::SE2::FromMatrixNearest(series_exp(algebra_matrix(-d)) * base.matrix());
      const Eigen::VectorXd minus = stacked(poses);
      poses.at(key) = base;
      a.col(3 * static_cast<Eigen::Index>(col) + c) = (plus - minus) / (2.0 * step);
    }
  }
  return a.transpose() * a;
}

}  // namespace oracle
