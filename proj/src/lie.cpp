#include "jpose/lie.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace jpose {

namespace {

Eigen::Matrix2d planar_rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// Perpendicular used by the se(2) adjoint blocks: (x, y) -> (y, -x).
Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {v.y(), -v.x()}; }

// Rodrigues coefficients sin(t)/t, (1-cos t)/t^2, (t-sin t)/t^3.
struct SO3Coefficients {
  double a;
  double b;
  double c;
};

SO3Coefficients so3_coefficients(double theta) {
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return {1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0};
  }
  const double s = std::sin(theta);
  const double half = std::sin(0.5 * theta);
  const double t2 = theta * theta;
  return {s / theta, 2.0 * half * half / t2, (theta - s) / (t2 * theta)};
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  const Eigen::Vector3d w = 0.5 * Eigen::Vector3d(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                                                  r(1, 0) - r(0, 1));
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double sin_theta = w.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (std::numbers::pi - theta < kPiTolerance) throw SingularLog(theta);

  if (theta < kSmallAngle) return (1.0 + theta * theta / 6.0) * w;

  if (theta > std::numbers::pi - 1e-2) {
    // The antisymmetric part loses relative precision near pi; recover the
    // axis from the symmetric part (1 - cos) a a^T instead.
    const Eigen::Matrix3d aat =
        (0.5 * (r + r.transpose()) - cos_theta * Eigen::Matrix3d::Identity()) / (1.0 - cos_theta);
    Eigen::Index k = 0;
    aat.diagonal().maxCoeff(&k);
    Eigen::Vector3d axis = aat.col(k) / std::sqrt(aat(k, k));
    if (axis.dot(w) < 0.0) axis = -axis;
    return theta * axis.normalized();
  }
  return theta / sin_theta * w;
}

}  // namespace

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

// ---------------------------------------------------------------------------
// Rotation

template <int D>
Rotation<D>::Rotation(const Matrix& m) : matrix_(m) {
  const double ortho = orthonormality_error();
  const double det = m.determinant();
  if (!(ortho <= kOrthonormalityTolerance) || !(std::abs(det - 1.0) <= kOrthonormalityTolerance)) {
    throw InvalidArgument(fmt::format(
        "matrix is not a rotation (orthonormality residual {:.3g}, det {:.12g})", ortho, det));
  }
}

template <int D>
Rotation<D> Rotation<D>::Nearest(const Matrix& m) {
  if (!m.allFinite()) throw InvalidArgument("rotation matrix has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix u = svd.matrixU();
  const Matrix v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(D - 1) *= -1.0;
  return Rotation(u * v.transpose(), Unchecked{});
}

template <int D>
Rotation<D> Rotation<D>::AboutZ(double angle) {
  if constexpr (D == 2) {
    return Rotation(planar_rotation(angle), Unchecked{});
  } else {
    Matrix r = Matrix::Identity();
    r.template topLeftCorner<2, 2>() = planar_rotation(angle);
    return Rotation(r, Unchecked{});
  }
}

template <int D>
Rotation<D> Rotation<D>::operator*(const Rotation& other) const {
  Rotation product(matrix_ * other.matrix_, Unchecked{});
  if (product.orthonormality_error() > kOrthonormalityTolerance) return product.renormalized();
  return product;
}

template <int D>
double Rotation<D>::orthonormality_error() const {
  return (matrix_.transpose() * matrix_ - Matrix::Identity()).norm();
}

// ---------------------------------------------------------------------------
// Pose

template <int D>
Pose<D> Pose<D>::FromMatrix(const HomogeneousMatrix<D>& m) {
  for (int c = 0; c < D; ++c) {
    if (m(D, c) != 0.0) throw InvalidArgument("homogeneous matrix bottom row must be (0, ..., 0, 1)");
  }
  if (m(D, D) != 1.0) throw InvalidArgument("homogeneous matrix bottom row must be (0, ..., 0, 1)");
  return Pose(Rotation<D>(m.template topLeftCorner<D, D>().eval()),
              m.template topRightCorner<D, 1>());
}

template <int D>
Pose<D> Pose<D>::FromMatrixNearest(const HomogeneousMatrix<D>& m) {
  HomogeneousMatrix<D> fixed = m;
  fixed.template topLeftCorner<D, D>() =
      Rotation<D>::Nearest(m.template topLeftCorner<D, D>()).matrix();
  return FromMatrix(fixed);
}

template <int D>
HomogeneousMatrix<D> Pose<D>::matrix() const {
  HomogeneousMatrix<D> m = HomogeneousMatrix<D>::Identity();
  m.template topLeftCorner<D, D>() = rotation_.matrix();
  m.template topRightCorner<D, 1>() = translation_;
  return m;
}

template <int D>
Pose<D> Pose<D>::inverse() const {
  const Rotation<D> r_inv = rotation_.inverse();
  return Pose(r_inv, -(r_inv.matrix() * translation_));
}

template <int D>
Pose<D> Pose<D>::operator*(const Pose& other) const {
  return Pose(rotation_ * other.rotation_, rotation_.matrix() * other.translation_ + translation_);
}

template class Rotation<2>;
template class Rotation<3>;
template class Pose<2>;
template class Pose<3>;

// ---------------------------------------------------------------------------
// hat / vee / curly hat

template <>
AlgebraMatrix<2> hat<2>(const Twist<2>& xi) {
  AlgebraMatrix<2> m = AlgebraMatrix<2>::Zero();
  m(0, 1) = -xi(2);
  m(1, 0) = xi(2);
  m(0, 2) = xi(0);
  m(1, 2) = xi(1);
  return m;
}

template <>
AlgebraMatrix<3> hat<3>(const Twist<3>& xi) {
  AlgebraMatrix<3> m = AlgebraMatrix<3>::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.tail<3>());
  m.topRightCorner<3, 1>() = xi.head<3>();
  return m;
}

template <>
Twist<2> vee<2>(const AlgebraMatrix<2>& m) {
  return {m(0, 2), m(1, 2), m(1, 0)};
}

template <>
Twist<3> vee<3>(const AlgebraMatrix<3>& m) {
  Twist<3> xi;
  xi << m(0, 3), m(1, 3), m(2, 3), m(2, 1), m(0, 2), m(1, 0);
  return xi;
}

Eigen::MatrixXd hat(const Eigen::VectorXd& xi) {
  if (xi.size() == 3) return hat<2>(Twist<2>(xi));
  if (xi.size() == 6) return hat<3>(Twist<3>(xi));
  throw InvalidArgument(fmt::format("twist must have 3 or 6 entries, got {}", xi.size()));
}

Eigen::VectorXd vee(const Eigen::MatrixXd& m) {
  if (m.rows() == 3 && m.cols() == 3) return vee<2>(AlgebraMatrix<2>(m));
  if (m.rows() == 4 && m.cols() == 4) return vee<3>(AlgebraMatrix<3>(m));
  throw InvalidArgument(
      fmt::format("algebra matrix must be 3x3 or 4x4, got {}x{}", m.rows(), m.cols()));
}

template <>
AdjointMatrix<2> curly_hat<2>(const Twist<2>& xi) {
  AdjointMatrix<2> m = AdjointMatrix<2>::Zero();
  m(0, 1) = -xi(2);
  m(1, 0) = xi(2);
  m.topRightCorner<2, 1>() = perp(xi.head<2>());
  return m;
}

template <>
AdjointMatrix<3> curly_hat<3>(const Twist<3>& xi) {
  AdjointMatrix<3> m = AdjointMatrix<3>::Zero();
  const Eigen::Matrix3d phi = skew(xi.tail<3>());
  m.topLeftCorner<3, 3>() = phi;
  m.bottomRightCorner<3, 3>() = phi;
  m.topRightCorner<3, 3>() = skew(xi.head<3>());
  return m;
}

// ---------------------------------------------------------------------------
// exp / log

template <>
Pose<2> exp_map<2>(const Twist<2>& xi) {
  const double theta = xi(2);
  double a;
  double b;
  if (std::abs(theta) < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = theta * (0.5 - t2 / 24.0);
  } else {
    const double half = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * half * half / theta;
  }
  const Eigen::Vector2d rho = xi.head<2>();
  const Eigen::Vector2d t(a * rho.x() - b * rho.y(), b * rho.x() + a * rho.y());
  return Pose<2>(Rotation<2>::AboutZ(theta), t);
}

template <>
Pose<3> exp_map<3>(const Twist<3>& xi) {
  const Eigen::Vector3d phi = xi.tail<3>();
  const double theta = phi.norm();
  const auto [a, b, c] = so3_coefficients(theta);
  const Eigen::Matrix3d k = skew(phi);
  const Eigen::Matrix3d k2 = k * k;
  const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() + a * k + b * k2;
  const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + b * k + c * k2;
  return Pose<3>(Rotation<3>::FromOrthonormal(r), v * xi.head<3>());
}

template <>
double rotation_angle<2>(const Rotation<2>& r) {
  return std::abs(std::atan2(r.matrix()(1, 0), r.matrix()(0, 0)));
}

template <>
double rotation_angle<3>(const Rotation<3>& r) {
  const Eigen::Matrix3d& m = r.matrix();
  const double s = 0.5 * Eigen::Vector3d(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)).norm();
  const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  return std::atan2(s, c);
}

template <>
Twist<2> log_map<2>(const Pose<2>& pose) {
  const Eigen::Matrix2d& r = pose.rotation().matrix();
  const double theta = std::atan2(r(1, 0), r(0, 0));
  if (std::numbers::pi - std::abs(theta) < kPiTolerance) throw SingularLog(theta);
  double a;
  double b;
  if (std::abs(theta) < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = theta * (0.5 - t2 / 24.0);
  } else {
    const double half = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * half * half / theta;
  }
  const double det = a * a + b * b;
  const Eigen::Vector2d& t = pose.translation();
  return {(a * t.x() + b * t.y()) / det, (-b * t.x() + a * t.y()) / det, theta};
}

template <>
Twist<3> log_map<3>(const Pose<3>& pose) {
  const Eigen::Vector3d phi = so3_log(pose.rotation().matrix());
  const double theta = phi.norm();
  double d;
  if (theta < kSmallAngle) {
    d = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    const double half = 0.5 * theta;
    d = (1.0 - half / std::tan(half)) / (theta * theta);
  }
  const Eigen::Matrix3d k = skew(phi);
  const Eigen::Matrix3d v_inv = Eigen::Matrix3d::Identity() - 0.5 * k + d * k * k;
  Twist<3> xi;
  xi << v_inv * pose.translation(), phi;
  return xi;
}

// ---------------------------------------------------------------------------
// adjoint / BCH

template <>
AdjointMatrix<2> adjoint<2>(const Pose<2>& pose) {
  AdjointMatrix<2> ad = AdjointMatrix<2>::Zero();
  ad.topLeftCorner<2, 2>() = pose.rotation().matrix();
  ad.topRightCorner<2, 1>() = perp(pose.translation());
  ad(2, 2) = 1.0;
  return ad;
}

template <>
AdjointMatrix<3> adjoint<3>(const Pose<3>& pose) {
  AdjointMatrix<3> ad = AdjointMatrix<3>::Zero();
  const Eigen::Matrix3d& r = pose.rotation().matrix();
  ad.topLeftCorner<3, 3>() = r;
  ad.bottomRightCorner<3, 3>() = r;
  ad.topRightCorner<3, 3>() = skew(pose.translation()) * r;
  return ad;
}

template <int D>
Twist<D> bch_approx(const Twist<D>& a, const Twist<D>& b, int order) {
  if (order < 1 || order > 3) {
    throw InvalidArgument(fmt::format("BCH truncation order must be 1, 2 or 3, got {}", order));
  }
  Twist<D> out = a + b;
  if (order >= 2) {
    const AdjointMatrix<D> ad_a = curly_hat<D>(a);
    const Twist<D> bracket = ad_a * b;
    out += 0.5 * bracket;
    if (order >= 3) {
      const AdjointMatrix<D> ad_b = curly_hat<D>(b);
      out += (ad_a * bracket - ad_b * bracket) / 12.0;
    }
  }
  return out;
}

template Twist<2> bch_approx<2>(const Twist<2>&, const Twist<2>&, int);
template Twist<3> bch_approx<3>(const Twist<3>&, const Twist<3>&, int);

}  // namespace jpose
