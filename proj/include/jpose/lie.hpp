#pragma once

// Matrix Lie-group primitives for SE(2) and SE(3) (with SO(2)/SO(3) as their
// rotation parts).
//
// Twists are stacked translational part first, rotational part second:
//   SE(2): xi = (rho_x, rho_y, phi)
//   SE(3): xi = (rho_x, rho_y, rho_z, phi_x, phi_y, phi_z)
// Every covariance block in this library inherits that ordering.

#include <Eigen/Core>

#include "jpose/errors.hpp"

namespace jpose {

/// Number of twist coordinates for the special Euclidean group acting on R^D.
template <int D>
inline constexpr int kDof = D == 2 ? 3 : 6;

template <int D>
using Vector = Eigen::Matrix<double, D, 1>;
template <int D>
using Twist = Eigen::Matrix<double, kDof<D>, 1>;
template <int D>
using AdjointMatrix = Eigen::Matrix<double, kDof<D>, kDof<D>>;
template <int D>
using Covariance = Eigen::Matrix<double, kDof<D>, kDof<D>>;
template <int D>
using AlgebraMatrix = Eigen::Matrix<double, D + 1, D + 1>;
template <int D>
using HomogeneousMatrix = Eigen::Matrix<double, D + 1, D + 1>;

/// Orthonormality tolerance used for validation and drift renormalization.
inline constexpr double kOrthonormalityTolerance = 1e-9;

/// Below this rotation angle exp/log switch to Taylor expansions.
inline constexpr double kSmallAngle = 1e-6;

/// log() refuses rotations whose angle is within this distance of pi.
inline constexpr double kPiTolerance = 1e-9;

template <int D>
class Pose;

template <int D>
class Rotation {
  static_assert(D == 2 || D == 3, "only SO(2) and SO(3) are supported");

 public:
  using Matrix = Eigen::Matrix<double, D, D>;

  Rotation() : matrix_(Matrix::Identity()) {}

  /// Validates orthonormality and det = +1 within kOrthonormalityTolerance.
  explicit Rotation(const Matrix& m);

  /// Nearest rotation in the Frobenius sense (polar decomposition).
  static Rotation Nearest(const Matrix& m);

  /// Skips validation; for matrices orthonormal by construction.
  static Rotation FromOrthonormal(const Matrix& m) { return Rotation(m, Unchecked{}); }

  /// Planar rotation by angle (D == 2), or about the z axis (D == 3).
  static Rotation AboutZ(double angle);

  const Matrix& matrix() const { return matrix_; }

  Rotation inverse() const { return Rotation(matrix_.transpose(), Unchecked{}); }

  Rotation operator*(const Rotation& other) const;

  Vector<D> operator*(const Vector<D>& v) const { return matrix_ * v; }

  /// ||R^T R - I||_F
  double orthonormality_error() const;

  Rotation renormalized() const { return Nearest(matrix_); }

 private:
  struct Unchecked {};
  Rotation(const Matrix& m, Unchecked) : matrix_(m) {}

  template <int>
  friend class Pose;

  Matrix matrix_;
};

/// A rigid-body transform with homogeneous-matrix semantics: p -> R p + t.
template <int D>
class Pose {
 public:
  Pose() : translation_(Vector<D>::Zero()) {}
  Pose(const Rotation<D>& rotation, const Vector<D>& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose Identity() { return Pose(); }

  /// Pure translation.
  static Pose Translation(const Vector<D>& t) { return Pose(Rotation<D>(), t); }

  /// Parses a homogeneous matrix; the bottom row must be exactly (0, ..., 0, 1).
  static Pose FromMatrix(const HomogeneousMatrix<D>& m);

  /// Like FromMatrix but projects the rotation block onto SO(d) first. Useful
  /// for matrices printed with a handful of digits.
  static Pose FromMatrixNearest(const HomogeneousMatrix<D>& m);

  const Rotation<D>& rotation() const { return rotation_; }
  const Vector<D>& translation() const { return translation_; }

  HomogeneousMatrix<D> matrix() const;

  Pose inverse() const;

  /// Group product. Rotations drifting past kOrthonormalityTolerance are
  /// projected back onto SO(d).
  Pose operator*(const Pose& other) const;

  Vector<D> operator*(const Vector<D>& p) const { return rotation_ * p + translation_; }

 private:
  Rotation<D> rotation_;
  Vector<D> translation_;
};

using SO2 = Rotation<2>;
using SO3 = Rotation<3>;
using SE2 = Pose<2>;
using SE3 = Pose<3>;

/// so(3) hat: phi -> skew-symmetric matrix.
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

template <int D>
AlgebraMatrix<D> hat(const Twist<D>& xi);

template <int D>
Twist<D> vee(const AlgebraMatrix<D>& m);

/// Dimension-checked hat for dynamically sized twists (3 -> se(2), 6 -> se(3)).
Eigen::MatrixXd hat(const Eigen::VectorXd& xi);

/// Dimension-checked vee for 3x3 (se(2)) or 4x4 (se(3)) algebra matrices.
Eigen::VectorXd vee(const Eigen::MatrixXd& m);

/// Matrix of the adjoint action of the algebra on itself: curly_hat(a) * b = [a, b].
/// SE(3): [[phi^, rho^], [0, phi^]].
template <int D>
AdjointMatrix<D> curly_hat(const Twist<D>& xi);

template <int D>
Pose<D> exp_map(const Twist<D>& xi);

/// Principal-branch logarithm. Throws SingularLog when the rotation angle is
/// within kPiTolerance of pi.
template <int D>
Twist<D> log_map(const Pose<D>& pose);

/// Rotation angle in [0, pi].
template <int D>
double rotation_angle(const Rotation<D>& r);

/// Adjoint matrix: T exp(xi) = exp(Ad_T xi) T.
template <int D>
AdjointMatrix<D> adjoint(const Pose<D>& pose);

/// Truncated Baker-Campbell-Hausdorff series for log(exp(a) exp(b)).
/// order 1: a + b; order 2: + 1/2 [a, b]; order 3: + 1/12 ([a,[a,b]] + [b,[b,a]]).
template <int D>
Twist<D> bch_approx(const Twist<D>& a, const Twist<D>& b, int order);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

// Specializations live in lie.cpp.
template <> AlgebraMatrix<2> hat<2>(const Twist<2>& xi);
template <> AlgebraMatrix<3> hat<3>(const Twist<3>& xi);
template <> Twist<2> vee<2>(const AlgebraMatrix<2>& m);
template <> Twist<3> vee<3>(const AlgebraMatrix<3>& m);
template <> AdjointMatrix<2> curly_hat<2>(const Twist<2>& xi);
template <> AdjointMatrix<3> curly_hat<3>(const Twist<3>& xi);
template <> Pose<2> exp_map<2>(const Twist<2>& xi);
template <> Pose<3> exp_map<3>(const Twist<3>& xi);
template <> Twist<2> log_map<2>(const Pose<2>& pose);
template <> Twist<3> log_map<3>(const Pose<3>& pose);
template <> double rotation_angle<2>(const Rotation<2>& r);
template <> double rotation_angle<3>(const Rotation<3>& r);
template <> AdjointMatrix<2> adjoint<2>(const Pose<2>& pose);
template <> AdjointMatrix<3> adjoint<3>(const Pose<3>& pose);
extern template Twist<2> bch_approx<2>(const Twist<2>&, const Twist<2>&, int);
extern template Twist<3> bch_approx<3>(const Twist<3>&, const Twist<3>&, int);

extern template class Rotation<2>;
extern template class Rotation<3>;
extern template class Pose<2>;
extern template class Pose<3>;

}  // namespace jpose
