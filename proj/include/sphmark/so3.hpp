#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "sphmark/harmonics.hpp"

namespace sphmark {

/// ZYZ Euler angles of an active rotation R = Rz(alpha) Ry(beta) Rz(gamma).
struct EulerZyz {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Rotation stored as a unit quaternion (w, x, y, z). q and -q are the same
/// rotation; everything derived from a Rotation goes through the rotation
/// matrix, which is quadratic in q, so both signs give identical results.
class Rotation {
 public:
  Rotation() = default;
  /// Normalizes; throws ValidationError on a zero or non-finite quaternion.
  Rotation(double w, double x, double y, double z);

  static Rotation identity() { return {}; }
  static Rotation from_axis_angle(const std::array<double, 3>& axis,
                                  double angle);
  static Rotation from_euler_zyz(const EulerZyz& e);

  double w() const noexcept { return q_[0]; }
  double x() const noexcept { return q_[1]; }
  double y() const noexcept { return q_[2]; }
  double z() const noexcept { return q_[3]; }
  const std::array<double, 4>& quaternion() const noexcept { return q_; }

  Rotation inverse() const { return {q_[0], -q_[1], -q_[2], -q_[3]}; }
  /// (a * b) applies b first, then a.
  friend Rotation operator*(const Rotation& a, const Rotation& b);

  std::array<std::array<double, 3>, 3> matrix() const;
  std::array<double, 3> apply(const std::array<double, 3>& v) const;
  /// When sin(beta) vanishes gamma is set to 0 and alpha absorbs the rest.
  EulerZyz to_euler_zyz() const;

  /// "w,x,y,z" or "zyz:alpha,beta,gamma" (radians).
  static Rotation parse(const std::string& text);
  std::string to_string() const;

 private:
  std::array<double, 4> q_{1.0, 0.0, 0.0, 0.0};
};

/// Haar-uniform rotation from four normal draws. Deterministic in seed.
Rotation random_rotation(std::uint64_t seed);
/// Geodesic distance to the identity, 2 acos(|w|), in [0, pi].
double rotation_angle(const Rotation& r);
/// Axis drawn uniformly on the sphere, fixed rotation angle.
Rotation random_axis_rotation(std::uint64_t seed, double angle);

/// Dense square matrix indexed by (m + l, m' + l).
template <typename T>
class BlockMatrix {
 public:
  BlockMatrix() = default;
  explicit BlockMatrix(int l) : l_(l), n_(2 * l + 1), v_(n_ * n_) {}
  int degree() const noexcept { return l_; }
  int dim() const noexcept { return n_; }
  T& operator()(int m, int mp) noexcept { return v_[(m + l_) * n_ + mp + l_]; }
  const T& operator()(int m, int mp) const noexcept {
    return v_[(m + l_) * n_ + mp + l_];
  }

 private:
  int l_ = 0;
  int n_ = 1;
  std::vector<T> v_ = std::vector<T>(1);
};

using SmallD = BlockMatrix<double>;
using WignerD = BlockMatrix<Complex>;

inline constexpr int kMaxWignerDegree = 32;

/// Wigner small-d d^l_{m m'}(beta) from the explicit factorial sum.
SmallD little_d(int l, double beta);

/// D^l_{m m'}(R) = e^{-i m alpha} d^l_{m m'}(beta) e^{-i m' gamma}.
WignerD wigner_D(int l, const Rotation& r);

/// c'_l = D^l(R) c_l for every block and channel. Coefficients of R-rotated
/// signals f(R^-1 w). Throws NumericalError if conjugate symmetry of a
/// real-flagged result degrades past 1e-9 (relative to the block norm).
ShCoefficients rotate_coeffs(const ShCoefficients& c, const Rotation& r);

/// Image-domain action: output(w) = x(R^-1 w), bilinear pull-back.
ErpImage rotate_image(const ErpImage& x, const Rotation& r);

}  // namespace sphmark
