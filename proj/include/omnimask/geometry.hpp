#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace omnimask {

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Unit vector on the viewing sphere. The only way to build one from
/// arbitrary components is `Direction::normalized`, so the unit-norm
/// invariant holds for every instance.
class Direction {
 public:
  /// Forward reference axis (0, 0, -1).
  constexpr Direction() = default;

  static Direction normalized(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw std::invalid_argument("Direction: cannot normalize a zero or non-finite vector");
    }
    return Direction(v * (1.0 / n));
  }
  static Direction normalized(double x, double y, double z) { return normalized(Vec3{x, y, z}); }

  /// Wraps components already known to be unit length (e.g. produced by a
  /// closed-form unprojection). Not checked.
  static constexpr Direction from_unit(const Vec3& v) { return Direction(v); }

  constexpr double x() const { return v_.x; }
  constexpr double y() const { return v_.y; }
  constexpr double z() const { return v_.z; }
  constexpr const Vec3& vec() const { return v_; }

  constexpr double dot(const Direction& o) const { return v_.dot(o.v_); }
  /// Angle to `o` in radians, stable for small and near-antipodal angles.
  double angle_to(const Direction& o) const {
    return std::atan2(v_.cross(o.v_).norm(), v_.dot(o.v_));
  }
  constexpr Direction operator-() const { return Direction(-v_); }

 private:
  constexpr explicit Direction(const Vec3& v) : v_(v) {}
  Vec3 v_{0.0, 0.0, -1.0};
};

/// Proper orthonormal 3x3 matrix, row-major. Maps world-frame vectors into a
/// camera frame unless documented otherwise at the use site.
class Rotation {
 public:
  using Matrix = std::array<double, 9>;

  constexpr Rotation() = default;

  /// Validates orthonormality and det = +1 within `tol`.
  static Rotation from_matrix(const Matrix& m, double tol = 1e-9) {
    Rotation r(m);
    if (!r.is_valid(tol)) {
      throw std::invalid_argument("Rotation: matrix is not a proper rotation");
    }
    return r;
  }

  /// Builds the rotation whose rows are the camera axes expressed in world
  /// coordinates. Inputs need not be exactly orthonormal; the result is
  /// re-orthogonalized around `forward`.
  static Rotation look_at(const Vec3& forward, const Vec3& down) {
    const Vec3 f = forward * (1.0 / forward.norm());
    Vec3 d = down - f * down.dot(f);
    const double dn = d.norm();
    if (!(dn > 1e-12)) {
      throw std::invalid_argument("Rotation::look_at: down vector parallel to forward");
    }
    d = d * (1.0 / dn);
    const Vec3 back = -f;
    const Vec3 x = d.cross(back);
    return Rotation({x.x, x.y, x.z, d.x, d.y, d.z, back.x, back.y, back.z});
  }

  /// Rotation by `angle` radians about `axis` (right-hand rule).
  static Rotation axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw std::invalid_argument("Rotation::axis_angle: zero axis");
    const Vec3 k = axis * (1.0 / n);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    return Rotation({t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y,
                     t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x,
                     t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c});
  }

  static constexpr Rotation identity() { return Rotation(); }

  constexpr Vec3 apply(const Vec3& v) const {
    return {m_[0] * v.x + m_[1] * v.y + m_[2] * v.z, m_[3] * v.x + m_[4] * v.y + m_[5] * v.z,
            m_[6] * v.x + m_[7] * v.y + m_[8] * v.z};
  }
  constexpr Direction operator*(const Direction& d) const { return Direction::from_unit(apply(d.vec())); }
  constexpr Vec3 operator*(const Vec3& v) const { return apply(v); }

  constexpr Rotation operator*(const Rotation& o) const {
    Matrix r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r[i * 3 + j] = m_[i * 3] * o.m_[j] + m_[i * 3 + 1] * o.m_[3 + j] + m_[i * 3 + 2] * o.m_[6 + j];
    return Rotation(r);
  }

  constexpr Rotation transposed() const {
    return Rotation({m_[0], m_[3], m_[6], m_[1], m_[4], m_[7], m_[2], m_[5], m_[8]});
  }

  constexpr double operator()(int row, int col) const { return m_[row * 3 + col]; }
  constexpr const Matrix& matrix() const { return m_; }
  constexpr Vec3 row(int i) const { return {m_[i * 3], m_[i * 3 + 1], m_[i * 3 + 2]}; }

  double determinant() const {
    return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) - m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
           m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
  }

  /// Largest absolute entry of R^T R - I.
  double orthonormality_error() const {
    const Rotation p = transposed() * *this;
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(p(i, j) - (i == j ? 1.0 : 0.0)));
    return err;
  }

  bool is_valid(double tol = 1e-9) const {
    for (double v : m_)
      if (!std::isfinite(v)) return false;
    return orthonormality_error() <= tol && std::abs(determinant() - 1.0) <= tol;
  }

  bool operator==(const Rotation&) const = default;

 private:
  constexpr explicit Rotation(const Matrix& m) : m_(m) {}
  Matrix m_{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

}  // namespace omnimask
