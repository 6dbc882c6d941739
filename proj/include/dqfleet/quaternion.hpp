#ifndef DQFLEET_QUATERNION_HPP
#define DQFLEET_QUATERNION_HPP

#include <vector>

#include "dqfleet/types.hpp"

namespace dqf {

/// Quaternion stored scalar-first as (s, v1, v2, v3).
///
/// Plain value type; unit-ness is a contract of the operations that need it
/// (checked where the spec of the operation demands it), not of the type.
struct Quaternion {
  Vec4 c = Vec4::Zero();

  Quaternion() = default;
  explicit Quaternion(const Vec4& coeffs) : c(coeffs) {}
  Quaternion(double s, const Vec3& v) { c << s, v.x(), v.y(), v.z(); }
  Quaternion(double s, double x, double y, double z) { c << s, x, y, z; }

  double s() const { return c[0]; }
  Vec3 vec() const { return c.tail<3>(); }

  static Quaternion identity() { return Quaternion(1.0, 0.0, 0.0, 0.0); }
  /// Embeds a 3-vector as a vector quaternion (zero scalar part).
  static Quaternion pure(const Vec3& v) { return Quaternion(0.0, v); }

  double norm() const { return c.norm(); }
  Quaternion conj() const { return Quaternion(c[0], -c.tail<3>()); }
  Quaternion operator-() const { return Quaternion(Vec4(-c)); }
};

Quaternion quat_mul(const Quaternion& a, const Quaternion& b);

/// Left multiplication operator: lqm(a) * vec(b) == vec(a b).
Mat4 lqm(const Quaternion& a);
/// Right multiplication operator: rqm(a) * vec(b) == vec(b a).
Mat4 rqm(const Quaternion& a);
/// Cross operator: cross4(a) * vec(b) embeds the 3-vector cross product
/// of the vector parts (scalar row and column are zero).
Mat4 cross4(const Quaternion& a);

/// Rotation matrix of a unit quaternion: for q = q_{B/I},
/// rotation_matrix(q) * v^B = v^I, and A(ab) = A(a) A(b).
Mat3 rotation_matrix(const Quaternion& q);

/// Inverse of rotation_matrix (Shepperd's method); canonical sign.
Quaternion quat_from_rotation_matrix(const Mat3& r);

Quaternion normalized(const Quaternion& q);
bool is_unit(const Quaternion& q, double tol = 1e-9);

/// Canonical representative of a rotation: flips sign so the scalar part
/// is nonnegative.
Quaternion canonical(const Quaternion& q);

/// Scalar part of a unit quaternion from its vector part, sqrt(1 - |v|^2).
/// Throws DivergenceError if |v| > 1 (beyond the representable error range).
double recover_scalar(const Vec3& vbar);

/// Unit quaternion for a rotation of `theta` radians about unit axis `n`.
Quaternion rot_from_axis_angle(const Vec3& n, double theta);

/// Quaternion scaling: (sqrt(1 - mu^2 |v|^2), mu v). Preserves unit norm for
/// unit inputs. Throws std::domain_error when the radicand is negative.
Quaternion quat_scale_error(const Quaternion& q, double mu);

/// Rotation average of unit quaternions: maximizes Tr(A(q) C^T) with
/// C = sum_k A(q_k), solved as the dominant eigenvector of the Davenport
/// K matrix. Result has nonnegative scalar part. Throws on empty input.
Quaternion quat_average(const std::vector<Quaternion>& qs);

}  // namespace dqf

#endif  // DQFLEET_QUATERNION_HPP
