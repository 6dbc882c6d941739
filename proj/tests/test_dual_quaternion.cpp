#include <doctest.h>

#include <random>

#include "dqfleet/dual_quaternion.hpp"

using namespace dqf;

namespace {

Quaternion random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return normalized(Quaternion(n(rng), n(rng), n(rng), n(rng)));
}

Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

DualQuaternion random_dq(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return DualQuaternion(Quaternion(n(rng), n(rng), n(rng), n(rng)),
                        Quaternion(n(rng), n(rng), n(rng), n(rng)));
}

// Homogeneous-transform oracle: 4x4 rigid transform from attitude + position.
Eigen::Matrix4d oracle_transform(const Quaternion& q, const Vec3& r) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.block<3, 3>(0, 0) = rotation_matrix(q);
  t.block<3, 1>(0, 3) = r;
  return t;
}

Eigen::Matrix4d pose_as_transform(const DualQuaternion& dq) {
  const PoseParts p = pose_to_parts(dq);
  return oracle_transform(p.attitude, p.r_inertial);
}

}  // namespace

TEST_CASE("dual multiplication basics") {
  std::mt19937_64 rng(21);
  const DualQuaternion x = random_dq(rng);
  CHECK((dq_mul(DualQuaternion::identity(), x).vec8() - x.vec8()).norm() == 0.0);

  // eps nilpotency: (0 + eps q)(0 + eps p) = 0.
  const DualQuaternion a(Quaternion(), random_unit(rng));
  const DualQuaternion b(Quaternion(), random_unit(rng));
  CHECK(dq_mul(a, b).vec8().norm() == 0.0);
}

TEST_CASE("pure translations compose additively (homogeneous-transform oracle)") {
  std::mt19937_64 rng(22);
  const Vec3 r1 = random_vec(rng, 5.0), r2 = random_vec(rng, 5.0);
  const DualQuaternion t1 = pose_from_parts(Quaternion::identity(), r1);
  const DualQuaternion t2 = pose_from_parts(Quaternion::identity(), r2);
  const DualQuaternion t12 = dq_mul(t1, t2);
  const Eigen::Matrix4d expect = oracle_transform(Quaternion::identity(), r1) *
                                 oracle_transform(Quaternion::identity(), r2);
  CHECK((pose_as_transform(t12) - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((pose_to_parts(t12).r_inertial - (r1 + r2)).norm() < 1e-12);
}

TEST_CASE("block operators match dual multiplication") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const DualQuaternion a = random_dq(rng), b = random_dq(rng);
    CHECK((ldqm(a) * b.vec8() - dq_mul(a, b).vec8()).norm() < 1e-12);
    CHECK((rdqm(a) * b.vec8() - dq_mul(b, a).vec8()).norm() < 1e-12);
  }
}

TEST_CASE("associativity and conjugation over 1000 random triples") {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 1000; ++t) {
    const DualQuaternion a = random_dq(rng), b = random_dq(rng), c = random_dq(rng);
    CHECK((dq_mul(dq_mul(a, b), c).vec8() - dq_mul(a, dq_mul(b, c)).vec8()).norm() < 1e-11);
    CHECK((dq_mul(a, b).conj().vec8() - dq_mul(b.conj(), a.conj()).vec8()).norm() < 1e-12);
  }
}

TEST_CASE("pose construction and recovery") {
  const DualQuaternion p = pose_from_parts(Quaternion::identity(), Vec3(2, 0, 0));
  CHECK((p.dual.c - Vec4(0, 1, 0, 0)).norm() == 0.0);

  std::mt19937_64 rng(25);
  for (int t = 0; t < 100; ++t) {
    const Quaternion q = random_unit(rng);
    const Vec3 r = random_vec(rng, 10.0);
    const PoseParts parts = pose_to_parts(pose_from_parts(q, r));
    CHECK((parts.attitude.c - q.c).norm() < 1e-12);
    CHECK((parts.r_inertial - r).norm() < 1e-12);
  }

  CHECK_THROWS_AS(pose_from_parts(Quaternion(2, 0, 0, 0), Vec3::Zero()),
                  std::invalid_argument);
}

TEST_CASE("body-frame position via the homogeneous-transform oracle") {
  // 90 degree z-rotation with r_I = (1,0,0): the body sees the origin offset
  // r_B = R^T r_I = (0,-1,0).
  const Quaternion q = rot_from_axis_angle(Vec3::UnitZ(), M_PI / 2);
  const DualQuaternion pose = pose_from_parts(q, Vec3(1, 0, 0));
  const PoseParts parts = pose_to_parts(pose);
  const Vec3 expected = rotation_matrix(q).transpose() * Vec3(1, 0, 0);
  CHECK((parts.r_body - expected).norm() < 1e-12);
  CHECK((parts.r_body - Vec3(0, -1, 0)).norm() < 1e-12);
}

TEST_CASE("pose composition matches homogeneous transforms") {
  std::mt19937_64 rng(26);
  for (int t = 0; t < 100; ++t) {
    const DualQuaternion a = pose_from_parts(random_unit(rng), random_vec(rng, 4.0));
    const DualQuaternion b = pose_from_parts(random_unit(rng), random_vec(rng, 4.0));
    const DualQuaternion ab = dq_mul(a, b);
    CHECK(is_unit_pose(ab, 1e-12));
    CHECK((pose_as_transform(ab) - pose_as_transform(a) * pose_as_transform(b))
              .cwiseAbs()
              .maxCoeff() < 1e-11);
  }
}

TEST_CASE("normalize_pose restores invariants") {
  std::mt19937_64 rng(27);
  DualQuaternion q = pose_from_parts(random_unit(rng), random_vec(rng));
  q.real.c *= 1.0 + 1e-5;
  q.dual.c += 1e-5 * q.real.c;
  const DualQuaternion n = normalize_pose(q);
  CHECK(is_unit_pose(n, 1e-12));
}

TEST_CASE("dual skew block structure") {
  const DualVelocity w(Vec3(1, 2, 3), Vec3(4, 5, 6));
  const Mat6 s = dual_skew6(w);
  CHECK((s.block<3, 3>(0, 0) - skew3(w.angular)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.block<3, 3>(3, 0) - skew3(w.linear)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.block<3, 3>(3, 3) - skew3(w.angular)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.block<3, 3>(0, 3).cwiseAbs().maxCoeff() == 0.0);

  // Embedding keeps scalar parts zero.
  CHECK(w.embed().real.s() == 0.0);
  CHECK(w.embed().dual.s() == 0.0);
}
