#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "raylift/body_model.hpp"
#include "raylift/rng.hpp"

using namespace raylift;

namespace {

BodyState random_state(Rng& rng) {
  BodyState st;
  for (int j = 0; j < kNumJoints; ++j) {
    Rot6d r;
    for (int i = 0; i < 6; ++i) r(i) = rng.normal();
    st.theta.row(j) = matrix_to_rot6d(rot6d_to_matrix(r)).transpose();
  }
  Rot6d w;
  for (int i = 0; i < 6; ++i) w(i) = rng.normal();
  st.omega = matrix_to_rot6d(rot6d_to_matrix(w));
  for (int i = 0; i < kNumShapeCoeffs; ++i) st.beta(i) = rng.uniform(-2, 2);
  st.tau = Eigen::Vector3d(rng.uniform(-3, 3), rng.uniform(-3, 3),
                           rng.uniform(0, 2));
  return st;
}

// Independent FK oracle: homogeneous 4x4 chains evaluated recursively.
Eigen::Matrix4d pose_of(const Skeleton& s, const BodyState& st, int j) {
  Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
  local.topLeftCorner<3, 3>() = rot6d_to_matrix(st.theta.row(j).transpose());
  local.topRightCorner<3, 1>() =
      s.rest_offset.row(j).transpose() * s.bone_scale(st.beta, j);
  if (s.parent[static_cast<std::size_t>(j)] < 0) return local;
  return pose_of(s, st, s.parent[static_cast<std::size_t>(j)]) * local;
}

FkResult oracle_fk(const Skeleton& s, const BodyState& st) {
  Eigen::Matrix4d root = Eigen::Matrix4d::Identity();
  root.topLeftCorner<3, 3>() = rot6d_to_matrix(st.omega);
  root.topRightCorner<3, 1>() = st.tau;
  FkResult out;
  for (int j = 0; j < kNumJoints; ++j) {
    const Eigen::Matrix4d world = root * pose_of(s, st, j);
    out.joints.row(j) = world.topRightCorner<3, 1>().transpose();
  }
  for (int m = 0; m < kNumSurfacePoints; ++m) {
    const auto& sp = s.surface[static_cast<std::size_t>(m)];
    const int p = s.parent[static_cast<std::size_t>(sp.bone_joint)];
    const Eigen::Matrix4d world = root * pose_of(s, st, p);
    const Eigen::Vector3d local =
        sp.along * s.rest_offset.row(sp.bone_joint).transpose() *
            s.bone_scale(st.beta, sp.bone_joint) +
        sp.radial;
    out.surface.row(m) =
        (world.topLeftCorner<3, 3>() * local + world.topRightCorner<3, 1>())
            .transpose();
  }
  return out;
}

double skeleton_height(const Skeleton& s, double beta0) {
  BodyState st;
  st.beta(0) = beta0;
  const auto fk = forward_kinematics(s, st);
  return fk.joints.col(2).maxCoeff() - fk.joints.col(2).minCoeff();
}

}  // namespace

TEST_CASE("rot6d identity and scale invariance") {
  Rot6d r;
  r << 1, 0, 0, 0, 1, 0;
  CHECK((rot6d_to_matrix(r) - Eigen::Matrix3d::Identity()).norm() < 1e-15);
  r << 2, 0, 0, 0, 3, 0;
  CHECK((rot6d_to_matrix(r) - Eigen::Matrix3d::Identity()).norm() < 1e-15);
}

TEST_CASE("rot6d column construction") {
  Rot6d r;
  r << 0, 1, 0, -1, 0, 0;
  Eigen::Matrix3d expect;
  expect << 0, -1, 0, 1, 0, 0, 0, 0, 1;  // 90 degrees about z
  CHECK((rot6d_to_matrix(r) - expect).norm() < 1e-15);
}

TEST_CASE("rot6d rejects degenerate input") {
  Rot6d r;
  r << 0, 0, 0, 0, 1, 0;
  CHECK_THROWS_AS(rot6d_to_matrix(r), std::invalid_argument);
  r << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(rot6d_to_matrix(r), std::invalid_argument);
}

TEST_CASE("rot6d round trip") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Matrix3d m =
        Eigen::AngleAxisd(rng.uniform(-M_PI, M_PI),
                          Eigen::Vector3d(rng.normal(), rng.normal(),
                                          rng.normal())
                              .normalized())
            .toRotationMatrix();
    const Eigen::Matrix3d back = rot6d_to_matrix(matrix_to_rot6d(m));
    CHECK((back - m).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(back.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("skeleton shape is well formed") {
  const Skeleton& s = default_skeleton();
  CHECK(s.parent[0] == -1);
  for (int j = 1; j < kNumJoints; ++j) {
    CHECK(s.parent[static_cast<std::size_t>(j)] >= 0);
    CHECK(s.parent[static_cast<std::size_t>(j)] < j);  // topological order
    CHECK(s.rest_offset.row(j).norm() > 0.0);
  }
  for (int r = 0; r < kNumKeypoints; ++r) {
    CHECK(s.keypoint_map.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // bone lengths stay positive across the full simulator beta range
  for (int j = 1; j < kNumJoints; ++j) {
    double worst = 0;
    for (int b = 0; b < kNumShapeCoeffs; ++b)
      worst += 5.0 * std::abs(s.shape_basis(b, j));
    CHECK(worst < 1.0);
  }
}

TEST_CASE("rest pose joints are cumulative offsets") {
  const Skeleton& s = default_skeleton();
  BodyState st;  // identity rotations, zero beta/tau
  const auto fk = forward_kinematics(s, st);
  for (int j = 0; j < kNumJoints; ++j) {
    Eigen::RowVector3d acc = Eigen::RowVector3d::Zero();
    for (int a = j; a >= 0; a = s.parent[static_cast<std::size_t>(a)]) {
      acc += s.rest_offset.row(a);
    }
    CHECK((fk.joints.row(j) - acc).norm() < 1e-12);
  }
  CHECK(fk.joints.row(0).norm() == 0.0);  // pelvis at tau
}

TEST_CASE("tau shifts every joint exactly") {
  const Skeleton& s = default_skeleton();
  BodyState st;
  const auto rest = forward_kinematics(s, st);
  st.tau = Eigen::Vector3d(1, 2, 3);
  const auto moved = forward_kinematics(s, st);
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK((moved.joints.row(j) - rest.joints.row(j) -
           Eigen::RowVector3d(1, 2, 3))
              .norm() < 1e-12);
  }
}

TEST_CASE("forward kinematics matches the recursive oracle") {
  const Skeleton& s = default_skeleton();
  Rng rng(17);
  for (int i = 0; i < 30; ++i) {
    const BodyState st = random_state(rng);
    const auto fast = forward_kinematics(s, st);
    const auto slow = oracle_fk(s, st);
    CHECK((fast.joints - slow.joints).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((fast.surface - slow.surface).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("root equivariance") {
  const Skeleton& s = default_skeleton();
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    BodyState st = random_state(rng);
    BodyState neutral = st;
    neutral.omega = identity_rot6d();
    neutral.tau.setZero();
    const auto base = forward_kinematics(s, neutral);
    const auto posed = forward_kinematics(s, st);
    const Eigen::Matrix3d r = rot6d_to_matrix(st.omega);
    for (int j = 0; j < kNumJoints; ++j) {
      const Eigen::Vector3d expect =
          r * base.joints.row(j).transpose() + st.tau;
      CHECK((posed.joints.row(j).transpose() - expect).norm() < 1e-9);
    }
    for (int m = 0; m < kNumSurfacePoints; ++m) {
      const Eigen::Vector3d expect =
          r * base.surface.row(m).transpose() + st.tau;
      CHECK((posed.surface.row(m).transpose() - expect).norm() < 1e-9);
    }
  }
}

TEST_CASE("beta[0] grows the skeleton") {
  const Skeleton& s = default_skeleton();
  double prev = 0;
  for (double b : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const double h = skeleton_height(s, b);
    CHECK(h > prev);
    prev = h;
  }
}

TEST_CASE("observed keypoints select and interpolate") {
  const Skeleton& s = default_skeleton();
  Rng rng(31);
  const BodyState st = random_state(rng);
  const auto fk = forward_kinematics(s, st);
  const auto kps = observed_keypoints(s, fk.joints);

  // left shoulder keypoint (row 5) selects joint 15 directly
  CHECK((kps.row(5) - fk.joints.row(15)).norm() < 1e-12);

  // a row averaging two joints lands on their midpoint
  Skeleton custom = s;
  custom.keypoint_map.row(0).setZero();
  custom.keypoint_map(0, 1) = 0.5;
  custom.keypoint_map(0, 2) = 0.5;
  const auto mid = observed_keypoints(custom, fk.joints);
  CHECK((mid.row(0) - 0.5 * (fk.joints.row(1) + fk.joints.row(2))).norm() <
        1e-12);

  // full map agrees with an explicit matrix multiply
  for (int r = 0; r < kNumKeypoints; ++r) {
    Eigen::RowVector3d acc = Eigen::RowVector3d::Zero();
    for (int j = 0; j < kNumJoints; ++j) {
      acc += s.keypoint_map(r, j) * fk.joints.row(j);
    }
    CHECK((kps.row(r) - acc).norm() < 1e-12);
  }
}

TEST_CASE("joint velocity trivial cases") {
  const Skeleton& s = default_skeleton();
  MotionClip clip;
  clip.rate_hz = 30;
  BodyState st;
  for (int t = 0; t < 10; ++t) clip.states.push_back(st);
  for (const auto& v : joint_velocity(s, clip)) {
    CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  }

  MotionClip moving;
  moving.rate_hz = 30;
  for (int t = 0; t < 10; ++t) {
    BodyState m;
    m.tau = Eigen::Vector3d(t / 30.0, 0, 0);  // 1 m/s
    moving.states.push_back(m);
  }
  for (const auto& v : joint_velocity(s, moving)) {
    for (int j = 0; j < kNumJoints; ++j) {
      CHECK((v.row(j) - Eigen::RowVector3d(1, 0, 0)).norm() < 1e-9);
    }
  }

  MotionClip tiny;
  tiny.states.push_back(st);
  CHECK_THROWS_AS(joint_velocity(s, tiny), std::invalid_argument);
}

TEST_CASE("joint velocity tracks an analytic derivative") {
  const Skeleton& s = default_skeleton();
  const double amp = 0.5, freq = 1.0, rate = 30.0;
  MotionClip clip;
  clip.rate_hz = rate;
  for (int t = 0; t < 60; ++t) {
    BodyState st;
    st.tau.x() = amp * std::sin(2 * M_PI * freq * t / rate);
    clip.states.push_back(st);
  }
  const auto vel = joint_velocity(s, clip);
  for (std::size_t t = 0; t < vel.size(); ++t) {
    // forward differences agree with the analytic midpoint derivative
    const double mid = (static_cast<double>(t) + 0.5) / rate;
    const double expect = amp * 2 * M_PI * freq * std::cos(2 * M_PI * freq * mid);
    CHECK(std::abs(vel[t](0, 0) - expect) < 1e-2);
  }
}

TEST_CASE("transform_state composes with forward kinematics") {
  const Skeleton& s = default_skeleton();
  Rng rng(41);
  const BodyState st = random_state(rng);
  SE3d g;
  g.rotation =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized())
          .toRotationMatrix();
  g.translation = Eigen::Vector3d(4, -5, 6);
  const auto direct = forward_kinematics(s, transform_state(g, st));
  const auto base = forward_kinematics(s, st);
  for (int j = 0; j < kNumJoints; ++j) {
    const Eigen::Vector3d expect = g * base.joints.row(j).transpose().eval();
    CHECK((direct.joints.row(j).transpose() - expect).norm() < 1e-9);
  }
}
