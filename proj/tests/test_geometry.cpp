#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "raylift/geometry.hpp"
#include "raylift/rng.hpp"

using namespace raylift;

namespace {

Eigen::Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}
Eigen::Matrix3d rot_y(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix();
}
Eigen::Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

SE3d random_pose(Rng& rng) {
  SE3d p;
  p.rotation = (Eigen::AngleAxisd(rng.uniform(-M_PI, M_PI),
                                  Eigen::Vector3d(rng.normal(), rng.normal(),
                                                  rng.normal())
                                      .normalized()))
                   .toRotationMatrix();
  p.translation =
      Eigen::Vector3d(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
  return p;
}

CameraModeld test_camera() {
  CameraModeld cam;
  cam.fx = 300;
  cam.fy = 300;
  cam.cx = 320;
  cam.cy = 240;
  cam.width = 640;
  cam.height = 480;
  return cam;
}

// Single-camera rig whose camera frame coincides with the device body
// frame; gravity_align of the identity pose is the identity, so the lift
// frame equals the world frame.
CameraRig identity_rig(int frames, int cameras = 1) {
  CameraRig rig;
  for (int k = 0; k < cameras; ++k) {
    CameraRig::Camera cam;
    cam.model = test_camera();
    cam.T_camera_body = SE3d::identity();
    rig.cameras.push_back(cam);
  }
  for (int i = 0; i < frames; ++i) {
    rig.timestamps_ns.push_back(i * 33333333);
    rig.T_world_body.push_back(SE3d::identity());
  }
  return rig;
}

}  // namespace

TEST_CASE("SE3 compose and invert") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const SE3d a = random_pose(rng);
    const SE3d b = random_pose(rng);
    const SE3d ab = a * b;
    CHECK(ab.is_valid(1e-9));
    const Eigen::Vector3d p(rng.normal(), rng.normal(), rng.normal());
    CHECK((ab * p - a * (b * p)).norm() < 1e-12);
    const SE3d id = a * a.inverse();
    CHECK((id.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(id.translation.norm() < 1e-12);
  }
}

TEST_CASE("unproject principal ray") {
  CameraModeld cam;
  cam.fx = cam.fy = 1;
  cam.cx = cam.cy = 0;
  cam.width = cam.height = 100;
  const Eigen::Vector3d r = unproject(cam, Eigen::Vector2d(0, 0));
  CHECK((r - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("unproject 45 degree ray") {
  CameraModeld cam;
  cam.fx = cam.fy = 100;
  cam.cx = cam.cy = 0;
  cam.width = cam.height = 200;
  const Eigen::Vector3d r = unproject(cam, Eigen::Vector2d(100, 0));
  CHECK((r - Eigen::Vector3d(1, 0, 1).normalized()).norm() < 1e-14);
}

TEST_CASE("unproject hand-inverted pinhole") {
  CameraModeld cam;
  cam.fx = 200;
  cam.fy = 100;
  cam.cx = 320;
  cam.cy = 240;
  cam.width = 640;
  cam.height = 480;
  // (420-320)/200 = 0.5, (340-240)/100 = 1.0
  const Eigen::Vector3d r = unproject(cam, Eigen::Vector2d(420, 340));
  CHECK((r - Eigen::Vector3d(0.5, 1.0, 1.0).normalized()).norm() < 1e-14);
  // round trip through project at an arbitrary depth
  const auto back = project(cam, SE3d::identity(), (r * 3.7).eval());
  CHECK(back.visible);
  CHECK((back.pixel - Eigen::Vector2d(420, 340)).norm() < 1e-6);
}

TEST_CASE("unproject rejects out-of-bounds pixels") {
  const CameraModeld cam = test_camera();
  CHECK_THROWS_AS(unproject(cam, Eigen::Vector2d(-1, 10)),
                  std::invalid_argument);
  CHECK_THROWS_AS(unproject(cam, Eigen::Vector2d(10, 481)),
                  std::invalid_argument);
}

TEST_CASE("project on-axis and behind") {
  CameraModeld cam;
  cam.fx = cam.fy = 100;
  cam.cx = cam.cy = 50;
  cam.width = cam.height = 100;
  const auto front = project(cam, SE3d::identity(), Eigen::Vector3d(0, 0, 2));
  CHECK(front.visible);
  CHECK((front.pixel - Eigen::Vector2d(50, 50)).norm() < 1e-12);
  const auto behind =
      project(cam, SE3d::identity(), Eigen::Vector3d(0, 0, -2));
  CHECK_FALSE(behind.visible);
}

TEST_CASE("project pinhole arithmetic") {
  CameraModeld cam;
  cam.fx = 100;
  cam.fy = 100;
  cam.cx = 0;
  cam.cy = 0;
  cam.width = 200;
  cam.height = 200;
  const auto p = project(cam, SE3d::identity(), Eigen::Vector3d(1, 0, 2));
  CHECK(p.pixel.x() == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("project/unproject round trip over random cameras and poses") {
  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    CameraModeld cam;
    cam.fx = rng.uniform(80, 600);
    cam.fy = rng.uniform(80, 600);
    cam.width = 640;
    cam.height = 480;
    cam.cx = rng.uniform(200, 440);
    cam.cy = rng.uniform(120, 360);
    const SE3d pose = random_pose(rng);
    const Eigen::Vector2d px(rng.uniform(0, cam.width),
                             rng.uniform(0, cam.height));
    const double depth = rng.uniform(0.1, 20.0);
    const Eigen::Vector3d world = pose * (unproject(cam, px) * depth).eval();
    const auto back = project(cam, pose, world);
    CHECK(back.visible);
    CHECK((back.pixel - px).norm() < 1e-6);
  }
}

TEST_CASE("gravity_align identity") {
  const SE3d out = gravity_align(SE3d::identity());
  CHECK((out.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-15);
  CHECK(out.translation.norm() == 0.0);
}

TEST_CASE("gravity_align removes roll") {
  SE3d pose;
  pose.rotation = rot_x(30.0 * M_PI / 180.0);
  pose.translation = Eigen::Vector3d(0.5, -1, 2);
  const SE3d out = gravity_align(pose);
  CHECK((out.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK((out.translation - pose.translation).norm() == 0.0);
}

TEST_CASE("gravity_align keeps yaw only") {
  // Euler decomposition oracle: yaw 90deg, pitch 20deg.
  SE3d pose;
  pose.rotation = rot_z(M_PI / 2) * rot_y(20.0 * M_PI / 180.0);
  pose.translation = Eigen::Vector3d(1, 2, 3);
  const SE3d out = gravity_align(pose);
  CHECK((out.rotation - rot_z(M_PI / 2)).norm() < 1e-12);
  CHECK((out.translation - Eigen::Vector3d(1, 2, 3)).norm() == 0.0);
}

TEST_CASE("gravity_align degenerate fallback is deterministic") {
  // Pose pitched straight down: forward axis is vertical, the fallback
  // uses the pose z axis heading.
  SE3d pose;
  pose.rotation = rot_y(M_PI / 2);  // +x maps to -z
  const SE3d out = gravity_align(pose);
  CHECK(out.rotation.col(2).isApprox(Eigen::Vector3d::UnitZ(), 1e-12));
  CHECK(std::abs(out.rotation.determinant() - 1.0) < 1e-12);
  // pose z axis lands on +x
  CHECK(out.rotation.col(0).isApprox(Eigen::Vector3d::UnitX(), 1e-12));
}

TEST_CASE("gravity_align is idempotent") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const SE3d pose = random_pose(rng);
    const SE3d once = gravity_align(pose);
    const SE3d twice = gravity_align(once);
    CHECK((once.rotation - twice.rotation).norm() < 1e-12);
    CHECK((once.translation - twice.translation).norm() < 1e-12);
  }
}

TEST_CASE("lift principal-point keypoint through origin camera") {
  CameraRig rig = identity_rig(3);
  Detection det;
  det.timestamp_ns = rig.timestamps_ns[0];
  det.camera = 0;
  det.keypoints(0, 0) = 320;
  det.keypoints(0, 1) = 240;
  det.keypoints(0, 2) = 1.0;
  const RayCloud cloud = lift_keypoints(rig, {det}, 0, 3);
  const PluckerRayd ray = cloud.ray(0, 0, 0);
  CHECK((ray.direction - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
  CHECK(ray.moment.norm() < 1e-12);
  CHECK(ray.confidence == 1.0);
}

TEST_CASE("lift translated camera produces the hand-computed moment") {
  CameraRig rig = identity_rig(2, 2);
  rig.cameras[1].T_camera_body.translation = Eigen::Vector3d(-1, 0, 0);
  // camera 1 center in body coordinates: inverse translation = (1,0,0)
  Detection det;
  det.timestamp_ns = 0;
  det.camera = 1;
  det.keypoints(5, 0) = 320;
  det.keypoints(5, 1) = 240;
  det.keypoints(5, 2) = 0.9;
  const RayCloud cloud = lift_keypoints(rig, {det}, 0, 2);
  const PluckerRayd ray = cloud.ray(0, 1, 5);
  CHECK((ray.direction - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
  CHECK((ray.moment - Eigen::Vector3d(0, -1, 0)).norm() < 1e-12);
}

TEST_CASE("lift with no detections is all zeros") {
  CameraRig rig = identity_rig(4, 2);
  const RayCloud cloud = lift_keypoints(rig, {}, 0, 4);
  CHECK(cloud.frames == 4);
  CHECK(cloud.cameras == 2);
  CHECK(cloud.joints == 17);
  CHECK(cloud.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lift rejects detections outside the window") {
  CameraRig rig = identity_rig(4);
  Detection det;
  det.timestamp_ns = rig.timestamps_ns[3];
  det.keypoints(0, 2) = 1.0;
  det.keypoints.row(0).head<2>() << 320, 240;
  CHECK_THROWS_AS(lift_keypoints(rig, {det}, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(lift_keypoints(rig, {det}, 1, 4), std::out_of_range);
}

TEST_CASE("lifted rays satisfy the Plucker invariants") {
  Rng rng(11);
  CameraRig rig = identity_rig(5, 3);
  rig.cameras[1].T_camera_body = random_pose(rng);
  rig.cameras[2].T_camera_body = random_pose(rng);
  for (auto& pose : rig.T_world_body) pose = random_pose(rng);

  DetectionList dets;
  for (int f = 0; f < 5; ++f) {
    for (int k = 0; k < 3; ++k) {
      Detection det;
      det.timestamp_ns = rig.timestamps_ns[static_cast<std::size_t>(f)];
      det.camera = k;
      for (int j = 0; j < kNumKeypoints; ++j) {
        det.keypoints(j, 0) = rng.uniform(0, 640);
        det.keypoints(j, 1) = rng.uniform(0, 480);
        det.keypoints(j, 2) = rng.uniform(0.1, 1.0);
      }
      dets.push_back(det);
    }
  }
  const RayCloud cloud = lift_keypoints(rig, dets, 0, 5);
  const SE3d local_world = cloud.frame.inverse();
  int checked = 0;
  for (int t = 0; t < 5; ++t) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d center =
          (local_world * rig.camera_pose_at(t, k)).translation;
      for (int j = 0; j < kNumKeypoints; ++j) {
        const PluckerRayd ray = cloud.ray(t, k, j);
        if (!ray.present()) continue;
        ++checked;
        CHECK(std::abs(ray.direction.norm() - 1.0) < 1e-9);
        CHECK(std::abs(ray.moment.dot(ray.direction)) < 1e-9);
        // the ray passes through its generating camera center
        CHECK((center.cross(ray.direction) - ray.moment).norm() < 1e-9);
      }
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("lifting is invariant to a common gravity-consistent transform") {
  Rng rng(19);
  CameraRig rig = identity_rig(6, 2);
  rig.cameras[1].T_camera_body.translation = Eigen::Vector3d(0, -0.1, 0.02);
  for (std::size_t i = 0; i < rig.T_world_body.size(); ++i) {
    SE3d& pose = rig.T_world_body[i];
    pose.rotation = rot_z(rng.uniform(-1, 1)) * rot_y(rng.uniform(-0.3, 0.3)) *
                    rot_x(rng.uniform(-0.3, 0.3));
    pose.translation =
        Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), 1.5);
  }

  DetectionList dets;
  for (int f = 0; f < 6; ++f) {
    Detection det;
    det.timestamp_ns = rig.timestamps_ns[static_cast<std::size_t>(f)];
    det.camera = f % 2;
    for (int j = 0; j < kNumKeypoints; ++j) {
      det.keypoints(j, 0) = rng.uniform(0, 640);
      det.keypoints(j, 1) = rng.uniform(0, 480);
      det.keypoints(j, 2) = 1.0;
    }
    dets.push_back(det);
  }
  const RayCloud base = lift_keypoints(rig, dets, 0, 6);

  for (int trial = 0; trial < 100; ++trial) {
    // world up must stay up: the absorbed transform is yaw + translation
    SE3d g;
    g.rotation = rot_z(rng.uniform(-M_PI, M_PI));
    g.translation = Eigen::Vector3d(rng.uniform(-10, 10), rng.uniform(-10, 10),
                                    rng.uniform(-10, 10));
    CameraRig moved = rig;
    for (auto& pose : moved.T_world_body) pose = g * pose;
    const RayCloud lifted = lift_keypoints(moved, dets, 0, 6);
    CHECK((lifted.data - base.data).cwiseAbs().maxCoeff() < 1e-9);
  }
}
