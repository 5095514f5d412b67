#include "raylift/body_model.hpp"

#include <cmath>
#include <stdexcept>

namespace raylift {

Eigen::Matrix3d rot6d_to_matrix(const Rot6d& r) {
  const Eigen::Vector3d a1 = r.head<3>();
  const Eigen::Vector3d a2 = r.tail<3>();
  const double n1 = a1.norm();
  if (n1 <= 1e-9) {
    throw std::invalid_argument("rot6d_to_matrix: first column is null");
  }
  const Eigen::Vector3d b1 = a1 / n1;
  const Eigen::Vector3d u2 = a2 - b1.dot(a2) * b1;
  const double n2 = u2.norm();
  if (n2 <= 1e-9 * a2.norm() || n2 <= 1e-12) {
    throw std::invalid_argument("rot6d_to_matrix: columns are parallel");
  }
  const Eigen::Vector3d b2 = u2 / n2;
  Eigen::Matrix3d m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return m;
}

Rot6d matrix_to_rot6d(const Eigen::Matrix3d& m) {
  Rot6d r;
  r.head<3>() = m.col(0);
  r.tail<3>() = m.col(1);
  return r;
}

Eigen::Matrix<double, kStateDim, 1> BodyState::as_vector() const {
  Eigen::Matrix<double, kStateDim, 1> v;
  for (int j = 0; j < kNumJoints; ++j) {
    v.segment<6>(j * 6) = theta.row(j).transpose();
  }
  v.segment<kNumShapeCoeffs>(kThetaDim) = beta;
  v.segment<6>(kThetaDim + kNumShapeCoeffs) = omega;
  v.tail<3>() = tau;
  return v;
}

BodyState BodyState::from_vector(
    const Eigen::Matrix<double, kStateDim, 1>& v) {
  BodyState s;
  for (int j = 0; j < kNumJoints; ++j) {
    s.theta.row(j) = v.segment<6>(j * 6).transpose();
  }
  s.beta = v.segment<kNumShapeCoeffs>(kThetaDim);
  s.omega = v.segment<6>(kThetaDim + kNumShapeCoeffs);
  s.tau = v.tail<3>();
  return s;
}

namespace {

// Body convention: +x forward, +y left, +z up; rest pose is a T-pose.
Skeleton build_skeleton() {
  Skeleton s;
  s.parent = {-1, kPelvis,    kSpine1,    kSpine2,     kChest,  kNeck,
              kHead,  kPelvis, kLeftHip,  kLeftKnee,  kLeftAnkle,  kPelvis,
              kRightHip, kRightKnee, kRightAnkle, kChest, kLeftShoulder,
              kLeftElbow, kLeftWrist, kChest, kRightShoulder, kRightElbow,
              kRightWrist};

  s.rest_offset.setZero();
  auto set = [&](int j, double x, double y, double z) {
    s.rest_offset.row(j) = Eigen::RowVector3d(x, y, z);
  };
  set(kSpine1, 0, 0, 0.12);
  set(kSpine2, 0, 0, 0.13);
  set(kChest, 0, 0, 0.13);
  set(kNeck, 0, 0, 0.15);
  set(kHead, 0, 0, 0.10);
  set(kHeadTop, 0, 0, 0.15);
  set(kLeftHip, 0, 0.09, -0.06);
  set(kLeftKnee, 0, 0, -0.40);
  set(kLeftAnkle, 0, 0, -0.42);
  set(kLeftFoot, 0.15, 0, -0.04);
  set(kRightHip, 0, -0.09, -0.06);
  set(kRightKnee, 0, 0, -0.40);
  set(kRightAnkle, 0, 0, -0.42);
  set(kRightFoot, 0.15, 0, -0.04);
  set(kLeftShoulder, 0, 0.18, 0.10);
  set(kLeftElbow, 0, 0.28, 0);
  set(kLeftWrist, 0, 0.25, 0);
  set(kLeftHand, 0, 0.08, 0);
  set(kRightShoulder, 0, -0.18, 0.10);
  set(kRightElbow, 0, -0.28, 0);
  set(kRightWrist, 0, -0.25, 0);
  set(kRightHand, 0, -0.08, 0);

  // Per-bone length multipliers, one direction per shape coefficient. The
  // per-joint magnitudes sum to < 0.2 so lengths stay positive over the
  // simulator's beta range [-5, 5].
  s.shape_basis.setZero();
  auto scale_group = [&](int b, std::initializer_list<int> joints, double v) {
    for (int j : joints) s.shape_basis(b, j) = v;
  };
  scale_group(0, {kSpine1, kSpine2, kChest, kNeck, kHead, kHeadTop, kLeftHip,
                  kLeftKnee, kLeftAnkle, kLeftFoot, kRightHip, kRightKnee,
                  kRightAnkle, kRightFoot, kLeftShoulder, kLeftElbow,
                  kLeftWrist, kLeftHand, kRightShoulder, kRightElbow,
                  kRightWrist, kRightHand},
              0.03);
  scale_group(1, {kLeftHip, kLeftKnee, kLeftAnkle, kLeftFoot, kRightHip,
                  kRightKnee, kRightAnkle, kRightFoot},
              0.04);
  scale_group(2, {kLeftShoulder, kLeftElbow, kLeftWrist, kLeftHand,
                  kRightShoulder, kRightElbow, kRightWrist, kRightHand},
              0.04);
  scale_group(3, {kSpine1, kSpine2, kChest, kNeck}, 0.04);
  scale_group(4, {kHead, kHeadTop}, 0.03);
  scale_group(5, {kLeftHip, kRightHip}, 0.02);
  scale_group(6, {kLeftShoulder, kRightShoulder}, 0.02);
  scale_group(7, {kLeftAnkle, kLeftFoot, kRightAnkle, kRightFoot}, 0.02);
  scale_group(8, {kLeftWrist, kLeftHand, kRightWrist, kRightHand}, 0.02);
  scale_group(9, {kLeftFoot, kRightFoot, kLeftHand, kRightHand}, 0.02);

  // MSCOCO keypoints: 14 direct selections plus 3 interpolated face points.
  s.keypoint_map.setZero();
  auto select = [&](int row, int j) { s.keypoint_map(row, j) = 1.0; };
  s.keypoint_map(0, kHead) = 0.6;  // nose
  s.keypoint_map(0, kHeadTop) = 0.4;
  s.keypoint_map(1, kHead) = 0.4;  // left eye
  s.keypoint_map(1, kHeadTop) = 0.5;
  s.keypoint_map(1, kLeftShoulder) = 0.1;
  s.keypoint_map(2, kHead) = 0.4;  // right eye
  s.keypoint_map(2, kHeadTop) = 0.5;
  s.keypoint_map(2, kRightShoulder) = 0.1;
  select(3, kHead);   // left ear
  select(4, kHead);   // right ear
  select(5, kLeftShoulder);
  select(6, kRightShoulder);
  select(7, kLeftElbow);
  select(8, kRightElbow);
  select(9, kLeftWrist);
  select(10, kRightWrist);
  select(11, kLeftHip);
  select(12, kRightHip);
  select(13, kLeftKnee);
  select(14, kRightKnee);
  select(15, kLeftAnkle);
  select(16, kRightAnkle);

  // Proxy surface: two rings of two points along each bone, perpendicular
  // to the rest bone axis. Radial offsets make axial twist observable.
  int m = 0;
  for (int j = 1; j < kNumJoints; ++j) {
    const Eigen::Vector3d axis = s.rest_offset.row(j).normalized();
    Eigen::Vector3d ref = std::abs(axis.z()) < 0.9
                              ? Eigen::Vector3d::UnitZ()
                              : Eigen::Vector3d::UnitX();
    const Eigen::Vector3d n1 = axis.cross(ref).normalized();
    const Eigen::Vector3d n2 = axis.cross(n1);
    const double r = 0.05;
    s.surface[m++] = {j, 0.3, r * n1};
    s.surface[m++] = {j, 0.3, -r * n1};
    s.surface[m++] = {j, 0.7, r * n2};
    s.surface[m++] = {j, 0.7, -r * n2};
  }

  s.foot_joints = {kLeftAnkle, kLeftFoot, kRightAnkle, kRightFoot};
  s.head_joint = kHead;
  return s;
}

}  // namespace

const Skeleton& default_skeleton() {
  static const Skeleton skel = build_skeleton();
  return skel;
}

FkResult forward_kinematics(const Skeleton& skel, const BodyState& state) {
  std::array<Eigen::Matrix3d, kNumJoints> global;
  Eigen::Matrix<double, kNumJoints, 3> local_pos;

  global[0] = rot6d_to_matrix(state.theta.row(0).transpose());
  local_pos.row(0) = skel.rest_offset.row(0);
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = skel.parent[static_cast<std::size_t>(j)];
    const Eigen::Matrix3d rj = rot6d_to_matrix(state.theta.row(j).transpose());
    global[static_cast<std::size_t>(j)] = global[static_cast<std::size_t>(p)] * rj;
    const Eigen::Vector3d off =
        skel.rest_offset.row(j).transpose() * skel.bone_scale(state.beta, j);
    local_pos.row(j) = local_pos.row(p) +
                       (global[static_cast<std::size_t>(p)] * off).transpose();
  }

  const Eigen::Matrix3d root = rot6d_to_matrix(state.omega);
  FkResult out;
  for (int j = 0; j < kNumJoints; ++j) {
    out.joints.row(j) =
        (root * local_pos.row(j).transpose() + state.tau).transpose();
  }
  for (int m = 0; m < kNumSurfacePoints; ++m) {
    const auto& sp = skel.surface[static_cast<std::size_t>(m)];
    const int j = sp.bone_joint;
    const int p = skel.parent[static_cast<std::size_t>(j)];
    const Eigen::Vector3d off =
        skel.rest_offset.row(j).transpose() * skel.bone_scale(state.beta, j);
    const Eigen::Vector3d v =
        local_pos.row(p).transpose() +
        global[static_cast<std::size_t>(p)] * (sp.along * off + sp.radial);
    out.surface.row(m) = (root * v + state.tau).transpose();
  }
  return out;
}

Eigen::Matrix<double, kNumKeypoints, 3> observed_keypoints(
    const Skeleton& skel, const Eigen::Matrix<double, kNumJoints, 3>& joints) {
  return skel.keypoint_map * joints;
}

std::vector<Eigen::Matrix<double, kNumJoints, 3>> joint_velocity(
    const Skeleton& skel, const MotionClip& clip) {
  if (clip.length() < 2) {
    throw std::invalid_argument("joint_velocity: clip must have >= 2 frames");
  }
  std::vector<Eigen::Matrix<double, kNumJoints, 3>> out;
  out.reserve(static_cast<std::size_t>(clip.length() - 1));
  Eigen::Matrix<double, kNumJoints, 3> prev =
      forward_kinematics(skel, clip.states[0]).joints;
  for (int t = 1; t < clip.length(); ++t) {
    const auto cur =
        forward_kinematics(skel, clip.states[static_cast<std::size_t>(t)]).joints;
    out.push_back((cur - prev) * clip.rate_hz);
    prev = cur;
  }
  return out;
}

BodyState transform_state(const SE3d& transform, const BodyState& state) {
  BodyState out = state;
  out.omega =
      matrix_to_rot6d(transform.rotation * rot6d_to_matrix(state.omega));
  out.tau = transform * state.tau;
  return out;
}

}  // namespace raylift
