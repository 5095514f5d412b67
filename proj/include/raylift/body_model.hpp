#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "raylift/geometry.hpp"

namespace raylift {

inline constexpr int kNumJoints = 23;        // pelvis-rooted tree
inline constexpr int kNumBones = 22;
inline constexpr int kSurfacePerBone = 4;
inline constexpr int kNumSurfacePoints = kNumBones * kSurfacePerBone;
inline constexpr int kNumShapeCoeffs = 10;
inline constexpr int kThetaDim = kNumJoints * 6;
inline constexpr int kStateDim = kThetaDim + kNumShapeCoeffs + 6 + 3;  // 157

using Rot6d = Eigen::Matrix<double, 6, 1>;

enum Joint : int {
  kPelvis = 0,
  kSpine1,
  kSpine2,
  kChest,
  kNeck,
  kHead,
  kHeadTop,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kLeftFoot,
  kRightHip,
  kRightKnee,
  kRightAnkle,
  kRightFoot,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kLeftHand,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
  kRightHand,
};

// Two-column rotation representation: Gram-Schmidt of the stacked column
// pair, third column from the cross product.
Eigen::Matrix3d rot6d_to_matrix(const Rot6d& r);
Rot6d matrix_to_rot6d(const Eigen::Matrix3d& m);

inline Rot6d identity_rot6d() {
  Rot6d r;
  r << 1, 0, 0, 0, 1, 0;
  return r;
}

// Per-frame parametric pose: joint rotations, shape, root rotation and
// root translation.
struct BodyState {
  Eigen::Matrix<double, kNumJoints, 6> theta =
      identity_rot6d().transpose().replicate(kNumJoints, 1);
  Eigen::Matrix<double, kNumShapeCoeffs, 1> beta =
      Eigen::Matrix<double, kNumShapeCoeffs, 1>::Zero();
  Rot6d omega = identity_rot6d();
  Eigen::Vector3d tau = Eigen::Vector3d::Zero();

  Eigen::Matrix<double, kStateDim, 1> as_vector() const;
  static BodyState from_vector(const Eigen::Matrix<double, kStateDim, 1>& v);
};

// Fixed articulated skeleton: tree topology, rest offsets, linear
// bone-length shape basis, the map to observed MSCOCO keypoints and the
// proxy surface point attachments.
struct Skeleton {
  std::array<int, kNumJoints> parent{};                  // parent[0] == -1
  Eigen::Matrix<double, kNumJoints, 3> rest_offset;      // from parent, meters
  Eigen::Matrix<double, kNumShapeCoeffs, kNumJoints> shape_basis;
  Eigen::Matrix<double, kNumKeypoints, kNumJoints> keypoint_map;  // rows sum to 1

  struct SurfacePoint {
    int bone_joint;        // child joint of the bone
    double along;          // fraction along the (shape-scaled) bone offset
    Eigen::Vector3d radial;  // fixed offset in the parent joint frame
  };
  std::array<SurfacePoint, kNumSurfacePoints> surface;

  std::array<int, 4> foot_joints{};  // ankles and toes, for contact metrics
  int head_joint = 0;

  // Bone-length multiplier for joint j at the given shape coefficients.
  double bone_scale(const Eigen::Matrix<double, kNumShapeCoeffs, 1>& beta,
                    int j) const {
    return 1.0 + shape_basis.col(j).dot(beta);
  }
};

// The canonical skeleton shipped with the project (fixed at build time).
const Skeleton& default_skeleton();

struct FkResult {
  Eigen::Matrix<double, kNumJoints, 3> joints;
  Eigen::Matrix<double, kNumSurfacePoints, 3> surface;
};

// World-frame joints and proxy surface points: tree traversal with
// per-joint rotations and shape-scaled offsets, then the root rotation and
// translation applied on top.
FkResult forward_kinematics(const Skeleton& skel, const BodyState& state);

// Maps skeleton joints to the 17 observed keypoints.
Eigen::Matrix<double, kNumKeypoints, 3> observed_keypoints(
    const Skeleton& skel, const Eigen::Matrix<double, kNumJoints, 3>& joints);

// Time-indexed pose sequence for one person at a fixed rate.
struct MotionClip {
  int person_id = 0;
  std::int64_t start_ns = 0;
  double rate_hz = 30.0;
  std::vector<BodyState> states;

  int length() const { return static_cast<int>(states.size()); }
  std::int64_t timestamp_ns(int i) const {
    return start_ns + static_cast<std::int64_t>(
                          std::llround(i * 1e9 / rate_hz));
  }
};

// Forward finite difference of FK joints, in meters/second; length T-1.
std::vector<Eigen::Matrix<double, kNumJoints, 3>> joint_velocity(
    const Skeleton& skel, const MotionClip& clip);

// Rigidly re-expresses a state: rotates the root and moves the
// translation, leaving joint angles and shape untouched.
BodyState transform_state(const SE3d& transform, const BodyState& state);

}  // namespace raylift
