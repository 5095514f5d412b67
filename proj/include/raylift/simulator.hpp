#pragma once

#include <cstdint>
#include <vector>

#include "raylift/body_model.hpp"
#include "raylift/geometry.hpp"

namespace raylift {

enum class RigLayout { mono, stereo, quad_270 };

struct NoiseConfig {
  double correlated_sigma_px = 3.0;
  double correlation_halflife_frames = 15.0;
  double perframe_sigma_px = 1.0;
  double distal_multiplier = 1.5;  // wrists and ankles
};

struct MaskConfig {
  int span_min_frames = 10;
  int span_max_frames = 20;
  int burst_min_joints = 1;
  int burst_max_joints = 4;
  double force_mono_prob = 0.1;
  double feet_bias = 0.1;       // extra burst probability on the ankles
  double clean_clip_prob = 0.3; // skip masking entirely
};

struct PoseNoiseConfig {
  double trans_sigma_m = 0.0;
  double rot_sigma_deg = 0.0;
  double resample_interval_s = 10.0;
};

struct SimConfig {
  std::uint64_t seed = 0;
  int num_people = 1;
  double duration_s = 10.0;
  double rate_hz = 30.0;
  RigLayout rig_layout = RigLayout::quad_270;
  double area_m = 4.0;  // half-extent of the walking area
  NoiseConfig noise;
  MaskConfig masking;
  PoseNoiseConfig pose_noise;

  int num_frames() const {
    return static_cast<int>(duration_s * rate_hz + 0.5);
  }
};

// Procedural walking motion: waypoint root trajectories with bounded speed
// and turning rate, plus gait oscillation phase-locked to speed. Fully
// determined by cfg.seed.
std::vector<MotionClip> synthesize_motion(const SimConfig& cfg);

// The observer's own walk, used to drive the headset trajectory.
MotionClip synthesize_wearer(const SimConfig& cfg);

// Rig-fixed camera set for a layout. Layouts nest: mono is camera 0 of
// stereo, stereo is cameras 0-1 of quad_270.
std::vector<CameraRig::Camera> rig_cameras(RigLayout layout);

// Device poses follow the wearer's head with added oscillatory yaw and
// pitch; extrinsics per layout.
CameraRig synthesize_rig(const SimConfig& cfg, const MotionClip& wearer);

// Projects ground-truth keypoints into every camera. Visible keypoints
// carry confidence 1; the box is the 10%-dilated hull of the visible ones.
DetectionList render_detections(const CameraRig& rig,
                                const std::vector<MotionClip>& clips,
                                const SimConfig& cfg);

// Temporally correlated jitter per joint track plus white per-frame noise;
// distal joints are noisier and confidence decays with offset magnitude.
DetectionList apply_keypoint_noise(const DetectionList& dets,
                                   const CameraRig& rig,
                                   const NoiseConfig& cfg, std::uint64_t seed);

// View-span dropouts, optional forced-mono snippets and per-joint bursts;
// masked joints have coordinates and confidence zeroed together.
DetectionList apply_masking(const DetectionList& dets, int num_cameras,
                            const MaskConfig& cfg, std::uint64_t seed);

// Piecewise-smooth SE(3) perturbation of the device poses: offsets are
// redrawn every resample interval and ramped between knots.
CameraRig apply_pose_noise(const CameraRig& rig, const PoseNoiseConfig& cfg,
                           std::uint64_t seed);

// Detections regrouped by rig frame index.
std::vector<DetectionList> group_by_frame(const DetectionList& dets,
                                          const CameraRig& rig);

}  // namespace raylift
