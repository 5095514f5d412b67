#pragma once

#include <Eigen/Dense>

#include <vector>

#include "raylift/body_model.hpp"
#include "raylift/geometry.hpp"

namespace raylift {

// Per-frame joint positions, rows = joints (any joint count).
using JointSeq = std::vector<Eigen::MatrixX3d>;

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::MatrixX3d apply(const Eigen::MatrixX3d& pts) const {
    return ((scale * (rotation * pts.transpose())).colwise() + translation)
        .transpose();
  }
};

// Closed-form similarity fit minimizing sum ||s R src + t - dst||^2
// (covariance SVD with reflection correction). with_scale=false keeps a
// rigid fit for trajectory alignment.
SimilarityTransform procrustes(const Eigen::MatrixX3d& src,
                               const Eigen::MatrixX3d& dst,
                               bool with_scale = true);

enum class AlignmentKind { none, pelvis, procrustes, sim3_window };

struct Alignment {
  AlignmentKind kind = AlignmentKind::none;
  int window_frames = 100;  // sim3_window chunk length
  int root_joint = 0;
};

// Mean per-joint position error in millimeters under the chosen alignment.
double mpjpe_mm(const JointSeq& pred, const JointSeq& gt,
                const Alignment& align);

// Root trajectory error: rigid-align the full root tracks (no scale), then
// mean error over the ground-truth path length, in percent.
double rte_percent(const std::vector<Eigen::Vector3d>& pred_root,
                   const std::vector<Eigen::Vector3d>& gt_root);

// Mean third-difference magnitude scaled to 10 m/s^3 units.
double jitter_10m_s3(const JointSeq& pred, double rate_hz);

// Horizontal foot displacement during ground contact, millimeters,
// weighted by exp(1 - h/h_max) with contact below h_max.
double foot_skating_mm(const JointSeq& pred, const std::array<int, 4>& feet,
                       double rate_hz, double contact_height_m = 0.05);

// Fraction of ground-truth person-frames with any predicted pelvis within
// the threshold, identity-agnostic.
double tracking_recall(const std::vector<MotionClip>& pred,
                       const std::vector<MotionClip>& gt, double threshold_m);

// Frames where some detection overlaps the projected ground-truth keypoint
// box with IoU >= threshold in at least one camera.
std::vector<bool> visibility_filter(
    const std::vector<Eigen::Matrix<double, kNumKeypoints, 3>>& gt_keypoints,
    const std::vector<DetectionList>& detections_per_frame,
    const CameraRig& rig, double iou_threshold = 0.4);

struct MetricsReport {
  double mpjpe_mm = 0;
  double pa_mpjpe_mm = 0;
  double wa_mpjpe100_mm = 0;
  double w_mpjpe_mm = 0;
  double rte_percent = 0;
  double jitter_10m_s3 = 0;
  double fs_mm = 0;
  double recall_3d = 0;
  std::vector<double> root_error_trace_m;  // per evaluated frame
  std::vector<double> coverage_trace;      // per timestamp, for Fig-style plots
};

// Full metric suite for one matched prediction/ground-truth pair. The
// optional frame mask drops frames from the MPJPE family and traces.
MetricsReport evaluate_pair(const Skeleton& skel, const MotionClip& pred,
                            const MotionClip& gt,
                            const std::vector<bool>* frame_mask = nullptr);

}  // namespace raylift
