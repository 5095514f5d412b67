#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "raylift/body_model.hpp"
#include "raylift/geometry.hpp"

namespace raylift {

// Sentinel cost for gated / infeasible assignment pairs.
inline constexpr double kInfeasibleCost = 1e9;

struct AssignmentResult {
  std::vector<std::pair<int, int>> pairs;  // (row, col), feasible only
  std::vector<int> unassigned_rows;
  std::vector<int> unassigned_cols;
  double total_cost = 0;
};

// Minimum-cost bipartite matching (O(n^3) potentials method). Entries at
// or above kInfeasibleCost are treated as forbidden: the matching first
// maximizes the number of feasible pairs, then minimizes their cost.
AssignmentResult hungarian(const Eigen::MatrixXd& cost);

struct Tracklet {
  int id = 0;
  enum class State { active, inactive } state = State::active;
  std::int64_t last_seen_ns = 0;
  std::int64_t spawned_ns = 0;
  std::vector<Detection> observations;  // ordered by (time, camera)
  // world-frame anchor joints, refreshed by the fitter or by the internal
  // ray-depth update
  Eigen::Matrix<double, kNumJoints, 3> latest_joints;
};

struct TrackerConfig {
  double iou_gate = 0.3;
  double timeout_s = 2.0;
  double bootstrap_depth_m = 3.0;  // anchor depth for brand-new tracklets
  double min_box_px = 20.0;
  double min_depth_m = 1.0;
  double max_depth_m = 10.0;
};

// Projects anchor joints into one camera; empty when nothing is visible.
std::optional<Eigen::Vector4d> predict_box(
    const Eigen::Matrix<double, kNumJoints, 3>& joints, const CameraRig& rig,
    int camera, std::int64_t t_ns, double min_box_px = 20.0);

// World-frame tracking-by-detection: predicted-box IoU costs, one joint
// gated Hungarian pass per frame, then a greedy pass that lets additional
// cameras attach to already-matched tracklets. Single-threaded state
// machine; step timestamps must be strictly increasing.
class Tracker {
 public:
  Tracker(const TrackerConfig& cfg, const CameraRig* rig)
      : cfg_(cfg), rig_(rig) {}

  void step(std::int64_t t_ns, const DetectionList& detections);

  // Fitter feedback replacing the internal anchor update.
  void set_latest_joints(int tracklet_id,
                         const Eigen::Matrix<double, kNumJoints, 3>& joints);

  const std::vector<Tracklet>& tracklets() const { return tracklets_; }
  std::vector<const Tracklet*> active() const;

 private:
  int spawn(std::int64_t t_ns, const Detection& det);
  void absorb(Tracklet& trk, const Detection& det, std::int64_t t_ns);
  void update_anchor(Tracklet& trk, const Detection& det, std::int64_t t_ns);

  TrackerConfig cfg_;
  const CameraRig* rig_;
  std::vector<Tracklet> tracklets_;
  int next_id_ = 0;
  std::int64_t last_step_ns_ = std::numeric_limits<std::int64_t>::min();
};

}  // namespace raylift
