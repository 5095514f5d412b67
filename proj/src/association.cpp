#include "raylift/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "raylift/boxes.hpp"

namespace raylift {

AssignmentResult hungarian(const Eigen::MatrixXd& cost) {
  AssignmentResult out;
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) {
    for (int i = 0; i < rows; ++i) out.unassigned_rows.push_back(i);
    for (int j = 0; j < cols; ++j) out.unassigned_cols.push_back(j);
    return out;
  }

  const bool transposed = rows > cols;
  const Eigen::MatrixXd a =
      transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // shortest augmenting paths with potentials (1-indexed)
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  std::vector<bool> row_done(static_cast<std::size_t>(rows), false);
  std::vector<bool> col_done(static_cast<std::size_t>(cols), false);
  for (int j = 1; j <= m; ++j) {
    const int i = p[static_cast<std::size_t>(j)];
    if (i == 0) continue;
    int r = i - 1, c = j - 1;
    if (transposed) std::swap(r, c);
    if (cost(r, c) >= kInfeasibleCost) continue;  // gated pair
    out.pairs.emplace_back(r, c);
    out.total_cost += cost(r, c);
    row_done[static_cast<std::size_t>(r)] = true;
    col_done[static_cast<std::size_t>(c)] = true;
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (int r = 0; r < rows; ++r) {
    if (!row_done[static_cast<std::size_t>(r)]) out.unassigned_rows.push_back(r);
  }
  for (int c = 0; c < cols; ++c) {
    if (!col_done[static_cast<std::size_t>(c)]) out.unassigned_cols.push_back(c);
  }
  return out;
}

namespace {

const Eigen::Matrix<double, kNumJoints, 3>& rest_joints() {
  static const Eigen::Matrix<double, kNumJoints, 3> joints =
      forward_kinematics(default_skeleton(), BodyState{}).joints;
  return joints;
}

}  // namespace

std::optional<Eigen::Vector4d> predict_box(
    const Eigen::Matrix<double, kNumJoints, 3>& joints, const CameraRig& rig,
    int camera, std::int64_t t_ns, double min_box_px) {
  const SE3d pose = rig.camera_pose(t_ns, camera);
  const auto& cam = rig.cameras[static_cast<std::size_t>(camera)].model;
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(kNumJoints, 2);
  int n = 0;
  for (int j = 0; j < kNumJoints; ++j) {
    const auto pr = project(cam, pose, joints.row(j).transpose().eval());
    if (pr.visible) pts.row(n++) = pr.pixel.transpose();
  }
  if (n == 0) return std::nullopt;
  Eigen::Vector4d box = hull_box(pts.topRows(n), 0.1, min_box_px);
  box(0) = std::max(box(0), 0.0);
  box(1) = std::max(box(1), 0.0);
  box(2) = std::min(box(2), static_cast<double>(cam.width));
  box(3) = std::min(box(3), static_cast<double>(cam.height));
  return box;
}

std::vector<const Tracklet*> Tracker::active() const {
  std::vector<const Tracklet*> out;
  for (const auto& t : tracklets_) {
    if (t.state == Tracklet::State::active) out.push_back(&t);
  }
  return out;
}

void Tracker::set_latest_joints(
    int tracklet_id, const Eigen::Matrix<double, kNumJoints, 3>& joints) {
  for (auto& t : tracklets_) {
    if (t.id == tracklet_id) {
      t.latest_joints = joints;
      return;
    }
  }
}

int Tracker::spawn(std::int64_t t_ns, const Detection& det) {
  Tracklet trk;
  trk.id = next_id_++;
  trk.spawned_ns = t_ns;
  trk.last_seen_ns = t_ns;

  const SE3d pose = rig_->camera_pose(t_ns, det.camera);
  const auto& cam = rig_->cameras[static_cast<std::size_t>(det.camera)].model;
  Eigen::Vector2d center(0.5 * (det.box(0) + det.box(2)),
                         0.5 * (det.box(1) + det.box(3)));
  center.x() = std::clamp(center.x(), 0.0, static_cast<double>(cam.width));
  center.y() = std::clamp(center.y(), 0.0, static_cast<double>(cam.height));
  const Eigen::Vector3d ray = pose.rotation * unproject(cam, center);
  const Eigen::Vector3d anchor =
      pose.translation + cfg_.bootstrap_depth_m * ray;
  trk.latest_joints = rest_joints().rowwise() + anchor.transpose();

  tracklets_.push_back(std::move(trk));
  absorb(tracklets_.back(), det, t_ns);
  return static_cast<int>(tracklets_.size()) - 1;
}

void Tracker::absorb(Tracklet& trk, const Detection& det, std::int64_t t_ns) {
  trk.observations.push_back(det);
  trk.last_seen_ns = t_ns;
}

void Tracker::update_anchor(Tracklet& trk, const Detection& det,
                            std::int64_t t_ns) {
  const SE3d pose = rig_->camera_pose(t_ns, det.camera);
  const auto& cam = rig_->cameras[static_cast<std::size_t>(det.camera)].model;

  const auto pred = predict_box(trk.latest_joints, *rig_, det.camera, t_ns,
                                cfg_.min_box_px);
  const Eigen::Vector3d pelvis = trk.latest_joints.row(0).transpose();
  double depth = (pelvis - pose.translation).norm();
  if (pred) {
    const double pred_h = (*pred)(3) - (*pred)(1);
    const double det_h = std::max(det.box(3) - det.box(1), 1.0);
    depth *= std::clamp(pred_h / det_h, 0.5, 2.0);  // mono size cue
  }
  depth = std::clamp(depth, cfg_.min_depth_m, cfg_.max_depth_m);

  Eigen::Vector2d center(0.5 * (det.box(0) + det.box(2)),
                         0.5 * (det.box(1) + det.box(3)));
  center.x() = std::clamp(center.x(), 0.0, static_cast<double>(cam.width));
  center.y() = std::clamp(center.y(), 0.0, static_cast<double>(cam.height));
  const Eigen::Vector3d ray = pose.rotation * unproject(cam, center);
  const Eigen::Vector3d anchor = pose.translation + depth * ray;
  trk.latest_joints = rest_joints().rowwise() + anchor.transpose();
}

void Tracker::step(std::int64_t t_ns, const DetectionList& detections) {
  if (t_ns <= last_step_ns_) {
    throw std::invalid_argument("Tracker::step: timestamps must increase");
  }
  last_step_ns_ = t_ns;

  const auto timeout_ns =
      static_cast<std::int64_t>(std::llround(cfg_.timeout_s * 1e9));
  for (auto& trk : tracklets_) {
    if (trk.state == Tracklet::State::active &&
        t_ns - trk.last_seen_ns > timeout_ns) {
      trk.state = Tracklet::State::inactive;
    }
  }

  std::vector<std::size_t> act;
  for (std::size_t i = 0; i < tracklets_.size(); ++i) {
    if (tracklets_[i].state == Tracklet::State::active) act.push_back(i);
  }
  const int K = rig_->num_cameras();

  // predicted boxes per (active tracklet, camera)
  std::vector<std::vector<std::optional<Eigen::Vector4d>>> boxes(act.size());
  for (std::size_t a = 0; a < act.size(); ++a) {
    boxes[a].resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      boxes[a][static_cast<std::size_t>(k)] = predict_box(
          tracklets_[act[a]].latest_joints, *rig_, k, t_ns, cfg_.min_box_px);
    }
  }

  Eigen::MatrixXd cost(detections.size(), act.size());
  cost.setConstant(kInfeasibleCost);
  for (std::size_t d = 0; d < detections.size(); ++d) {
    for (std::size_t a = 0; a < act.size(); ++a) {
      const auto& box = boxes[a][static_cast<std::size_t>(detections[d].camera)];
      if (!box) continue;
      const double iou = box_iou(detections[d].box, *box);
      if (iou >= cfg_.iou_gate) cost(static_cast<Eigen::Index>(d),
                                     static_cast<Eigen::Index>(a)) = 1.0 - iou;
    }
  }
  const AssignmentResult res = hungarian(cost);

  // (tracklet index, camera) slots taken at this timestamp
  std::set<std::pair<std::size_t, int>> occupied;
  std::vector<std::pair<std::size_t, std::size_t>> anchor_updates;  // trk, det
  for (const auto& [d, a] : res.pairs) {
    const std::size_t trk = act[static_cast<std::size_t>(a)];
    absorb(tracklets_[trk], detections[static_cast<std::size_t>(d)], t_ns);
    occupied.insert({trk, detections[static_cast<std::size_t>(d)].camera});
    anchor_updates.emplace_back(trk, static_cast<std::size_t>(d));
  }

  // greedy pass: hand additional camera views to matched tracklets, spawn
  // for whatever remains
  std::vector<std::size_t> spawned;
  for (const int d : res.unassigned_rows) {
    const Detection& det = detections[static_cast<std::size_t>(d)];
    double best_iou = cfg_.iou_gate;
    std::size_t best_trk = tracklets_.size();
    for (std::size_t a = 0; a < act.size(); ++a) {
      const std::size_t trk = act[a];
      if (occupied.count({trk, det.camera})) continue;
      const auto& box = boxes[a][static_cast<std::size_t>(det.camera)];
      if (!box) continue;
      const double iou = box_iou(det.box, *box);
      if (iou >= best_iou) {
        best_iou = iou;
        best_trk = trk;
      }
    }
    for (const std::size_t trk : spawned) {
      if (occupied.count({trk, det.camera})) continue;
      const auto box = predict_box(tracklets_[trk].latest_joints, *rig_,
                                   det.camera, t_ns, cfg_.min_box_px);
      if (!box) continue;
      const double iou = box_iou(det.box, *box);
      if (iou >= best_iou) {
        best_iou = iou;
        best_trk = trk;
      }
    }
    if (best_trk < tracklets_.size()) {
      absorb(tracklets_[best_trk], det, t_ns);
      occupied.insert({best_trk, det.camera});
    } else {
      const std::size_t trk = static_cast<std::size_t>(spawn(t_ns, det));
      occupied.insert({trk, det.camera});
      spawned.push_back(trk);
    }
  }

  // one mono-style anchor refresh per tracklet, lowest camera first
  std::sort(anchor_updates.begin(), anchor_updates.end(),
            [&](const auto& lhs, const auto& rhs) {
              if (lhs.first != rhs.first) return lhs.first < rhs.first;
              return detections[lhs.second].camera <
                     detections[rhs.second].camera;
            });
  std::set<std::size_t> updated;
  for (const auto& [trk, d] : anchor_updates) {
    if (!updated.insert(trk).second) continue;
    update_anchor(tracklets_[trk], detections[d], t_ns);
  }
}

}  // namespace raylift
