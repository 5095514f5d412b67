#include "raylift/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "raylift/boxes.hpp"

namespace raylift {

SimilarityTransform procrustes(const Eigen::MatrixX3d& src,
                               const Eigen::MatrixX3d& dst, bool with_scale) {
  const Eigen::Index n = src.rows();
  if (n < 3 || dst.rows() != n) {
    throw std::invalid_argument("procrustes: need >= 3 matched points");
  }
  const Eigen::RowVector3d mu_s = src.colwise().mean();
  const Eigen::RowVector3d mu_d = dst.colwise().mean();
  const Eigen::MatrixX3d cs = src.rowwise() - mu_s;
  const Eigen::MatrixX3d cd = dst.rowwise() - mu_d;

  const Eigen::Matrix3d cov = cd.transpose() * cs / static_cast<double>(n);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU |
                                                 Eigen::ComputeFullV);
  const double var_s = cs.squaredNorm() / static_cast<double>(n);
  // The similarity fit needs a well-conditioned rotation and a nonzero
  // source spread; the rigid fit tolerates rank-1 data (straight
  // trajectories), where the stabilizer rotation does not affect residuals.
  if (with_scale &&
      (var_s <= 1e-18 ||
       svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0))) {
    throw std::invalid_argument("procrustes: degenerate point set");
  }

  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) {
    d(2) = -1;
  }
  SimilarityTransform out;
  out.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  out.scale =
      with_scale ? svd.singularValues().dot(d) / var_s : 1.0;
  out.translation = mu_d.transpose() -
                    out.scale * out.rotation * mu_s.transpose();
  return out;
}

namespace {

double mean_joint_error_mm(const JointSeq& a, const JointSeq& b) {
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    acc += (a[t] - b[t]).rowwise().norm().sum();
    count += static_cast<std::size_t>(a[t].rows());
  }
  return count ? 1000.0 * acc / static_cast<double>(count) : 0.0;
}

}  // namespace

double mpjpe_mm(const JointSeq& pred, const JointSeq& gt,
                const Alignment& align) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("mpjpe: sequence length mismatch");
  }
  if (pred.empty()) return 0.0;
  const std::size_t T = pred.size();

  JointSeq a = pred;
  switch (align.kind) {
    case AlignmentKind::none:
      break;
    case AlignmentKind::pelvis:
      for (std::size_t t = 0; t < T; ++t) {
        const Eigen::RowVector3d shift =
            gt[t].row(align.root_joint) - pred[t].row(align.root_joint);
        a[t] = pred[t].rowwise() + shift;
      }
      break;
    case AlignmentKind::procrustes:
      for (std::size_t t = 0; t < T; ++t) {
        a[t] = procrustes(pred[t], gt[t]).apply(pred[t]);
      }
      break;
    case AlignmentKind::sim3_window: {
      const std::size_t w = static_cast<std::size_t>(align.window_frames);
      for (std::size_t begin = 0; begin < T; begin += w) {
        const std::size_t end = std::min(begin + w, T);
        const Eigen::Index rows = pred[begin].rows();
        Eigen::MatrixX3d ps(static_cast<Eigen::Index>(end - begin) * rows, 3);
        Eigen::MatrixX3d gs(ps.rows(), 3);
        for (std::size_t t = begin; t < end; ++t) {
          ps.middleRows(static_cast<Eigen::Index>(t - begin) * rows, rows) =
              pred[t];
          gs.middleRows(static_cast<Eigen::Index>(t - begin) * rows, rows) =
              gt[t];
        }
        const SimilarityTransform s = procrustes(ps, gs);
        for (std::size_t t = begin; t < end; ++t) a[t] = s.apply(pred[t]);
      }
      break;
    }
  }
  return mean_joint_error_mm(a, gt);
}

double rte_percent(const std::vector<Eigen::Vector3d>& pred_root,
                   const std::vector<Eigen::Vector3d>& gt_root) {
  const std::size_t T = pred_root.size();
  if (T < 2 || gt_root.size() != T) {
    throw std::invalid_argument("rte: need matched trajectories, length >= 2");
  }
  double path = 0;
  for (std::size_t t = 1; t < T; ++t) path += (gt_root[t] - gt_root[t - 1]).norm();
  if (path <= 0) {
    throw std::invalid_argument("rte: ground-truth path length is zero");
  }

  Eigen::MatrixX3d ps(static_cast<Eigen::Index>(T), 3);
  Eigen::MatrixX3d gs(static_cast<Eigen::Index>(T), 3);
  for (std::size_t t = 0; t < T; ++t) {
    ps.row(static_cast<Eigen::Index>(t)) = pred_root[t].transpose();
    gs.row(static_cast<Eigen::Index>(t)) = gt_root[t].transpose();
  }
  const Eigen::MatrixX3d aligned = procrustes(ps, gs, false).apply(ps);
  const double mean_err = (aligned - gs).rowwise().norm().mean();
  return 100.0 * mean_err / path;
}

double jitter_10m_s3(const JointSeq& pred, double rate_hz) {
  if (pred.size() < 4) {
    throw std::invalid_argument("jitter: need at least 4 frames");
  }
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t t = 0; t + 3 < pred.size(); ++t) {
    const Eigen::MatrixX3d d =
        pred[t + 3] - 3.0 * pred[t + 2] + 3.0 * pred[t + 1] - pred[t];
    acc += d.rowwise().norm().sum();
    count += static_cast<std::size_t>(d.rows());
  }
  const double rate3 = rate_hz * rate_hz * rate_hz;
  return count ? acc / static_cast<double>(count) * rate3 / 10.0 : 0.0;
}

double foot_skating_mm(const JointSeq& pred, const std::array<int, 4>& feet,
                       double rate_hz, double contact_height_m) {
  (void)rate_hz;  // displacement is reported per frame, as in prior art
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t t = 0; t + 1 < pred.size(); ++t) {
    for (int j : feet) {
      const double h = pred[t](j, 2);
      if (h >= contact_height_m) continue;
      const Eigen::Vector2d d = pred[t + 1].row(j).head<2>() -
                                pred[t].row(j).head<2>();
      acc += 1000.0 * d.norm() * std::exp(1.0 - h / contact_height_m);
      ++count;
    }
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

double tracking_recall(const std::vector<MotionClip>& pred,
                       const std::vector<MotionClip>& gt, double threshold_m) {
  if (threshold_m <= 0) {
    throw std::invalid_argument("tracking_recall: threshold must be positive");
  }
  std::multimap<std::int64_t, Eigen::Vector3d> pred_pelvis;
  for (const auto& clip : pred) {
    for (int t = 0; t < clip.length(); ++t) {
      pred_pelvis.emplace(clip.timestamp_ns(t),
                          clip.states[static_cast<std::size_t>(t)].tau);
    }
  }
  std::size_t hit = 0, total = 0;
  for (const auto& clip : gt) {
    for (int t = 0; t < clip.length(); ++t) {
      ++total;
      const auto range = pred_pelvis.equal_range(clip.timestamp_ns(t));
      const Eigen::Vector3d& p = clip.states[static_cast<std::size_t>(t)].tau;
      for (auto it = range.first; it != range.second; ++it) {
        if ((it->second - p).norm() < threshold_m) {
          ++hit;
          break;
        }
      }
    }
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

std::vector<bool> visibility_filter(
    const std::vector<Eigen::Matrix<double, kNumKeypoints, 3>>& gt_keypoints,
    const std::vector<DetectionList>& detections_per_frame,
    const CameraRig& rig, double iou_threshold) {
  const std::size_t T = gt_keypoints.size();
  std::vector<bool> keep(T, false);
  for (std::size_t t = 0; t < T && t < detections_per_frame.size(); ++t) {
    for (int k = 0; k < rig.num_cameras(); ++k) {
      const SE3d pose = rig.camera_pose_at(static_cast<int>(t), k);
      const auto& cam = rig.cameras[static_cast<std::size_t>(k)].model;
      Eigen::Matrix<double, Eigen::Dynamic, 2> pts(kNumKeypoints, 2);
      int visible = 0;
      for (int j = 0; j < kNumKeypoints; ++j) {
        const auto pr = project(cam, pose, gt_keypoints[t].row(j).transpose().eval());
        if (pr.visible) pts.row(visible++) = pr.pixel.transpose();
      }
      if (visible == 0) continue;
      const Eigen::Vector4d gt_box = hull_box(pts.topRows(visible), 0.1);
      for (const Detection& det : detections_per_frame[t]) {
        if (det.camera != k) continue;
        if (box_iou(det.box, gt_box) >= iou_threshold) {
          keep[t] = true;
          break;
        }
      }
      if (keep[t]) break;
    }
  }
  return keep;
}

MetricsReport evaluate_pair(const Skeleton& skel, const MotionClip& pred,
                            const MotionClip& gt,
                            const std::vector<bool>* frame_mask) {
  if (pred.length() != gt.length()) {
    throw std::invalid_argument("evaluate_pair: clip length mismatch");
  }
  JointSeq pj, gj;
  std::vector<Eigen::Vector3d> pr, gr;
  JointSeq pj_all;  // unmasked, for smoothness metrics
  for (int t = 0; t < pred.length(); ++t) {
    const auto fp =
        forward_kinematics(skel, pred.states[static_cast<std::size_t>(t)]).joints;
    pj_all.push_back(fp);
    if (frame_mask && !(*frame_mask)[static_cast<std::size_t>(t)]) continue;
    const auto fg =
        forward_kinematics(skel, gt.states[static_cast<std::size_t>(t)]).joints;
    pj.push_back(fp);
    gj.push_back(fg);
    pr.push_back(pred.states[static_cast<std::size_t>(t)].tau);
    gr.push_back(gt.states[static_cast<std::size_t>(t)].tau);
  }

  MetricsReport rep;
  rep.w_mpjpe_mm = mpjpe_mm(pj, gj, {AlignmentKind::none});
  rep.mpjpe_mm = mpjpe_mm(pj, gj, {AlignmentKind::pelvis});
  rep.pa_mpjpe_mm = mpjpe_mm(pj, gj, {AlignmentKind::procrustes});
  rep.wa_mpjpe100_mm = mpjpe_mm(pj, gj, {AlignmentKind::sim3_window, 100});
  if (pr.size() >= 2) rep.rte_percent = rte_percent(pr, gr);
  if (pj_all.size() >= 4) rep.jitter_10m_s3 = jitter_10m_s3(pj_all, pred.rate_hz);
  rep.fs_mm = foot_skating_mm(pj_all, skel.foot_joints, pred.rate_hz);
  rep.recall_3d = tracking_recall({pred}, {gt}, 0.25);
  for (std::size_t t = 0; t < pr.size(); ++t) {
    rep.root_error_trace_m.push_back((pr[t] - gr[t]).norm());
  }
  return rep;
}

}  // namespace raylift
