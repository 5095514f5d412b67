#include "raylift/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "raylift/boxes.hpp"
#include "raylift/rng.hpp"

namespace raylift {

namespace {

constexpr double kMaxSpeed = 1.4;        // m/s, well under the 2 m/s bound
constexpr double kWaypointRadius = 0.4;  // m

struct WalkProfile {
  double cruise_lo = 0.6;
  double cruise_hi = 1.3;
  double turn_rate = 1.5;  // rad/s
};

Rot6d yaw6d(double yaw) {
  return matrix_to_rot6d(
      Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix());
}

Rot6d pitch6d(double a) {
  return matrix_to_rot6d(
      Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix());
}

double wrap_pi(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a < -M_PI) a += 2 * M_PI;
  return a;
}

// Shared by targets and the wearer; the stream id decouples their draws.
// Targets get the wearer's root track as an anchor so scenes stay social:
// waypoints are drawn around the observer at conversational distances.
MotionClip synthesize_person(const SimConfig& cfg, int person_id,
                             std::uint64_t stream,
                             const std::vector<Eigen::Vector3d>* anchor,
                             const WalkProfile& profile) {
  Rng rng(Rng::split(cfg.seed, stream));
  const Skeleton& skel = default_skeleton();
  const int frames = cfg.num_frames();
  const double dt = 1.0 / cfg.rate_hz;

  MotionClip clip;
  clip.person_id = person_id;
  clip.rate_hz = cfg.rate_hz;
  clip.states.reserve(static_cast<std::size_t>(frames));

  BodyState base;
  for (int i = 0; i < kNumShapeCoeffs; ++i) base.beta(i) = rng.uniform(-2, 2);
  // rest ankle height fixes the pelvis height so the feet graze z = 0
  const auto rest = forward_kinematics(skel, base);
  const double pelvis_z = -rest.joints.col(2).minCoeff() + 0.01;

  auto draw_waypoint = [&](int frame) {
    if (anchor && !anchor->empty()) {
      // conversational placement: a spot at social distance, biased into
      // the observer's forward cone
      const Eigen::Vector3d& c =
          (*anchor)[std::min<std::size_t>(static_cast<std::size_t>(frame),
                                          anchor->size() - 1)];
      const double r = rng.uniform(1.2, 3.5);
      const double a = c.z() + rng.uniform(-1.0, 1.0);
      Eigen::Vector2d w =
          c.head<2>() + r * Eigen::Vector2d(std::cos(a), std::sin(a));
      w.x() = std::clamp(w.x(), -cfg.area_m, cfg.area_m);
      w.y() = std::clamp(w.y(), -cfg.area_m, cfg.area_m);
      return w;
    }
    return Eigen::Vector2d(rng.uniform(-1, 1) * cfg.area_m,
                           rng.uniform(-1, 1) * cfg.area_m);
  };

  Eigen::Vector2d pos(rng.uniform(-0.7, 0.7) * cfg.area_m,
                      rng.uniform(-0.7, 0.7) * cfg.area_m);
  Eigen::Vector2d waypoint = draw_waypoint(0);
  double heading = rng.uniform(-M_PI, M_PI);
  double speed = 0;
  const double cruise =
      rng.uniform(profile.cruise_lo, std::min(profile.cruise_hi, kMaxSpeed));
  double phase = rng.uniform(0, 2 * M_PI);

  for (int f = 0; f < frames; ++f) {
    if ((waypoint - pos).norm() < kWaypointRadius) {
      waypoint = draw_waypoint(f);
    }
    const Eigen::Vector2d to = waypoint - pos;
    const double bearing = std::atan2(to.y(), to.x());
    const double turn =
        std::clamp(wrap_pi(bearing - heading), -profile.turn_rate * dt,
                   profile.turn_rate * dt);
    heading = wrap_pi(heading + turn);
    const double target =
        std::abs(wrap_pi(bearing - heading)) > 1.0 ? 0.3 * cruise : cruise;
    speed = std::clamp(target, speed - 1.5 * dt, speed + 1.5 * dt);
    pos += speed * dt * Eigen::Vector2d(std::cos(heading), std::sin(heading));

    // stride frequency keyed to speed; amplitude fades when standing
    phase += 2 * M_PI * (0.7 + 0.9 * speed) * dt;
    const double s = std::clamp(speed / 1.2, 0.0, 1.0);
    const double swing = 0.45 * s * std::sin(phase);
    const double bob = 0.02 * s * std::sin(2 * phase);

    BodyState st = base;
    st.omega = yaw6d(heading);
    st.tau = Eigen::Vector3d(pos.x(), pos.y(), pelvis_z + bob);
    st.theta.row(kLeftHip) = pitch6d(-swing).transpose();
    st.theta.row(kRightHip) = pitch6d(swing).transpose();
    st.theta.row(kLeftKnee) =
        pitch6d(0.5 * s * std::max(0.0, -std::sin(phase))).transpose();
    st.theta.row(kRightKnee) =
        pitch6d(0.5 * s * std::max(0.0, std::sin(phase))).transpose();
    const Eigen::Matrix3d arm_down_l =
        Eigen::AngleAxisd(-1.25, Eigen::Vector3d::UnitX()).toRotationMatrix();
    const Eigen::Matrix3d arm_down_r =
        Eigen::AngleAxisd(1.25, Eigen::Vector3d::UnitX()).toRotationMatrix();
    const Eigen::Matrix3d arm_swing_l =
        Eigen::AngleAxisd(0.25 * s * std::sin(phase + M_PI),
                          Eigen::Vector3d::UnitY())
            .toRotationMatrix();
    const Eigen::Matrix3d arm_swing_r =
        Eigen::AngleAxisd(0.25 * s * std::sin(phase), Eigen::Vector3d::UnitY())
            .toRotationMatrix();
    st.theta.row(kLeftShoulder) =
        matrix_to_rot6d(arm_swing_l * arm_down_l).transpose();
    st.theta.row(kRightShoulder) =
        matrix_to_rot6d(arm_swing_r * arm_down_r).transpose();
    st.theta.row(kLeftElbow) = pitch6d(-0.15).transpose();
    st.theta.row(kRightElbow) = pitch6d(-0.15).transpose();
    clip.states.push_back(st);
  }
  return clip;
}

}  // namespace

std::vector<MotionClip> synthesize_motion(const SimConfig& cfg) {
  std::vector<Eigen::Vector3d> anchor;  // x, y, heading
  if (cfg.num_people > 0) {
    const MotionClip wearer = synthesize_wearer(cfg);
    anchor.reserve(wearer.states.size());
    for (const auto& st : wearer.states) {
      const Eigen::Matrix3d r = rot6d_to_matrix(st.omega);
      anchor.emplace_back(st.tau.x(), st.tau.y(),
                          std::atan2(r(1, 0), r(0, 0)));
    }
  }
  std::vector<MotionClip> clips;
  clips.reserve(static_cast<std::size_t>(cfg.num_people));
  for (int p = 0; p < cfg.num_people; ++p) {
    clips.push_back(synthesize_person(
        cfg, p, 100 + static_cast<std::uint64_t>(p), &anchor, WalkProfile{}));
  }
  return clips;
}

MotionClip synthesize_wearer(const SimConfig& cfg) {
  // observers amble and turn gently, so their forward cone is stable
  // enough for social interaction
  WalkProfile calm;
  calm.cruise_lo = 0.2;
  calm.cruise_hi = 0.45;
  calm.turn_rate = 0.4;
  return synthesize_person(cfg, -1, 7, nullptr, calm);
}

std::vector<CameraRig::Camera> rig_cameras(RigLayout layout) {
  // Optical frame mapped into the body frame: camera z is body forward
  // (+x), camera x is body right (-y), camera y is body down (-z).
  Eigen::Matrix3d r_body_cam;
  r_body_cam.col(0) = -Eigen::Vector3d::UnitY();
  r_body_cam.col(1) = -Eigen::Vector3d::UnitZ();
  r_body_cam.col(2) = Eigen::Vector3d::UnitX();

  CameraModeld model;
  model.fx = model.fy = 260;
  model.cx = 320;
  model.cy = 240;
  model.width = 640;
  model.height = 480;

  auto make = [&](const Eigen::Vector3d& pos, double yaw) {
    SE3d body_cam;
    body_cam.rotation =
        Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix() *
        r_body_cam;
    body_cam.translation = pos;
    CameraRig::Camera cam;
    cam.model = model;
    cam.T_camera_body = body_cam.inverse();
    return cam;
  };

  // Layouts nest so camera subsets are comparable across layouts.
  std::vector<CameraRig::Camera> cams;
  cams.push_back(make({0.08, 0.0, 0.0}, 0.0));
  if (layout == RigLayout::mono) return cams;
  cams.push_back(make({0.08, -0.1, 0.0}, 0.0));  // 0.1 m stereo baseline
  if (layout == RigLayout::stereo) return cams;
  const double side = 100.0 * M_PI / 180.0;
  cams.push_back(make({0.02, 0.07, 0.0}, side));
  cams.push_back(make({0.02, -0.07, 0.0}, -side));
  return cams;
}

CameraRig synthesize_rig(const SimConfig& cfg, const MotionClip& wearer) {
  const Skeleton& skel = default_skeleton();
  CameraRig rig;
  rig.cameras = rig_cameras(cfg.rig_layout);
  rig.rate_hz = cfg.rate_hz;

  for (int f = 0; f < wearer.length(); ++f) {
    const BodyState& st = wearer.states[static_cast<std::size_t>(f)];
    const auto fk = forward_kinematics(skel, st);
    const double t = f / cfg.rate_hz;
    const Eigen::Matrix3d yaw_body = rot6d_to_matrix(st.omega);
    // rapid 6-DoF head motion on top of the walk
    const double yaw_osc = (40.0 * M_PI / 180.0) * std::sin(2 * M_PI * 0.3 * t);
    const double pitch_osc =
        (15.0 * M_PI / 180.0) * std::sin(2 * M_PI * 0.5 * t);
    SE3d pose;
    pose.rotation =
        yaw_body *
        Eigen::AngleAxisd(yaw_osc, Eigen::Vector3d::UnitZ())
            .toRotationMatrix() *
        Eigen::AngleAxisd(pitch_osc, Eigen::Vector3d::UnitY())
            .toRotationMatrix();
    pose.translation = fk.joints.row(skel.head_joint).transpose() +
                       Eigen::Vector3d(0, 0, 0.06);
    rig.timestamps_ns.push_back(wearer.timestamp_ns(f));
    rig.T_world_body.push_back(pose);
  }
  return rig;
}

DetectionList render_detections(const CameraRig& rig,
                                const std::vector<MotionClip>& clips,
                                const SimConfig& cfg) {
  (void)cfg;
  const Skeleton& skel = default_skeleton();
  DetectionList out;

  for (int f = 0; f < rig.num_frames(); ++f) {
    for (int k = 0; k < rig.num_cameras(); ++k) {
      const SE3d pose = rig.camera_pose_at(f, k);
      const auto& cam = rig.cameras[static_cast<std::size_t>(k)].model;
      for (const MotionClip& clip : clips) {
        if (f >= clip.length()) continue;
        const auto fk = forward_kinematics(
            skel, clip.states[static_cast<std::size_t>(f)]);
        const auto kps = observed_keypoints(skel, fk.joints);

        Detection det;
        det.timestamp_ns = rig.timestamps_ns[static_cast<std::size_t>(f)];
        det.camera = k;
        det.person_id = clip.person_id;
        Eigen::Matrix<double, Eigen::Dynamic, 2> visible(kNumKeypoints, 2);
        int n = 0;
        for (int j = 0; j < kNumKeypoints; ++j) {
          const auto pr = project(cam, pose, kps.row(j).transpose().eval());
          if (!pr.visible) continue;
          det.keypoints(j, 0) = pr.pixel.x();
          det.keypoints(j, 1) = pr.pixel.y();
          det.keypoints(j, 2) = 1.0;
          visible.row(n++) = pr.pixel.transpose();
        }
        if (n == 0) continue;
        det.box = hull_box(visible.topRows(n), 0.1);
        det.box(0) = std::max(det.box(0), 0.0);
        det.box(1) = std::max(det.box(1), 0.0);
        det.box(2) = std::min(det.box(2), static_cast<double>(cam.width));
        det.box(3) = std::min(det.box(3), static_cast<double>(cam.height));
        out.push_back(det);
      }
    }
  }
  return out;
}

namespace {

bool is_distal(int coco_joint) {
  return coco_joint == 9 || coco_joint == 10 || coco_joint == 15 ||
         coco_joint == 16;  // wrists, ankles
}

void refresh_box(Detection& det, const CameraModeld& cam) {
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(kNumKeypoints, 2);
  int n = 0;
  for (int j = 0; j < kNumKeypoints; ++j) {
    if (det.keypoints(j, 2) <= 0) continue;
    pts.row(n++) = det.keypoints.row(j).head<2>();
  }
  if (n == 0) {
    det.box.setZero();
    return;
  }
  det.box = hull_box(pts.topRows(n), 0.1);
  det.box(0) = std::max(det.box(0), 0.0);
  det.box(1) = std::max(det.box(1), 0.0);
  det.box(2) = std::min(det.box(2), static_cast<double>(cam.width));
  det.box(3) = std::min(det.box(3), static_cast<double>(cam.height));
}

}  // namespace

DetectionList apply_keypoint_noise(const DetectionList& dets,
                                   const CameraRig& rig,
                                   const NoiseConfig& cfg,
                                   std::uint64_t seed) {
  DetectionList out = dets;
  if (cfg.correlated_sigma_px <= 0 && cfg.perframe_sigma_px <= 0) return out;

  // track = (person, camera); the OU state advances every frame whether or
  // not the person is detected, so streams stay aligned under masking
  std::map<std::pair<int, int>, std::vector<std::size_t>> tracks;
  for (std::size_t i = 0; i < out.size(); ++i) {
    tracks[{out[i].person_id, out[i].camera}].push_back(i);
  }

  const double rho =
      cfg.correlation_halflife_frames > 0
          ? std::exp(std::log(0.5) / cfg.correlation_halflife_frames)
          : 0.0;
  const int frames = rig.num_frames();

  for (auto& [key, indices] : tracks) {
    Rng rng(Rng::split(seed,
                       1000 + static_cast<std::uint64_t>(key.first + 2) * 64 +
                           static_cast<std::uint64_t>(key.second)));
    std::map<int, std::size_t> at_frame;
    for (std::size_t i : indices) {
      at_frame[rig.frame_index(out[i].timestamp_ns)] = i;
    }

    Eigen::Matrix<double, kNumKeypoints, 2> ou;
    for (int j = 0; j < kNumKeypoints; ++j) {
      const double sj = cfg.correlated_sigma_px *
                        (is_distal(j) ? cfg.distal_multiplier : 1.0);
      ou(j, 0) = rng.normal(0, sj);
      ou(j, 1) = rng.normal(0, sj);
    }

    for (int f = 0; f < frames; ++f) {
      if (f > 0) {
        const double mix = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        for (int j = 0; j < kNumKeypoints; ++j) {
          const double sj = cfg.correlated_sigma_px *
                            (is_distal(j) ? cfg.distal_multiplier : 1.0);
          ou(j, 0) = rho * ou(j, 0) + mix * rng.normal(0, sj);
          ou(j, 1) = rho * ou(j, 1) + mix * rng.normal(0, sj);
        }
      }
      Eigen::Matrix<double, kNumKeypoints, 2> white;
      for (int j = 0; j < kNumKeypoints; ++j) {
        const double wj = cfg.perframe_sigma_px *
                          (is_distal(j) ? cfg.distal_multiplier : 1.0);
        white(j, 0) = rng.normal(0, wj);
        white(j, 1) = rng.normal(0, wj);
      }

      const auto it = at_frame.find(f);
      if (it == at_frame.end()) continue;
      Detection& det = out[it->second];
      const auto& cam = rig.cameras[static_cast<std::size_t>(det.camera)].model;
      for (int j = 0; j < kNumKeypoints; ++j) {
        if (det.keypoints(j, 2) <= 0) continue;
        const Eigen::Vector2d off = ou.row(j) + white.row(j);
        det.keypoints(j, 0) = std::clamp(det.keypoints(j, 0) + off.x(), 0.0,
                                         static_cast<double>(cam.width));
        det.keypoints(j, 1) = std::clamp(det.keypoints(j, 1) + off.y(), 0.0,
                                         static_cast<double>(cam.height));
        det.keypoints(j, 2) *= std::exp(-off.norm() / 10.0);
      }
      refresh_box(det, cam);
    }
  }
  return out;
}

DetectionList apply_masking(const DetectionList& dets, int num_cameras,
                            const MaskConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  if (rng.bernoulli(cfg.clean_clip_prob)) return dets;

  // frame indexing over the snippet's own timeline
  std::vector<std::int64_t> times;
  for (const auto& d : dets) times.push_back(d.timestamp_ns);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const int F = static_cast<int>(times.size());
  if (F == 0) return dets;
  auto frame_of = [&](std::int64_t t) {
    return static_cast<int>(std::lower_bound(times.begin(), times.end(), t) -
                            times.begin());
  };

  DetectionList out = dets;

  if (rng.bernoulli(cfg.force_mono_prob) && num_cameras > 1) {
    const int keep = static_cast<int>(rng.uniform_int(0, num_cameras - 1));
    DetectionList mono;
    for (const auto& d : out) {
      if (d.camera == keep) mono.push_back(d);
    }
    out.swap(mono);
  } else if (num_cameras > 1) {
    // view-span dropouts, biased toward keeping several views active
    std::vector<std::vector<bool>> active(
        static_cast<std::size_t>(F),
        std::vector<bool>(static_cast<std::size_t>(num_cameras), true));
    int cursor = 0;
    while (cursor < F) {
      const int len = static_cast<int>(
          rng.uniform_int(cfg.span_min_frames, cfg.span_max_frames));
      const int total = num_cameras * (num_cameras + 1) / 2;
      std::int64_t pick = rng.uniform_int(1, total);
      int count = num_cameras;
      for (int a = 1; a <= num_cameras; ++a) {
        pick -= a;
        if (pick <= 0) {
          count = a;
          break;
        }
      }
      std::vector<int> order(static_cast<std::size_t>(num_cameras));
      for (int k = 0; k < num_cameras; ++k) {
        order[static_cast<std::size_t>(k)] = k;
      }
      for (int k = num_cameras - 1; k > 0; --k) {
        const int swap = static_cast<int>(rng.uniform_int(0, k));
        std::swap(order[static_cast<std::size_t>(k)],
                  order[static_cast<std::size_t>(swap)]);
      }
      for (int f = cursor; f < std::min(cursor + len, F); ++f) {
        for (int k = count; k < num_cameras; ++k) {
          active[static_cast<std::size_t>(f)][static_cast<std::size_t>(
              order[static_cast<std::size_t>(k)])] = false;
        }
      }
      cursor += len;
    }
    DetectionList kept;
    for (const auto& d : out) {
      if (active[static_cast<std::size_t>(frame_of(d.timestamp_ns))]
                [static_cast<std::size_t>(d.camera)]) {
        kept.push_back(d);
      }
    }
    out.swap(kept);
  }

  // per-joint bursts, per (person, camera) track; bursts never touch so
  // the audited run lengths stay inside [span_min, span_max]
  std::set<std::pair<int, int>> track_keys;
  for (const auto& d : out) track_keys.insert({d.person_id, d.camera});
  for (const auto& key : track_keys) {
    Rng trng(Rng::split(seed,
                        7000 + static_cast<std::uint64_t>(key.first + 2) * 64 +
                            static_cast<std::uint64_t>(key.second)));
    std::vector<std::vector<bool>> masked(
        static_cast<std::size_t>(kNumKeypoints),
        std::vector<bool>(static_cast<std::size_t>(F), false));
    auto try_burst = [&](int joint, int start, int len) {
      for (int f = std::max(0, start - 1);
           f < std::min(F, start + len + 1); ++f) {
        if (masked[static_cast<std::size_t>(joint)]
                  [static_cast<std::size_t>(f)]) {
          return;
        }
      }
      for (int f = start; f < start + len; ++f) {
        masked[static_cast<std::size_t>(joint)][static_cast<std::size_t>(f)] =
            true;
      }
    };
    for (int block = 0; block + cfg.span_max_frames <= F; block += 60) {
      if (trng.bernoulli(0.5)) {
        const int len = static_cast<int>(
            trng.uniform_int(cfg.span_min_frames, cfg.span_max_frames));
        const int hi = std::max(block, std::min(block + 60, F - len));
        const int start = static_cast<int>(trng.uniform_int(block, hi));
        const int njoints = static_cast<int>(
            trng.uniform_int(cfg.burst_min_joints, cfg.burst_max_joints));
        for (int n = 0; n < njoints; ++n) {
          try_burst(static_cast<int>(trng.uniform_int(0, kNumKeypoints - 1)),
                    start, len);
        }
      }
      if (trng.bernoulli(cfg.feet_bias)) {
        const int len = static_cast<int>(
            trng.uniform_int(cfg.span_min_frames, cfg.span_max_frames));
        const int hi = std::max(block, std::min(block + 60, F - len));
        const int start = static_cast<int>(trng.uniform_int(block, hi));
        try_burst(trng.bernoulli(0.5) ? 15 : 16, start, len);  // ankles
      }
    }
    for (auto& d : out) {
      if (d.person_id != key.first || d.camera != key.second) continue;
      const int f = frame_of(d.timestamp_ns);
      for (int j = 0; j < kNumKeypoints; ++j) {
        if (masked[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)]) {
          d.keypoints.row(j).setZero();
        }
      }
    }
  }

  // fully masked views vanish; boxes follow the surviving joints
  DetectionList final_out;
  for (auto& d : out) {
    if ((d.keypoints.col(2).array() > 0).any()) {
      Eigen::Matrix<double, Eigen::Dynamic, 2> pts(kNumKeypoints, 2);
      int n = 0;
      for (int j = 0; j < kNumKeypoints; ++j) {
        if (d.keypoints(j, 2) > 0) pts.row(n++) = d.keypoints.row(j).head<2>();
      }
      d.box = hull_box(pts.topRows(n), 0.1);
      final_out.push_back(d);
    }
  }
  return final_out;
}

CameraRig apply_pose_noise(const CameraRig& rig, const PoseNoiseConfig& cfg,
                           std::uint64_t seed) {
  if (cfg.trans_sigma_m <= 0 && cfg.rot_sigma_deg <= 0) return rig;
  Rng rng(Rng::split(seed, 31));

  const int F = rig.num_frames();
  const int knot_spacing = std::max(
      1, static_cast<int>(cfg.resample_interval_s * rig.rate_hz + 0.5));
  const int knots = F / knot_spacing + 2;

  std::vector<Eigen::Vector3d> dt(static_cast<std::size_t>(knots));
  std::vector<Eigen::Quaterniond> dq(static_cast<std::size_t>(knots));
  const double ts = cfg.trans_sigma_m / std::sqrt(3.0);
  const double rs = cfg.rot_sigma_deg * M_PI / 180.0;
  for (int i = 0; i < knots; ++i) {
    dt[static_cast<std::size_t>(i)] = Eigen::Vector3d(
        rng.normal(0, ts), rng.normal(0, ts), rng.normal(0, ts));
    const Eigen::Vector3d axis =
        Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    dq[static_cast<std::size_t>(i)] =
        Eigen::Quaterniond(Eigen::AngleAxisd(rng.normal(0, rs), axis));
  }

  CameraRig out = rig;
  for (int f = 0; f < F; ++f) {
    const int i = f / knot_spacing;
    const double alpha =
        static_cast<double>(f - i * knot_spacing) / knot_spacing;
    SE3d delta;
    delta.translation = (1 - alpha) * dt[static_cast<std::size_t>(i)] +
                        alpha * dt[static_cast<std::size_t>(i) + 1];
    delta.rotation = dq[static_cast<std::size_t>(i)]
                         .slerp(alpha, dq[static_cast<std::size_t>(i) + 1])
                         .toRotationMatrix();
    out.T_world_body[static_cast<std::size_t>(f)] =
        delta * rig.T_world_body[static_cast<std::size_t>(f)];
  }
  return out;
}

std::vector<DetectionList> group_by_frame(const DetectionList& dets,
                                          const CameraRig& rig) {
  std::vector<DetectionList> out(static_cast<std::size_t>(rig.num_frames()));
  for (const auto& d : dets) {
    out[static_cast<std::size_t>(rig.frame_index(d.timestamp_ns))].push_back(d);
  }
  return out;
}

}  // namespace raylift
