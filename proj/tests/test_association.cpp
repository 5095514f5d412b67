#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "raylift/association.hpp"
#include "raylift/boxes.hpp"
#include "raylift/rng.hpp"
#include "raylift/simulator.hpp"

using namespace raylift;

namespace {

// exhaustive matching oracle: most feasible pairs first, then least cost
std::pair<int, double> brute_force(const Eigen::MatrixXd& cost) {
  const int r = static_cast<int>(cost.rows());
  const int c = static_cast<int>(cost.cols());
  const int n = std::max(r, c);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  int best_count = -1;
  double best_cost = 0;
  do {
    int count = 0;
    double total = 0;
    for (int i = 0; i < r; ++i) {
      const int j = perm[static_cast<std::size_t>(i)];
      if (j >= c) continue;
      if (cost(i, j) >= kInfeasibleCost) continue;
      ++count;
      total += cost(i, j);
    }
    if (count > best_count ||
        (count == best_count && total < best_cost - 1e-12)) {
      best_count = count;
      best_cost = total;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_count, best_cost};
}

CameraRig static_rig(RigLayout layout, int frames, double rate = 30.0) {
  CameraRig rig;
  rig.cameras = rig_cameras(layout);
  rig.rate_hz = rate;
  for (int f = 0; f < frames; ++f) {
    rig.timestamps_ns.push_back(
        static_cast<std::int64_t>(std::llround(f * 1e9 / rate)));
    rig.T_world_body.push_back(SE3d::identity());
  }
  return rig;
}

}  // namespace

TEST_CASE("hungarian unique optimum") {
  Eigen::MatrixXd cost(2, 2);
  cost << 1, 2, 2, 1;
  const auto res = hungarian(cost);
  REQUIRE(res.pairs.size() == 2);
  CHECK(res.pairs[0] == std::make_pair(0, 0));
  CHECK(res.pairs[1] == std::make_pair(1, 1));
  CHECK(res.total_cost == doctest::Approx(2.0));
}

TEST_CASE("hungarian honors the gate sentinel") {
  Eigen::MatrixXd cost(1, 1);
  cost << kInfeasibleCost;
  const auto res = hungarian(cost);
  CHECK(res.pairs.empty());
  CHECK(res.unassigned_rows == std::vector<int>{0});
  CHECK(res.unassigned_cols == std::vector<int>{0});
}

TEST_CASE("hungarian equals brute force on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int r = static_cast<int>(rng.uniform_int(1, 7));
    const int c = static_cast<int>(rng.uniform_int(1, 7));
    Eigen::MatrixXd cost(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) {
        cost(i, j) = rng.bernoulli(0.15) ? kInfeasibleCost
                                         : rng.uniform(0.0, 10.0);
      }
    }
    const auto res = hungarian(cost);
    const auto [count, total] = brute_force(cost);
    CHECK(static_cast<int>(res.pairs.size()) == count);
    CHECK(res.total_cost == doctest::Approx(total).epsilon(1e-9));

    // no row or column is used twice
    std::set<int> rows, cols;
    for (const auto& [i, j] : res.pairs) {
      CHECK(rows.insert(i).second);
      CHECK(cols.insert(j).second);
    }
  }
}

TEST_CASE("predict_box basics") {
  const CameraRig rig = static_rig(RigLayout::mono, 10);
  const Skeleton& skel = default_skeleton();

  BodyState st;
  st.tau = Eigen::Vector3d(3, 0, 0.95);
  const auto joints = forward_kinematics(skel, st).joints;
  const auto box = predict_box(joints, rig, 0, rig.timestamps_ns[0]);
  REQUIRE(box.has_value());
  CHECK((*box)(2) > (*box)(0));
  CHECK((*box)(3) > (*box)(1));

  // behind the camera: no box
  BodyState behind;
  behind.tau = Eigen::Vector3d(-3, 0, 0.95);
  const auto none = predict_box(forward_kinematics(skel, behind).joints, rig,
                                0, rig.timestamps_ns[0]);
  CHECK_FALSE(none.has_value());

  // single visible point inflates to the minimum box size
  Eigen::Matrix<double, kNumJoints, 3> point =
      Eigen::Matrix<double, kNumJoints, 3>::Zero();
  point.rowwise() = Eigen::RowVector3d(-3, 0, 0.95);  // everything behind...
  point.row(0) = Eigen::RowVector3d(3, 0, 0.95);      // ...except the pelvis
  const auto tiny = predict_box(point, rig, 0, rig.timestamps_ns[0], 20.0);
  REQUIRE(tiny.has_value());
  CHECK((*tiny)(2) - (*tiny)(0) == doctest::Approx(20.0));
  CHECK((*tiny)(3) - (*tiny)(1) == doctest::Approx(20.0));
}

TEST_CASE("tracker goes inactive after the timeout") {
  const CameraRig rig = static_rig(RigLayout::mono, 120);
  TrackerConfig cfg;
  Tracker tracker(cfg, &rig);

  Detection det;
  det.timestamp_ns = rig.timestamps_ns[0];
  det.camera = 0;
  det.box = Eigen::Vector4d(300, 200, 340, 280);
  det.keypoints.col(2).setConstant(1.0);
  det.keypoints.col(0).setConstant(320);
  det.keypoints.col(1).setConstant(240);
  tracker.step(rig.timestamps_ns[0], {det});
  REQUIRE(tracker.tracklets().size() == 1);
  CHECK(tracker.tracklets()[0].state == Tracklet::State::active);

  for (int f = 1; f < 70; ++f) tracker.step(rig.timestamps_ns[f], {});
  CHECK(tracker.tracklets()[0].state == Tracklet::State::inactive);

  CHECK_THROWS_AS(tracker.step(rig.timestamps_ns[0], {}),
                  std::invalid_argument);
}

TEST_CASE("two well-separated people stay two tracklets") {
  SimConfig cfg;
  cfg.seed = 4;
  cfg.num_people = 0;
  cfg.duration_s = 100.0 / 30.0;
  cfg.rig_layout = RigLayout::quad_270;

  // two people on opposite sides, walking slowly sideways
  std::vector<MotionClip> clips;
  for (int p = 0; p < 2; ++p) {
    MotionClip clip;
    clip.person_id = p;
    clip.rate_hz = cfg.rate_hz;
    for (int f = 0; f < 100; ++f) {
      BodyState st;
      const double side = p == 0 ? 1.0 : -1.0;
      st.tau = Eigen::Vector3d(2.5 + 0.002 * f, side * 1.2, 0.95);
      st.omega = matrix_to_rot6d(
          Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitZ()).toRotationMatrix());
      clip.states.push_back(st);
    }
    clips.push_back(clip);
  }
  CameraRig rig = static_rig(RigLayout::quad_270, 100);
  const auto frames = group_by_frame(render_detections(rig, clips, cfg), rig);

  TrackerConfig tc;
  Tracker tracker(tc, &rig);
  for (int f = 0; f < 100; ++f) {
    tracker.step(rig.timestamps_ns[static_cast<std::size_t>(f)],
                 frames[static_cast<std::size_t>(f)]);
  }
  REQUIRE(tracker.tracklets().size() == 2);

  // zero identity switches: every tracklet only ever absorbed one person
  for (const auto& trk : tracker.tracklets()) {
    std::set<int> people;
    for (const auto& obs : trk.observations) people.insert(obs.person_id);
    CHECK(people.size() == 1);
  }
}

TEST_CASE("predicted boxes track a static person under rig motion") {
  // camera orbits while the person stands still; world-frame anchoring
  // keeps the predicted box on target every frame
  SimConfig cfg;
  cfg.rate_hz = 30;
  const int frames = 90;

  MotionClip person;
  person.person_id = 0;
  person.rate_hz = cfg.rate_hz;
  CameraRig rig;
  rig.cameras = rig_cameras(RigLayout::stereo);
  rig.rate_hz = cfg.rate_hz;
  for (int f = 0; f < frames; ++f) {
    BodyState st;
    st.tau = Eigen::Vector3d(0, 0, 0.95);
    person.states.push_back(st);

    const double yaw = 0.4 * std::sin(2 * M_PI * f / 90.0);
    SE3d pose;
    pose.rotation =
        Eigen::AngleAxisd(M_PI + yaw, Eigen::Vector3d::UnitZ())
            .toRotationMatrix();
    pose.translation =
        Eigen::Vector3d(2.5 + 0.3 * std::sin(2 * M_PI * f / 45.0),
                        0.5 * std::cos(2 * M_PI * f / 90.0), 1.5);
    rig.timestamps_ns.push_back(person.timestamp_ns(f));
    rig.T_world_body.push_back(pose);
  }
  const auto by_frame = group_by_frame(render_detections(rig, {person}, cfg), rig);

  TrackerConfig tc;
  Tracker tracker(tc, &rig);
  for (int f = 0; f < frames; ++f) {
    tracker.step(rig.timestamps_ns[static_cast<std::size_t>(f)],
                 by_frame[static_cast<std::size_t>(f)]);
    REQUIRE(tracker.tracklets().size() == 1);
    if (f == 0) continue;
    for (const auto& det : by_frame[static_cast<std::size_t>(f)]) {
      const auto box =
          predict_box(tracker.tracklets()[0].latest_joints, rig, det.camera,
                      rig.timestamps_ns[static_cast<std::size_t>(f)]);
      REQUIRE(box.has_value());
      CHECK(box_iou(det.box, *box) > tc.iou_gate);
    }
  }
}

TEST_CASE("per-frame per-camera uniqueness") {
  SimConfig cfg;
  cfg.seed = 12;
  cfg.num_people = 3;
  cfg.duration_s = 5;
  cfg.rig_layout = RigLayout::quad_270;
  const auto clips = synthesize_motion(cfg);
  const CameraRig rig = synthesize_rig(cfg, synthesize_wearer(cfg));
  const auto by_frame = group_by_frame(render_detections(rig, clips, cfg), rig);

  TrackerConfig tc;
  Tracker tracker(tc, &rig);
  for (int f = 0; f < rig.num_frames(); ++f) {
    tracker.step(rig.timestamps_ns[static_cast<std::size_t>(f)],
                 by_frame[static_cast<std::size_t>(f)]);
  }
  for (const auto& trk : tracker.tracklets()) {
    std::set<std::pair<std::int64_t, int>> slots;
    for (const auto& obs : trk.observations) {
      CHECK(slots.insert({obs.timestamp_ns, obs.camera}).second);
    }
  }
}
