#include "raylift/geometry.hpp"

#include <algorithm>

namespace raylift {

int CameraRig::frame_index(std::int64_t t_ns) const {
  const auto it =
      std::lower_bound(timestamps_ns.begin(), timestamps_ns.end(), t_ns);
  if (it == timestamps_ns.end() || *it != t_ns) {
    throw std::out_of_range("CameraRig: no device pose at requested timestamp");
  }
  return static_cast<int>(it - timestamps_ns.begin());
}

bool CameraRig::is_valid() const {
  if (cameras.empty()) return false;
  if (timestamps_ns.size() != T_world_body.size()) return false;
  for (const auto& cam : cameras) {
    if (!cam.model.is_valid() || !cam.T_camera_body.is_valid(1e-6)) return false;
  }
  for (std::size_t i = 1; i < timestamps_ns.size(); ++i) {
    if (timestamps_ns[i] <= timestamps_ns[i - 1]) return false;
  }
  return true;
}

RayCloud RayCloud::zeros(int frames, int cameras, int joints) {
  RayCloud out;
  out.frames = frames;
  out.cameras = cameras;
  out.joints = joints;
  out.timestamps_ns.assign(static_cast<std::size_t>(frames), 0);
  out.data.setZero(static_cast<Eigen::Index>(frames) * cameras * joints, 7);
  return out;
}

SE3d gravity_align(const SE3d& pose) {
  static constexpr double kDegenerate = 1e-6;

  const Eigen::Vector3d forward = pose.rotation.col(0);
  Eigen::Vector3d heading(forward.x(), forward.y(), 0.0);
  if (heading.norm() <= kDegenerate) {
    const Eigen::Vector3d axis_z = pose.rotation.col(2);
    heading = Eigen::Vector3d(axis_z.x(), axis_z.y(), 0.0);
  }
  if (heading.norm() <= kDegenerate) {
    heading = Eigen::Vector3d::UnitX();
  }
  heading.normalize();

  SE3d out;
  out.rotation.col(0) = heading;
  out.rotation.col(2) = Eigen::Vector3d::UnitZ();
  out.rotation.col(1) = Eigen::Vector3d::UnitZ().cross(heading);
  out.translation = pose.translation;
  return out;
}

RayCloud lift_keypoints(const CameraRig& rig, const DetectionList& detections,
                        std::int64_t t0_ns, int frames) {
  const int i0 = rig.frame_index(t0_ns);
  if (i0 + frames > rig.num_frames()) {
    throw std::out_of_range("lift_keypoints: window extends past rig poses");
  }

  RayCloud cloud = RayCloud::zeros(frames, rig.num_cameras());
  for (int f = 0; f < frames; ++f) {
    cloud.timestamps_ns[static_cast<std::size_t>(f)] =
        rig.timestamps_ns[static_cast<std::size_t>(i0 + f)];
  }

  cloud.frame = gravity_align(rig.camera_pose_at(i0, 0));
  const SE3d local_world = cloud.frame.inverse();

  for (const Detection& det : detections) {
    const int fi = rig.frame_index(det.timestamp_ns);
    if (fi < i0 || fi >= i0 + frames) {
      throw std::invalid_argument(
          "lift_keypoints: detection timestamp outside the window");
    }
    const int t = fi - i0;
    const int k = det.camera;
    const auto& cam = rig.cameras[static_cast<std::size_t>(k)].model;
    const SE3d local_camera = local_world * rig.camera_pose_at(fi, k);
    const Eigen::Vector3d center = local_camera.translation;

    for (int j = 0; j < kNumKeypoints; ++j) {
      const double conf = det.keypoints(j, 2);
      if (conf <= 0.0) continue;
      const Eigen::Vector2d pixel(det.keypoints(j, 0), det.keypoints(j, 1));
      if (!cam.contains(pixel)) continue;  // detector left the image; drop
      PluckerRayd ray;
      ray.direction = local_camera.rotation * unproject(cam, pixel);
      ray.moment = center.cross(ray.direction);
      ray.confidence = conf;
      cloud.set_ray(t, k, j, ray);
    }
  }
  return cloud;
}

}  // namespace raylift
