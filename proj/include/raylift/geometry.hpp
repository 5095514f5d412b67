#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace raylift {

inline constexpr int kNumKeypoints = 17;   // MSCOCO body keypoints
inline constexpr double kNearPlane = 0.05; // meters

// Rigid transform; maps local coordinates into the parent frame:
// x_parent = rotation * x_local + translation.
template <typename T>
struct SE3 {
  Eigen::Matrix3<T> rotation = Eigen::Matrix3<T>::Identity();
  Eigen::Vector3<T> translation = Eigen::Vector3<T>::Zero();

  static SE3 identity() { return {}; }

  SE3 inverse() const {
    SE3 out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  SE3 operator*(const SE3& rhs) const {
    SE3 out;
    out.rotation = rotation * rhs.rotation;
    out.translation = rotation * rhs.translation + translation;
    return out;
  }

  Eigen::Vector3<T> operator*(const Eigen::Vector3<T>& p) const {
    return rotation * p + translation;
  }

  Eigen::Matrix4<T> matrix() const {
    Eigen::Matrix4<T> m = Eigen::Matrix4<T>::Identity();
    m.template topLeftCorner<3, 3>() = rotation;
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }

  static SE3 from_matrix(const Eigen::Matrix4<T>& m) {
    SE3 out;
    out.rotation = m.template topLeftCorner<3, 3>();
    out.translation = m.template topRightCorner<3, 1>();
    return out;
  }

  bool is_valid(T tol = T(1e-9)) const {
    const Eigen::Matrix3<T> err =
        rotation * rotation.transpose() - Eigen::Matrix3<T>::Identity();
    return err.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - T(1)) <= tol &&
           translation.allFinite();
  }
};

using SE3d = SE3<double>;
using SE3f = SE3<float>;

// Pinhole camera. Convention: x right, y down, z forward (optical axis).
template <typename T>
struct CameraModel {
  T fx = T(1), fy = T(1);
  T cx = T(0), cy = T(0);
  int width = 0, height = 0;

  bool is_valid() const {
    return fx > T(0) && fy > T(0) && cx > T(0) && cx < T(width) &&
           cy > T(0) && cy < T(height);
  }

  bool contains(const Eigen::Vector2<T>& px) const {
    return px.x() >= T(0) && px.x() <= T(width) && px.y() >= T(0) &&
           px.y() <= T(height);
  }
};

using CameraModeld = CameraModel<double>;

// Unit ray through the pixel, in the camera frame.
template <typename T>
Eigen::Vector3<T> unproject(const CameraModel<T>& cam,
                            const Eigen::Vector2<T>& pixel) {
  if (!cam.contains(pixel)) {
    throw std::invalid_argument("unproject: pixel outside image bounds");
  }
  Eigen::Vector3<T> ray((pixel.x() - cam.cx) / cam.fx,
                        (pixel.y() - cam.cy) / cam.fy, T(1));
  return ray.normalized();
}

template <typename T>
struct Projection {
  Eigen::Vector2<T> pixel = Eigen::Vector2<T>::Zero();
  bool visible = false;
};

// Projects a world point through the camera at pose T_world_camera.
// Invisibility (behind the near plane or off-image) is a value, not an
// error; the pixel is still the pinhole image when the depth is usable.
template <typename T>
Projection<T> project(const CameraModel<T>& cam, const SE3<T>& world_camera,
                      const Eigen::Vector3<T>& point_world) {
  Projection<T> out;
  const Eigen::Vector3<T> p = world_camera.inverse() * point_world;
  if (std::abs(p.z()) < T(1e-12)) {
    return out;
  }
  out.pixel = Eigen::Vector2<T>(cam.fx * p.x() / p.z() + cam.cx,
                                cam.fy * p.y() / p.z() + cam.cy);
  out.visible = p.z() > T(kNearPlane) && cam.contains(out.pixel);
  return out;
}

// Line in 3D as (unit direction d, moment m = o x d for any point o on the
// line), plus the 2D detector confidence. All-zero encodes a missing
// observation.
template <typename T>
struct PluckerRay {
  Eigen::Vector3<T> direction = Eigen::Vector3<T>::Zero();
  Eigen::Vector3<T> moment = Eigen::Vector3<T>::Zero();
  T confidence = T(0);

  bool present() const { return confidence > T(0); }

  // Point on the line closest to the origin.
  Eigen::Vector3<T> closest_point_to_origin() const {
    return direction.cross(moment);
  }

  Eigen::Matrix<T, 7, 1> as_vector() const {
    Eigen::Matrix<T, 7, 1> v;
    v << direction, moment, confidence;
    return v;
  }
};

using PluckerRayd = PluckerRay<double>;

// Per-keypoint (u, v, confidence) rows; confidence 0 marks a missing joint.
using KeypointMatrix = Eigen::Matrix<double, kNumKeypoints, 3>;

// One per-camera person observation at one timestamp.
struct Detection {
  std::int64_t timestamp_ns = 0;
  int camera = 0;
  int person_id = -1;  // ground-truth identity; -1 when unknown
  KeypointMatrix keypoints = KeypointMatrix::Zero();
  Eigen::Vector4d box = Eigen::Vector4d::Zero();  // x0, y0, x1, y1
};

using DetectionList = std::vector<Detection>;

// Multi-camera rig: per-camera intrinsics with rig-fixed extrinsics
// T_camera_body (maps body coordinates into the camera frame), plus the
// time-indexed device poses T_world_body.
struct CameraRig {
  struct Camera {
    CameraModeld model;
    SE3d T_camera_body;
  };

  std::vector<Camera> cameras;
  std::vector<std::int64_t> timestamps_ns;  // strictly increasing
  std::vector<SE3d> T_world_body;           // parallel to timestamps_ns
  double rate_hz = 30.0;

  int num_cameras() const { return static_cast<int>(cameras.size()); }
  int num_frames() const { return static_cast<int>(timestamps_ns.size()); }

  // Exact-match lookup; device poses are sampled on a fixed clock.
  int frame_index(std::int64_t t_ns) const;

  const SE3d& body_pose(std::int64_t t_ns) const {
    return T_world_body[static_cast<std::size_t>(frame_index(t_ns))];
  }

  SE3d camera_pose(std::int64_t t_ns, int camera) const {
    return body_pose(t_ns) *
           cameras[static_cast<std::size_t>(camera)].T_camera_body.inverse();
  }

  SE3d camera_pose_at(int frame, int camera) const {
    return T_world_body[static_cast<std::size_t>(frame)] *
           cameras[static_cast<std::size_t>(camera)].T_camera_body.inverse();
  }

  bool is_valid() const;
};

// Dense T x K x J x 7 ray tensor in the gravity-aligned local frame, plus
// the normalizing transform T_world_local used to lift it.
struct RayCloud {
  int frames = 0;
  int cameras = 0;
  int joints = kNumKeypoints;
  SE3d frame;  // T_world_local
  std::vector<std::int64_t> timestamps_ns;
  Eigen::Matrix<double, Eigen::Dynamic, 7> data;  // row = ((t*K)+k)*J + j

  static RayCloud zeros(int frames, int cameras, int joints = kNumKeypoints);

  Eigen::Index row(int t, int k, int j) const {
    return (static_cast<Eigen::Index>(t) * cameras + k) * joints + j;
  }

  PluckerRayd ray(int t, int k, int j) const {
    const auto r = data.row(row(t, k, j));
    PluckerRayd out;
    out.direction = r.segment<3>(0);
    out.moment = r.segment<3>(3);
    out.confidence = r(6);
    return out;
  }

  void set_ray(int t, int k, int j, const PluckerRayd& ray) {
    data.row(row(t, k, j)) = ray.as_vector();
  }
};

// Gravity-aligned frame derived from a pose: z-axis exactly world up,
// x-axis the horizontal projection of the pose's forward (+x) axis, origin
// at the pose's translation. Falls back to the pose's +z axis, then world
// x, when the heading is degenerate (pose looking straight up/down).
SE3d gravity_align(const SE3d& pose);

// Lifts per-(time, camera) keypoint observations into a RayCloud over the
// window of `frames` rig frames starting at t0_ns. Rays are expressed in
// the gravity-aligned frame of camera 0 at the first window frame; missing
// keypoints stay all-zero.
RayCloud lift_keypoints(const CameraRig& rig, const DetectionList& detections,
                        std::int64_t t0_ns, int frames);

}  // namespace raylift
