#pragma once

#include <Eigen/Dense>

#include <algorithm>

namespace raylift {

// Boxes are (x0, y0, x1, y1) with x0 <= x1, y0 <= y1.

inline double box_area(const Eigen::Vector4d& b) {
  return std::max(0.0, b(2) - b(0)) * std::max(0.0, b(3) - b(1));
}

inline double box_iou(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  const double x0 = std::max(a(0), b(0));
  const double y0 = std::max(a(1), b(1));
  const double x1 = std::min(a(2), b(2));
  const double y1 = std::min(a(3), b(3));
  const double inter =
      std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0);
  const double uni = box_area(a) + box_area(b) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Axis-aligned hull of a point set, dilated by a fraction of its size per
// side, with an optional minimum size (kept centered).
inline Eigen::Vector4d hull_box(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                                double dilate = 0.1, double min_size = 0.0) {
  Eigen::Vector4d box;
  box(0) = pts.col(0).minCoeff();
  box(1) = pts.col(1).minCoeff();
  box(2) = pts.col(0).maxCoeff();
  box(3) = pts.col(1).maxCoeff();
  const double w = box(2) - box(0);
  const double h = box(3) - box(1);
  box(0) -= dilate * w;
  box(2) += dilate * w;
  box(1) -= dilate * h;
  box(3) += dilate * h;
  if (box(2) - box(0) < min_size) {
    const double c = 0.5 * (box(0) + box(2));
    box(0) = c - 0.5 * min_size;
    box(2) = c + 0.5 * min_size;
  }
  if (box(3) - box(1) < min_size) {
    const double c = 0.5 * (box(1) + box(3));
    box(1) = c - 0.5 * min_size;
    box(3) = c + 0.5 * min_size;
  }
  return box;
}

}  // namespace raylift
