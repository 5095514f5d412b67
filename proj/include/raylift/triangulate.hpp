#pragma once

#include <array>
#include <vector>

#include "raylift/geometry.hpp"

namespace raylift {

struct TriangulationResult {
  // world-frame points, one row set per frame
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> points;
  std::vector<std::vector<bool>> valid;
};

// Closed-form verification oracle: per frame per joint, the least-squares
// point minimizing summed squared distances to the confident rays (3x3
// normal equations). Valid only with >= 2 rays whose unoriented angular
// separation exceeds 1 degree and a well-conditioned normal matrix.
TriangulationResult triangulate_oracle(const RayCloud& cloud);

}  // namespace raylift
