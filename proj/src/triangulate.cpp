#include "raylift/triangulate.hpp"

#include <cmath>

namespace raylift {

TriangulationResult triangulate_oracle(const RayCloud& cloud) {
  constexpr double kMinSeparation = 1.0 * M_PI / 180.0;

  TriangulationResult out;
  out.points.assign(
      static_cast<std::size_t>(cloud.frames),
      Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(cloud.joints, 3));
  out.valid.assign(static_cast<std::size_t>(cloud.frames),
                   std::vector<bool>(static_cast<std::size_t>(cloud.joints),
                                     false));

  for (int t = 0; t < cloud.frames; ++t) {
    for (int j = 0; j < cloud.joints; ++j) {
      std::vector<PluckerRayd> rays;
      for (int k = 0; k < cloud.cameras; ++k) {
        const PluckerRayd r = cloud.ray(t, k, j);
        if (r.present()) rays.push_back(r);
      }
      if (rays.size() < 2) continue;

      double max_sep = 0;
      for (std::size_t a = 0; a < rays.size(); ++a) {
        for (std::size_t b = a + 1; b < rays.size(); ++b) {
          const double d = std::clamp(
              std::abs(rays[a].direction.dot(rays[b].direction)), 0.0, 1.0);
          max_sep = std::max(max_sep, std::acos(d));
        }
      }
      if (max_sep <= kMinSeparation) continue;

      Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
      Eigen::Vector3d b = Eigen::Vector3d::Zero();
      for (const auto& r : rays) {
        const Eigen::Matrix3d proj =
            Eigen::Matrix3d::Identity() - r.direction * r.direction.transpose();
        a += proj;
        b += proj * r.closest_point_to_origin();
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
      if (eig.eigenvalues()(0) < 1e-9) continue;  // singular normal matrix
      const Eigen::Vector3d local = eig.eigenvectors() *
                                    (eig.eigenvectors().transpose() * b)
                                        .cwiseQuotient(eig.eigenvalues());
      out.points[static_cast<std::size_t>(t)].row(j) =
          (cloud.frame * local).transpose();
      out.valid[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] =
          true;
    }
  }
  return out;
}

}  // namespace raylift
