#include "raylift/net.hpp"

namespace raylift {

namespace {

Eigen::Matrix3d rot6d_or_identity(const Rot6d& r) {
  try {
    return rot6d_to_matrix(r);
  } catch (const std::invalid_argument&) {
    return Eigen::Matrix3d::Identity();
  }
}

}  // namespace

std::vector<BodyState> states_from_rows(const Eigen::MatrixXd& rows,
                                        const SE3d& frame) {
  std::vector<BodyState> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    BodyState local = BodyState::from_vector(rows.row(t).transpose());
    for (int j = 0; j < kNumJoints; ++j) {
      local.theta.row(j) =
          matrix_to_rot6d(rot6d_or_identity(local.theta.row(j).transpose()))
              .transpose();
    }
    local.omega = matrix_to_rot6d(rot6d_or_identity(local.omega));
    out.push_back(transform_state(frame, local));
  }
  return out;
}

}  // namespace raylift
