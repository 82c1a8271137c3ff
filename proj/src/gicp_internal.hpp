#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nn_grid.hpp"
#include "osil/gicp.hpp"

namespace osil::detail {

/// Per-cloud state reused across registration runs on the same cloud pair:
/// local covariances for both sides and a spatial index on the target.
/// Holds a reference into the target cloud, so it must not outlive it.
struct GicpContext {
  std::vector<Eigen::Matrix3d> cov_src;
  std::vector<Eigen::Matrix3d> cov_tgt;
  NnGrid target_grid;
};

/// Validates config and clouds (InvalidArgument, TooFewPoints,
/// DegenerateGeometry) exactly like the public gicp entry point.
GicpContext make_gicp_context(const Keypoints3d& source,
                              const Keypoints3d& target,
                              const GicpConfig& config);

AlignmentResult gicp_run(const Keypoints3d& source, const Keypoints3d& target,
                         const GicpContext& ctx, const GicpConfig& config,
                         const PoseDelta& initial);

}  // namespace osil::detail
