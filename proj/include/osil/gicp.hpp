#pragma once

#include "osil/camera.hpp"
#include "osil/se3.hpp"

namespace osil {

struct GicpConfig {
  int max_iterations = 50;
  double convergence_eps = 1e-6;       // update norm below this converges
  double correspondence_max_dist = 0.5;  // meters, nearest-neighbor gate
  int covariance_k = 20;               // neighbors per local covariance
  double plane_epsilon = 1e-3;         // flattened eigenvalue along normals
};

struct AlignmentResult {
  PoseDelta delta_cam;     // maps source points onto target points
  int inlier_count = 0;
  double residual_rms = 0.0;  // point-to-point, meters, final pairing
  bool converged = false;
};

/// Plane-to-plane iterative closest point with per-point covariances
/// (eigenvalues flattened to (plane_epsilon, 1, 1) along the local normal).
/// Correspondences are nearest neighbors re-paired every iteration and
/// gated at correspondence_max_dist. Throws TooFewPoints when either cloud
/// has fewer than covariance_k + 1 points, DegenerateGeometry when normal
/// estimation is rank-deficient for more than half of either cloud.
AlignmentResult gicp(const Keypoints3d& source, const Keypoints3d& target,
                     const GicpConfig& config = {},
                     const PoseDelta& initial = {});

}  // namespace osil
