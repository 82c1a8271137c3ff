#pragma once

#include <optional>
#include <string>

#include "osil/correspond.hpp"
#include "osil/gicp.hpp"
#include "osil/sim.hpp"

namespace osil {

struct RansacConfig {
  int hypotheses = 64;
  int sample_size = 8;
  /// Nearest-neighbor inlier radius, meters. Must resolve the structure of
  /// the objects being registered: on a few-centimeter tabletop object a
  /// 1 cm radius saturates (wrongly rotated fits explain as many points as
  /// the true one), while 3 mm separates them cleanly.
  double inlier_threshold = 0.003;
  double min_inlier_fraction = 0.3;  // below this: NoConsensus
  std::uint64_t seed = 0;
};

/// Unweighted least-squares rigid fit mapping a[i] onto b[i] (Kabsch).
/// Degenerate inputs fall back to the identity seed.
PoseDelta rigid_fit(const std::vector<Eigen::Vector3d>& a,
                    const std::vector<Eigen::Vector3d>& b);

/// Robust relative-pose estimation between two independently sampled clouds
/// of the same object: each RANSAC hypothesis pairs a random source subset
/// with target points at proportional sample indices (the samplers walk
/// their masks in the same seeded order, so index proximity approximates
/// correspondence), fits a rigid seed, refines with gicp, and scores by
/// nearest-neighbor inliers at inlier_threshold. Throws NoConsensus when no
/// hypothesis reaches min_inlier_fraction.
AlignmentResult estimate_delta(const Keypoints3d& source,
                               const Keypoints3d& target,
                               const GicpConfig& gicp_cfg,
                               const RansacConfig& ransac_cfg);

// ---------------------------------------------------------------------------
// Closed-loop alignment
// ---------------------------------------------------------------------------

/// Everything the alignment phase keeps from the demonstration about one
/// subtask: keyframe observation, its end-effector pose and gripper width,
/// the visual target description, and the pre-extracted source keypoints.
struct KeyframeBundle {
  RgbdFrame frame;
  Pose ee_pose;
  double gripper_width = 0.08;
  std::string description;
  Keypoints3d keypoints;
  std::optional<sim::SimFrameMeta> meta;  // ground truth for the oracle path
};

struct AlignConfig {
  double tau = 0.02;          // Frobenius termination threshold
  int max_steps = 15;
  double step_scale = 1.0;    // damping of each applied delta, (0, 1]
  std::size_t keypoint_count = 128;
  std::uint64_t seed = 0;     // keypoint sampling seed
};

struct AlignStepResult {
  PoseDelta delta_ee;
  PoseDelta delta_cam;
  double deviation = 0.0;  // frobenius_deviation(delta_cam)
  int match_count = 0;
  int inlier_count = 0;
  double residual_rms = 0.0;
};

/// One servoing update: match the keyframe keypoints into the current view,
/// segment and sample the target cloud, estimate the camera-frame delta,
/// and conjugate it through the hand-eye transform into an end-effector
/// delta. Failures surface as AlignmentError tagged with the match / mask /
/// estimate stage.
AlignStepResult align_step(const RgbdFrame& current, const MatchContext& ctx,
                           const KeyframeBundle& bundle,
                           const FeatureBackend& backend, MaskProvider& masks,
                           const Pose& hand_eye, const AlignConfig& align,
                           const GicpConfig& gicp_cfg,
                           const RansacConfig& ransac_cfg);

struct AlignLoopResult {
  sim::World world;
  int iterations = 0;       // align_step calls, including the passing one
  bool converged = false;   // false = step budget exhausted
  double final_deviation = 0.0;
};

/// Runs align_step against freshly rendered views, applying each scaled
/// end-effector delta, until the estimated camera delta's Frobenius
/// deviation drops below tau or max_steps is exhausted (reported through
/// converged=false, not thrown). The gripper is never moved here.
AlignLoopResult align_loop(sim::World world, const KeyframeBundle& bundle,
                           const FeatureBackend& backend, MaskProvider& masks,
                           const AlignConfig& align, const GicpConfig& gicp_cfg,
                           const RansacConfig& ransac_cfg);

}  // namespace osil
