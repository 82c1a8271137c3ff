#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "osil/camera.hpp"
#include "osil/se3.hpp"

namespace osil::sim {

/// Immutable surface sample set of one object, in the object frame.
/// tex holds the procedural per-point intensity (hash of object id and
/// quantized surface coordinates), fixed at construction.
struct SurfacePoints {
  std::vector<double> x, y, z;
  std::vector<std::uint8_t> tex;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();

  std::size_t size() const { return x.size(); }
};

struct SceneObject {
  std::uint16_t id = 0;  // positive; 0 is reserved for background
  std::string color_label;
  bool graspable = true;
  bool background = false;       // excluded from mock target candidacy
  double grasp_width = 0.04;     // jaw span below which a grasp can engage
  std::array<std::uint8_t, 3> base_color = {200, 200, 200};
  Pose pose;                     // object -> world
  std::shared_ptr<const SurfacePoints> surface;

  Eigen::Vector3d world_centroid() const {
    return pose.apply(surface->centroid);
  }
};

struct GraspParams {
  double width_margin = 0.005;  // grasp threshold = grasp_width + margin
  double radius = 0.015;        // TCP-to-centroid engagement distance
  double max_width = 0.08;
};

/// Full simulator state. A value type: apply_action and perturb return new
/// Worlds and never mutate their input.
struct World {
  std::vector<SceneObject> objects;
  Pose ee_pose;
  double gripper_width = 0.08;
  Pose hand_eye;  // camera pose expressed in the end-effector frame
  Intrinsics intrinsics;
  std::optional<std::uint16_t> held_object;
  double depth_noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;
  std::uint64_t frame_counter = 0;
  GraspParams grasp;
  /// Minimum TCP-to-centroid distance seen so far, per object (updated by
  /// apply_action; used by touch-based success predicates).
  std::map<std::uint16_t, double> min_tcp_distance;

  Pose camera_pose() const { return compose(ee_pose, hand_eye); }
  const SceneObject* find(std::uint16_t id) const;
  SceneObject* find(std::uint16_t id);
  const SceneObject* find_by_label(const std::string& label) const;
};

/// Ground-truth identity of the splat that won each pixel. Simulator-side
/// metadata, not part of the observable RgbdFrame.
struct SimFrameMeta {
  std::vector<std::uint16_t> object;  // 0 = none
  std::vector<std::int32_t> point;    // index into the object's surface
  std::vector<float> true_depth;      // noiseless camera-frame z
};

struct RenderResult {
  RgbdFrame frame;
  SimFrameMeta meta;
};

/// Point-splat z-buffer render of the wrist camera view. Pure function of
/// the world (noise is keyed by rng_seed and frame_counter), so rendering
/// the same world twice is bit-identical. Splat radius is 1 pixel; thin
/// structures below the sampling density can alias.
RenderResult render_with_meta(const World& world);
RgbdFrame render(const World& world);

/// Applies one control step: ee_pose <- ee_pose * delta (delta is expressed
/// in the end-effector frame), gripper set to `gripper_width`. A held object
/// moves rigidly with the gripper. Closing across an object's grasp
/// threshold while the TCP is within grasp.radius of its centroid attaches
/// it; opening back across the threshold releases it. Throws
/// WidthOutOfRange for a width outside [0, max_width].
World apply_action(const World& world, const PoseDelta& delta,
                   double gripper_width);

/// Independently perturbs every non-background object: planar translation
/// uniform per-axis (x, y) in [-translation_range, +translation_range], yaw
/// rotation about the object's centroid uniform in [-rotation_range_deg,
/// +rotation_range_deg]. Objects stay on the tabletop. Deterministic in
/// (world, seed).
World perturb(const World& world, double translation_range,
              double rotation_range_deg, std::uint64_t seed);

/// Instance mask of the object at the seed pixel. A background seed snaps
/// to the nearest non-background pixel (ties: smaller (v, u)). Throws
/// EmptyScene when the frame shows no object at all.
PixelMask oracle_mask(const RgbdFrame& frame, int seed_u, int seed_v);

struct Correspondence {
  std::int32_t source_index;  // index into the source keypoints
  int target_u, target_v;
};

/// Ground-truth matches: for each source keypoint, the target pixel whose
/// back-projected point lies nearest the same physical surface point
/// (tracked by object id + surface point index through the render metadata).
/// Keypoints whose surface point is occluded, out of view, or farther than
/// max_surface_distance from any candidate pixel are omitted.
std::vector<Correspondence> oracle_correspondences(
    const Keypoints3d& source, const SimFrameMeta& source_meta,
    const RgbdFrame& target, const SimFrameMeta& target_meta,
    const World& target_world, double max_surface_distance = 0.01);

}  // namespace osil::sim
