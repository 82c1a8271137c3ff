#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "osil/camera.hpp"
#include "osil/se3.hpp"

namespace osil {

struct DemoStep {
  int frame = 0;  // index into the demonstration's frame source
  Pose ee_pose;
  double gripper_width = 0.08;
  double timestamp = 0.0;  // seconds; strictly increasing, first step at 0
};

/// Simulator ground-truth sidecar for one step: enough state to reconstruct
/// the World (given the scene) and re-render any stored frame with identity
/// metadata. Absent for demonstrations that did not come from the simulator.
struct SimStepState {
  std::vector<std::pair<std::uint16_t, Pose>> object_poses;
  std::optional<std::uint16_t> held_object;
  std::uint64_t frame_counter = 0;
};

/// Static per-object facts mirrored from the scene so demo consumers (the
/// mock decomposer in particular) can resolve labels and centroids without
/// the scene file.
struct SimObjectInfo {
  std::uint16_t id = 0;
  std::string color_label;
  bool graspable = true;
  bool background = false;
  Eigen::Vector3d local_centroid = Eigen::Vector3d::Zero();
};

/// Frame access behind an interface so demonstrations can be disk-backed,
/// in-memory, or rendered on demand without holding every frame alive.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual RgbdFrame frame(int index) const = 0;
  virtual int count() const = 0;
};

class MemFrameSource : public FrameSource {
 public:
  explicit MemFrameSource(std::vector<RgbdFrame> frames)
      : frames_(std::move(frames)) {}
  RgbdFrame frame(int index) const override { return frames_.at(index); }
  int count() const override { return static_cast<int>(frames_.size()); }

 private:
  std::vector<RgbdFrame> frames_;
};

/// Loads .osrf files from an archive directory on demand.
class DirFrameSource : public FrameSource {
 public:
  DirFrameSource(std::string dir, int count)
      : dir_(std::move(dir)), count_(count) {}
  RgbdFrame frame(int index) const override;
  int count() const override { return count_; }

 private:
  std::string dir_;
  int count_;
};

struct Demonstration {
  double fps = 5.0;
  Pose hand_eye;
  std::vector<DemoStep> steps;
  std::shared_ptr<const FrameSource> frames;
  std::optional<std::vector<SimStepState>> sim;  // per step when present
  std::vector<SimObjectInfo> sim_objects;        // empty without sim sidecar

  int step_count() const { return static_cast<int>(steps.size()); }
  double duration() const {
    return steps.empty() ? 0.0 : steps.back().timestamp;
  }
};

// ---------------------------------------------------------------------------
// Gripper context: 1 Hz width/velocity samples fed to the decomposer.
// ---------------------------------------------------------------------------

struct GripperSample {
  double t;         // seconds
  double width;     // meters, nearest step
  double velocity;  // m/s, central difference (one-sided at the ends)
  double speed;     // |velocity|
};

using GripperContext = std::vector<GripperSample>;

/// ceil(duration) samples at t = 0, 1, 2, ... (at least one).
GripperContext gripper_context(const Demonstration& demo);

/// Nearest step to the given time; exact midpoints floor to the earlier step.
int timestamp_to_index(const Demonstration& demo, double seconds);

// ---------------------------------------------------------------------------
// Subtasks and control sequences
// ---------------------------------------------------------------------------

/// Inclusive step ranges; align_start <= align_end <= exec_start <= exec_end.
struct Subtask {
  int align_start = 0;
  int align_end = 0;
  int exec_start = 0;
  int exec_end = 0;
  std::string description;          // visual target description
  std::optional<int> keyframe;      // within [align_start, align_end]
};

struct PartitionCheck {
  bool ok = false;
  std::string violation;  // names the first failed clause; empty when ok
};

/// Checks that the subtasks' union ranges (align_start, exec_end) form a
/// valid ordered partition of [0, step_count): in bounds, start < end for
/// each subtask, and end_k <= start_{k+1} (sharing an endpoint is allowed).
PartitionCheck validate_partition(const std::vector<Subtask>& subtasks,
                                  int step_count);

struct ControlStep {
  PoseDelta delta;  // ee-frame motion: pose_{j+1} = pose_j * delta
  double gripper_width;
};

struct ControlSequence {
  std::vector<ControlStep> actions;
};

/// Relative-pose actions from the keyframe to the end of the execution
/// range: action j carries relative(pose_j, pose_{j+1}) and the gripper
/// width of step j+1. Throws MissingKeyframe when the subtask has none.
ControlSequence extract_control_sequence(const Demonstration& demo,
                                         const Subtask& subtask);

// ---------------------------------------------------------------------------
// Demonstration archive: directory with demo.json + frames/NNNNNN.osrf
// ---------------------------------------------------------------------------

inline constexpr int kDemoSchemaVersion = 1;

void save_demo_archive(const std::string& dir, const Demonstration& demo);
Demonstration load_demo_archive(const std::string& dir);

}  // namespace osil
