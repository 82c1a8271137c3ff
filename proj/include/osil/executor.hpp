#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "osil/alignment.hpp"
#include "osil/correspond.hpp"
#include "osil/sim.hpp"
#include "osil/trajectory.hpp"

namespace osil {

/// One subtask ready to run: the keyframe bundle the alignment phase servos
/// toward and the control sequence replayed blindly afterwards. The demo
/// target object's id and keyframe-time pose (when the demo carries the
/// simulator sidecar) let reports compare the aligned pose against ground
/// truth.
struct PlannedSubtask {
  KeyframeBundle bundle;
  ControlSequence controls;
  int keyframe_step = 0;
  std::optional<std::uint16_t> target_id;
  std::optional<Pose> demo_object_pose;
};

struct TaskPlan {
  std::vector<PlannedSubtask> subtasks;
  Pose hand_eye;
};

/// Bundles keyframes and control sequences for every subtask. Requires a
/// valid partition and a keyframe on every subtask; keypoint extraction
/// errors (EmptyMask for an unresolvable visual target) propagate. When
/// `scene` is given and the demo has its simulator sidecar, keyframe render
/// metadata is reconstructed so the oracle backend can match against it.
TaskPlan build_plan(const Demonstration& demo,
                    const std::vector<Subtask>& subtasks, MaskProvider& masks,
                    const AlignConfig& align,
                    const sim::World* scene = nullptr);

struct SubtaskReport {
  std::string description;
  int iterations = 0;
  bool converged = false;
  double final_deviation = 0.0;
  std::optional<double> e_t;  // end-effector error vs ground truth, meters
  std::optional<double> e_r;  // degrees
  std::string failure_stage;  // "", "match", "mask", "estimate", "max_steps"
};

struct RunReport {
  std::vector<SubtaskReport> subtasks;  // one per attempted subtask
  bool success = false;
  double wall_time_s = 0.0;
};

nlohmann::json run_report_to_json(const RunReport& report);

using SuccessPredicate = std::function<bool(const sim::World&)>;

struct ExecuteConfig {
  AlignConfig align;
  GicpConfig gicp;
  RansacConfig ransac;
  /// Keep executing after a subtask exhausts its alignment budget instead
  /// of stopping the run (off by default: misalignment compounds).
  bool proceed_on_max_steps = false;
};

/// Runs the plan: per subtask, closed-loop alignment then blind replay of
/// the control sequence (the camera is never consulted during replay).
/// Alignment failures stop the run and are recorded with their stage; no
/// errors escape. Success is judged by the predicate on the final world.
RunReport execute(const TaskPlan& plan, sim::World world,
                  const FeatureBackend& backend, MaskProvider& masks,
                  const ExecuteConfig& config, const SuccessPredicate& success);

// ---------------------------------------------------------------------------
// Pose-estimation evaluation over rendered frame pairs
// ---------------------------------------------------------------------------

/// A source/target world pair with a named object whose displacement between
/// the two worlds is the ground-truth relative pose.
struct RegistrationCase {
  std::string name;
  sim::World source;
  sim::World target;
  std::string description;
};

struct PoseEvalRow {
  std::string case_name;
  std::string backend;
  bool ok = false;      // false renders as a dash in reports
  double e_t = 0.0;     // meters
  double e_r = 0.0;     // degrees
};

/// Runs the single-step estimation pipeline (match, segment, estimate) for
/// every case under every backend and compares against the exact camera
/// delta derived from the two world states. Estimation failures yield
/// ok=false rows; nothing throws.
std::vector<PoseEvalRow> evaluate_pose_estimation(
    const std::vector<RegistrationCase>& cases,
    const std::vector<const FeatureBackend*>& backends,
    const AlignConfig& align, const GicpConfig& gicp_cfg,
    const RansacConfig& ransac_cfg);

}  // namespace osil
