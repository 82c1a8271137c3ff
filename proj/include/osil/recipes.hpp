#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "osil/executor.hpp"
#include "osil/sim.hpp"
#include "osil/trajectory.hpp"

namespace osil {

/// One scripted step of a demonstration: optionally move the end-effector
/// to a target (resolved against the live world when the step runs, so
/// earlier actions can move the referenced objects), optionally command the
/// gripper, then dwell. Motion interpolates translation linearly and
/// rotation geodesically over duration_s.
struct RecipeAction {
  enum class Kind {
    Hold,          // no end-effector motion (gripper-only step)
    AbsolutePose,  // move to `pose`
    AboveObject,   // top-down pose at object centroid + `offset`, yaw_deg
    Offset,        // translate by `offset` from the current pose
  };
  Kind kind = Kind::Hold;
  Pose pose;
  std::string object;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  double yaw_deg = 0.0;
  std::optional<double> gripper;  // target width, reached by the motion end
  double duration_s = 1.0;
  double dwell_s = 0.0;
};

struct PerturbationSpec {
  double translation = 0.05;    // meters, per-component uniform
  double rotation_deg = 15.0;   // yaw about each object's centroid
};

struct TaskRecipe {
  std::string name;
  std::string scene_path;
  sim::World scene;
  Pose home;
  std::vector<RecipeAction> script;
  nlohmann::json success_spec;
  PerturbationSpec perturbation;
  std::vector<std::uint64_t> seeds;  // one trial per seed
};

inline constexpr int kRecipeSchemaVersion = 1;

/// Parses a recipe document; `base_dir` resolves the scene reference.
TaskRecipe load_recipe(const nlohmann::json& j, const std::string& base_dir);
TaskRecipe load_recipe_file(const std::string& path);

/// Builds the success check described by a recipe's "success" object.
/// Supported types: above, near, in_region, touched_all, held_rotated,
/// held_above, all (conjunction), always.
SuccessPredicate make_success_predicate(const nlohmann::json& spec,
                                        const sim::World& scene);

/// Drives the simulator through the script, recording one step every 1/fps
/// seconds with the full state sidecar. Frames render lazily on access.
Demonstration record_demo(const TaskRecipe& recipe, double fps = 5.0);

/// Renders frames on demand from recorded simulator states, so in-memory
/// demonstrations stay small.
class SimFrameSource : public FrameSource {
 public:
  SimFrameSource(sim::World scene, Pose hand_eye, std::vector<Pose> ee_poses,
                 std::vector<double> widths, std::vector<SimStepState> states);
  RgbdFrame frame(int index) const override;
  int count() const override { return static_cast<int>(states_.size()); }

 private:
  sim::World scene_;
  Pose hand_eye_;
  std::vector<Pose> ee_poses_;
  std::vector<double> widths_;
  std::vector<SimStepState> states_;
};

/// Recipes shipped with the asset tree: stack_blocks, sort_fruits,
/// tea_prep, wipe (multi-step) and pick, press, knock, flip (single-step).
std::vector<std::string> builtin_recipe_names();
TaskRecipe load_builtin_recipe(const std::string& name);

/// Deterministic randomized pick/place recipe for property tests: scene
/// layout, object count, and transition count all derive from `index`.
TaskRecipe random_recipe(std::uint64_t index);

}  // namespace osil
