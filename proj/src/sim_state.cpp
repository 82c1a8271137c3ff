#include "osil/sim_state.hpp"

#include "osil/error.hpp"

namespace osil::sim {

World assemble_world(const World& scene, const Pose& ee_pose,
                     double gripper_width, const Pose& hand_eye,
                     const SimStepState& state) {
  World world = scene;
  world.ee_pose = ee_pose;
  world.gripper_width = gripper_width;
  world.hand_eye = hand_eye;
  world.held_object = state.held_object;
  world.frame_counter = state.frame_counter;
  for (const auto& [id, pose] : state.object_poses) {
    SceneObject* obj = world.find(id);
    if (!obj)
      throw Error(ErrorCode::UnknownObject,
                  "assemble_world: object " + std::to_string(id) +
                      " not in scene");
    obj->pose = pose;
  }
  return world;
}

World world_at_step(const World& scene, const Demonstration& demo, int step) {
  if (!demo.sim)
    throw Error(ErrorCode::InvalidArgument,
                "world_at_step: demo has no simulator sidecar");
  if (step < 0 || step >= demo.step_count())
    throw Error(ErrorCode::InvalidArgument, "world_at_step: step out of range");

  return assemble_world(scene, demo.steps[step].ee_pose,
                        demo.steps[step].gripper_width, demo.hand_eye,
                        (*demo.sim)[step]);
}

}  // namespace osil::sim
