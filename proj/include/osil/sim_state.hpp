#pragma once

#include "osil/sim.hpp"
#include "osil/trajectory.hpp"

namespace osil::sim {

/// Applies one recorded step state onto the scene template: end-effector,
/// gripper, hand-eye, held object, frame counter, and per-object poses.
/// Throws UnknownObject when the state names an object the scene lacks.
World assemble_world(const World& scene, const Pose& ee_pose,
                     double gripper_width, const Pose& hand_eye,
                     const SimStepState& state);

/// Reconstructs the simulator World at a demo step from the scene template
/// plus the demo's per-step simulator sidecar. Rendering the result
/// reproduces the stored frame bit for bit (same poses, counter, and seed).
/// Throws InvalidArgument when the demo carries no sidecar.
World world_at_step(const World& scene, const Demonstration& demo, int step);

}  // namespace osil::sim
