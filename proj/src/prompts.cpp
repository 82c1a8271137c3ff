#include "osil/prompts.hpp"

#include <cstdio>

#include "osil/error.hpp"

namespace osil::vlm {

namespace {

const std::string kDecomposeTemplate = R"(Context:
This is the point of view of a wrist camera of a robot gripper. The robot itself is not in view. The fingers of the gripper are at the bottom of the frame, seen as two black pads. The robot gripper starts with nothing in it.

Sensor readings:
{gripper_states}

This behaviour is generated by calling the function:

do_task(visual_target, waypoints):
   align_gripper_to(visual_target)
   execute_stored_waypoints(waypoints)
   pullback()

align_gripper_to(visual_target):
will have the robot align the camera and hence the gripper with the provided 'visual_target'

execute_stored_waypoints(waypoints):
Will make the robot blindly execute the stored waypoints relative to its current pose. This is done blindly so
there can be no relative movements towards another visual_target, that is only handled in the align_gripper_to phase.

pullback():
will cause the robot to blindly disengage and prepare itself for the next task by moving back.
This is done blindly so there can be no relative movements towards another visual_target, that is only handled in the
align_gripper_to phase.

visual_target = 'string visually describing the object appearance'
waypoints = [ [ gripper_pose_6d, gripper_width ], [ gripper_pose_6d, gripper_width ], ... ]

Important constraints that must all be satisfied:

The do_task can only do one primitive task in one call: eg. pick, place, press, etc. It can not do multiple tasks in one call, eg. pick and place, these must be two separate do_task calls.
The execute_stored_waypoints phase must not include relative movements to a different visual_target than the one in the align_to_gripper step before it.
The pullback phase must not include relative movements to a different visual_target than the one in the align_to_gripper step before it.
The timestamp ranges must not overlap
The timestamp must be within the time range of the video and sensor readings.
The pullback phase must not be confused with the align_gripper_to phase of the next task. The boundary should be close to the pullback event (more time allocated to the next align_gripper_to phase). This is because the pullback phase is a short disengage while the align_gripper_to phase of the next task should be a longer movement relative to the next visual target to align it.

Your objective:
Decompose the robot's behaviour into this do_task call that must satisfy all of the above important constraints. What is the robot doing in this video? How many times is this function called? What is the visual_target for each call (description of the appearance)? If you use colour in your description only use one word for the colour. You are allowed to use words like light and dark in addition to the one word for the colour. What is the timestamp for each phase of the call: align_gripper, execute_stored_waypoints, pullback?

For each call tell me the reasoning, include all of the following:

Refer to sensor readings
Discuss honestly the task and whether this can potentially be decomposed further, remember things like pick and place must be decomposed into two separate do_task calls.
Describe honestly the motion in the execute_stored_waypoints phase and whether this is relative to a different visual_target and hence is not executed blindly.
Describe honestly the motion in the pullback phase and whether this is relative to a different visual_target and hence is not executed blindly.
Why this visual target, name the other potential visual targets seen and you selected this one.
Discuss the decision for the boundary between the pullback phase and the next align_gripper_to phase (if any).

It is fine if you think you have made a mistake, be honest and flag this. There will be a chance to correct this later. Give timestamps range in the format start then finish 'MM:SS-MM:SS'
)";

const std::string kKeyframeTemplate = R"(Context:
This is the point of view of a wrist camera of a robot gripper.
The robot itself is not in view.
The fingers of the gripper are at the bottom of the frame, seen as two black pads.
The robot gripper may potentially be gripping and holding something.
Ignore all information about the object the gripper is gripping (if any) focus only on the visual target.

Visual Target: {source_object_description}

Select the timestamp where the entire silhouette (outer contour) of the visual target is fully visible within the frame,
with no part cropped by the image boundaries or occluded by the silhouette of other objects, for instance the object
held by the gripper, if any. Make sure there is some margin between the silhouette and the image boundaries or other objects.

Give timestamps in the format 'MM:SS'
)";

const std::string kKeypointsTemplate =
    "Give the segmentation masks for the {source_object_description}\n";

std::string substitute(const std::string& tmpl, const std::string& key,
                       const std::string& value) {
  const std::size_t at = tmpl.find(key);
  if (at == std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "prompt: missing placeholder " + key);
  std::string out = tmpl;
  out.replace(at, key.size(), value);
  return out;
}

}  // namespace

const std::string& decompose_prompt_template() { return kDecomposeTemplate; }
const std::string& keyframe_prompt_template() { return kKeyframeTemplate; }
const std::string& keypoints_prompt_template() { return kKeypointsTemplate; }

std::string render_gripper_states(const GripperContext& ctx) {
  std::string out = "t width velocity speed";
  char line[96];
  for (const auto& s : ctx) {
    std::snprintf(line, sizeof(line), "\n%d %.4f %.4f %.4f",
                  static_cast<int>(s.t), s.width, s.velocity, s.speed);
    out += line;
  }
  return out;
}

std::string render_decompose_prompt(const GripperContext& ctx) {
  return substitute(kDecomposeTemplate, "{gripper_states}",
                    render_gripper_states(ctx));
}

std::string render_keyframe_prompt(const std::string& description) {
  return substitute(kKeyframeTemplate, "{source_object_description}",
                    description);
}

std::string render_keypoints_prompt(const std::string& description) {
  return substitute(kKeypointsTemplate, "{source_object_description}",
                    description);
}

}  // namespace osil::vlm
