#pragma once

#include <string>

#include "osil/trajectory.hpp"

namespace osil::vlm {

// Prompt templates are versioned text assets: the canonical copies live in
// assets/prompts/ and must stay byte-identical to the embedded constants
// below (enforced by a unit test).
inline constexpr int kPromptVersion = 1;

/// Subtask-decomposition prompt; contains the {gripper_states} placeholder.
const std::string& decompose_prompt_template();

/// Keyframe-selection prompt; contains {source_object_description}.
const std::string& keyframe_prompt_template();

/// Segmentation prompt; contains {source_object_description}.
const std::string& keypoints_prompt_template();

/// One line per second: t, width, velocity, speed (4 decimals), after a
/// fixed header line.
std::string render_gripper_states(const GripperContext& ctx);

std::string render_decompose_prompt(const GripperContext& ctx);
std::string render_keyframe_prompt(const std::string& description);
std::string render_keypoints_prompt(const std::string& description);

}  // namespace osil::vlm
