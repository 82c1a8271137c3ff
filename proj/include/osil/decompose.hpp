#pragma once

#include <optional>
#include <string>
#include <vector>

#include "osil/sim.hpp"
#include "osil/trajectory.hpp"
#include "osil/vlm.hpp"

namespace osil {

// ---------------------------------------------------------------------------
// Decomposition responses (video-time seconds) and their text form
// ---------------------------------------------------------------------------

struct PhaseRange {
  double start = 0.0;
  double end = 0.0;
};

struct DecomposedCall {
  std::string visual_target;
  PhaseRange align;
  PhaseRange execute;
  std::optional<PhaseRange> pullback;
};

struct Decomposition {
  std::vector<DecomposedCall> calls;
};

std::string format_mmss(int seconds);

/// Extracts do_task calls from annotator text: per call a visual target and
/// 'MM:SS-MM:SS' ranges for the align / execute / pullback phases. Throws
/// ParseError when no complete call can be extracted, RangeError when a
/// timestamp exceeds `duration` or the phase ordering is violated.
Decomposition parse_decomposition(const std::string& text, double duration);

/// Canonical answer text; parse_decomposition(render_decomposition(d)) == d
/// for integer-second ranges.
std::string render_decomposition(const Decomposition& d);

/// Maps video-time phase ranges onto demo step indices. The execute range
/// absorbs the pullback phase (replayed blind, so it needs no own subtask).
std::vector<Subtask> to_subtasks(const Decomposition& d,
                                 const Demonstration& demo);

// ---------------------------------------------------------------------------
// Deterministic mock decomposer
// ---------------------------------------------------------------------------

/// Segments the demo at gripper transitions: a transition is a maximal run
/// of context seconds with speed > v_min. Subtask k's execution ends with
/// transition k; its align phase runs from the previous subtask's end to the
/// quietest step before the transition (ties resolved to the latest step:
/// the dwell right before motion toward the interaction). The visual target
/// is the label of the object nearest the TCP at the transition, excluding
/// the held object and background objects. Requires the demo's simulator
/// sidecar; throws NoTransitions when the gripper never moves.
std::vector<Subtask> mock_decompose(const Demonstration& demo,
                                    const GripperContext& ctx,
                                    double v_min = 0.005);

// ---------------------------------------------------------------------------
// Keyframe selection
// ---------------------------------------------------------------------------

/// Single 'MM:SS' timestamp (clip-relative seconds). ParseError when absent,
/// RangeError when beyond the clip duration.
int parse_keyframe_seconds(const std::string& text, double clip_duration);

/// Align-phase steps downsampled to clip_fps (always includes align_start).
std::vector<int> keyframe_clip_steps(const Demonstration& demo,
                                     const Subtask& subtask, double clip_fps);

/// Deterministic stand-in for the annotator's keyframe choice: the latest
/// clip step where the target's visible mask equals its unoccluded mask
/// (nothing, held object included, hides any part of it) and the mask stays
/// `margin` pixels clear of every image border. Requires scene + sidecar.
/// Throws NoValidKeyframe when no clip step qualifies, UnknownObject when
/// the description matches no scene object.
int mock_select_keyframe(const Demonstration& demo, const sim::World& scene,
                         const std::string& description,
                         const std::vector<int>& clip_steps, int margin = 10,
                         double mismatch_slack = 0.02);

/// Asks the client for a keyframe within the subtask's align phase and maps
/// the answer to a step index (clamped to the align range). Falls back to
/// align_end after `max_retries` invalid answers.
int select_keyframe(const Demonstration& demo, const Subtask& subtask,
                    vlm::VlmClient& client, double clip_fps = 5.0,
                    int max_retries = 3);

/// Full decomposition via a client: renders the prompt over the 1 Hz
/// gripper context, parses the answer, validates the partition, and retries
/// with the violation appended to the prompt, at most `max_retries` times.
std::vector<Subtask> decompose_demo(const Demonstration& demo,
                                    vlm::VlmClient& client,
                                    int max_retries = 3);

// ---------------------------------------------------------------------------
// Offline client: answers decompose and keyframe prompts by running the
// mock rules against the demo's simulator sidecar, over the same wire text
// format a remote annotator would use.
// ---------------------------------------------------------------------------

class MockVlmClient : public vlm::VlmClient {
 public:
  MockVlmClient(const Demonstration& demo, sim::World scene);
  std::string complete(const vlm::VlmRequest& request) override;

 private:
  const Demonstration& demo_;
  sim::World scene_;
};

}  // namespace osil
