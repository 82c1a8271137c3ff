#include "osil/decompose.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <optional>
#include <regex>
#include <sstream>

#include "osil/error.hpp"
#include "osil/prompts.hpp"
#include "osil/sim_state.hpp"

namespace osil {

namespace {

std::string lowercased(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool same_label(const std::string& a, const std::string& b) {
  return lowercased(trimmed(a)) == lowercased(trimmed(b));
}

enum class Phase { Align, Execute, Pullback };

struct CallBuilder {
  std::string target;
  std::optional<PhaseRange> align;
  std::optional<PhaseRange> execute;
  std::optional<PhaseRange> pullback;

  bool any() const {
    return !target.empty() || align || execute || pullback;
  }
  bool complete() const { return align.has_value() && execute.has_value(); }

  void set(Phase phase, const PhaseRange& r) {
    switch (phase) {
      case Phase::Align:
        align = r;
        break;
      case Phase::Execute:
        execute = r;
        break;
      case Phase::Pullback:
        pullback = r;
        break;
    }
  }

  /// First phase not yet filled, in presentation order.
  Phase next_unset() const {
    if (!align) return Phase::Align;
    if (!execute) return Phase::Execute;
    return Phase::Pullback;
  }
};

/// Position of the last phase keyword at or before `limit` (npos = none).
std::optional<Phase> keyword_before(const std::string& lower,
                                    std::size_t limit) {
  struct Key {
    const char* word;
    Phase phase;
  };
  static const Key keys[] = {{"align", Phase::Align},
                             {"execute", Phase::Execute},
                             {"waypoint", Phase::Execute},
                             {"pullback", Phase::Pullback},
                             {"pull back", Phase::Pullback}};
  std::size_t best_pos = std::string::npos;
  Phase best = Phase::Align;
  for (const Key& k : keys) {
    std::size_t pos = lower.rfind(k.word, limit);
    if (pos == std::string::npos) continue;
    if (best_pos == std::string::npos || pos > best_pos) {
      best_pos = pos;
      best = k.phase;
    }
  }
  if (best_pos == std::string::npos) return std::nullopt;
  return best;
}

std::optional<Phase> keyword_anywhere(const std::string& lower) {
  return keyword_before(lower, std::string::npos);
}

/// The quoted span after `from`, or the rest of the line after a ':' / '='.
std::string extract_target_text(const std::string& line, std::size_t from) {
  for (std::size_t i = from; i < line.size(); ++i) {
    char c = line[i];
    if (c == '\'' || c == '"') {
      std::size_t close = line.find(c, i + 1);
      if (close == std::string::npos) break;
      return trimmed(line.substr(i + 1, close - i - 1));
    }
  }
  std::size_t sep = line.find_first_of(":=", from);
  if (sep == std::string::npos) return "";
  std::string rest = trimmed(line.substr(sep + 1));
  while (!rest.empty() &&
         (rest.back() == ',' || rest.back() == '.' || rest.back() == ')' ||
          rest.back() == ';')) {
    rest.pop_back();
    rest = trimmed(rest);
  }
  return rest;
}

int mmss_to_seconds(const std::smatch& m, int minute_group) {
  int minutes = std::stoi(m[minute_group].str());
  int seconds = std::stoi(m[minute_group + 1].str());
  return minutes * 60 + seconds;
}

const std::regex& range_regex() {
  static const std::regex re(R"((\d{1,3}):(\d{2})\s*-\s*(\d{1,3}):(\d{2}))");
  return re;
}

const std::regex& single_regex() {
  static const std::regex re(R"((\d{1,3}):(\d{2}))");
  return re;
}

void check_phase_chain(const DecomposedCall& call, int index) {
  auto ordered = [](const PhaseRange& r) { return r.start <= r.end; };
  std::ostringstream where;
  where << "call " << index + 1;
  if (!ordered(call.align) || !ordered(call.execute) ||
      (call.pullback && !ordered(*call.pullback))) {
    throw Error(ErrorCode::RangeError,
                where.str() + ": phase start after its end");
  }
  double cursor = call.align.end;
  if (call.execute.start < cursor) {
    throw Error(ErrorCode::RangeError,
                where.str() + ": execute begins before align ends");
  }
  cursor = call.execute.end;
  if (call.pullback && call.pullback->start < cursor) {
    throw Error(ErrorCode::RangeError,
                where.str() + ": pullback begins before execute ends");
  }
}

double call_end(const DecomposedCall& call) {
  return call.pullback ? call.pullback->end : call.execute.end;
}

double step_motion(const Demonstration& demo, int i) {
  return frobenius_deviation(
      relative(demo.steps[i].ee_pose, demo.steps[i + 1].ee_pose));
}

}  // namespace

std::string format_mmss(int seconds) {
  if (seconds < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative timestamp");
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", seconds / 60, seconds % 60);
  return buf;
}

Decomposition parse_decomposition(const std::string& text, double duration) {
  std::vector<DecomposedCall> calls;
  CallBuilder cur;
  std::optional<Phase> pending;  // keyword seen on a line without a range

  auto flush = [&]() {
    if (!cur.any()) return;
    if (cur.target.empty()) {
      throw Error(ErrorCode::ParseError, "do_task call without visual_target");
    }
    if (!cur.complete()) {
      throw Error(ErrorCode::ParseError,
                  "do_task call '" + cur.target +
                      "' is missing an align or execute range");
    }
    DecomposedCall call;
    call.visual_target = cur.target;
    call.align = *cur.align;
    call.execute = *cur.execute;
    call.pullback = cur.pullback;
    calls.push_back(std::move(call));
    cur = CallBuilder{};
    pending.reset();
  };

  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    const std::string lower = lowercased(line);

    std::size_t tpos = lower.find("visual_target");
    if (tpos == std::string::npos) tpos = lower.find("visual target");
    if (tpos != std::string::npos) {
      std::string target =
          extract_target_text(line, tpos + std::strlen("visual_target"));
      if (!target.empty()) {
        if (cur.complete()) flush();
        cur.target = target;  // latest mention before the ranges wins
      }
    }

    bool line_had_range = false;
    for (auto it = std::sregex_iterator(line.begin(), line.end(),
                                        range_regex());
         it != std::sregex_iterator(); ++it) {
      line_had_range = true;
      const std::smatch& m = *it;
      PhaseRange r;
      r.start = mmss_to_seconds(m, 1);
      r.end = mmss_to_seconds(m, 3);

      std::optional<Phase> phase =
          keyword_before(lower, static_cast<std::size_t>(m.position(0)));
      if (!phase) phase = keyword_anywhere(lower);
      if (!phase && pending) {
        phase = pending;
        pending.reset();
      }
      if (!phase) phase = cur.next_unset();
      cur.set(*phase, r);
    }

    if (!line_had_range) {
      if (auto kw = keyword_anywhere(lower)) pending = kw;
    } else {
      pending.reset();
    }
  }
  flush();

  if (calls.empty()) {
    throw Error(ErrorCode::ParseError, "no do_task call found in the answer");
  }

  for (std::size_t i = 0; i < calls.size(); ++i) {
    check_phase_chain(calls[i], static_cast<int>(i));
    if (call_end(calls[i]) > duration + 1e-9) {
      std::ostringstream msg;
      msg << "call " << i + 1 << " ends at " << call_end(calls[i])
          << "s, beyond the " << duration << "s video";
      throw Error(ErrorCode::RangeError, msg.str());
    }
    if (i + 1 < calls.size() &&
        calls[i + 1].align.start < call_end(calls[i]) - 1e-9) {
      std::ostringstream msg;
      msg << "call " << i + 2 << " begins before call " << i + 1 << " ends";
      throw Error(ErrorCode::RangeError, msg.str());
    }
  }
  return Decomposition{std::move(calls)};
}

std::string render_decomposition(const Decomposition& d) {
  auto mmss = [](double seconds) {
    return format_mmss(static_cast<int>(std::llround(seconds)));
  };
  std::ostringstream out;
  for (std::size_t i = 0; i < d.calls.size(); ++i) {
    const DecomposedCall& call = d.calls[i];
    if (i > 0) out << "\n";
    out << "Call " << i + 1 << ":\n";
    out << "visual_target: '" << call.visual_target << "'\n";
    out << "align_gripper_to: " << mmss(call.align.start) << "-"
        << mmss(call.align.end) << "\n";
    out << "execute_stored_waypoints: " << mmss(call.execute.start) << "-"
        << mmss(call.execute.end) << "\n";
    if (call.pullback) {
      out << "pullback: " << mmss(call.pullback->start) << "-"
          << mmss(call.pullback->end) << "\n";
    }
  }
  return out.str();
}

std::vector<Subtask> to_subtasks(const Decomposition& d,
                                 const Demonstration& demo) {
  std::vector<Subtask> out;
  out.reserve(d.calls.size());
  for (const DecomposedCall& call : d.calls) {
    Subtask s;
    s.align_start = timestamp_to_index(demo, call.align.start);
    s.align_end = timestamp_to_index(demo, call.align.end);
    s.exec_start = timestamp_to_index(demo, call.execute.start);
    s.exec_end = timestamp_to_index(demo, call_end(call));
    s.description = call.visual_target;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Subtask> mock_decompose(const Demonstration& demo,
                                    const GripperContext& ctx, double v_min) {
  if (!demo.sim || demo.sim_objects.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "mock decomposition needs the simulator sidecar");
  }
  const int n = demo.step_count();
  if (n < 2) {
    throw Error(ErrorCode::InvalidArgument, "demonstration too short");
  }

  // Maximal runs of context seconds where the gripper moves.
  struct Run {
    double begin_t, end_t;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < ctx.size();) {
    if (ctx[i].speed <= v_min) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < ctx.size() && ctx[j + 1].speed > v_min) ++j;
    runs.push_back({ctx[i].t, ctx[j].t});
    i = j + 1;
  }
  if (runs.empty()) {
    throw Error(ErrorCode::NoTransitions, "the gripper never moves");
  }

  constexpr double kQuietMotion = 1e-4;  // settled end-effector step
  std::vector<Subtask> subtasks;
  int prev_end = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const int trans_start = timestamp_to_index(demo, runs[k].begin_t);
    int exec_end = timestamp_to_index(demo, runs[k].end_t);

    // Quietest step between the previous subtask and the transition; ties
    // go to the latest step (the dwell right before the interaction).
    int split = prev_end;
    double best = std::numeric_limits<double>::infinity();
    const int last_candidate = std::min(trans_start, n - 2);
    for (int i = prev_end; i <= last_candidate; ++i) {
      double m = step_motion(demo, i);
      if (m <= best) {
        best = m;
        split = i;
      }
    }

    // Extend through the retreat: the replayed range ends once the arm
    // settles again (or the next transition approaches).
    int cap = n - 1;
    if (k + 1 < runs.size()) {
      cap = std::max(exec_end,
                     timestamp_to_index(demo, runs[k + 1].begin_t) - 1);
    }
    while (exec_end < cap && step_motion(demo, exec_end) > kQuietMotion) {
      ++exec_end;
    }

    if (exec_end <= split) {
      exec_end = split + 1;
      if (exec_end > n - 1) continue;  // degenerate tail run, drop it
    }

    // Visual target: nearest object to the TCP when the transition ends,
    // skipping whatever was already held and the background geometry.
    const std::vector<SimStepState>& sim = *demo.sim;
    const int trans_end = timestamp_to_index(demo, runs[k].end_t);
    const std::optional<std::uint16_t> held_before =
        sim[static_cast<std::size_t>(trans_start)].held_object;
    const Eigen::Vector3d tcp =
        demo.steps[static_cast<std::size_t>(trans_end)].ee_pose.translation;
    const auto& poses = sim[static_cast<std::size_t>(trans_end)].object_poses;

    std::string label;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const SimObjectInfo& info : demo.sim_objects) {
      if (info.background) continue;
      if (held_before && *held_before == info.id) continue;
      auto it = std::find_if(poses.begin(), poses.end(), [&](const auto& p) {
        return p.first == info.id;
      });
      if (it == poses.end()) continue;
      double d2 = (it->second.apply(info.local_centroid) - tcp).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        label = info.color_label;
      }
    }
    if (label.empty() && held_before) {
      for (const SimObjectInfo& info : demo.sim_objects) {
        if (info.id == *held_before) label = info.color_label;
      }
    }
    if (label.empty()) {
      throw Error(ErrorCode::EmptyScene, "no candidate visual target");
    }

    Subtask s;
    s.align_start = prev_end;
    s.align_end = split;
    s.exec_start = split;
    s.exec_end = exec_end;
    s.description = label;
    subtasks.push_back(std::move(s));
    prev_end = exec_end;
  }

  if (subtasks.empty()) {
    throw Error(ErrorCode::NoTransitions, "no usable gripper transition");
  }
  return subtasks;
}

int parse_keyframe_seconds(const std::string& text, double clip_duration) {
  std::optional<int> seconds;
  for (auto it = std::sregex_iterator(text.begin(), text.end(),
                                      single_regex());
       it != std::sregex_iterator(); ++it) {
    seconds = mmss_to_seconds(*it, 1);  // the last mention is the answer
  }
  if (!seconds) {
    throw Error(ErrorCode::ParseError, "no MM:SS timestamp in the answer");
  }
  if (*seconds > clip_duration + 1e-9) {
    std::ostringstream msg;
    msg << "timestamp " << format_mmss(*seconds) << " beyond the "
        << clip_duration << "s clip";
    throw Error(ErrorCode::RangeError, msg.str());
  }
  return *seconds;
}

std::vector<int> keyframe_clip_steps(const Demonstration& demo,
                                     const Subtask& subtask, double clip_fps) {
  if (clip_fps <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "clip fps must be positive");
  }
  if (subtask.align_start < 0 || subtask.align_end >= demo.step_count() ||
      subtask.align_start > subtask.align_end) {
    throw Error(ErrorCode::InvalidArgument, "align range outside the demo");
  }
  const double t0 =
      demo.steps[static_cast<std::size_t>(subtask.align_start)].timestamp;
  const double t1 =
      demo.steps[static_cast<std::size_t>(subtask.align_end)].timestamp;
  std::vector<int> steps;
  for (int k = 0;; ++k) {
    double t = t0 + k / clip_fps;
    if (t > t1 + 1e-9) break;
    int idx = timestamp_to_index(demo, t);
    idx = std::clamp(idx, subtask.align_start, subtask.align_end);
    if (steps.empty() || steps.back() != idx) steps.push_back(idx);
  }
  if (steps.empty() || steps.back() != subtask.align_end) {
    steps.push_back(subtask.align_end);
  }
  return steps;
}

int mock_select_keyframe(const Demonstration& demo, const sim::World& scene,
                         const std::string& description,
                         const std::vector<int>& clip_steps, int margin,
                         double mismatch_slack) {
  std::optional<std::uint16_t> id;
  for (const SimObjectInfo& info : demo.sim_objects) {
    if (same_label(info.color_label, description)) id = info.id;
  }
  if (!id) {
    if (const sim::SceneObject* obj = scene.find_by_label(description)) {
      id = obj->id;
    }
  }
  if (!id) {
    throw Error(ErrorCode::UnknownObject,
                "no scene object labelled '" + description + "'");
  }

  for (auto it = clip_steps.rbegin(); it != clip_steps.rend(); ++it) {
    const int step = *it;
    sim::World world = sim::world_at_step(scene, demo, step);
    const sim::RenderResult full = sim::render_with_meta(world);

    sim::World alone = world;
    alone.objects.erase(
        std::remove_if(alone.objects.begin(), alone.objects.end(),
                       [&](const sim::SceneObject& o) { return o.id != *id; }),
        alone.objects.end());
    if (alone.objects.empty()) continue;  // object left the tracked scene
    const sim::RenderResult solo = sim::render_with_meta(alone);

    const int w = full.frame.intrinsics.width;
    const int h = full.frame.intrinsics.height;
    int solo_count = 0;
    int mismatch = 0;
    int min_u = w, max_u = -1, min_v = h, max_v = -1;
    bool any_visible = false;
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const std::size_t i = static_cast<std::size_t>(v) * w + u;
        const bool in_solo = solo.meta.object[i] == *id;
        const bool in_full = full.meta.object[i] == *id;
        if (in_full) any_visible = true;
        if (in_solo) {
          ++solo_count;
          min_u = std::min(min_u, u);
          max_u = std::max(max_u, u);
          min_v = std::min(min_v, v);
          max_v = std::max(max_v, v);
        }
        if (in_solo != in_full) ++mismatch;
      }
    }
    if (!any_visible || solo_count == 0) continue;
    if (mismatch > mismatch_slack * solo_count) continue;  // occluded
    if (min_u < margin || min_v < margin || max_u >= w - margin ||
        max_v >= h - margin) {
      continue;  // silhouette not clear of the image border
    }
    return step;
  }
  throw Error(ErrorCode::NoValidKeyframe,
              "'" + description + "' is never fully visible in the clip");
}

int select_keyframe(const Demonstration& demo, const Subtask& subtask,
                    vlm::VlmClient& client, double clip_fps, int max_retries) {
  const std::vector<int> clip = keyframe_clip_steps(demo, subtask, clip_fps);
  const double t0 =
      demo.steps[static_cast<std::size_t>(subtask.align_start)].timestamp;
  const double clip_duration =
      demo.steps[static_cast<std::size_t>(subtask.align_end)].timestamp - t0;

  vlm::VlmRequest request;
  request.prompt = vlm::render_keyframe_prompt(subtask.description);
  request.frame_steps = clip;
  request.fps = clip_fps;
  request.extra = subtask.description;

  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const std::string text = client.complete(request);
    try {
      const int seconds = parse_keyframe_seconds(text, clip_duration);
      int idx = timestamp_to_index(demo, t0 + seconds);
      return std::clamp(idx, subtask.align_start, subtask.align_end);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseError &&
          e.code() != ErrorCode::RangeError) {
        throw;
      }
      request.prompt += std::string("\n\nYour previous answer was invalid: ") +
                        e.what() +
                        "\nGive exactly one timestamp in the format 'MM:SS'.";
    }
  }
  return subtask.align_end;  // safe default: the end of the approach
}

std::vector<Subtask> decompose_demo(const Demonstration& demo,
                                    vlm::VlmClient& client, int max_retries) {
  const GripperContext ctx = gripper_context(demo);

  vlm::VlmRequest request;
  request.prompt = vlm::render_decompose_prompt(ctx);
  request.fps = 1.0;
  for (const GripperSample& s : ctx) {
    int idx = timestamp_to_index(demo, s.t);
    if (request.frame_steps.empty() || request.frame_steps.back() != idx) {
      request.frame_steps.push_back(idx);
    }
  }

  std::string violation;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const std::string text = client.complete(request);
    try {
      const Decomposition d = parse_decomposition(text, demo.duration());
      std::vector<Subtask> subtasks = to_subtasks(d, demo);
      const PartitionCheck check =
          validate_partition(subtasks, demo.step_count());
      if (check.ok) return subtasks;
      violation = check.violation;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseError &&
          e.code() != ErrorCode::RangeError) {
        throw;
      }
      violation = e.what();
    }
    request.prompt +=
        "\n\nYour previous answer was rejected: " + violation +
        "\nAnswer again, following the required format exactly.";
  }
  throw Error(ErrorCode::ParseError,
              "decomposition failed after " + std::to_string(max_retries) +
                  " attempts: " + violation);
}

MockVlmClient::MockVlmClient(const Demonstration& demo, sim::World scene)
    : demo_(demo), scene_(std::move(scene)) {}

std::string MockVlmClient::complete(const vlm::VlmRequest& request) {
  if (request.prompt.find("do_task(") != std::string::npos) {
    const GripperContext ctx = gripper_context(demo_);
    const std::vector<Subtask> subtasks = mock_decompose(demo_, ctx);

    // Timestamps floor to whole seconds, matching the wire format. floor
    // (not round) keeps every rendered time inside the video.
    auto ts = [&](int step) {
      return std::floor(demo_.steps[static_cast<std::size_t>(step)].timestamp);
    };
    Decomposition d;
    for (const Subtask& s : subtasks) {
      DecomposedCall call;
      call.visual_target = s.description;
      call.align = {ts(s.align_start), ts(s.align_end)};
      call.execute = {ts(s.exec_start), ts(s.exec_end)};
      d.calls.push_back(std::move(call));
    }
    return render_decomposition(d);
  }

  if (request.prompt.find("Select the timestamp") != std::string::npos) {
    if (request.extra.empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "keyframe request without a visual target");
    }
    if (request.frame_steps.empty()) {
      throw Error(ErrorCode::InvalidArgument, "keyframe request without clip");
    }
    int step;
    try {
      step = mock_select_keyframe(demo_, scene_, request.extra,
                                  request.frame_steps);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoValidKeyframe) throw;
      step = request.frame_steps.back();
    }
    auto ts = [&](int s) {
      return demo_.steps[static_cast<std::size_t>(s)].timestamp;
    };
    const double t0 = ts(request.frame_steps.front());
    const double duration = ts(request.frame_steps.back()) - t0;
    long long seconds = std::llround(ts(step) - t0);
    seconds = std::clamp<long long>(
        seconds, 0, static_cast<long long>(std::floor(duration + 1e-9)));
    return format_mmss(static_cast<int>(seconds));
  }

  throw Error(ErrorCode::InvalidArgument,
              "the offline client does not answer this prompt");
}

}  // namespace osil
