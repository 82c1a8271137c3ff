#include "osil/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "osil/error.hpp"
#include "osil/frame_io.hpp"

namespace osil {

namespace {

std::string frame_path(const std::string& dir, int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.osrf", index);
  return dir + "/frames/" + name;
}

}  // namespace

RgbdFrame DirFrameSource::frame(int index) const {
  if (index < 0 || index >= count_)
    throw Error(ErrorCode::InvalidArgument, "frame index out of range");
  return read_frame_file(frame_path(dir_, index));
}

GripperContext gripper_context(const Demonstration& demo) {
  if (demo.steps.empty())
    throw Error(ErrorCode::InvalidArgument, "gripper_context: empty demo");
  const int len = std::max(1, static_cast<int>(std::ceil(demo.duration())));
  GripperContext ctx(len);
  for (int s = 0; s < len; ++s) {
    ctx[s].t = s;
    ctx[s].width =
        demo.steps[timestamp_to_index(demo, s)].gripper_width;
  }
  for (int s = 0; s < len; ++s) {
    double v = 0.0;
    if (len > 1) {
      if (s == 0)
        v = ctx[1].width - ctx[0].width;
      else if (s == len - 1)
        v = ctx[s].width - ctx[s - 1].width;
      else
        v = (ctx[s + 1].width - ctx[s - 1].width) / 2.0;
    }
    ctx[s].velocity = v;
    ctx[s].speed = std::abs(v);
  }
  return ctx;
}

int timestamp_to_index(const Demonstration& demo, double seconds) {
  if (demo.steps.empty())
    throw Error(ErrorCode::InvalidArgument, "timestamp_to_index: empty demo");
  int best = 0;
  double best_dist = std::abs(demo.steps[0].timestamp - seconds);
  for (int i = 1; i < demo.step_count(); ++i) {
    const double d = std::abs(demo.steps[i].timestamp - seconds);
    if (d < best_dist) {  // strict: exact midpoints keep the earlier step
      best_dist = d;
      best = i;
    }
  }
  return best;
}

PartitionCheck validate_partition(const std::vector<Subtask>& subtasks,
                                  int step_count) {
  auto fail = [](std::string why) { return PartitionCheck{false, std::move(why)}; };
  if (subtasks.empty()) return fail("no subtasks");
  const int n = static_cast<int>(subtasks.size());
  for (int k = 0; k < n; ++k) {
    const Subtask& s = subtasks[k];
    const std::string at = " at k=" + std::to_string(k + 1);
    if (s.align_start < 0 || s.exec_end >= step_count)
      return fail("range within [1, n] failed" + at);
    if (!(s.align_start <= s.align_end && s.align_end <= s.exec_start &&
          s.exec_start <= s.exec_end))
      return fail("s_A <= e_A <= s_E <= e_E failed" + at);
    if (!(s.align_start < s.exec_end)) return fail("s < e failed" + at);
  }
  for (int k = 0; k + 1 < n; ++k) {
    if (!(subtasks[k].exec_end <= subtasks[k + 1].align_start))
      return fail("e[" + std::to_string(k + 1) + "] <= s[" +
                  std::to_string(k + 2) + "] failed at k=" +
                  std::to_string(k + 2));
  }
  return PartitionCheck{true, ""};
}

ControlSequence extract_control_sequence(const Demonstration& demo,
                                         const Subtask& subtask) {
  if (!subtask.keyframe)
    throw Error(ErrorCode::MissingKeyframe,
                "extract_control_sequence: subtask has no keyframe");
  const int start = *subtask.keyframe;
  const int end = subtask.exec_end;
  if (start < 0 || end >= demo.step_count() || start > end)
    throw Error(ErrorCode::InvalidArgument,
                "extract_control_sequence: range out of bounds");
  ControlSequence seq;
  seq.actions.reserve(end - start);
  for (int j = start; j < end; ++j) {
    seq.actions.push_back(
        {relative(demo.steps[j].ee_pose, demo.steps[j + 1].ee_pose),
         demo.steps[j + 1].gripper_width});
  }
  return seq;
}

void save_demo_archive(const std::string& dir, const Demonstration& demo) {
  namespace fs = std::filesystem;
  fs::create_directories(dir + "/frames");

  nlohmann::json j;
  j["version"] = kDemoSchemaVersion;
  j["fps"] = demo.fps;
  j["hand_eye"] = pose_to_json(demo.hand_eye);
  if (!demo.sim_objects.empty()) {
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : demo.sim_objects) {
      objs.push_back({{"id", o.id},
                      {"color_label", o.color_label},
                      {"graspable", o.graspable},
                      {"background", o.background},
                      {"local_centroid",
                       {o.local_centroid.x(), o.local_centroid.y(),
                        o.local_centroid.z()}}});
    }
    j["sim_objects"] = objs;
  }
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < demo.steps.size(); ++i) {
    const DemoStep& s = demo.steps[i];
    nlohmann::json js;
    js["frame"] = s.frame;
    js["pose"] = pose_to_json(s.ee_pose);
    js["gripper_width"] = s.gripper_width;
    js["timestamp"] = s.timestamp;
    if (demo.sim) {
      const SimStepState& st = (*demo.sim)[i];
      nlohmann::json sim;
      sim["frame_counter"] = st.frame_counter;
      if (st.held_object) sim["held"] = *st.held_object;
      nlohmann::json objs = nlohmann::json::array();
      for (const auto& [id, pose] : st.object_poses)
        objs.push_back({{"id", id}, {"pose", pose_to_json(pose)}});
      sim["objects"] = objs;
      js["sim"] = sim;
    }
    steps.push_back(js);
  }
  j["steps"] = steps;

  std::ofstream os(dir + "/demo.json");
  if (!os) throw Error(ErrorCode::IoError, "archive: cannot write " + dir);
  os << j.dump(2) << "\n";

  if (!demo.frames)
    throw Error(ErrorCode::InvalidArgument, "archive: demo has no frames");
  for (int i = 0; i < demo.frames->count(); ++i)
    write_frame_file(frame_path(dir, i), demo.frames->frame(i));
}

Demonstration load_demo_archive(const std::string& dir) {
  std::ifstream is(dir + "/demo.json");
  if (!is)
    throw Error(ErrorCode::IoError, "archive: cannot open " + dir + "/demo.json");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("archive: ") + e.what());
  }
  if (j.value("version", 0) != kDemoSchemaVersion)
    throw Error(ErrorCode::ParseError, "archive: unsupported version");

  Demonstration demo;
  demo.fps = j.at("fps").get<double>();
  demo.hand_eye = pose_from_json(j.at("hand_eye"));
  if (j.contains("sim_objects")) {
    for (const auto& oj : j.at("sim_objects")) {
      SimObjectInfo o;
      o.id = oj.at("id").get<std::uint16_t>();
      o.color_label = oj.at("color_label").get<std::string>();
      o.graspable = oj.value("graspable", true);
      o.background = oj.value("background", false);
      const auto& c = oj.at("local_centroid");
      o.local_centroid = Eigen::Vector3d(c.at(0).get<double>(),
                                         c.at(1).get<double>(),
                                         c.at(2).get<double>());
      demo.sim_objects.push_back(std::move(o));
    }
  }
  bool any_sim = false;
  std::vector<SimStepState> sim_states;
  for (const auto& js : j.at("steps")) {
    DemoStep s;
    s.frame = js.at("frame").get<int>();
    s.ee_pose = pose_from_json(js.at("pose"));
    s.gripper_width = js.at("gripper_width").get<double>();
    s.timestamp = js.at("timestamp").get<double>();
    demo.steps.push_back(s);
    SimStepState st;
    if (js.contains("sim")) {
      any_sim = true;
      const auto& sim = js.at("sim");
      st.frame_counter = sim.value("frame_counter", std::uint64_t(0));
      if (sim.contains("held"))
        st.held_object = sim.at("held").get<std::uint16_t>();
      for (const auto& oj : sim.at("objects"))
        st.object_poses.emplace_back(oj.at("id").get<std::uint16_t>(),
                                     pose_from_json(oj.at("pose")));
    }
    sim_states.push_back(std::move(st));
  }
  if (any_sim) demo.sim = std::move(sim_states);

  int frame_count = 0;
  for (const auto& s : demo.steps) frame_count = std::max(frame_count, s.frame + 1);
  demo.frames = std::make_shared<DirFrameSource>(dir, frame_count);
  return demo;
}

}  // namespace osil
