#include "osil/recipes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "osil/error.hpp"
#include "osil/rng.hpp"
#include "osil/scene_io.hpp"
#include "osil/sim_state.hpp"

namespace osil {

namespace {

constexpr double kPi = 3.14159265358979323846;

Pose pose_from_spec(const nlohmann::json& j) {
  Pose p;
  if (j.contains("xyz")) {
    const auto& t = j.at("xyz");
    p.translation = {t.at(0).get<double>(), t.at(1).get<double>(),
                     t.at(2).get<double>()};
  }
  if (j.contains("rpy_deg")) {
    const auto& r = j.at("rpy_deg");
    const double d2r = kPi / 180.0;
    p.rotation = rot_z(r.at(2).get<double>() * d2r) *
                 rot_y(r.at(1).get<double>() * d2r) *
                 rot_x(r.at(0).get<double>() * d2r);
  }
  return p;
}

/// Gripper pointing down at the table, rotated about the world vertical.
Eigen::Matrix3d top_down(double yaw_deg) {
  return rot_z(yaw_deg * kPi / 180.0) * rot_x(kPi);
}

RecipeAction action_from_spec(const nlohmann::json& j) {
  RecipeAction a;
  if (j.contains("above")) {
    a.kind = RecipeAction::Kind::AboveObject;
    a.object = j.at("above").get<std::string>();
    a.offset = {j.value("dx", 0.0), j.value("dy", 0.0), j.value("dz", 0.0)};
    a.yaw_deg = j.value("yaw_deg", 0.0);
  } else if (j.contains("pose")) {
    a.kind = RecipeAction::Kind::AbsolutePose;
    a.pose = pose_from_spec(j.at("pose"));
  } else if (j.contains("offset")) {
    a.kind = RecipeAction::Kind::Offset;
    const auto& o = j.at("offset");
    a.offset = {o.at(0).get<double>(), o.at(1).get<double>(),
                o.at(2).get<double>()};
  } else {
    a.kind = RecipeAction::Kind::Hold;
  }
  if (j.contains("gripper")) a.gripper = j.at("gripper").get<double>();
  a.duration_s = j.value("duration", 1.0);
  a.dwell_s = j.value("dwell", 0.0);
  if (a.duration_s <= 0.0 || a.dwell_s < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "action timing must be positive");
  }
  return a;
}

Pose resolve_target(const RecipeAction& a, const sim::World& world) {
  switch (a.kind) {
    case RecipeAction::Kind::Hold:
      return world.ee_pose;
    case RecipeAction::Kind::AbsolutePose:
      return a.pose;
    case RecipeAction::Kind::AboveObject: {
      const sim::SceneObject* obj = world.find_by_label(a.object);
      if (!obj) {
        throw Error(ErrorCode::UnknownObject,
                    "script references unknown object '" + a.object + "'");
      }
      Pose p;
      p.translation = obj->world_centroid() + a.offset;
      p.rotation = top_down(a.yaw_deg);
      return p;
    }
    case RecipeAction::Kind::Offset: {
      Pose p = world.ee_pose;
      p.translation += a.offset;
      return p;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled action kind");
}

Pose interp(const Pose& from, const Pose& to, double alpha) {
  Pose p;
  p.translation = (1.0 - alpha) * from.translation + alpha * to.translation;
  const Eigen::Vector3d omega =
      log_so3(from.rotation.transpose() * to.rotation);
  p.rotation = from.rotation * exp_so3(alpha * omega);
  return p;
}

std::uint16_t resolve_label(const sim::World& scene, const std::string& label) {
  const sim::SceneObject* obj = scene.find_by_label(label);
  if (!obj) {
    throw Error(ErrorCode::UnknownObject,
                "success predicate references unknown object '" + label + "'");
  }
  return obj->id;
}

Eigen::Vector3d object_centroid(const sim::World& world, std::uint16_t id) {
  const sim::SceneObject* obj = world.find(id);
  if (!obj) {
    throw Error(ErrorCode::UnknownObject,
                "world lost object " + std::to_string(id));
  }
  return obj->world_centroid();
}

}  // namespace

TaskRecipe load_recipe(const nlohmann::json& j, const std::string& base_dir) {
  if (j.value("version", 0) != kRecipeSchemaVersion) {
    throw Error(ErrorCode::ParseError, "unsupported recipe version");
  }
  TaskRecipe r;
  r.name = j.at("name").get<std::string>();
  r.scene_path = j.at("scene").get<std::string>();
  std::string scene_file = r.scene_path;
  if (!scene_file.empty() && scene_file.front() != '/' && !base_dir.empty()) {
    scene_file = base_dir + "/" + scene_file;
  }
  r.scene = sim::load_scene_file(scene_file);
  r.home = pose_from_spec(j.at("home"));
  if (j.contains("perturbation")) {
    r.perturbation.translation = j.at("perturbation").value("translation", 0.05);
    r.perturbation.rotation_deg =
        j.at("perturbation").value("rotation_deg", 15.0);
  }
  if (j.contains("seeds")) {
    for (const auto& s : j.at("seeds")) {
      r.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  r.success_spec = j.value("success", nlohmann::json{{"type", "always"}});
  for (const auto& entry : j.at("script")) {
    r.script.push_back(action_from_spec(entry));
  }
  if (r.script.empty()) {
    throw Error(ErrorCode::InvalidArgument, "recipe script is empty");
  }
  return r;
}

TaskRecipe load_recipe_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open recipe " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError,
                "recipe " + path + " is not valid JSON: " + e.what());
  }
  const std::size_t slash = path.find_last_of('/');
  const std::string base =
      slash == std::string::npos ? std::string(".") : path.substr(0, slash);
  return load_recipe(j, base);
}

SuccessPredicate make_success_predicate(const nlohmann::json& spec,
                                        const sim::World& scene) {
  const std::string type = spec.value("type", "always");
  if (type == "always") {
    return [](const sim::World&) { return true; };
  }
  if (type == "all") {
    std::vector<SuccessPredicate> parts;
    for (const auto& sub : spec.at("of")) {
      parts.push_back(make_success_predicate(sub, scene));
    }
    return [parts](const sim::World& w) {
      return std::all_of(parts.begin(), parts.end(),
                         [&](const SuccessPredicate& p) { return p(w); });
    };
  }
  if (type == "above") {
    const std::uint16_t upper = resolve_label(scene, spec.at("upper"));
    const std::uint16_t lower = resolve_label(scene, spec.at("lower"));
    const double xy_tol = spec.value("xy_tol", 0.02);
    const double z_min = spec.value("z_min", 0.01);
    const double z_max = spec.value("z_max", 0.10);
    return [=](const sim::World& w) {
      const Eigen::Vector3d d =
          object_centroid(w, upper) - object_centroid(w, lower);
      return std::abs(d.x()) <= xy_tol && std::abs(d.y()) <= xy_tol &&
             d.z() >= z_min && d.z() <= z_max;
    };
  }
  if (type == "in_region") {
    const std::uint16_t id = resolve_label(scene, spec.at("object"));
    const double cx = spec.at("center").at(0).get<double>();
    const double cy = spec.at("center").at(1).get<double>();
    const double radius = spec.at("radius").get<double>();
    return [=](const sim::World& w) {
      const Eigen::Vector3d c = object_centroid(w, id);
      return std::hypot(c.x() - cx, c.y() - cy) <= radius;
    };
  }
  if (type == "near") {
    const std::uint16_t id = resolve_label(scene, spec.at("object"));
    const auto& p = spec.at("point");
    const Eigen::Vector3d point(p.at(0).get<double>(), p.at(1).get<double>(),
                                p.at(2).get<double>());
    const double radius = spec.at("radius").get<double>();
    return [=](const sim::World& w) {
      return (object_centroid(w, id) - point).norm() <= radius;
    };
  }
  if (type == "touched_all") {
    std::vector<std::uint16_t> ids;
    for (const auto& label : spec.at("objects")) {
      ids.push_back(resolve_label(scene, label));
    }
    const double eps = spec.value("eps", 0.02);
    return [=](const sim::World& w) {
      for (std::uint16_t id : ids) {
        auto it = w.min_tcp_distance.find(id);
        if (it == w.min_tcp_distance.end() || it->second > eps) return false;
      }
      return true;
    };
  }
  if (type == "held_rotated") {
    const std::uint16_t id = resolve_label(scene, spec.at("object"));
    const double min_deg = spec.value("min_deg", 120.0);
    const Eigen::Matrix3d initial = scene.find(id)->pose.rotation;
    return [=](const sim::World& w) {
      if (!w.held_object || *w.held_object != id) return false;
      const Eigen::Matrix3d rel =
          initial.transpose() * w.find(id)->pose.rotation;
      const double angle =
          std::acos(std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0));
      return angle >= min_deg * kPi / 180.0;
    };
  }
  if (type == "held_above") {
    const std::uint16_t id = resolve_label(scene, spec.at("object"));
    const double z_min = spec.value("z_min", 0.05);
    return [=](const sim::World& w) {
      return w.held_object && *w.held_object == id &&
             object_centroid(w, id).z() >= z_min;
    };
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown success predicate '" + type + "'");
}

// ---------------------------------------------------------------------------
// Recording
// ---------------------------------------------------------------------------

SimFrameSource::SimFrameSource(sim::World scene, Pose hand_eye,
                               std::vector<Pose> ee_poses,
                               std::vector<double> widths,
                               std::vector<SimStepState> states)
    : scene_(std::move(scene)),
      hand_eye_(hand_eye),
      ee_poses_(std::move(ee_poses)),
      widths_(std::move(widths)),
      states_(std::move(states)) {}

RgbdFrame SimFrameSource::frame(int index) const {
  if (index < 0 || index >= count()) {
    throw Error(ErrorCode::InvalidArgument, "frame index out of range");
  }
  const std::size_t i = static_cast<std::size_t>(index);
  return sim::render(sim::assemble_world(scene_, ee_poses_[i], widths_[i],
                                         hand_eye_, states_[i]));
}

Demonstration record_demo(const TaskRecipe& recipe, double fps) {
  if (fps <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "fps must be positive");
  }
  if (recipe.script.empty()) {
    throw Error(ErrorCode::InvalidArgument, "recipe script is empty");
  }

  sim::World world = recipe.scene;
  world.ee_pose = recipe.home;

  Demonstration demo;
  demo.fps = fps;
  demo.hand_eye = recipe.scene.hand_eye;

  std::vector<Pose> ee_poses;
  std::vector<double> widths;
  std::vector<SimStepState> states;

  auto snapshot = [&]() {
    SimStepState st;
    for (const sim::SceneObject& obj : world.objects) {
      st.object_poses.emplace_back(obj.id, obj.pose);
    }
    st.held_object = world.held_object;
    st.frame_counter = world.frame_counter;
    const int i = static_cast<int>(demo.steps.size());
    demo.steps.push_back(
        {i, world.ee_pose, world.gripper_width, static_cast<double>(i) / fps});
    ee_poses.push_back(world.ee_pose);
    widths.push_back(world.gripper_width);
    states.push_back(std::move(st));
  };

  snapshot();  // the state before any motion is step 0
  for (const RecipeAction& action : recipe.script) {
    const Pose from = world.ee_pose;
    const Pose target = resolve_target(action, world);
    const double w_from = world.gripper_width;
    const double w_to = action.gripper.value_or(w_from);
    const int move_steps =
        std::max(1, static_cast<int>(std::llround(action.duration_s * fps)));
    for (int s = 1; s <= move_steps; ++s) {
      const double alpha = static_cast<double>(s) / move_steps;
      const Pose next = interp(from, target, alpha);
      const PoseDelta delta = relative(world.ee_pose, next);
      world = sim::apply_action(world, delta,
                                w_from + alpha * (w_to - w_from));
      snapshot();
    }
    const int dwell_steps =
        static_cast<int>(std::llround(action.dwell_s * fps));
    for (int s = 0; s < dwell_steps; ++s) {
      world = sim::apply_action(world, PoseDelta{}, world.gripper_width);
      snapshot();
    }
  }

  for (const sim::SceneObject& obj : recipe.scene.objects) {
    SimObjectInfo info;
    info.id = obj.id;
    info.color_label = obj.color_label;
    info.graspable = obj.graspable;
    info.background = obj.background;
    info.local_centroid = obj.surface->centroid;
    demo.sim_objects.push_back(std::move(info));
  }
  demo.sim = states;
  demo.frames = std::make_shared<SimFrameSource>(
      recipe.scene, demo.hand_eye, std::move(ee_poses), std::move(widths),
      std::move(states));
  return demo;
}

// ---------------------------------------------------------------------------
// Builtin and randomized recipes
// ---------------------------------------------------------------------------

std::vector<std::string> builtin_recipe_names() {
  return {"stack_blocks", "sort_fruits", "tea_prep", "wipe",
          "pick",         "press",       "knock",    "flip"};
}

TaskRecipe load_builtin_recipe(const std::string& name) {
  const auto names = builtin_recipe_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown recipe '" + name + "'");
  }
  return load_recipe_file(std::string(OSIL_ASSET_DIR) + "/recipes/" + name +
                          ".json");
}

namespace {

sim::SceneObject make_cube(std::uint16_t id, const std::string& label,
                           std::array<std::uint8_t, 3> color, double edge,
                           const Eigen::Vector3d& position,
                           std::uint64_t seed) {
  sim::SceneObject obj;
  obj.id = id;
  obj.color_label = label;
  obj.base_color = color;
  obj.grasp_width = edge;
  obj.pose.translation = position;
  obj.surface = sim::with_texture(
      sim::sample_box({edge, edge, edge}, 9000, seed), id, 0.0025);
  return obj;
}

}  // namespace

TaskRecipe random_recipe(std::uint64_t index) {
  Rng rng(mix_seed(0x5EC1FE5ull, index, 0x0D351757ull));

  TaskRecipe recipe;
  recipe.name = "random_" + std::to_string(index);
  recipe.success_spec = {{"type", "always"}};
  recipe.seeds = {index};

  sim::World& scene = recipe.scene;
  scene.hand_eye.translation = {0.0, -0.03, -0.12};
  scene.intrinsics = Intrinsics{};
  scene.rng_seed = index;

  sim::SceneObject table;
  table.id = 1;
  table.color_label = "gray table";
  table.base_color = {90, 90, 95};
  table.graspable = false;
  table.background = true;
  table.pose.translation = {0.0, 0.0, -0.005};
  table.surface = sim::with_texture(
      sim::sample_box({0.7, 0.7, 0.01}, 30000, mix_seed(index, 1, 1)), 1,
      0.0025);
  scene.objects.push_back(std::move(table));

  const std::array<std::pair<const char*, std::array<std::uint8_t, 3>>, 5>
      palette = {{{"red block", {200, 50, 45}},
                  {"green block", {60, 180, 70}},
                  {"blue block", {55, 90, 200}},
                  {"yellow block", {210, 200, 60}},
                  {"purple block", {150, 70, 190}}}};
  const std::size_t object_count = 2 + rng.uniform_index(4);  // 2..5

  std::vector<Eigen::Vector3d> placed;
  for (std::size_t i = 0; i < object_count; ++i) {
    Eigen::Vector3d pos;
    for (int attempt = 0;; ++attempt) {
      pos = {rng.uniform(-0.12, 0.12), rng.uniform(-0.12, 0.12), 0.015};
      const bool clear = std::none_of(
          placed.begin(), placed.end(), [&](const Eigen::Vector3d& q) {
            return (q - pos).head<2>().norm() < 0.07;
          });
      if (clear || attempt > 50) break;
    }
    placed.push_back(pos);
    scene.objects.push_back(make_cube(static_cast<std::uint16_t>(i + 2),
                                      palette[i].first, palette[i].second,
                                      0.03, pos, mix_seed(index, i, 2)));
  }

  recipe.home = Pose{rot_x(kPi), {0.0, 0.0, 0.35}};
  scene.ee_pose = recipe.home;

  const int transitions = 1 + static_cast<int>(rng.uniform_index(4));  // 1..4
  bool holding = false;
  std::size_t held_idx = 0;
  for (int t = 0; t < transitions; ++t) {
    auto push = [&](RecipeAction a) { recipe.script.push_back(std::move(a)); };
    if (!holding) {
      held_idx = rng.uniform_index(object_count);
      const std::string label = palette[held_idx].first;
      RecipeAction hover;
      hover.kind = RecipeAction::Kind::AboveObject;
      hover.object = label;
      hover.offset = {0.0, 0.0, 0.10};
      hover.duration_s = 1.6;
      hover.dwell_s = 0.6;
      push(hover);
      RecipeAction descend = hover;
      descend.offset = {0.0, 0.0, 0.006};
      descend.duration_s = 1.0;
      descend.dwell_s = 0.4;
      push(descend);
      RecipeAction close;
      close.kind = RecipeAction::Kind::Hold;
      close.gripper = 0.026;
      close.duration_s = 1.0;
      close.dwell_s = 0.4;
      push(close);
      RecipeAction lift;
      lift.kind = RecipeAction::Kind::Offset;
      lift.offset = {0.0, 0.0, 0.10};
      lift.duration_s = 1.0;
      lift.dwell_s = 0.6;
      push(lift);
      holding = true;
    } else {
      std::size_t dest = rng.uniform_index(object_count);
      if (dest == held_idx) dest = (dest + 1) % object_count;
      RecipeAction hover;
      hover.kind = RecipeAction::Kind::AboveObject;
      hover.object = palette[dest].first;
      hover.offset = {0.0, 0.0, 0.10};
      hover.duration_s = 1.6;
      hover.dwell_s = 0.6;
      push(hover);
      RecipeAction descend = hover;
      descend.offset = {0.0, 0.0, 0.055};
      descend.duration_s = 1.0;
      descend.dwell_s = 0.4;
      push(descend);
      RecipeAction open;
      open.kind = RecipeAction::Kind::Hold;
      open.gripper = 0.08;
      open.duration_s = 1.0;
      open.dwell_s = 0.4;
      push(open);
      RecipeAction lift;
      lift.kind = RecipeAction::Kind::Offset;
      lift.offset = {0.0, 0.0, 0.10};
      lift.duration_s = 1.0;
      lift.dwell_s = 0.6;
      push(lift);
      holding = false;
    }
  }
  return recipe;
}

}  // namespace osil
