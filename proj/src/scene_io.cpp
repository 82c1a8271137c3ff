#include "osil/scene_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "osil/error.hpp"
#include "osil/rng.hpp"

namespace osil::sim {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

void finalize(SurfacePoints& s) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < s.size(); ++i)
    c += Eigen::Vector3d(s.x[i], s.y[i], s.z[i]);
  if (s.size() > 0) c /= static_cast<double>(s.size());
  s.centroid = c;
  s.tex.assign(s.size(), 128);
}

}  // namespace

std::shared_ptr<const SurfacePoints> sample_box(const Eigen::Vector3d& size,
                                                std::size_t count,
                                                std::uint64_t seed) {
  const double hx = size.x() / 2, hy = size.y() / 2, hz = size.z() / 2;
  const double ax = size.y() * size.z();  // +-x faces
  const double ay = size.x() * size.z();
  const double az = size.x() * size.y();
  const double total = 2 * (ax + ay + az);
  Rng rng(seed);
  auto s = std::make_shared<SurfacePoints>();
  for (std::size_t i = 0; i < count; ++i) {
    const double r = rng.uniform01() * total;
    const double a = rng.uniform01(), b = rng.uniform01();
    double x, y, z;
    if (r < 2 * ax) {
      x = r < ax ? hx : -hx;
      y = (2 * a - 1) * hy;
      z = (2 * b - 1) * hz;
    } else if (r < 2 * ax + 2 * ay) {
      y = r < 2 * ax + ay ? hy : -hy;
      x = (2 * a - 1) * hx;
      z = (2 * b - 1) * hz;
    } else {
      z = r < 2 * ax + 2 * ay + az ? hz : -hz;
      x = (2 * a - 1) * hx;
      y = (2 * b - 1) * hy;
    }
    s->x.push_back(x);
    s->y.push_back(y);
    s->z.push_back(z);
  }
  finalize(*s);
  return s;
}

std::shared_ptr<const SurfacePoints> sample_cylinder(double radius,
                                                     double height,
                                                     std::size_t count,
                                                     std::uint64_t seed) {
  const double lateral = kTwoPi * radius * height;
  const double cap = kTwoPi * radius * radius / 2.0;  // pi r^2
  const double total = lateral + 2 * cap;
  Rng rng(seed);
  auto s = std::make_shared<SurfacePoints>();
  for (std::size_t i = 0; i < count; ++i) {
    const double r = rng.uniform01() * total;
    const double theta = rng.uniform01() * kTwoPi;
    double x, y, z;
    if (r < lateral) {
      x = radius * std::cos(theta);
      y = radius * std::sin(theta);
      z = (rng.uniform01() - 0.5) * height;
    } else {
      const double rr = radius * std::sqrt(rng.uniform01());
      x = rr * std::cos(theta);
      y = rr * std::sin(theta);
      z = r < lateral + cap ? height / 2 : -height / 2;
    }
    s->x.push_back(x);
    s->y.push_back(y);
    s->z.push_back(z);
  }
  finalize(*s);
  return s;
}

std::shared_ptr<const SurfacePoints> sample_sphere(double radius,
                                                   std::size_t count,
                                                   std::uint64_t seed) {
  Rng rng(seed);
  auto s = std::make_shared<SurfacePoints>();
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Vector3d d(rng.normal(), rng.normal(), rng.normal());
    const double n = d.norm();
    if (n < 1e-12) {
      d = Eigen::Vector3d::UnitZ();
    } else {
      d /= n;
    }
    s->x.push_back(radius * d.x());
    s->y.push_back(radius * d.y());
    s->z.push_back(radius * d.z());
  }
  finalize(*s);
  return s;
}

std::shared_ptr<const SurfacePoints> with_texture(
    std::shared_ptr<const SurfacePoints> surface, std::uint16_t id,
    double scale) {
  auto out = std::make_shared<SurfacePoints>(*surface);
  out->tex.resize(out->size());
  for (std::size_t i = 0; i < out->size(); ++i) {
    const std::int64_t q[3] = {
        static_cast<std::int64_t>(std::floor(out->x[i] / scale)),
        static_cast<std::int64_t>(std::floor(out->y[i] / scale)),
        static_cast<std::int64_t>(std::floor(out->z[i] / scale))};
    std::uint64_t h = fnv1a(&id, sizeof(id));
    h = fnv1a(q, sizeof(q), h);
    out->tex[i] = static_cast<std::uint8_t>(h & 0xFF);
  }
  return out;
}

namespace {

Intrinsics intrinsics_from_json(const nlohmann::json& j) {
  Intrinsics k;
  k.fx = j.value("fx", k.fx);
  k.fy = j.value("fy", k.fy);
  k.cx = j.value("cx", k.cx);
  k.cy = j.value("cy", k.cy);
  k.width = j.value("width", k.width);
  k.height = j.value("height", k.height);
  if (k.width <= 0 || k.height <= 0 || k.fx <= 0 || k.fy <= 0)
    throw Error(ErrorCode::ParseError, "scene: bad intrinsics");
  return k;
}

std::shared_ptr<const SurfacePoints> surface_from_json(
    const nlohmann::json& obj, double* derived_grasp_width) {
  if (obj.contains("primitive")) {
    const auto& p = obj.at("primitive");
    const std::string type = p.at("type").get<std::string>();
    const std::size_t count = p.value("points", std::size_t(6000));
    const std::uint64_t seed = p.value("seed", std::uint64_t(1));
    if (count < 5000)
      throw Error(ErrorCode::ParseError,
                  "scene: primitives need at least 5000 surface points");
    if (type == "box") {
      const auto sz = p.at("size");
      const Eigen::Vector3d size(sz.at(0).get<double>(),
                                 sz.at(1).get<double>(),
                                 sz.at(2).get<double>());
      *derived_grasp_width = std::min(size.x(), size.y());
      return sample_box(size, count, seed);
    }
    if (type == "cylinder") {
      const double radius = p.at("radius").get<double>();
      const double height = p.at("height").get<double>();
      *derived_grasp_width = 2 * radius;
      return sample_cylinder(radius, height, count, seed);
    }
    if (type == "sphere") {
      const double radius = p.at("radius").get<double>();
      *derived_grasp_width = 2 * radius;
      return sample_sphere(radius, count, seed);
    }
    throw Error(ErrorCode::ParseError, "scene: unknown primitive " + type);
  }
  if (obj.contains("points")) {
    const auto& pts = obj.at("points");
    auto s = std::make_shared<SurfacePoints>();
    s->x = pts.at("x").get<std::vector<double>>();
    s->y = pts.at("y").get<std::vector<double>>();
    s->z = pts.at("z").get<std::vector<double>>();
    if (s->x.size() != s->y.size() || s->x.size() != s->z.size() ||
        s->x.empty())
      throw Error(ErrorCode::ParseError, "scene: bad inline points");
    finalize(*s);
    *derived_grasp_width = 0.04;
    return s;
  }
  throw Error(ErrorCode::ParseError,
              "scene: object needs a primitive or inline points");
}

}  // namespace

World load_scene(const nlohmann::json& j) {
  if (j.value("version", 0) != kSceneSchemaVersion)
    throw Error(ErrorCode::ParseError, "scene: unsupported schema version");
  World world;
  const auto& w = j.at("world");
  world.hand_eye = pose_from_json(w.at("hand_eye"));
  if (w.contains("ee_start")) world.ee_pose = pose_from_json(w.at("ee_start"));
  world.gripper_width = w.value("gripper_start", 0.08);
  world.depth_noise_sigma = w.value("depth_noise_sigma", 0.0);
  world.rng_seed = w.value("seed", std::uint64_t(0));
  if (w.contains("intrinsics"))
    world.intrinsics = intrinsics_from_json(w.at("intrinsics"));
  if (w.contains("grasp")) {
    const auto& g = w.at("grasp");
    world.grasp.width_margin = g.value("width_margin", world.grasp.width_margin);
    world.grasp.radius = g.value("radius", world.grasp.radius);
    world.grasp.max_width = g.value("max_width", world.grasp.max_width);
  }

  std::set<std::uint16_t> ids;
  for (const auto& oj : j.at("objects")) {
    SceneObject obj;
    const int id = oj.at("id").get<int>();
    if (id <= 0 || id > 0xFFFF)
      throw Error(ErrorCode::ParseError, "scene: object id must be positive");
    obj.id = static_cast<std::uint16_t>(id);
    if (!ids.insert(obj.id).second)
      throw Error(ErrorCode::ParseError, "scene: duplicate object id");
    obj.color_label = oj.at("color_label").get<std::string>();
    obj.graspable = oj.value("graspable", true);
    obj.background = oj.value("background", false);
    obj.pose = pose_from_json(oj.at("pose"));
    if (oj.contains("color")) {
      const auto& c = oj.at("color");
      for (int i = 0; i < 3; ++i)
        obj.base_color[i] = static_cast<std::uint8_t>(c.at(i).get<int>());
    }
    double derived_width = 0.04;
    auto surface = surface_from_json(oj, &derived_width);
    obj.grasp_width = oj.value("grasp_width", derived_width);
    const double tex_scale = oj.value("texture_scale", 0.0025);
    obj.surface = with_texture(std::move(surface), obj.id, tex_scale);
    world.objects.push_back(std::move(obj));
  }
  if (world.objects.empty())
    throw Error(ErrorCode::ParseError, "scene: no objects");
  return world;
}

World load_scene_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "scene: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scene: ") + e.what());
  }
  return load_scene(j);
}

}  // namespace osil::sim
