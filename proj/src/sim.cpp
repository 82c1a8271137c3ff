#include "osil/sim.hpp"

#include <cmath>
#include <limits>

#include "osil/error.hpp"
#include "osil/kernels.hpp"
#include "osil/rng.hpp"

namespace osil::sim {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kNoiseStream = 0xD3AD5EEDULL;
}  // namespace

const SceneObject* World::find(std::uint16_t id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

SceneObject* World::find(std::uint16_t id) {
  for (auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const SceneObject* World::find_by_label(const std::string& label) const {
  for (const auto& o : objects)
    if (o.color_label == label) return &o;
  return nullptr;
}

RenderResult render_with_meta(const World& world) {
  const Intrinsics& k = world.intrinsics;
  const int w = k.width, h = k.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;

  RenderResult out;
  out.frame = make_empty_frame(k);
  out.meta.object.assign(n, 0);
  out.meta.point.assign(n, -1);
  out.meta.true_depth.assign(n, 0.0f);
  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());

  const Pose cam_from_world = inverse(world.camera_pose());

  std::vector<double> cx, cy, cz;
  for (const auto& obj : world.objects) {
    const Pose obj_to_cam = compose(cam_from_world, obj.pose);
    const std::size_t m = obj.surface->size();
    cx.resize(m);
    cy.resize(m);
    cz.resize(m);
    double R[9], t[3];
    Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> rmap(R);
    rmap = obj_to_cam.rotation;
    Eigen::Map<Eigen::Vector3d> tmap(t);
    tmap = obj_to_cam.translation;
    kernels::transform_points(R, t, obj.surface->x.data(), obj.surface->y.data(),
                              obj.surface->z.data(), cx.data(), cy.data(),
                              cz.data(), m);

    for (std::size_t i = 0; i < m; ++i) {
      const double z = cz[i];
      if (!(z > 1e-6)) continue;
      const double u = k.fx * cx[i] / z + k.cx;
      const double v = k.fy * cy[i] / z + k.cy;
      const int iu = static_cast<int>(std::lround(u));
      const int iv = static_cast<int>(std::lround(v));
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int pu = iu + du, pv = iv + dv;
          if (pu < 0 || pv < 0 || pu >= w || pv >= h) continue;
          const std::size_t q = static_cast<std::size_t>(pv) * w + pu;
          if (z < zbuf[q]) {
            zbuf[q] = z;
            out.meta.object[q] = obj.id;
            out.meta.point[q] = static_cast<std::int32_t>(i);
          }
        }
      }
    }
  }

  for (std::size_t q = 0; q < n; ++q) {
    if (out.meta.object[q] == 0) continue;
    const SceneObject* obj = world.find(out.meta.object[q]);
    const std::uint8_t tex = obj->surface->tex[out.meta.point[q]];
    const double f = 0.35 + 0.65 * (tex / 255.0);
    for (int c = 0; c < 3; ++c)
      out.frame.color[q * 3 + c] =
          static_cast<std::uint8_t>(std::lround(obj->base_color[c] * f));
    out.meta.true_depth[q] = static_cast<float>(zbuf[q]);
    out.frame.instance[q] = out.meta.object[q];
  }

  if (world.depth_noise_sigma > 0.0) {
    Rng rng(mix_seed(world.rng_seed, world.frame_counter, kNoiseStream));
    for (std::size_t q = 0; q < n; ++q) {
      if (out.meta.object[q] == 0) continue;
      const double d = zbuf[q] + world.depth_noise_sigma * rng.normal();
      out.frame.depth[q] = static_cast<float>(std::max(d, 1e-4));
    }
  } else {
    for (std::size_t q = 0; q < n; ++q)
      if (out.meta.object[q] != 0)
        out.frame.depth[q] = static_cast<float>(zbuf[q]);
  }
  return out;
}

RgbdFrame render(const World& world) { return render_with_meta(world).frame; }

World apply_action(const World& world, const PoseDelta& delta,
                   double gripper_width) {
  if (!(gripper_width >= 0.0) || gripper_width > world.grasp.max_width)
    throw Error(ErrorCode::WidthOutOfRange,
                "apply_action: gripper width " + std::to_string(gripper_width));

  World next = world;
  const double old_width = world.gripper_width;
  next.ee_pose = compose(world.ee_pose, delta);
  next.gripper_width = gripper_width;
  next.frame_counter = world.frame_counter + 1;

  if (world.held_object) {
    SceneObject* held = next.find(*world.held_object);
    const PoseDelta grip = relative(world.ee_pose, held->pose);
    held->pose = compose(next.ee_pose, grip);
  }

  const Eigen::Vector3d tcp = next.ee_pose.translation;
  for (const auto& obj : next.objects) {
    const double dist = (obj.world_centroid() - tcp).norm();
    auto it = next.min_tcp_distance.find(obj.id);
    if (it == next.min_tcp_distance.end())
      next.min_tcp_distance[obj.id] = dist;
    else
      it->second = std::min(it->second, dist);
  }

  if (next.held_object) {
    const SceneObject* held = next.find(*next.held_object);
    const double thr = held->grasp_width + next.grasp.width_margin;
    if (old_width <= thr && gripper_width > thr) next.held_object.reset();
  } else {
    const SceneObject* best = nullptr;
    double best_dist = next.grasp.radius;
    for (const auto& obj : next.objects) {
      if (!obj.graspable) continue;
      const double thr = obj.grasp_width + next.grasp.width_margin;
      if (!(old_width >= thr && gripper_width < thr)) continue;
      const double dist = (obj.world_centroid() - tcp).norm();
      if (dist <= best_dist) {
        best_dist = dist;
        best = &obj;
      }
    }
    if (best) next.held_object = best->id;
  }
  return next;
}

World perturb(const World& world, double translation_range,
              double rotation_range_deg, std::uint64_t seed) {
  World next = world;
  std::size_t index = 0;
  for (auto& obj : next.objects) {
    const std::uint64_t sub = mix_seed(seed, index++, 0x9E37ULL);
    if (obj.background) continue;
    Rng rng(sub);
    Eigen::Vector3d dt = Eigen::Vector3d::Zero();
    for (int a = 0; a < 2; ++a)
      dt[a] = rng.uniform(-translation_range, translation_range);
    const double yaw =
        rng.uniform(-rotation_range_deg, rotation_range_deg) * kPi / 180.0;
    const Eigen::Matrix3d dR = rot_z(yaw);
    const Eigen::Vector3d c = obj.world_centroid();
    obj.pose.rotation = orthonormalized(dR * obj.pose.rotation);
    obj.pose.translation = c + dR * (obj.pose.translation - c) + dt;
  }
  return next;
}

PixelMask oracle_mask(const RgbdFrame& frame, int seed_u, int seed_v) {
  if (!frame.in_bounds(seed_u, seed_v))
    throw Error(ErrorCode::InvalidArgument, "oracle_mask: seed out of bounds");
  const int w = frame.intrinsics.width, h = frame.intrinsics.height;
  std::uint16_t id = frame.instance_at(seed_u, seed_v);
  if (id == 0) {
    long best = std::numeric_limits<long>::max();
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        if (frame.instance[frame.index(u, v)] == 0) continue;
        const long du = u - seed_u, dv = v - seed_v;
        const long d2 = du * du + dv * dv;
        if (d2 < best) {
          best = d2;
          id = frame.instance[frame.index(u, v)];
        }
      }
    }
    if (id == 0) throw Error(ErrorCode::EmptyScene, "oracle_mask: no objects");
  }
  PixelMask mask(frame.instance.size(), 0);
  for (std::size_t q = 0; q < frame.instance.size(); ++q)
    mask[q] = frame.instance[q] == id ? 1 : 0;
  return mask;
}

std::vector<Correspondence> oracle_correspondences(
    const Keypoints3d& source, const SimFrameMeta& source_meta,
    const RgbdFrame& target, const SimFrameMeta& target_meta,
    const World& target_world, double max_surface_distance) {
  const Intrinsics& k = target.intrinsics;
  const int w = k.width, h = k.height;
  const Pose cam_from_world = inverse(target_world.camera_pose());
  constexpr int kWindow = 3;  // search radius in pixels around the projection

  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const std::size_t sq =
        static_cast<std::size_t>(source.pixel_v[i]) * w + source.pixel_u[i];
    const std::uint16_t obj_id = source_meta.object[sq];
    if (obj_id == 0) continue;
    const std::int32_t pt = source_meta.point[sq];
    const SceneObject* obj = target_world.find(obj_id);
    if (!obj) continue;

    const Eigen::Vector3d local(obj->surface->x[pt], obj->surface->y[pt],
                                obj->surface->z[pt]);
    const Eigen::Vector3d p_cam = cam_from_world.apply(obj->pose.apply(local));
    if (!(p_cam.z() > 1e-6)) continue;
    const double u = k.fx * p_cam.x() / p_cam.z() + k.cx;
    const double v = k.fy * p_cam.y() / p_cam.z() + k.cy;
    const int iu = static_cast<int>(std::lround(u));
    const int iv = static_cast<int>(std::lround(v));

    double best_d2 = max_surface_distance * max_surface_distance;
    int best_u = -1, best_v = -1;
    for (int dv = -kWindow; dv <= kWindow; ++dv) {
      for (int du = -kWindow; du <= kWindow; ++du) {
        const int pu = iu + du, pv = iv + dv;
        if (pu < 0 || pv < 0 || pu >= w || pv >= h) continue;
        const std::size_t q = static_cast<std::size_t>(pv) * w + pu;
        if (target_meta.object[q] != obj_id) continue;
        const double d = target_meta.true_depth[q];
        const Eigen::Vector3d cand((pu - k.cx) * d / k.fx,
                                   (pv - k.cy) * d / k.fy, d);
        const double d2 = (cand - p_cam).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best_u = pu;
          best_v = pv;
        }
      }
    }
    if (best_u >= 0)
      out.push_back({static_cast<std::int32_t>(i), best_u, best_v});
  }
  return out;
}

}  // namespace osil::sim
