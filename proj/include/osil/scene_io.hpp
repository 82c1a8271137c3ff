#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "osil/sim.hpp"

namespace osil::sim {

// ============================================================================
// Scene files: versioned JSON describing a World.
//
// {
//   "version": 1,
//   "world": {
//     "hand_eye": [[...]],          4x4 row-major, camera in ee frame
//     "ee_start": [[...]],          4x4 row-major
//     "gripper_start": 0.08,
//     "depth_noise_sigma": 0.002,
//     "seed": 7,
//     "intrinsics": {"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..},
//     "grasp": {"width_margin":..,"radius":..,"max_width":..}
//   },
//   "objects": [
//     {"id":1, "color_label":"red block", "color":[200,40,40],
//      "graspable":true, "background":false, "grasp_width":0.04,
//      "texture_scale":0.0025, "pose":[[...]],
//      "primitive":{"type":"box","size":[..,..,..],"points":6000,"seed":11}}
//     or "points":{"x":[...],"y":[...],"z":[...]} for inline surfaces
//   ]
// }
// ============================================================================

inline constexpr int kSceneSchemaVersion = 1;

std::shared_ptr<const SurfacePoints> sample_box(const Eigen::Vector3d& size,
                                                std::size_t count,
                                                std::uint64_t seed);
std::shared_ptr<const SurfacePoints> sample_cylinder(double radius,
                                                     double height,
                                                     std::size_t count,
                                                     std::uint64_t seed);
std::shared_ptr<const SurfacePoints> sample_sphere(double radius,
                                                   std::size_t count,
                                                   std::uint64_t seed);

/// Fills the per-point procedural texture: FNV hash of (object id, surface
/// coordinates quantized to `scale` meters).
std::shared_ptr<const SurfacePoints> with_texture(
    std::shared_ptr<const SurfacePoints> surface, std::uint16_t id,
    double scale);

World load_scene(const nlohmann::json& j);
World load_scene_file(const std::string& path);

}  // namespace osil::sim
