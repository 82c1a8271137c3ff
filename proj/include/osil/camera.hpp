#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace osil {

/// Pinhole intrinsics. Defaults model the simulated wrist camera.
struct Intrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  bool operator==(const Intrinsics&) const = default;
};

/// One RGB-D observation. depth is meters, row-major, 0 = invalid; color is
/// 3 bytes per pixel; instance holds per-pixel object ids, 0 = background.
/// Treated as an immutable value once produced.
struct RgbdFrame {
  Intrinsics intrinsics;
  std::vector<float> depth;
  std::vector<std::uint8_t> color;
  std::vector<std::uint16_t> instance;

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * intrinsics.width + u;
  }
  bool in_bounds(int u, int v) const {
    return u >= 0 && v >= 0 && u < intrinsics.width && v < intrinsics.height;
  }
  float depth_at(int u, int v) const { return depth[index(u, v)]; }
  std::uint16_t instance_at(int u, int v) const { return instance[index(u, v)]; }

  bool operator==(const RgbdFrame&) const = default;
};

RgbdFrame make_empty_frame(const Intrinsics& intr);

/// Binary mask over frame pixels, row-major, nonzero = selected.
using PixelMask = std::vector<std::uint8_t>;

/// Camera-frame 3D keypoints with their source pixels. SoA layout so the
/// SIMD kernels can consume the buffers directly. All z > 0.
struct Keypoints3d {
  std::vector<double> x, y, z;
  std::vector<int> pixel_u, pixel_v;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  Eigen::Vector3d point(std::size_t i) const { return {x[i], y[i], z[i]}; }
  void push_back(const Eigen::Vector3d& p, int u, int v) {
    x.push_back(p.x());
    y.push_back(p.y());
    z.push_back(p.z());
    pixel_u.push_back(u);
    pixel_v.push_back(v);
  }
};

/// Back-projects pixel (u, v): ((u-cx)d/fx, (v-cy)d/fy, d).
/// Throws InvalidDepth when the pixel has no valid depth, InvalidArgument
/// when out of bounds.
Eigen::Vector3d back_project(const RgbdFrame& frame, int u, int v);

/// Projects a camera-frame point to continuous pixel coordinates
/// (fx x/z + cx, fy y/z + cy). Throws BehindCamera when z <= 0.
Eigen::Vector2d project(const Intrinsics& intr, const Eigen::Vector3d& p);

/// Samples up to `count` keypoints uniformly without replacement from the
/// mask's valid-depth pixels. The candidate list is the sorted (row-major)
/// pixel index list, so the result depends only on the selected pixel SET
/// and the seed, not on mask evaluation order. Throws EmptyMask when no
/// masked pixel has valid depth.
Keypoints3d sample_mask_keypoints(const RgbdFrame& frame, const PixelMask& mask,
                                  std::size_t count, std::uint64_t seed);

}  // namespace osil
