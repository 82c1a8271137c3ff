#include "osil/camera.hpp"

#include <cmath>

#include "osil/error.hpp"
#include "osil/rng.hpp"

namespace osil {

RgbdFrame make_empty_frame(const Intrinsics& intr) {
  RgbdFrame f;
  f.intrinsics = intr;
  const std::size_t n =
      static_cast<std::size_t>(intr.width) * static_cast<std::size_t>(intr.height);
  f.depth.assign(n, 0.0f);
  f.color.assign(n * 3, 0);
  f.instance.assign(n, 0);
  return f;
}

Eigen::Vector3d back_project(const RgbdFrame& frame, int u, int v) {
  if (!frame.in_bounds(u, v))
    throw Error(ErrorCode::InvalidArgument, "back_project: pixel out of bounds");
  const double d = frame.depth_at(u, v);
  if (!(d > 0.0) || !std::isfinite(d))
    throw Error(ErrorCode::InvalidDepth, "back_project: pixel has no depth");
  const Intrinsics& k = frame.intrinsics;
  return {(u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d};
}

Eigen::Vector2d project(const Intrinsics& intr, const Eigen::Vector3d& p) {
  if (!(p.z() > 0.0))
    throw Error(ErrorCode::BehindCamera, "project: point has z <= 0");
  return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

Keypoints3d sample_mask_keypoints(const RgbdFrame& frame, const PixelMask& mask,
                                  std::size_t count, std::uint64_t seed) {
  const std::size_t n = frame.depth.size();
  if (mask.size() != n)
    throw Error(ErrorCode::InvalidArgument,
                "sample_mask_keypoints: mask size mismatch");
  std::vector<std::uint32_t> candidates;
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i] && frame.depth[i] > 0.0f && std::isfinite(frame.depth[i]))
      candidates.push_back(static_cast<std::uint32_t>(i));
  if (candidates.empty())
    throw Error(ErrorCode::EmptyMask,
                "sample_mask_keypoints: no masked pixel with valid depth");

  const std::size_t k = std::min(count, candidates.size());
  Rng rng(seed);
  // Partial Fisher-Yates over the sorted candidate list.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.uniform_index(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }

  Keypoints3d out;
  const int w = frame.intrinsics.width;
  for (std::size_t i = 0; i < k; ++i) {
    const int u = static_cast<int>(candidates[i] % w);
    const int v = static_cast<int>(candidates[i] / w);
    out.push_back(back_project(frame, u, v), u, v);
  }
  return out;
}

}  // namespace osil
