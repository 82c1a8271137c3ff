#include "osil/correspond.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "osil/error.hpp"
#include "osil/kernels.hpp"

namespace osil {

namespace {

std::string canonical_label(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool valid_depth(float d) { return d > 0.0f && std::isfinite(d); }

}  // namespace

// ---------------------------------------------------------------------------
// InstanceMaskProvider
// ---------------------------------------------------------------------------

InstanceMaskProvider::InstanceMaskProvider(
    const std::vector<SimObjectInfo>& objects) {
  for (const SimObjectInfo& info : objects) {
    labels_.emplace_back(canonical_label(info.color_label), info.id);
  }
}

InstanceMaskProvider::InstanceMaskProvider(const sim::World& world) {
  for (const sim::SceneObject& obj : world.objects) {
    labels_.emplace_back(canonical_label(obj.color_label), obj.id);
  }
}

PixelMask InstanceMaskProvider::mask_for_description(
    const RgbdFrame& frame, const std::string& description) {
  const std::string wanted = canonical_label(description);
  std::uint16_t id = 0;
  for (const auto& [label, object_id] : labels_) {
    if (label == wanted) id = object_id;
  }
  PixelMask mask(frame.instance.size(), 0);
  if (id != 0) {
    for (std::size_t i = 0; i < frame.instance.size(); ++i) {
      mask[i] = frame.instance[i] == id ? 1 : 0;
    }
  }
  return mask;  // all-zero for unknown descriptions; sampling raises EmptyMask
}

PixelMask InstanceMaskProvider::mask_at_seed(const RgbdFrame& frame, int u,
                                             int v) {
  return sim::oracle_mask(frame, u, v);
}

// ---------------------------------------------------------------------------
// Oracle backend
// ---------------------------------------------------------------------------

BackendInfo OracleBackend::info() const {
  return {"oracle", 0, /*needs_ground_truth=*/true};
}

MatchSet OracleBackend::match(const RgbdFrame& /*source_frame*/,
                              const Keypoints3d& source,
                              const RgbdFrame& target,
                              const MatchContext& ctx) const {
  if (!ctx.source_meta || !ctx.target_meta || !ctx.target_world) {
    throw Error(ErrorCode::InvalidArgument,
                "oracle matching needs render metadata for both frames");
  }
  std::vector<sim::Correspondence> truth = sim::oracle_correspondences(
      source, *ctx.source_meta, target, *ctx.target_meta, *ctx.target_world,
      max_surface_distance_);
  MatchSet out;
  out.pairs.reserve(truth.size());
  for (const sim::Correspondence& c : truth) {
    out.pairs.push_back({c.source_index, c.target_u, c.target_v, 1.0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// ZNCC backend
// ---------------------------------------------------------------------------

ZnccBackend::ZnccBackend(const ZnccConfig& config) : config_(config) {
  if (config_.patch < 3 || config_.patch % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "patch size must be odd and >= 3");
  }
}

BackendInfo ZnccBackend::info() const {
  return {"zncc", config_.patch, /*needs_ground_truth=*/false};
}

namespace {

std::vector<float> gray_image(const RgbdFrame& frame) {
  const std::size_t n = frame.depth.size();
  std::vector<float> gray(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* c = frame.color.data() + 3 * i;
    gray[i] = (float(c[0]) + float(c[1]) + float(c[2])) * (1.0f / 3.0f);
  }
  return gray;
}

/// Per-pixel patch mean-removed L2 norm, via summed-area tables.
struct PatchStats {
  std::vector<double> sum, sumsq;  // (w+1) x (h+1) summed-area tables
  int w = 0, h = 0, half = 0, area = 0;

  PatchStats(const std::vector<float>& gray, int width, int height, int patch)
      : w(width), h(height), half(patch / 2), area(patch * patch) {
    sum.assign(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    sumsq.assign(sum.size(), 0.0);
    for (int v = 0; v < h; ++v) {
      double row = 0.0, rowsq = 0.0;
      for (int u = 0; u < w; ++u) {
        const double g = gray[static_cast<std::size_t>(v) * w + u];
        row += g;
        rowsq += g * g;
        const std::size_t i = static_cast<std::size_t>(v + 1) * (w + 1) + u + 1;
        const std::size_t up = static_cast<std::size_t>(v) * (w + 1) + u + 1;
        sum[i] = sum[up] + row;
        sumsq[i] = sumsq[up] + rowsq;
      }
    }
  }

  /// sqrt(sum (g - mean)^2) over the patch centered at (u, v).
  double centered_norm(int u, int v) const {
    const int u0 = u - half, v0 = v - half;
    const int u1 = u + half + 1, v1 = v + half + 1;
    auto rect = [&](const std::vector<double>& t) {
      return t[std::size_t(v1) * (w + 1) + u1] -
             t[std::size_t(v0) * (w + 1) + u1] -
             t[std::size_t(v1) * (w + 1) + u0] +
             t[std::size_t(v0) * (w + 1) + u0];
    };
    const double s = rect(sum);
    const double sq = rect(sumsq);
    return std::sqrt(std::max(0.0, sq - s * s / area));
  }
};

}  // namespace

MatchSet ZnccBackend::match(const RgbdFrame& source_frame,
                            const Keypoints3d& source, const RgbdFrame& target,
                            const MatchContext& /*ctx*/) const {
  if (source.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no source keypoints to match");
  }
  const int patch = config_.patch;
  const int half = patch / 2;
  const int sw = source_frame.intrinsics.width;
  const int sh = source_frame.intrinsics.height;
  const int tw = target.intrinsics.width;
  const int th = target.intrinsics.height;
  const std::size_t tn = static_cast<std::size_t>(tw) * th;

  const std::vector<float> source_gray = gray_image(source_frame);
  const std::vector<float> target_gray = gray_image(target);
  const PatchStats target_stats(target_gray, tw, th, patch);

  std::vector<float> kernel(static_cast<std::size_t>(patch) * patch);
  std::vector<float> corr(tn);

  MatchSet out;
  for (std::size_t k = 0; k < source.size(); ++k) {
    const int cu = source.pixel_u[k];
    const int cv = source.pixel_v[k];
    if (cu < half || cv < half || cu >= sw - half || cv >= sh - half) {
      continue;  // descriptor window leaves the keyframe
    }

    // Mean-removed source patch; its norm normalizes the correlation.
    double mean = 0.0;
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx) {
        mean += source_gray[std::size_t(cv + dy) * sw + (cu + dx)];
      }
    }
    mean /= patch * patch;
    double norm_sq = 0.0;
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx) {
        const double g =
            source_gray[std::size_t(cv + dy) * sw + (cu + dx)] - mean;
        kernel[std::size_t(dy + half) * patch + (dx + half)] =
            static_cast<float>(g);
        norm_sq += g * g;
      }
    }
    const double kernel_norm = std::sqrt(norm_sq);
    if (kernel_norm < 1e-6) continue;  // textureless patch, nothing to match

    // Cross-correlation of the whole target image with the patch: one
    // shifted axpy per tap, so the hot loop is the vectorized kernel.
    std::fill(corr.begin(), corr.end(), 0.0f);
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx) {
        const float a = kernel[std::size_t(dy + half) * patch + (dx + half)];
        if (a == 0.0f) continue;
        const std::ptrdiff_t offset = std::ptrdiff_t(dy) * tw + dx;
        const std::size_t lo = offset < 0 ? std::size_t(-offset) : 0;
        const std::size_t hi = offset > 0 ? tn - std::size_t(offset) : tn;
        kernels::axpy_f32(corr.data() + lo, target_gray.data() + lo + offset,
                          a, hi - lo);
      }
    }

    // Winner-take-all scan over admissible centers, lowest (v, u) on ties.
    double best_score = -2.0;
    int best_u = -1, best_v = -1;
    for (int v = half; v < th - half; ++v) {
      for (int u = half; u < tw - half; ++u) {
        const std::size_t i = std::size_t(v) * tw + u;
        if (config_.valid_depth_only && !valid_depth(target.depth[i])) {
          continue;
        }
        const double den = target_stats.centered_norm(u, v);
        if (den < 1e-6) continue;
        const double score = corr[i] / (kernel_norm * den);
        if (score > best_score) {
          best_score = score;
          best_u = u;
          best_v = v;
        }
      }
    }
    if (best_u < 0) continue;
    best_score = std::min(best_score, 1.0);
    if (best_score < config_.score_min) continue;
    out.pairs.push_back(
        {static_cast<std::int32_t>(k), best_u, best_v, best_score});
  }
  return out;
}

std::unique_ptr<FeatureBackend> make_backend(const std::string& name,
                                             const ZnccConfig& zncc) {
  if (name == "oracle") return std::make_unique<OracleBackend>();
  if (name == "zncc") return std::make_unique<ZnccBackend>(zncc);
  throw Error(ErrorCode::InvalidArgument,
              "unknown feature backend '" + name + "'");
}

// ---------------------------------------------------------------------------
// Keypoint extraction chain
// ---------------------------------------------------------------------------

Keypoints3d extract_source_keypoints(const RgbdFrame& keyframe,
                                     const std::string& description,
                                     MaskProvider& masks, std::size_t count,
                                     std::uint64_t seed) {
  const PixelMask mask = masks.mask_for_description(keyframe, description);
  return sample_mask_keypoints(keyframe, mask, count, seed);
}

Keypoints3d extract_target_keypoints(const MatchSet& matches,
                                     const RgbdFrame& target,
                                     MaskProvider& masks, std::size_t count,
                                     std::uint64_t seed) {
  if (matches.empty()) {
    throw Error(ErrorCode::NoMatches, "no correspondences to seed the mask");
  }
  double su = 0.0, sv = 0.0;
  for (const MatchPair& m : matches.pairs) {
    su += m.target_u;
    sv += m.target_v;
  }
  const double n = static_cast<double>(matches.size());
  int seed_u = static_cast<int>(std::llround(su / n));
  int seed_v = static_cast<int>(std::llround(sv / n));
  seed_u = std::clamp(seed_u, 0, target.intrinsics.width - 1);
  seed_v = std::clamp(seed_v, 0, target.intrinsics.height - 1);
  const PixelMask mask = masks.mask_at_seed(target, seed_u, seed_v);
  return sample_mask_keypoints(target, mask, count, seed);
}

}  // namespace osil
