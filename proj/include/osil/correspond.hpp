#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "osil/camera.hpp"
#include "osil/sim.hpp"
#include "osil/trajectory.hpp"

namespace osil {

// ---------------------------------------------------------------------------
// Segmentation abstraction: where a deployed system would call a promptable
// segmenter, the simulator-backed provider reads the frame's instance layer.
// ---------------------------------------------------------------------------

class MaskProvider {
 public:
  virtual ~MaskProvider() = default;

  /// Mask of the object matching a text description (keyframe side). An
  /// unknown description yields an all-zero mask.
  virtual PixelMask mask_for_description(const RgbdFrame& frame,
                                         const std::string& description) = 0;

  /// Mask of the object at (or, for a background seed, nearest to) a seed
  /// pixel (target side).
  virtual PixelMask mask_at_seed(const RgbdFrame& frame, int u, int v) = 0;
};

/// Resolves descriptions against the scene's color labels and seeds against
/// the per-pixel instance ids.
class InstanceMaskProvider : public MaskProvider {
 public:
  explicit InstanceMaskProvider(const std::vector<SimObjectInfo>& objects);
  explicit InstanceMaskProvider(const sim::World& world);

  PixelMask mask_for_description(const RgbdFrame& frame,
                                 const std::string& description) override;
  PixelMask mask_at_seed(const RgbdFrame& frame, int u, int v) override;

 private:
  std::vector<std::pair<std::string, std::uint16_t>> labels_;  // lowercased
};

// ---------------------------------------------------------------------------
// Feature matching
// ---------------------------------------------------------------------------

struct MatchPair {
  std::int32_t source_index = 0;  // into the source keypoint set
  int target_u = 0;
  int target_v = 0;
  double score = 0.0;  // in [0, 1]
};

struct MatchSet {
  std::vector<MatchPair> pairs;

  bool empty() const { return pairs.empty(); }
  std::size_t size() const { return pairs.size(); }
};

/// Simulator ground truth threaded through match() for the oracle backend;
/// classical backends ignore it and it stays null outside the simulator.
struct MatchContext {
  const sim::SimFrameMeta* source_meta = nullptr;
  const sim::SimFrameMeta* target_meta = nullptr;
  const sim::World* target_world = nullptr;
};

struct BackendInfo {
  std::string name;
  int patch = 0;                     // descriptor window, 0 = not patch-based
  bool needs_ground_truth = false;   // requires MatchContext sim fields
};

/// Correspondence model behind the pipeline: one best target pixel per
/// source keypoint (or none). Implementations must be pure functions of
/// their inputs so matching is deterministic and order-independent.
class FeatureBackend {
 public:
  virtual ~FeatureBackend() = default;
  virtual BackendInfo info() const = 0;
  virtual MatchSet match(const RgbdFrame& source_frame,
                         const Keypoints3d& source, const RgbdFrame& target,
                         const MatchContext& ctx) const = 0;
};

/// Ground-truth matcher: follows each source keypoint's physical surface
/// point through the render metadata. Every emitted match scores 1.0.
class OracleBackend : public FeatureBackend {
 public:
  explicit OracleBackend(double max_surface_distance = 0.01)
      : max_surface_distance_(max_surface_distance) {}
  BackendInfo info() const override;
  MatchSet match(const RgbdFrame& source_frame, const Keypoints3d& source,
                 const RgbdFrame& target,
                 const MatchContext& ctx) const override;

 private:
  double max_surface_distance_;
};

struct ZnccConfig {
  int patch = 11;           // odd window edge length, pixels
  double score_min = 0.6;   // matches scoring below are dropped
  bool valid_depth_only = true;  // restrict candidates to pixels with depth
};

/// Classical patch matcher: zero-normalized cross-correlation of intensity
/// patches, winner-take-all over the whole target image (ties resolved to
/// the lowest (v, u) pixel).
class ZnccBackend : public FeatureBackend {
 public:
  explicit ZnccBackend(const ZnccConfig& config = {});
  BackendInfo info() const override;
  MatchSet match(const RgbdFrame& source_frame, const Keypoints3d& source,
                 const RgbdFrame& target,
                 const MatchContext& ctx) const override;

 private:
  ZnccConfig config_;
};

/// "oracle" or "zncc"; anything else throws InvalidArgument.
std::unique_ptr<FeatureBackend> make_backend(const std::string& name,
                                             const ZnccConfig& zncc = {});

// ---------------------------------------------------------------------------
// Keypoint extraction chain
// ---------------------------------------------------------------------------

/// Keyframe side: description -> mask -> uniform sample -> back-projection.
/// Propagates EmptyMask when the description selects no valid-depth pixel.
Keypoints3d extract_source_keypoints(const RgbdFrame& keyframe,
                                     const std::string& description,
                                     MaskProvider& masks, std::size_t count,
                                     std::uint64_t seed);

/// Target side: the matched pixels' centroid (rounded to the nearest pixel)
/// seeds the segmenter, and the resulting mask is sampled like the source.
/// Throws NoMatches on an empty match set, EmptyMask downstream.
Keypoints3d extract_target_keypoints(const MatchSet& matches,
                                     const RgbdFrame& target,
                                     MaskProvider& masks, std::size_t count,
                                     std::uint64_t seed);

}  // namespace osil
