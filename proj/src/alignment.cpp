#include "osil/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "gicp_internal.hpp"
#include "osil/error.hpp"
#include "osil/kernels.hpp"
#include "osil/rng.hpp"

namespace osil {

PoseDelta rigid_fit(const std::vector<Eigen::Vector3d>& a,
                    const std::vector<Eigen::Vector3d>& b) {
  if (a.size() != b.size() || a.size() < 3) {
    throw Error(ErrorCode::TooFewPoints, "rigid fit needs >= 3 paired points");
  }
  const double n = static_cast<double>(a.size());
  Eigen::Vector3d ca = Eigen::Vector3d::Zero();
  Eigen::Vector3d cb = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
  }
  ca /= n;
  cb /= n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    h += (a[i] - ca) * (b[i] - cb).transpose();
  }
  if (h.norm() < 1e-12) return PoseDelta{};  // collapsed sample
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d v = svd.matrixV();
    v.col(2) *= -1.0;
    r = v * svd.matrixU().transpose();
  }
  Pose pose;
  pose.rotation = r;
  pose.translation = cb - r * ca;
  return PoseDelta{pose};
}

namespace {

/// Unit normal of the cloud's best-fit plane, oriented toward the camera
/// (the frame origin). Well-defined for the visible-surface clouds this
/// module consumes; for volumetric clouds it degrades to the least-spread
/// axis, which the orientation check below still handles consistently.
Eigen::Vector3d facing_normal(const Keypoints3d& cloud) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < cloud.size(); ++i) mean += cloud.point(i);
  mean /= static_cast<double>(cloud.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d d = cloud.point(i) - mean;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  Eigen::Vector3d n = eig.eigenvectors().col(0);  // least-spread axis
  if (n.dot(mean) > 0.0) n = -n;                  // point back at the camera
  return n;
}

int count_nn_inliers(const Keypoints3d& source, const detail::NnGrid& grid,
                     const Pose& t, double threshold) {
  const std::size_t ns = source.size();
  std::vector<double> px(ns), py(ns), pz(ns);
  double rot[9], trans[3];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot[r * 3 + c] = t.rotation(r, c);
    trans[r] = t.translation(r);
  }
  kernels::transform_points(rot, trans, source.x.data(), source.y.data(),
                            source.z.data(), px.data(), py.data(), pz.data(),
                            ns);
  int inliers = 0;
  for (std::size_t i = 0; i < ns; ++i) {
    if (grid.any_within(px[i], py[i], pz[i], threshold)) ++inliers;
  }
  return inliers;
}

}  // namespace

AlignmentResult estimate_delta(const Keypoints3d& source,
                               const Keypoints3d& target,
                               const GicpConfig& gicp_cfg,
                               const RansacConfig& ransac_cfg) {
  if (ransac_cfg.hypotheses < 1 || ransac_cfg.sample_size < 3 ||
      ransac_cfg.inlier_threshold <= 0.0 ||
      ransac_cfg.min_inlier_fraction <= 0.0 ||
      ransac_cfg.min_inlier_fraction > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "bad consensus config");
  }
  const std::size_t ns = source.size();
  const std::size_t nt = target.size();
  const std::size_t sample =
      static_cast<std::size_t>(ransac_cfg.sample_size);
  if (ns < sample || ns < static_cast<std::size_t>(gicp_cfg.covariance_k) + 1 ||
      nt < static_cast<std::size_t>(gicp_cfg.covariance_k) + 1) {
    throw Error(ErrorCode::TooFewPoints,
                "clouds too small for consensus estimation");
  }

  // Index proximity is defined over scanline order of the pixels each point
  // was sampled from. Mask sampling shuffles its output, but raster position
  // within the object's silhouette is stable across nearby views, so points
  // at proportional raster ranks roughly correspond. The seeds this produces
  // only need to land in the right basin; the gicp refinement does the rest.
  auto raster_order = [](const Keypoints3d& cloud) {
    std::vector<std::size_t> order(cloud.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(cloud.pixel_v[a], cloud.pixel_u[a], a) <
             std::tie(cloud.pixel_v[b], cloud.pixel_u[b], b);
    });
    return order;
  };
  const std::vector<std::size_t> by_raster_src = raster_order(source);
  const std::vector<std::size_t> by_raster_tgt = raster_order(target);

  // Both clouds are visible surfaces expressed in a camera frame, so their
  // dominant normals face the camera. Least-squares rotations fitted to
  // near-coplanar samples are reflection-ambiguous; a seed that maps the
  // source orientation onto the back of the target surface picked the
  // mirrored branch and is discarded below.
  const Eigen::Vector3d normal_src = facing_normal(source);
  const Eigen::Vector3d normal_tgt = facing_normal(target);

  const detail::GicpContext gicp_ctx =
      detail::make_gicp_context(source, target, gicp_cfg);

  Rng rng(ransac_cfg.seed);
  std::vector<std::size_t> ranks(ns);
  std::vector<Eigen::Vector3d> sample_src(sample), sample_tgt(sample);

  struct Candidate {
    AlignmentResult result;
    int inliers;
    double deviation;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(ransac_cfg.hypotheses);
  int best_inliers = -1;

  for (int h = 0; h < ransac_cfg.hypotheses; ++h) {
    // Partial Fisher-Yates draw of `sample` distinct raster ranks.
    std::iota(ranks.begin(), ranks.end(), std::size_t{0});
    for (std::size_t k = 0; k < sample; ++k) {
      const std::size_t j = k + rng.uniform_index(ns - k);
      std::swap(ranks[k], ranks[j]);
    }
    for (std::size_t k = 0; k < sample; ++k) {
      const std::size_t i = ranks[k];
      const std::size_t j =
          ns > 1 ? (i * (nt - 1) + (ns - 1) / 2) / (ns - 1) : 0;
      sample_src[k] = source.point(by_raster_src[i]);
      sample_tgt[k] = target.point(by_raster_tgt[std::min(j, nt - 1)]);
    }

    const PoseDelta seed_fit = rigid_fit(sample_src, sample_tgt);
    if ((seed_fit.value.rotation * normal_src).dot(normal_tgt) < 0.0) {
      continue;  // mirrored branch of a coplanar fit
    }

    AlignmentResult candidate =
        detail::gicp_run(source, target, gicp_ctx, gicp_cfg, seed_fit);
    const int inliers =
        count_nn_inliers(source, gicp_ctx.target_grid,
                         candidate.delta_cam.value,
                         ransac_cfg.inlier_threshold);
    candidate.inlier_count = inliers;
    best_inliers = std::max(best_inliers, inliers);
    const double deviation = frobenius_deviation(candidate.delta_cam);
    candidates.push_back({std::move(candidate), inliers, deviation});
  }

  if (best_inliers < ransac_cfg.min_inlier_fraction * static_cast<double>(ns)) {
    throw Error(ErrorCode::NoConsensus,
                "best hypothesis explains " +
                    std::to_string(std::max(best_inliers, 0)) + "/" +
                    std::to_string(ns) + " source points");
  }

  // Symmetric objects admit several fits that explain the clouds equally
  // well up to sampling noise (a square face spun by 90 degrees is one).
  // Among hypotheses within a small count margin of the best, return the
  // smallest camera motion: keyframe and current views are taken from
  // nearby poses, so ties go to the delta that moves the camera least.
  const int slack = static_cast<int>(
      std::ceil(0.05 * static_cast<double>(ns)));
  const Candidate* pick = nullptr;
  for (const Candidate& c : candidates) {
    if (c.inliers < best_inliers - slack) continue;
    if (!pick || c.deviation < pick->deviation ||
        (c.deviation == pick->deviation &&
         c.result.residual_rms < pick->result.residual_rms)) {
      pick = &c;
    }
  }
  AlignmentResult out = pick->result;
  out.converged = true;  // consensus reached; gICP refinements carry the pose
  return out;
}

// ---------------------------------------------------------------------------
// Closed-loop alignment
// ---------------------------------------------------------------------------

AlignStepResult align_step(const RgbdFrame& current, const MatchContext& ctx,
                           const KeyframeBundle& bundle,
                           const FeatureBackend& backend, MaskProvider& masks,
                           const Pose& hand_eye, const AlignConfig& align,
                           const GicpConfig& gicp_cfg,
                           const RansacConfig& ransac_cfg) {
  if (bundle.keypoints.empty()) {
    throw Error(ErrorCode::InvalidArgument, "keyframe bundle has no keypoints");
  }

  const MatchSet matches =
      backend.match(bundle.frame, bundle.keypoints, current, ctx);
  if (matches.empty()) {
    throw AlignmentError(AlignStage::Match,
                         "no correspondences for '" + bundle.description + "'");
  }

  Keypoints3d target_kp;
  try {
    target_kp = extract_target_keypoints(matches, current, masks,
                                         align.keypoint_count, align.seed);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyMask || e.code() == ErrorCode::EmptyScene ||
        e.code() == ErrorCode::NoMatches) {
      throw AlignmentError(AlignStage::Mask, e.what());
    }
    throw;
  }

  AlignmentResult est;
  try {
    est = estimate_delta(bundle.keypoints, target_kp, gicp_cfg, ransac_cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoConsensus ||
        e.code() == ErrorCode::TooFewPoints ||
        e.code() == ErrorCode::DegenerateGeometry) {
      throw AlignmentError(AlignStage::Estimate, e.what());
    }
    throw;
  }

  AlignStepResult result;
  result.delta_cam = est.delta_cam;
  result.delta_ee = cam_delta_to_ee(est.delta_cam, hand_eye);
  result.deviation = frobenius_deviation(est.delta_cam);
  result.match_count = static_cast<int>(matches.size());
  result.inlier_count = est.inlier_count;
  result.residual_rms = est.residual_rms;
  return result;
}

AlignLoopResult align_loop(sim::World world, const KeyframeBundle& bundle,
                           const FeatureBackend& backend, MaskProvider& masks,
                           const AlignConfig& align, const GicpConfig& gicp_cfg,
                           const RansacConfig& ransac_cfg) {
  if (align.max_steps < 1 || align.tau <= 0.0 || align.step_scale <= 0.0 ||
      align.step_scale > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "bad alignment loop config");
  }

  AlignLoopResult result;
  for (int step = 0; step < align.max_steps; ++step) {
    const sim::RenderResult view = sim::render_with_meta(world);
    MatchContext ctx;
    ctx.source_meta = bundle.meta ? &*bundle.meta : nullptr;
    ctx.target_meta = &view.meta;
    ctx.target_world = &world;

    const AlignStepResult step_result =
        align_step(view.frame, ctx, bundle, backend, masks, world.hand_eye,
                   align, gicp_cfg, ransac_cfg);
    ++result.iterations;
    result.final_deviation = step_result.deviation;
    if (step_result.deviation < align.tau) {
      result.converged = true;
      break;
    }
    world = sim::apply_action(world,
                              scale_delta(step_result.delta_ee,
                                          align.step_scale),
                              world.gripper_width);
  }
  result.world = std::move(world);
  return result;
}

}  // namespace osil
