#include "osil/gicp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gicp_internal.hpp"
#include "osil/error.hpp"
#include "osil/kernels.hpp"

namespace osil {

namespace {

/// Regularized local covariances: eigenvectors from the covariance_k nearest
/// neighbors (plus the point itself), eigenvalues replaced by
/// (plane_epsilon, 1, 1) so the smallest-variance direction acts as the
/// surface normal. Rank-deficient neighborhoods (collinear or collapsed)
/// fall back to isotropic and are counted for the degeneracy check.
std::vector<Eigen::Matrix3d> local_covariances(const Keypoints3d& cloud,
                                               const detail::NnGrid& grid,
                                               int k, double plane_epsilon,
                                               int* degenerate_out) {
  const std::size_t n = cloud.size();
  std::vector<Eigen::Matrix3d> cov(n);
  std::vector<std::uint32_t> near;
  int degenerate = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t take = std::min<std::size_t>(k + 1, n);
    grid.knn(cloud.x[i], cloud.y[i], cloud.z[i], take, &near);

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const std::uint32_t j : near) {
      mean += cloud.point(j);
    }
    mean /= static_cast<double>(take);
    Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
    for (const std::uint32_t j : near) {
      const Eigen::Vector3d d = cloud.point(j) - mean;
      c += d * d.transpose();
    }
    c /= static_cast<double>(take);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(c);
    const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
    if (lambda(1) <= 1e-9 * std::max(lambda(2), 1e-30)) {
      ++degenerate;
      cov[i] = Eigen::Matrix3d::Identity();
      continue;
    }
    const Eigen::Matrix3d v = eig.eigenvectors();
    cov[i] = v * Eigen::Vector3d(plane_epsilon, 1.0, 1.0).asDiagonal() *
             v.transpose();
  }
  *degenerate_out = degenerate;
  return cov;
}

struct Pairing {
  std::vector<std::size_t> source;  // indices into the source cloud
  std::vector<std::size_t> target;  // matched nearest target indices
};

Pairing nearest_pairs(const std::vector<double>& tx,
                      const std::vector<double>& ty,
                      const std::vector<double>& tz,
                      const detail::NnGrid& grid, double max_dist) {
  const std::size_t ns = tx.size();
  Pairing pairs;
  pairs.source.reserve(ns);
  pairs.target.reserve(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const std::ptrdiff_t j = grid.nearest(tx[i], ty[i], tz[i], max_dist);
    if (j >= 0) {
      pairs.source.push_back(i);
      pairs.target.push_back(static_cast<std::size_t>(j));
    }
  }
  return pairs;
}

}  // namespace

namespace detail {

GicpContext make_gicp_context(const Keypoints3d& source,
                              const Keypoints3d& target,
                              const GicpConfig& config) {
  if (config.max_iterations < 1 || config.convergence_eps <= 0.0 ||
      config.correspondence_max_dist <= 0.0 || config.covariance_k < 1 ||
      config.plane_epsilon <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "non-positive registration config");
  }
  const std::size_t need = static_cast<std::size_t>(config.covariance_k) + 1;
  if (source.size() < need || target.size() < need) {
    throw Error(ErrorCode::TooFewPoints,
                "clouds must hold at least covariance_k + 1 points");
  }

  int degenerate_src = 0, degenerate_tgt = 0;
  const NnGrid source_grid(source);
  GicpContext ctx{{}, {}, NnGrid(target)};
  ctx.cov_src = local_covariances(source, source_grid, config.covariance_k,
                                  config.plane_epsilon, &degenerate_src);
  ctx.cov_tgt = local_covariances(target, ctx.target_grid, config.covariance_k,
                                  config.plane_epsilon, &degenerate_tgt);
  if (2 * degenerate_src > static_cast<int>(source.size()) ||
      2 * degenerate_tgt > static_cast<int>(target.size())) {
    throw Error(ErrorCode::DegenerateGeometry,
                "surface normals are undefined for most points");
  }
  return ctx;
}

AlignmentResult gicp_run(const Keypoints3d& source, const Keypoints3d& target,
                         const GicpContext& ctx, const GicpConfig& config,
                         const PoseDelta& initial) {
  const std::vector<Eigen::Matrix3d>& cov_src = ctx.cov_src;
  const std::vector<Eigen::Matrix3d>& cov_tgt = ctx.cov_tgt;

  Pose t = initial.value;
  const std::size_t ns = source.size();
  std::vector<double> px(ns), py(ns), pz(ns);
  double rot_rowmajor[9];
  double trans[3];

  auto transform_source = [&](const Pose& pose) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rot_rowmajor[r * 3 + c] = pose.rotation(r, c);
      trans[r] = pose.translation(r);
    }
    kernels::transform_points(rot_rowmajor, trans, source.x.data(),
                              source.y.data(), source.z.data(), px.data(),
                              py.data(), pz.data(), ns);
  };

  AlignmentResult result;
  bool converged = false;
  double lambda = 1e-6;
  Pairing pairs;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    transform_source(t);
    pairs = nearest_pairs(px, py, pz, ctx.target_grid,
                          config.correspondence_max_dist);
    if (pairs.source.size() < 6) break;  // not enough overlap to constrain

    // Gauss-Newton step on the plane-to-plane objective
    //   sum_i r_i^T (C_tgt + R C_src R^T)^-1 r_i,  r_i = b_i - T a_i
    // with a left-multiplicative se(3) perturbation of T.
    const Eigen::Matrix3d rot = t.rotation;
    std::vector<Eigen::Matrix3d> weights(pairs.source.size());
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    double objective = 0.0;
    // The jacobian is [skew(a) | -I], so the normal-equation blocks reduce
    // to products of w with skew(a): much cheaper than forming 3x6 products.
    for (std::size_t p = 0; p < pairs.source.size(); ++p) {
      const std::size_t i = pairs.source[p];
      const std::size_t j = pairs.target[p];
      const Eigen::Vector3d a(px[i], py[i], pz[i]);
      const Eigen::Vector3d r = target.point(j) - a;
      Eigen::Matrix3d m = rot * cov_src[i] * rot.transpose();
      m += cov_tgt[j];
      m(0, 0) += 1e-12;
      m(1, 1) += 1e-12;
      m(2, 2) += 1e-12;
      // symmetric cofactor inverse
      const double c00 = m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2);
      const double c01 = m(0, 2) * m(1, 2) - m(0, 1) * m(2, 2);
      const double c02 = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
      const double det = m(0, 0) * c00 + m(0, 1) * c01 + m(0, 2) * c02;
      const double inv_det = 1.0 / det;
      Eigen::Matrix3d w;
      w(0, 0) = c00 * inv_det;
      w(0, 1) = w(1, 0) = c01 * inv_det;
      w(0, 2) = w(2, 0) = c02 * inv_det;
      w(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(0, 2)) * inv_det;
      w(1, 2) = w(2, 1) = (m(0, 1) * m(0, 2) - m(0, 0) * m(1, 2)) * inv_det;
      w(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1)) * inv_det;
      weights[p] = w;

      // t1 = w * skew(a); then jac^T w jac = [-skew(a)*t1, -t1^T; -t1, w]
      Eigen::Matrix3d t1;
      t1.col(0) = a.z() * w.col(1) - a.y() * w.col(2);
      t1.col(1) = a.x() * w.col(2) - a.z() * w.col(0);
      t1.col(2) = a.y() * w.col(0) - a.x() * w.col(1);
      Eigen::Matrix3d st1;  // skew(a) * t1
      st1.row(0) = a.y() * t1.row(2) - a.z() * t1.row(1);
      st1.row(1) = a.z() * t1.row(0) - a.x() * t1.row(2);
      st1.row(2) = a.x() * t1.row(1) - a.y() * t1.row(0);
      h.topLeftCorner<3, 3>() -= st1;
      h.topRightCorner<3, 3>() -= t1.transpose();
      h.bottomLeftCorner<3, 3>() -= t1;
      h.bottomRightCorner<3, 3>() += w;

      const Eigen::Vector3d u = w * r;
      g.head<3>() -= a.cross(u);
      g.tail<3>() -= u;
      objective += r.dot(u);
    }

    // Minimum-rotation completion: clouds with a rotational symmetry
    // (sphere caps, surfaces of revolution, flat disks) leave rotation
    // directions unconstrained, so a weak prior on the total rotation
    // selects the smallest-rotation optimum. The relative weight of 1e-4
    // is invisible where the data constrains rotation.
    const double mu = 1e-4 * std::max(h.trace() / 6.0, 1e-12);
    const Eigen::Vector3d omega_total = log_so3(t.rotation);
    h.topLeftCorner<3, 3>() += mu * Eigen::Matrix3d::Identity();
    g.head<3>() += mu * omega_total;
    objective += mu * omega_total.squaredNorm();

    // Levenberg-Marquardt step on the current pairing. Near-planar clouds
    // make h almost singular in the in-plane directions; undamped solves
    // would jump across basins there, so damping grows until the step
    // lowers the objective and no increasing step is ever accepted.
    const double scale = std::max(h.trace() / 6.0, 1e-12);
    Pose t_new;
    Eigen::Matrix<double, 6, 1> delta;
    bool accepted = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const Eigen::Matrix<double, 6, 6> damped =
          h + lambda * scale * Eigen::Matrix<double, 6, 6>::Identity();
      delta = damped.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::Matrix3d dr = exp_so3(delta.head<3>());
      t_new.rotation = dr * t.rotation;
      t_new.translation = dr * t.translation + delta.tail<3>();
      if (rotation_drift(t_new.rotation) > 1e-12) {
        t_new.rotation = orthonormalized(t_new.rotation);
      }

      double objective_new = 0.0;
      for (std::size_t p = 0; p < pairs.source.size(); ++p) {
        const std::size_t i = pairs.source[p];
        const Eigen::Vector3d moved = t_new.apply(source.point(i));
        const Eigen::Vector3d r = target.point(pairs.target[p]) - moved;
        objective_new += r.dot(weights[p] * r);
      }
      objective_new += mu * log_so3(t_new.rotation).squaredNorm();
      if (objective_new <= objective + 1e-15) {
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;  // no descent step on this pairing
    t = t_new;
    lambda = std::max(lambda * 0.25, 1e-9);

    if (delta.norm() < config.convergence_eps) {
      converged = true;
      break;
    }
  }

  transform_source(t);
  pairs = nearest_pairs(px, py, pz, ctx.target_grid,
                        config.correspondence_max_dist);
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < pairs.source.size(); ++p) {
    const std::size_t i = pairs.source[p];
    const Eigen::Vector3d a(px[i], py[i], pz[i]);
    sum_sq += (target.point(pairs.target[p]) - a).squaredNorm();
  }
  result.delta_cam = PoseDelta{t};
  result.inlier_count = static_cast<int>(pairs.source.size());
  result.residual_rms =
      pairs.source.empty()
          ? 0.0
          : std::sqrt(sum_sq / static_cast<double>(pairs.source.size()));
  result.converged = converged;
  return result;
}

}  // namespace detail

AlignmentResult gicp(const Keypoints3d& source, const Keypoints3d& target,
                     const GicpConfig& config, const PoseDelta& initial) {
  const detail::GicpContext ctx =
      detail::make_gicp_context(source, target, config);
  return detail::gicp_run(source, target, ctx, config, initial);
}

}  // namespace osil
