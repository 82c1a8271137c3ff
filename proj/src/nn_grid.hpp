#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "osil/camera.hpp"

namespace osil::detail {

/// Uniform-grid index over a fixed cloud for exact nearest-neighbor queries.
/// Cells are laid out dense (CSR) over the cloud's bounding box, so lookups
/// are array reads. Queries walk Chebyshev shells outward from the query
/// cell; a shell at distance r can hold nothing closer than (r-1)*cell, so
/// the walk stops as soon as that bound passes the best hit. Ties resolve
/// to the smallest point index, matching a linear argmin scan.
class NnGrid {
 public:
  explicit NnGrid(const Keypoints3d& cloud) : cloud_(cloud) {
    const std::size_t n = cloud.size();
    double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int a = 0; a < 3; ++a) {
      const auto& c = axis(a);
      const auto [mn, mx] = std::minmax_element(c.begin(), c.end());
      lo[a] = n ? *mn : 0.0;
      hi[a] = n ? *mx : 0.0;
    }
    const double extent =
        std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], 1e-9});
    // Aim for a few points per occupied cell: queries then resolve within
    // one shell of the start cell instead of walking many empty ones.
    const double divisions = std::clamp(
        2.0 * std::cbrt(static_cast<double>(std::max<std::size_t>(n, 1))),
        4.0, 63.0);
    cell_ = extent / divisions;
    for (int a = 0; a < 3; ++a) {
      origin_[a] = lo[a];
      dim_[a] = static_cast<int>((hi[a] - lo[a]) / cell_) + 1;
    }
    const std::size_t cells = static_cast<std::size_t>(dim_[0]) * dim_[1] * dim_[2];
    start_.assign(cells + 1, 0);
    std::vector<int> cell_of(n);
    for (std::size_t i = 0; i < n; ++i) {
      cell_of[i] = cell_id(coord(0, cloud.x[i]), coord(1, cloud.y[i]),
                           coord(2, cloud.z[i]));
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 1; c <= cells; ++c) start_[c] += start_[c - 1];
    item_.resize(n);
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      item_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
    }
  }

  /// Index of the nearest cloud point within max_dist of (x, y, z), or -1.
  std::ptrdiff_t nearest(double x, double y, double z, double max_dist,
                         double* dist_sq_out = nullptr) const {
    const double q[3] = {x, y, z};
    std::ptrdiff_t best = -1;
    double best_sq = max_dist * max_dist;
    const int cq[3] = {coord_raw(0, x), coord_raw(1, y), coord_raw(2, z)};
    const int r_max = static_cast<int>(max_dist / cell_) + 2;
    for (int r = 0; r <= r_max; ++r) {
      if (r >= 2) {
        const double reach = (r - 1) * cell_;
        if (reach * reach > best_sq) break;
      }
      scan_shell(cq, r, q, &best, &best_sq);
    }
    if (best >= 0 && dist_sq_out) *dist_sq_out = best_sq;
    return best;
  }

  /// Exact k nearest neighbors of (x, y, z), appended to out (unsorted).
  /// Ties on distance resolve toward the smaller point index, matching a
  /// partial sort of the brute-force distance list.
  void knn(double x, double y, double z, std::size_t k,
           std::vector<std::uint32_t>* out) const {
    out->clear();
    if (k == 0 || item_.empty()) return;
    const double q[3] = {x, y, z};
    const int cq[3] = {coord_raw(0, x), coord_raw(1, y), coord_raw(2, z)};
    auto lex_less = [](const std::pair<double, std::uint32_t>& a,
                       const std::pair<double, std::uint32_t>& b) {
      return a.first != b.first ? a.first < b.first : a.second < b.second;
    };
    std::vector<std::pair<double, std::uint32_t>> heap;  // max-heap, worst on top
    heap.reserve(k + 1);
    int r_hard = 0;
    for (int a = 0; a < 3; ++a) {
      r_hard = std::max(r_hard, std::max(cq[a], dim_[a] - 1 - cq[a]));
    }
    for (int r = 0; r <= r_hard; ++r) {
      if (r >= 2 && heap.size() == k) {
        const double reach = (r - 1) * cell_;
        if (reach * reach > heap.front().first) break;
      }
      collect_shell(cq, r, q, k, &heap, lex_less);
    }
    for (const auto& e : heap) out->push_back(e.second);
  }

  /// Existence test: stops at the first point inside the radius.
  bool any_within(double x, double y, double z, double radius) const {
    const double q[3] = {x, y, z};
    const double rad_sq = radius * radius;
    const int cq[3] = {coord_raw(0, x), coord_raw(1, y), coord_raw(2, z)};
    const int r_max = static_cast<int>(radius / cell_) + 2;
    for (int r = 0; r <= r_max; ++r) {
      if (r >= 2) {
        const double reach = (r - 1) * cell_;
        if (reach * reach > rad_sq) return false;
      }
      if (shell_has_within(cq, r, q, rad_sq)) return true;
    }
    return false;
  }

 private:
  const std::vector<double>& axis(int a) const {
    return a == 0 ? cloud_.x : a == 1 ? cloud_.y : cloud_.z;
  }

  int coord_raw(int a, double v) const {
    return static_cast<int>(std::floor((v - origin_[a]) / cell_));
  }

  int coord(int a, double v) const {
    return std::clamp(coord_raw(a, v), 0, dim_[a] - 1);
  }

  int cell_id(int ix, int iy, int iz) const {
    return (ix * dim_[1] + iy) * dim_[2] + iz;
  }

  void scan_cell(int ix, int iy, int iz, const double* q, std::ptrdiff_t* best,
                 double* best_sq) const {
    const int c = cell_id(ix, iy, iz);
    for (std::uint32_t k = start_[c]; k < start_[c + 1]; ++k) {
      const std::uint32_t i = item_[k];
      const double dx = cloud_.x[i] - q[0];
      const double dy = cloud_.y[i] - q[1];
      const double dz = cloud_.z[i] - q[2];
      const double d = dx * dx + dy * dy + dz * dz;
      if (d < *best_sq ||
          (d == *best_sq &&
           (*best < 0 || static_cast<std::ptrdiff_t>(i) < *best))) {
        *best_sq = d;
        *best = i;
      }
    }
  }

  template <typename Less>
  void collect_cell(int ix, int iy, int iz, const double* q, std::size_t k,
                    std::vector<std::pair<double, std::uint32_t>>* heap,
                    const Less& lex_less) const {
    const int c = cell_id(ix, iy, iz);
    for (std::uint32_t kk = start_[c]; kk < start_[c + 1]; ++kk) {
      const std::uint32_t i = item_[kk];
      const double dx = cloud_.x[i] - q[0];
      const double dy = cloud_.y[i] - q[1];
      const double dz = cloud_.z[i] - q[2];
      const std::pair<double, std::uint32_t> cand{dx * dx + dy * dy + dz * dz,
                                                  i};
      if (heap->size() < k) {
        heap->push_back(cand);
        std::push_heap(heap->begin(), heap->end(), lex_less);
      } else if (lex_less(cand, heap->front())) {
        std::pop_heap(heap->begin(), heap->end(), lex_less);
        heap->back() = cand;
        std::push_heap(heap->begin(), heap->end(), lex_less);
      }
    }
  }

  template <typename Less>
  void collect_shell(const int cq[3], int r, const double* q, std::size_t k,
                     std::vector<std::pair<double, std::uint32_t>>* heap,
                     const Less& lex_less) const {
    const int xlo = std::max(cq[0] - r, 0), xhi = std::min(cq[0] + r, dim_[0] - 1);
    const int ylo = std::max(cq[1] - r, 0), yhi = std::min(cq[1] + r, dim_[1] - 1);
    const int zlo = std::max(cq[2] - r, 0), zhi = std::min(cq[2] + r, dim_[2] - 1);
    if (xlo > xhi || ylo > yhi || zlo > zhi) return;
    if (r == 0) {
      if (cq[0] >= 0 && cq[0] < dim_[0] && cq[1] >= 0 && cq[1] < dim_[1] &&
          cq[2] >= 0 && cq[2] < dim_[2]) {
        collect_cell(cq[0], cq[1], cq[2], q, k, heap, lex_less);
      }
      return;
    }
    for (int ix = xlo; ix <= xhi; ++ix) {
      const bool x_face = (ix == cq[0] - r || ix == cq[0] + r);
      for (int iy = ylo; iy <= yhi; ++iy) {
        const bool y_face = (iy == cq[1] - r || iy == cq[1] + r);
        if (x_face || y_face) {
          for (int iz = zlo; iz <= zhi; ++iz) {
            if (std::abs(iz - cq[2]) <= r) {
              collect_cell(ix, iy, iz, q, k, heap, lex_less);
            }
          }
        } else {
          for (const int iz : {cq[2] - r, cq[2] + r}) {
            if (iz >= zlo && iz <= zhi) {
              collect_cell(ix, iy, iz, q, k, heap, lex_less);
            }
          }
        }
      }
    }
  }

  bool cell_has_within(int ix, int iy, int iz, const double* q,
                       double rad_sq) const {
    const int c = cell_id(ix, iy, iz);
    for (std::uint32_t k = start_[c]; k < start_[c + 1]; ++k) {
      const std::uint32_t i = item_[k];
      const double dx = cloud_.x[i] - q[0];
      const double dy = cloud_.y[i] - q[1];
      const double dz = cloud_.z[i] - q[2];
      if (dx * dx + dy * dy + dz * dz <= rad_sq) return true;
    }
    return false;
  }

  bool shell_has_within(const int cq[3], int r, const double* q,
                        double rad_sq) const {
    const int xlo = std::max(cq[0] - r, 0), xhi = std::min(cq[0] + r, dim_[0] - 1);
    const int ylo = std::max(cq[1] - r, 0), yhi = std::min(cq[1] + r, dim_[1] - 1);
    const int zlo = std::max(cq[2] - r, 0), zhi = std::min(cq[2] + r, dim_[2] - 1);
    if (xlo > xhi || ylo > yhi || zlo > zhi) return false;
    if (r == 0) {
      return cq[0] >= 0 && cq[0] < dim_[0] && cq[1] >= 0 && cq[1] < dim_[1] &&
             cq[2] >= 0 && cq[2] < dim_[2] &&
             cell_has_within(cq[0], cq[1], cq[2], q, rad_sq);
    }
    for (int ix = xlo; ix <= xhi; ++ix) {
      const bool x_face = (ix == cq[0] - r || ix == cq[0] + r);
      for (int iy = ylo; iy <= yhi; ++iy) {
        const bool y_face = (iy == cq[1] - r || iy == cq[1] + r);
        if (x_face || y_face) {
          for (int iz = zlo; iz <= zhi; ++iz) {
            if (std::abs(iz - cq[2]) <= r &&
                cell_has_within(ix, iy, iz, q, rad_sq)) {
              return true;
            }
          }
        } else {
          for (const int iz : {cq[2] - r, cq[2] + r}) {
            if (iz >= zlo && iz <= zhi && cell_has_within(ix, iy, iz, q, rad_sq)) {
              return true;
            }
          }
        }
      }
    }
    return false;
  }

  /// Visits every in-box cell whose Chebyshev distance from cq equals r.
  void scan_shell(const int cq[3], int r, const double* q, std::ptrdiff_t* best,
                  double* best_sq) const {
    const int xlo = std::max(cq[0] - r, 0), xhi = std::min(cq[0] + r, dim_[0] - 1);
    const int ylo = std::max(cq[1] - r, 0), yhi = std::min(cq[1] + r, dim_[1] - 1);
    const int zlo = std::max(cq[2] - r, 0), zhi = std::min(cq[2] + r, dim_[2] - 1);
    if (xlo > xhi || ylo > yhi || zlo > zhi) return;
    if (r == 0) {
      if (cq[0] == std::clamp(cq[0], 0, dim_[0] - 1) &&
          cq[1] == std::clamp(cq[1], 0, dim_[1] - 1) &&
          cq[2] == std::clamp(cq[2], 0, dim_[2] - 1)) {
        scan_cell(cq[0], cq[1], cq[2], q, best, best_sq);
      }
      return;
    }
    for (int ix = xlo; ix <= xhi; ++ix) {
      const bool x_face = (ix == cq[0] - r || ix == cq[0] + r);
      for (int iy = ylo; iy <= yhi; ++iy) {
        const bool y_face = (iy == cq[1] - r || iy == cq[1] + r);
        if (x_face || y_face) {
          for (int iz = zlo; iz <= zhi; ++iz) {
            if (std::abs(iz - cq[2]) <= r) scan_cell(ix, iy, iz, q, best, best_sq);
          }
        } else {
          for (const int iz : {cq[2] - r, cq[2] + r}) {
            if (iz >= zlo && iz <= zhi) scan_cell(ix, iy, iz, q, best, best_sq);
          }
        }
      }
    }
  }

  const Keypoints3d& cloud_;
  double origin_[3] = {0, 0, 0};
  double cell_ = 1.0;
  int dim_[3] = {1, 1, 1};
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> item_;
};

}  // namespace osil::detail
