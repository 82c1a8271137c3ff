#include <immintrin.h>

#include "osil/kernels.hpp"

// Compiled with -mavx2 only (no -mfma): mul/add stay separate instructions,
// matching the scalar reference bit for bit.

namespace osil::kernels::avx2 {

void axpy_f32(float* y, const float* x, float a, std::size_t n) {
  const __m256 av = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 xv = _mm256_loadu_ps(x + i);
    const __m256 yv = _mm256_loadu_ps(y + i);
    _mm256_storeu_ps(y + i, _mm256_add_ps(yv, _mm256_mul_ps(av, xv)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void transform_points(const double* R, const double* t, const double* x,
                      const double* y, const double* z, double* ox, double* oy,
                      double* oz, std::size_t n) {
  const __m256d r0 = _mm256_set1_pd(R[0]), r1 = _mm256_set1_pd(R[1]),
                r2 = _mm256_set1_pd(R[2]), r3 = _mm256_set1_pd(R[3]),
                r4 = _mm256_set1_pd(R[4]), r5 = _mm256_set1_pd(R[5]),
                r6 = _mm256_set1_pd(R[6]), r7 = _mm256_set1_pd(R[7]),
                r8 = _mm256_set1_pd(R[8]);
  const __m256d t0 = _mm256_set1_pd(t[0]), t1 = _mm256_set1_pd(t[1]),
                t2 = _mm256_set1_pd(t[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d px = _mm256_loadu_pd(x + i);
    const __m256d py = _mm256_loadu_pd(y + i);
    const __m256d pz = _mm256_loadu_pd(z + i);
    __m256d s;
    s = _mm256_add_pd(_mm256_mul_pd(r0, px), _mm256_mul_pd(r1, py));
    s = _mm256_add_pd(s, _mm256_mul_pd(r2, pz));
    _mm256_storeu_pd(ox + i, _mm256_add_pd(s, t0));
    s = _mm256_add_pd(_mm256_mul_pd(r3, px), _mm256_mul_pd(r4, py));
    s = _mm256_add_pd(s, _mm256_mul_pd(r5, pz));
    _mm256_storeu_pd(oy + i, _mm256_add_pd(s, t1));
    s = _mm256_add_pd(_mm256_mul_pd(r6, px), _mm256_mul_pd(r7, py));
    s = _mm256_add_pd(s, _mm256_mul_pd(r8, pz));
    _mm256_storeu_pd(oz + i, _mm256_add_pd(s, t2));
  }
  for (; i < n; ++i) {
    const double px = x[i], py = y[i], pz = z[i];
    ox[i] = ((R[0] * px + R[1] * py) + R[2] * pz) + t[0];
    oy[i] = ((R[3] * px + R[4] * py) + R[5] * pz) + t[1];
    oz[i] = ((R[6] * px + R[7] * py) + R[8] * pz) + t[2];
  }
}

void squared_distances(const double q[3], const double* x, const double* y,
                       const double* z, double* out, std::size_t n) {
  const __m256d qx = _mm256_set1_pd(q[0]);
  const __m256d qy = _mm256_set1_pd(q[1]);
  const __m256d qz = _mm256_set1_pd(q[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i), qx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i), qy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(z + i), qz);
    const __m256d s = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
        _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out + i, s);
  }
  for (; i < n; ++i) {
    const double dx = x[i] - q[0];
    const double dy = y[i] - q[1];
    const double dz = z[i] - q[2];
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

std::size_t argmin(const double* v, std::size_t n) {
  std::size_t best = 0;
  double best_v = v[0];
  std::size_t i = 0;
  if (n >= 8) {
    __m256d bv = _mm256_loadu_pd(v);
    __m256d bi = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    __m256d idx = bi;
    const __m256d four = _mm256_set1_pd(4.0);
    for (i = 4; i + 4 <= n; i += 4) {
      idx = _mm256_add_pd(idx, four);
      const __m256d val = _mm256_loadu_pd(v + i);
      const __m256d lt = _mm256_cmp_pd(val, bv, _CMP_LT_OQ);
      bv = _mm256_blendv_pd(bv, val, lt);
      bi = _mm256_blendv_pd(bi, idx, lt);
    }
    alignas(32) double vals[4], idxs[4];
    _mm256_store_pd(vals, bv);
    _mm256_store_pd(idxs, bi);
    best_v = vals[0];
    best = static_cast<std::size_t>(idxs[0]);
    for (int k = 1; k < 4; ++k) {
      const std::size_t cand = static_cast<std::size_t>(idxs[k]);
      if (vals[k] < best_v || (vals[k] == best_v && cand < best)) {
        best_v = vals[k];
        best = cand;
      }
    }
  }
  for (; i < n; ++i) {
    if (v[i] < best_v) {
      best_v = v[i];
      best = i;
    }
  }
  return best;
}

}  // namespace osil::kernels::avx2
