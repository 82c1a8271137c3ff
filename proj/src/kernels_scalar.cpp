#include "osil/kernels.hpp"

namespace osil::kernels::scalar {

void axpy_f32(float* y, const float* x, float a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void transform_points(const double* R, const double* t, const double* x,
                      const double* y, const double* z, double* ox, double* oy,
                      double* oz, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double px = x[i], py = y[i], pz = z[i];
    ox[i] = ((R[0] * px + R[1] * py) + R[2] * pz) + t[0];
    oy[i] = ((R[3] * px + R[4] * py) + R[5] * pz) + t[1];
    oz[i] = ((R[6] * px + R[7] * py) + R[8] * pz) + t[2];
  }
}

void squared_distances(const double q[3], const double* x, const double* y,
                       const double* z, double* out, std::size_t n) {
  const double qx = q[0], qy = q[1], qz = q[2];
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - qx;
    const double dy = y[i] - qy;
    const double dz = z[i] - qz;
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

std::size_t argmin(const double* v, std::size_t n) {
  std::size_t best = 0;
  double best_v = v[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] < best_v) {
      best_v = v[i];
      best = i;
    }
  }
  return best;
}

}  // namespace osil::kernels::scalar
