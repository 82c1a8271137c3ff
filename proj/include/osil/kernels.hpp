#pragma once

#include <cstddef>
#include <string>

// ============================================================================
// Data-parallel kernels behind runtime ISA dispatch.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant selected once at startup from CPUID. Variants are bit-exact with
// the scalar reference: no FMA contraction, identical association order, so
// pipeline results do not depend on which ISA was picked.
// ============================================================================

namespace osil::kernels {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);

/// ISA selected for this process (CPUID-detected, may be overridden).
Isa active_isa();

/// True if the running CPU (and OS state) can execute the given ISA.
bool isa_supported(Isa isa);

/// Force a specific ISA (tests, CLI flag). Throws if unsupported.
void force_isa(Isa isa);

// ---------------------------------------------------------------------------
// Kernels. SoA layout for point buffers.
// ---------------------------------------------------------------------------

/// y[i] += a * x[i]
void axpy_f32(float* y, const float* x, float a, std::size_t n);

/// (ox,oy,oz)[i] = R * (x,y,z)[i] + t with R row-major 3x3.
void transform_points(const double* R, const double* t, const double* x,
                      const double* y, const double* z, double* ox, double* oy,
                      double* oz, std::size_t n);

/// out[i] = |q - p_i|^2
void squared_distances(const double q[3], const double* x, const double* y,
                       const double* z, double* out, std::size_t n);

/// Index of the smallest value; lowest index wins ties. n must be > 0.
std::size_t argmin(const double* v, std::size_t n);

namespace scalar {
void axpy_f32(float* y, const float* x, float a, std::size_t n);
void transform_points(const double* R, const double* t, const double* x,
                      const double* y, const double* z, double* ox, double* oy,
                      double* oz, std::size_t n);
void squared_distances(const double q[3], const double* x, const double* y,
                       const double* z, double* out, std::size_t n);
std::size_t argmin(const double* v, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void axpy_f32(float* y, const float* x, float a, std::size_t n);
void transform_points(const double* R, const double* t, const double* x,
                      const double* y, const double* z, double* ox, double* oy,
                      double* oz, std::size_t n);
void squared_distances(const double q[3], const double* x, const double* y,
                       const double* z, double* out, std::size_t n);
std::size_t argmin(const double* v, std::size_t n);
}  // namespace avx2
#endif

}  // namespace osil::kernels
