#include "osil/kernels.hpp"

#include "osil/error.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#include <immintrin.h>
#endif

namespace osil::kernels {
namespace {

#if (defined(__x86_64__) || defined(_M_X64)) && OSIL_HAVE_AVX2_TU
unsigned long long read_xcr0() {
  unsigned eax = 0, edx = 0;
  __asm__ volatile("xgetbv" : "=a"(eax), "=d"(edx) : "c"(0u));
  return (static_cast<unsigned long long>(edx) << 32) | eax;
}

bool os_supports_avx_state() {
  unsigned eax = 0, ebx = 0, ecx = 0, edx = 0;
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  const bool osxsave = (ecx & (1u << 27)) != 0;
  const bool avx = (ecx & (1u << 28)) != 0;
  if (!osxsave || !avx) return false;
  return (read_xcr0() & 0x6) == 0x6;  // XMM and YMM state enabled
}

bool cpu_reports_avx2() {
  unsigned eax = 0, ebx = 0, ecx = 0, edx = 0;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  return (ebx & (1u << 5)) != 0;
}

bool detect_avx2() { return os_supports_avx_state() && cpu_reports_avx2(); }
#else
bool detect_avx2() { return false; }
#endif

struct Table {
  void (*axpy_f32)(float*, const float*, float, std::size_t);
  void (*transform_points)(const double*, const double*, const double*,
                           const double*, const double*, double*, double*,
                           double*, std::size_t);
  void (*squared_distances)(const double*, const double*, const double*,
                            const double*, double*, std::size_t);
  std::size_t (*argmin)(const double*, std::size_t);
};

constexpr Table kScalarTable = {
    &scalar::axpy_f32,
    &scalar::transform_points,
    &scalar::squared_distances,
    &scalar::argmin,
};

#if (defined(__x86_64__) || defined(_M_X64)) && OSIL_HAVE_AVX2_TU
constexpr Table kAvx2Table = {
    &avx2::axpy_f32,
    &avx2::transform_points,
    &avx2::squared_distances,
    &avx2::argmin,
};
#endif

struct State {
  Isa isa;
  const Table* table;
  State() {
    if (detect_avx2()) {
      isa = Isa::Avx2;
#if (defined(__x86_64__) || defined(_M_X64)) && OSIL_HAVE_AVX2_TU
      table = &kAvx2Table;
#else
      table = &kScalarTable;
#endif
    } else {
      isa = Isa::Scalar;
      table = &kScalarTable;
    }
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

Isa active_isa() { return state().isa; }

bool isa_supported(Isa isa) {
  if (isa == Isa::Scalar) return true;
  return detect_avx2();
}

void force_isa(Isa isa) {
  if (!isa_supported(isa))
    throw Error(ErrorCode::InvalidArgument,
                std::string("isa not supported on this cpu: ") + isa_name(isa));
  State& s = state();
  s.isa = isa;
  if (isa == Isa::Scalar) {
    s.table = &kScalarTable;
  } else {
#if (defined(__x86_64__) || defined(_M_X64)) && OSIL_HAVE_AVX2_TU
    s.table = &kAvx2Table;
#endif
  }
}

void axpy_f32(float* y, const float* x, float a, std::size_t n) {
  state().table->axpy_f32(y, x, a, n);
}

void transform_points(const double* R, const double* t, const double* x,
                      const double* y, const double* z, double* ox, double* oy,
                      double* oz, std::size_t n) {
  state().table->transform_points(R, t, x, y, z, ox, oy, oz, n);
}

void squared_distances(const double q[3], const double* x, const double* y,
                       const double* z, double* out, std::size_t n) {
  state().table->squared_distances(q, x, y, z, out, n);
}

std::size_t argmin(const double* v, std::size_t n) {
  return state().table->argmin(v, n);
}

}  // namespace osil::kernels
