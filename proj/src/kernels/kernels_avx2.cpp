// Compiled with -mavx2 only; never called unless the CPU reports AVX2.
#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cmath>

namespace lbstab::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

void axpy_into(double* out, const double* x, double a, const double* k, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vk = _mm256_loadu_pd(k + i);
    _mm256_storeu_pd(out + i, _mm256_add_pd(vx, _mm256_mul_pd(va, vk)));
  }
  for (; i < n; ++i) out[i] = x[i] + a * k[i];
}

void rk4_combine(double* x, double h, const double* k1, const double* k2, const double* k3,
                 const double* k4, std::size_t n) {
  const double h6 = h / 6.0;
  const double h3 = h / 3.0;
  const __m256d v6 = _mm256_set1_pd(h6);
  const __m256d v3 = _mm256_set1_pd(h3);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d outer = _mm256_add_pd(_mm256_loadu_pd(k1 + i), _mm256_loadu_pd(k4 + i));
    const __m256d inner = _mm256_add_pd(_mm256_loadu_pd(k2 + i), _mm256_loadu_pd(k3 + i));
    const __m256d inc = _mm256_add_pd(_mm256_mul_pd(v6, outer), _mm256_mul_pd(v3, inner));
    _mm256_storeu_pd(x + i, _mm256_add_pd(_mm256_loadu_pd(x + i), inc));
  }
  for (; i < n; ++i) {
    const double outer = k1[i] + k4[i];
    const double inner = k2[i] + k3[i];
    x[i] = x[i] + (h6 * outer + h3 * inner);
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double max_abs_deviation(const double* x, double center, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d vc = _mm256_set1_pd(center);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_andnot_pd(sign, _mm256_sub_pd(_mm256_loadu_pd(x + i), vc));
    m = _mm256_max_pd(m, d);
  }
  double best = hmax(m);
  for (; i < n; ++i) {
    const double d = std::fabs(x[i] - center);
    if (d > best) best = d;
  }
  return best;
}

void clamp_below(double* x, double floor, std::size_t n) {
  const __m256d vf = _mm256_set1_pd(floor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), vf));
  for (; i < n; ++i)
    if (x[i] < floor) x[i] = floor;
}

}  // namespace

const KernelTable& avx2_impl() {
  static const KernelTable table{"avx2", axpy_into, rk4_combine, dot, sum, max_abs_deviation,
                                 clamp_below};
  return table;
}

}  // namespace lbstab::kernels::detail
