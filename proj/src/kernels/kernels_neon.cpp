#include "kernels_impl.hpp"

#include <arm_neon.h>

#include <cmath>

namespace lbstab::kernels::detail {
namespace {

void axpy_into(double* out, const double* x, double a, const double* k, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(va, vld1q_f64(k + i))));
  for (; i < n; ++i) out[i] = x[i] + a * k[i];
}

void rk4_combine(double* x, double h, const double* k1, const double* k2, const double* k3,
                 const double* k4, std::size_t n) {
  const double h6 = h / 6.0;
  const double h3 = h / 3.0;
  const float64x2_t v6 = vdupq_n_f64(h6);
  const float64x2_t v3 = vdupq_n_f64(h3);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t outer = vaddq_f64(vld1q_f64(k1 + i), vld1q_f64(k4 + i));
    const float64x2_t inner = vaddq_f64(vld1q_f64(k2 + i), vld1q_f64(k3 + i));
    const float64x2_t inc = vaddq_f64(vmulq_f64(v6, outer), vmulq_f64(v3, inner));
    vst1q_f64(x + i, vaddq_f64(vld1q_f64(x + i), inc));
  }
  for (; i < n; ++i) {
    const double outer = k1[i] + k4[i];
    const double inner = k2[i] + k3[i];
    x[i] = x[i] + (h6 * outer + h3 * inner);
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

double max_abs_deviation(const double* x, double center, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(center);
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabsq_f64(vsubq_f64(vld1q_f64(x + i), vc)));
  double best = vmaxvq_f64(m);
  for (; i < n; ++i) {
    const double d = std::fabs(x[i] - center);
    if (d > best) best = d;
  }
  return best;
}

void clamp_below(double* x, double floor, std::size_t n) {
  const float64x2_t vf = vdupq_n_f64(floor);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmaxq_f64(vld1q_f64(x + i), vf));
  for (; i < n; ++i)
    if (x[i] < floor) x[i] = floor;
}

}  // namespace

const KernelTable& neon_impl() {
  static const KernelTable table{"neon", axpy_into, rk4_combine, dot, sum, max_abs_deviation,
                                 clamp_below};
  return table;
}

}  // namespace lbstab::kernels::detail
