#include "kernels_impl.hpp"

#include <cmath>

namespace lbstab::kernels::detail {
namespace {

void axpy_into(double* out, const double* x, double a, const double* k, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * k[i];
}

void rk4_combine(double* x, double h, const double* k1, const double* k2, const double* k3,
                 const double* k4, std::size_t n) {
  const double h6 = h / 6.0;
  const double h3 = h / 3.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double outer = k1[i] + k4[i];
    const double inner = k2[i] + k3[i];
    x[i] = x[i] + (h6 * outer + h3 * inner);
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double max_abs_deviation(const double* x, double center, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(x[i] - center);
    if (d > m) m = d;
  }
  return m;
}

void clamp_below(double* x, double floor, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] < floor) x[i] = floor;
}

}  // namespace

const KernelTable& scalar_impl() {
  static const KernelTable table{"scalar", axpy_into, rk4_combine, dot, sum, max_abs_deviation,
                                 clamp_below};
  return table;
}

}  // namespace lbstab::kernels::detail
