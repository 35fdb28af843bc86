#pragma once
// Dense double-precision vector kernels used by the integrator, the
// synchronization metrics and the quadratic forms of the stability module.
//
// Every kernel has a portable scalar reference implementation; AVX2 (x86-64)
// and NEON (aarch64) variants are compiled when available and selected once
// at runtime. Elementwise kernels are bit-identical across variants because
// they perform the same IEEE operations in the same order (no FMA
// contraction). Reductions (dot, sum) differ only by summation order.
//
// Setting LBSTAB_FORCE_SCALAR=1 in the environment pins the scalar table.

#include <cstddef>
#include <span>

namespace lbstab::kernels {

struct KernelTable {
  const char* name;
  // out[i] = x[i] + a * k[i]
  void (*axpy_into)(double* out, const double* x, double a, const double* k, std::size_t n);
  // x[i] += (h/6) * (k1[i] + k4[i]) + (h/3) * (k2[i] + k3[i])
  void (*rk4_combine)(double* x, double h, const double* k1, const double* k2, const double* k3,
                      const double* k4, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  // max_i |x[i] - center|, 0 for n == 0
  double (*max_abs_deviation)(const double* x, double center, std::size_t n);
  // x[i] = max(x[i], floor)
  void (*clamp_below)(double* x, double floor, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Table chosen for this process (best supported, unless forced scalar).
const KernelTable& active_table();

// Span front-ends over active_table(). Sizes must agree; mismatches throw
// ContractViolation.
void axpy_into(std::span<double> out, std::span<const double> x, double a,
               std::span<const double> k);
void rk4_combine(std::span<double> x, double h, std::span<const double> k1,
                 std::span<const double> k2, std::span<const double> k3,
                 std::span<const double> k4);
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
double max_abs_deviation(std::span<const double> x, double center);
void clamp_below(std::span<double> x, double floor);

// x^T M x for a column-major n x n matrix.
double quadratic_form(const double* col_major, std::span<const double> x);

}  // namespace lbstab::kernels
