#include <cstdlib>
#include <cstring>
#include <string>

#include "kernels_impl.hpp"
#include "lbstab/error.hpp"

namespace lbstab::kernels {

const KernelTable& scalar_table() { return detail::scalar_impl(); }

const KernelTable* avx2_table() {
#if defined(LBSTAB_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &detail::avx2_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(LBSTAB_HAVE_NEON)
  return &detail::neon_impl();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* force = std::getenv("LBSTAB_FORCE_SCALAR");
  if (force != nullptr && std::strcmp(force, "0") != 0 && *force != '\0') return scalar_table();
  if (const auto* t = avx2_table()) return *t;
  if (const auto* t = neon_table()) return *t;
  return scalar_table();
}

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw ContractViolation(std::string(what) + ": size mismatch " + std::to_string(a) +
                            " vs " + std::to_string(b));
}

}  // namespace

const KernelTable& active_table() {
  static const KernelTable& table = select();
  return table;
}

void axpy_into(std::span<double> out, std::span<const double> x, double a,
               std::span<const double> k) {
  require_same(out.size(), x.size(), "axpy_into");
  require_same(out.size(), k.size(), "axpy_into");
  active_table().axpy_into(out.data(), x.data(), a, k.data(), out.size());
}

void rk4_combine(std::span<double> x, double h, std::span<const double> k1,
                 std::span<const double> k2, std::span<const double> k3,
                 std::span<const double> k4) {
  require_same(x.size(), k1.size(), "rk4_combine");
  require_same(x.size(), k2.size(), "rk4_combine");
  require_same(x.size(), k3.size(), "rk4_combine");
  require_same(x.size(), k4.size(), "rk4_combine");
  active_table().rk4_combine(x.data(), h, k1.data(), k2.data(), k3.data(), k4.data(), x.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "dot");
  return active_table().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return active_table().sum(a.data(), a.size()); }

double max_abs_deviation(std::span<const double> x, double center) {
  return active_table().max_abs_deviation(x.data(), center, x.size());
}

void clamp_below(std::span<double> x, double floor) {
  active_table().clamp_below(x.data(), floor, x.size());
}

double quadratic_form(const double* col_major, std::span<const double> x) {
  const std::size_t n = x.size();
  const auto& t = active_table();
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += x[j] * t.dot(col_major + j * n, x.data(), n);
  return acc;
}

}  // namespace lbstab::kernels
