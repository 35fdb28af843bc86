#pragma once
// Internal: per-variant kernel tables.

#include "lbstab/kernels.hpp"

namespace lbstab::kernels::detail {

const KernelTable& scalar_impl();
#if defined(LBSTAB_HAVE_AVX2)
const KernelTable& avx2_impl();
#endif
#if defined(LBSTAB_HAVE_NEON)
const KernelTable& neon_impl();
#endif

}  // namespace lbstab::kernels::detail
