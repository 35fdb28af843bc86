#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lbstab {

using Rng = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

// Seed of the named substream `stream` under `root`. Stages that draw
// randomness (topology, perturbation, users, ...) each take their own stream
// so that changing one stage never shifts the draws of another.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

inline Rng make_stream(std::uint64_t root, std::string_view stream) {
  return Rng(derive_seed(root, stream));
}

}  // namespace lbstab
