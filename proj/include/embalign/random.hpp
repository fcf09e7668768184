#pragma once

#include <cstdint>
#include <random>

namespace embalign {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

// Counter-based split: derive an independent seed for (stream, index) from a
// master seed. Distinct (stream, index) pairs give unrelated engines.
Seed derive_seed(Seed master, std::uint64_t stream, std::uint64_t index = 0);

inline Rng make_rng(Seed seed) { return Rng(seed); }

}  // namespace embalign
