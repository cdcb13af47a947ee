#pragma once

#include <cstdint>

#include "dls/vecstore.hpp"

namespace dls {

enum class Distribution { uniform, gaussian, clustered };

// Deterministic synthetic datasets for desk-scale benchmarking. uniform:
// iid U[0,1). gaussian: iid N(0,1). clustered: sqrt(n) Gaussian blobs with
// centers in U[0,10)^d and unit spread.
VectorSet generate_vectors(std::size_t n, std::size_t dim, Distribution dist, std::uint64_t seed);

}  // namespace dls
