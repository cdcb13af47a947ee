#include "dls/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dls/rng.hpp"

namespace dls {

namespace {

// Box-Muller; one normal deviate per call, deterministic across platforms
double next_normal(SplitMix64& rng) {
    double u1 = rng.next_double();
    while (u1 <= 0.0) u1 = rng.next_double();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

VectorSet generate_vectors(std::size_t n, std::size_t dim, Distribution dist, std::uint64_t seed) {
    if (dim == 0) throw std::invalid_argument("generate_vectors: dim must be >= 1");
    SplitMix64 rng(seed);
    std::vector<float> data(n * dim);

    switch (dist) {
        case Distribution::uniform:
            for (auto& v : data) v = static_cast<float>(rng.next_double());
            break;
        case Distribution::gaussian:
            for (auto& v : data) v = static_cast<float>(next_normal(rng));
            break;
        case Distribution::clustered: {
            const std::size_t n_clusters = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
            std::vector<double> centers(n_clusters * dim);
            for (auto& c : centers) c = rng.next_double() * 10.0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = static_cast<std::size_t>(rng.next_below(n_clusters));
                for (std::size_t j = 0; j < dim; ++j)
                    data[i * dim + j] = static_cast<float>(centers[c * dim + j] + next_normal(rng));
            }
            break;
        }
    }
    return VectorSet(n, dim, std::move(data));
}

}  // namespace dls
