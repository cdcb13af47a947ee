#include "dls/exact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dls {

namespace {

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}

double exact_distance(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

}  // namespace

std::vector<Neighbor> brute_knn(const VectorSet& vectors, std::span<const float> query,
                                std::size_t k) {
    if (k == 0) throw std::invalid_argument("brute_knn: k must be >= 1");
    if (!vectors.empty() && query.size() != vectors.dim())
        throw std::invalid_argument("brute_knn: query dim " + std::to_string(query.size()) +
                                    " != data dim " + std::to_string(vectors.dim()));

    std::vector<Neighbor> all(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        all[i] = Neighbor{static_cast<VectorId>(i), exact_distance(query, vectors[i])};

    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + keep, all.end(), neighbor_less);
    all.resize(keep);
    return all;
}

GroundTruth compute_ground_truth(const VectorSet& base, const VectorSet& queries, std::size_t k) {
    GroundTruth truth;
    truth.k = k;
    truth.queries.resize(queries.size());

    std::vector<Neighbor> all(base.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto qv = queries[q];
        for (std::size_t i = 0; i < base.size(); ++i)
            all[i] = Neighbor{static_cast<VectorId>(i), exact_distance(qv, base[i])};

        const std::size_t keep = std::min(k, all.size());
        std::partial_sort(all.begin(), all.begin() + keep, all.end(), neighbor_less);

        QueryTruth& qt = truth.queries[q];
        qt.ranked.assign(all.begin(), all.begin() + keep);
        if (keep > 0) {
            // accept anything tying the k-th distance within 1e-6 relative
            const double boundary = qt.ranked.back().distance;
            const double limit = boundary + 1e-6 * std::max(boundary, 1e-30);
            for (const Neighbor& n : all)
                if (n.distance <= limit) qt.acceptable.push_back(n.id);
            std::sort(qt.acceptable.begin(), qt.acceptable.end());
        }
    }
    return truth;
}

double recall_at_k(std::span<const VectorId> retrieved, std::span<const VectorId> truth,
                   std::size_t k) {
    if (k == 0) throw std::invalid_argument("recall_at_k: k must be >= 1");
    if (truth.size() < k)
        throw std::invalid_argument("recall_at_k: truth has fewer than k entries");
    std::vector<VectorId> truth_top(truth.begin(), truth.begin() + k);
    std::sort(truth_top.begin(), truth_top.end());

    const std::size_t scan = std::min(k, retrieved.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scan; ++i)
        if (std::binary_search(truth_top.begin(), truth_top.end(), retrieved[i])) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(k);
}

double recall_at_k(std::span<const VectorId> retrieved, const QueryTruth& truth, std::size_t k) {
    if (k == 0) throw std::invalid_argument("recall_at_k: k must be >= 1");
    const std::size_t scan = std::min(k, retrieved.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scan; ++i)
        if (std::binary_search(truth.acceptable.begin(), truth.acceptable.end(), retrieved[i]))
            ++hits;
    // truth shorter than k only when the whole set was ranked (N < k)
    const std::size_t denom = std::min(k, std::max(truth.ranked.size(), std::size_t{1}));
    return 100.0 * static_cast<double>(hits) / static_cast<double>(denom);
}

}  // namespace dls
