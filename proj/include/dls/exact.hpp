#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dls/vecstore.hpp"

namespace dls {

struct Neighbor {
    VectorId id{0};
    double distance{0.0};

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// True k-NN of one query, plus the set of ids acceptable at the k boundary
// (everything whose distance ties the k-th within 1e-6 relative), so recall
// never penalizes legitimate tie permutations.
struct QueryTruth {
    std::vector<Neighbor> ranked;      // ascending (distance, id), length min(k, N)
    std::vector<VectorId> acceptable;  // sorted ids; superset of ranked ids
};

struct GroundTruth {
    std::size_t k{0};
    std::vector<QueryTruth> queries;
};

// Exact top-min(k,N) by scanning every vector. 64-bit accumulation
// throughout; ties ordered by id.
std::vector<Neighbor> brute_knn(const VectorSet& vectors, std::span<const float> query,
                                std::size_t k);

GroundTruth compute_ground_truth(const VectorSet& base, const VectorSet& queries, std::size_t k);

// Plain id-set recall: 100 * |top-k(retrieved) ∩ top-k(truth)| / k. A short
// retrieved list counts the missing tail as misses.
double recall_at_k(std::span<const VectorId> retrieved, std::span<const VectorId> truth,
                   std::size_t k);

// Tie-aware recall against computed ground truth.
double recall_at_k(std::span<const VectorId> retrieved, const QueryTruth& truth, std::size_t k);

}  // namespace dls
