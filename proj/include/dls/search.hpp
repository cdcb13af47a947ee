#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dls/link_index.hpp"
#include "dls/vecstore.hpp"

namespace dls {

struct SearchResult {
    VectorId id{0};
    float distance{0.0f};

    friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

enum class SpreadOutcome { improved_global, improved_local, exhausted };

struct SearchStats {
    std::uint64_t distance_evals{0};
    std::uint32_t iterations{0};  // descend/spread alternation cycles
};

// Two-stage graph search over a finished LinkIndex. Descend greedily follows
// links of the current closest node toward the query; Spread expands links of
// the current best-k candidates until neither the global closest distance nor
// the heap boundary improves. Every query distance is computed at most once.
//
// A Searcher owns reusable per-query scratch, so one instance serves one
// thread; the index and vectors it reads are shared and immutable.
class Searcher {
public:
    Searcher(const LinkIndex& index, const VectorSet& vectors);

    // Full query: returns the k best candidates found, sorted ascending by
    // (distance, id), length min(k, N). Throws std::invalid_argument on
    // dimension mismatch or k_search < k or k == 0.
    std::vector<SearchResult> knn(std::span<const float> query, std::uint32_t k_search,
                                  std::uint32_t k);

    // Stage-level interface (used by tests and by knn itself).
    void begin(std::span<const float> query, std::uint32_t k_search);
    bool descend_stage();         // true iff the closest distance shrank
    SpreadOutcome spread_stage();
    std::vector<SearchResult> finish(std::uint32_t k);

    VectorId closest_id() const { return closest_id_; }
    float closest_dist() const { return closest_dist_; }
    const SearchStats& stats() const { return stats_; }

private:
    float evaluate(VectorId v);  // memoized distance to the current query
    bool visited(VectorId v) const {
        return visit_mark_[static_cast<std::size_t>(v)] == epoch_;
    }
    void heap_push(VectorId v, float d);  // bounded (distance, id) max-heap
    float heap_boundary() const;          // D_L; +inf while the heap is not full

    const LinkIndex& index_;
    const VectorSet& vectors_;

    std::span<const float> query_;
    std::uint32_t k_search_{0};

    // epoch-stamped memo: distance(q, v) computed at most once per query
    std::vector<std::uint32_t> visit_mark_;
    std::vector<float> memo_dist_;
    std::vector<std::uint32_t> progress_mark_;
    std::vector<std::uint32_t> progress_;  // next unvisited link per heap member
    std::uint32_t epoch_{0};

    std::vector<SearchResult> result_heap_;
    std::vector<SearchResult> spread_order_;  // scratch for heap snapshots
    VectorId closest_id_{0};
    float closest_dist_{0.0f};
    SearchStats stats_;
};

// Convenience wrapper: one-off query with a throwaway Searcher.
std::vector<SearchResult> knn_query(const LinkIndex& index, const VectorSet& vectors,
                                    std::span<const float> query, std::uint32_t k_search,
                                    std::uint32_t k);

}  // namespace dls
