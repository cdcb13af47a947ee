#include "dls/search.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace dls {

namespace {
constexpr float kInf = std::numeric_limits<float>::infinity();

// (distance, id) lexicographic
bool result_less(const SearchResult& a, const SearchResult& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}
}  // namespace

Searcher::Searcher(const LinkIndex& index, const VectorSet& vectors)
    : index_(index), vectors_(vectors) {
    if (index.count != vectors.size())
        throw std::invalid_argument("Searcher: index size " + std::to_string(index.count) +
                                    " != vector set size " + std::to_string(vectors.size()));
    visit_mark_.assign(vectors.size(), 0);
    progress_mark_.assign(vectors.size(), 0);
    progress_.assign(vectors.size(), 0);
    memo_dist_.resize(vectors.size());
}

float Searcher::evaluate(VectorId v) {
    const auto vi = static_cast<std::size_t>(v);
    visit_mark_[vi] = epoch_;
    const float d = distance(query_, vectors_[vi]);
    memo_dist_[vi] = d;
    ++stats_.distance_evals;
    return d;
}

float Searcher::heap_boundary() const {
    return result_heap_.size() < k_search_ ? kInf : result_heap_.front().distance;
}

void Searcher::heap_push(VectorId v, float d) {
    const SearchResult entry{v, d};
    if (result_heap_.size() < k_search_) {
        result_heap_.push_back(entry);
        std::size_t pos = result_heap_.size() - 1;
        while (pos > 0) {
            const std::size_t parent = (pos - 1) / 2;
            if (!result_less(result_heap_[parent], result_heap_[pos])) break;
            std::swap(result_heap_[parent], result_heap_[pos]);
            pos = parent;
        }
        return;
    }
    if (!result_less(entry, result_heap_.front())) return;  // not better than the boundary
    result_heap_.front() = entry;
    std::size_t pos = 0;
    const std::size_t n = result_heap_.size();
    for (;;) {
        std::size_t best = pos;
        const std::size_t l = 2 * pos + 1, r = 2 * pos + 2;
        if (l < n && result_less(result_heap_[best], result_heap_[l])) best = l;
        if (r < n && result_less(result_heap_[best], result_heap_[r])) best = r;
        if (best == pos) break;
        std::swap(result_heap_[best], result_heap_[pos]);
        pos = best;
    }
}

void Searcher::begin(std::span<const float> query, std::uint32_t k_search) {
    if (query.size() != vectors_.dim())
        throw std::invalid_argument("knn_query: query dim " + std::to_string(query.size()) +
                                    " != data dim " + std::to_string(vectors_.dim()));
    if (k_search == 0) throw std::invalid_argument("knn_query: k_search must be >= 1");

    query_ = query;
    k_search_ = k_search;
    ++epoch_;
    result_heap_.clear();
    stats_ = SearchStats{};

    const VectorId root = index_.root_id;
    const float d = evaluate(root);
    heap_push(root, d);
    closest_id_ = root;
    closest_dist_ = d;
}

bool Searcher::descend_stage() {
    const auto links = index_.links_of(closest_id_);
    const float boundary = heap_boundary();
    VectorId best_id = closest_id_;
    float best_dist = closest_dist_;
    for (const Link& l : links) {
        if (visited(l.endpoint)) continue;
        // |D_C - len| bounds the endpoint's distance from below; past the
        // heap boundary it can neither be retained nor improve D_C
        const float lb = closest_dist_ > l.length ? closest_dist_ - l.length
                                                  : l.length - closest_dist_;
        if (lb > boundary) continue;
        const float d = evaluate(l.endpoint);
        heap_push(l.endpoint, d);
        if (d < best_dist || (d == best_dist && l.endpoint < best_id)) {
            best_dist = d;
            best_id = l.endpoint;
        }
    }
    if (best_dist < closest_dist_) {
        closest_dist_ = best_dist;
        closest_id_ = best_id;
        return true;
    }
    return false;
}

SpreadOutcome Searcher::spread_stage() {
    // Snapshot the heap members closest-first; each member's link array is
    // walked at most once per query, resuming where the previous pass left
    // off (expansion progress survives across passes).
    spread_order_.assign(result_heap_.begin(), result_heap_.end());
    std::sort(spread_order_.begin(), spread_order_.end(), result_less);

    VectorId best_id = 0;
    float best_dist = kInf;
    bool found_new = false;
    bool pushed_any = false;
    bool stop = false;

    for (const SearchResult& member : spread_order_) {
        const auto mi = static_cast<std::size_t>(member.id);
        if (progress_mark_[mi] != epoch_) {
            progress_mark_[mi] = epoch_;
            progress_[mi] = 0;
        }
        const auto links = index_.links_of(member.id);
        std::uint32_t& pos = progress_[mi];
        while (pos < links.size()) {
            const Link& l = links[pos];
            ++pos;
            if (visited(l.endpoint)) continue;
            const float lb = member.distance > l.length ? member.distance - l.length
                                                        : l.length - member.distance;
            if (lb > heap_boundary()) continue;  // provably outside the candidate set
            const float d = evaluate(l.endpoint);
            const bool below_boundary = result_heap_.size() < k_search_ ||
                                        result_less(SearchResult{l.endpoint, d}, result_heap_.front());
            heap_push(l.endpoint, d);
            pushed_any = pushed_any || below_boundary;
            if (!found_new || d < best_dist || (d == best_dist && l.endpoint < best_id)) {
                found_new = true;
                best_dist = d;
                best_id = l.endpoint;
            }
            // hand control back as soon as a strictly closer vector appears
            // so Descend can follow it; the member's remaining links keep
            // their turn for a later pass
            if (d < closest_dist_) { stop = true; break; }
        }
        if (stop) break;
    }

    if (found_new && best_dist < closest_dist_) {
        closest_dist_ = best_dist;
        closest_id_ = best_id;
        return SpreadOutcome::improved_global;
    }
    // A push means the candidate set improved; the new member's links have
    // not been traversed yet, so another pass is warranted even when the best
    // new distance did not beat the final boundary.
    if (pushed_any) return SpreadOutcome::improved_local;
    return SpreadOutcome::exhausted;
}

std::vector<SearchResult> Searcher::finish(std::uint32_t k) {
    std::vector<SearchResult> results(result_heap_.begin(), result_heap_.end());
    std::sort(results.begin(), results.end(), result_less);
    if (results.size() > k) results.resize(k);
    return results;
}

std::vector<SearchResult> Searcher::knn(std::span<const float> query, std::uint32_t k_search,
                                        std::uint32_t k) {
    if (k == 0) throw std::invalid_argument("knn_query: k must be >= 1");
    if (k_search < k)
        throw std::invalid_argument("knn_query: k_search (" + std::to_string(k_search) +
                                    ") must be >= k (" + std::to_string(k) + ")");
    begin(query, k_search);
    for (;;) {
        ++stats_.iterations;
        while (descend_stage()) {
        }
        SpreadOutcome outcome = spread_stage();
        while (outcome == SpreadOutcome::improved_local) outcome = spread_stage();
        if (outcome == SpreadOutcome::exhausted) break;
    }
    return finish(k);
}

std::vector<SearchResult> knn_query(const LinkIndex& index, const VectorSet& vectors,
                                    std::span<const float> query, std::uint32_t k_search,
                                    std::uint32_t k) {
    Searcher searcher(index, vectors);
    return searcher.knn(query, k_search, k);
}

}  // namespace dls
