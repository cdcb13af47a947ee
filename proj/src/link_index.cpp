#include "dls/link_index.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <stdexcept>
#include <string>

#include "dls/rng.hpp"

namespace dls {

namespace {
constexpr float kInf = std::numeric_limits<float>::infinity();
}

IndexBuilder::IndexBuilder(const VectorSet& vectors, std::uint32_t k_index, std::uint64_t seed)
    : vectors_(vectors), k_index_(k_index), seed_(seed) {
    if (vectors.empty()) throw std::invalid_argument("build_index: empty vector set");
    if (k_index == 0) throw std::invalid_argument("build_index: k_index must be >= 1");

    const std::size_t n = vectors.size();
    state_.resize(n);
    nearest_dist_.assign(n, kInf);
    anchor_.assign(n, static_cast<VectorId>(npos));
    anchor_dist_.assign(n, kInf);
    visit_mark_.assign(n, 0);
    dist_lo_.assign(n, 0.0f);
    dist_hi_.assign(n, 0.0f);
    global_heap_.resize(n);
    heap_pos_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        global_heap_[i] = static_cast<VectorId>(i);
        heap_pos_[i] = i;
    }
    start_id_ = static_cast<VectorId>(SplitMix64(seed).next_below(n));
}

float IndexBuilder::radius(VectorId v) const {
    const auto& heap = state_[static_cast<std::size_t>(v)].near_heap;
    return heap.size() < k_index_ ? kInf : heap.front().length;
}

float IndexBuilder::nearest_node_dist(VectorId v) const {
    return nearest_dist_[static_cast<std::size_t>(v)];
}

float IndexBuilder::eval_distance(VectorId a, VectorId b) {
    ++distance_computations_;
    return distance(vectors_[static_cast<std::size_t>(a)], vectors_[static_cast<std::size_t>(b)]);
}

// ---- global heap: max on (C_v, smaller id wins ties) --------------------

bool IndexBuilder::heap_priority_less(VectorId a, VectorId b) const {
    const float ca = nearest_dist_[static_cast<std::size_t>(a)];
    const float cb = nearest_dist_[static_cast<std::size_t>(b)];
    if (ca != cb) return ca < cb;
    return a > b;  // smaller id floats to the top on ties
}

void IndexBuilder::sift_up(std::size_t pos) {
    while (pos > 0) {
        const std::size_t parent = (pos - 1) / 2;
        if (!heap_priority_less(global_heap_[parent], global_heap_[pos])) break;
        std::swap(global_heap_[parent], global_heap_[pos]);
        heap_pos_[static_cast<std::size_t>(global_heap_[parent])] = parent;
        heap_pos_[static_cast<std::size_t>(global_heap_[pos])] = pos;
        pos = parent;
    }
}

void IndexBuilder::sift_down(std::size_t pos) {
    const std::size_t n = global_heap_.size();
    for (;;) {
        std::size_t best = pos;
        const std::size_t l = 2 * pos + 1, r = 2 * pos + 2;
        if (l < n && heap_priority_less(global_heap_[best], global_heap_[l])) best = l;
        if (r < n && heap_priority_less(global_heap_[best], global_heap_[r])) best = r;
        if (best == pos) break;
        std::swap(global_heap_[best], global_heap_[pos]);
        heap_pos_[static_cast<std::size_t>(global_heap_[best])] = best;
        heap_pos_[static_cast<std::size_t>(global_heap_[pos])] = pos;
        pos = best;
    }
}

void IndexBuilder::heap_remove_at(std::size_t pos) {
    const std::size_t last = global_heap_.size() - 1;
    heap_pos_[static_cast<std::size_t>(global_heap_[pos])] = npos;
    if (pos != last) {
        global_heap_[pos] = global_heap_[last];
        heap_pos_[static_cast<std::size_t>(global_heap_[pos])] = pos;
        global_heap_.pop_back();
        sift_down(pos);
        sift_up(pos);  // no-op if sift_down already moved the element
    } else {
        global_heap_.pop_back();
    }
}

// ---- build operations ----------------------------------------------------

std::optional<CreateEvent> IndexBuilder::pop_create_vector() {
    if (global_heap_.empty()) return std::nullopt;

    VectorId id;
    if (!start_popped_) {
        start_popped_ = true;
        id = start_id_;
        heap_remove_at(heap_pos_[static_cast<std::size_t>(id)]);
    } else {
        id = global_heap_.front();
        heap_remove_at(0);
    }

    auto& st = state_[static_cast<std::size_t>(id)];
    const float create_distance = nearest_dist_[static_cast<std::size_t>(id)];
    st.descend = st.near_heap;  // descend links: heap snapshot just before nodehood
    st.indexed = true;
    node_order_.push_back(id);
    return CreateEvent{id, create_distance};
}

void IndexBuilder::update_nearest_node_dist(VectorId v, float d) {
    const auto vi = static_cast<std::size_t>(v);
    if (state_[vi].indexed) return;
    if (d < nearest_dist_[vi]) {
        nearest_dist_[vi] = d;
        // C only shrinks, so the entry can only move away from the top
        sift_down(heap_pos_[vi]);
    }
}

bool IndexBuilder::heap_contains(VectorId owner, VectorId endpoint) const {
    for (const Link& l : state_[static_cast<std::size_t>(owner)].near_heap)
        if (l.endpoint == endpoint) return true;
    return false;
}

void IndexBuilder::list_remove(VectorId owner, VectorId endpoint) {
    auto& st = state_[static_cast<std::size_t>(owner)];
    auto& list = st.far_list;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].endpoint == endpoint) {
            const float removed = list[i].length;
            list[i] = list.back();
            list.pop_back();
            if (removed >= st.far_reach) st.recompute_far_reach();
            return;
        }
    }
}

void IndexBuilder::list_push(VectorId owner, Link link) {
    auto& st = state_[static_cast<std::size_t>(owner)];
    st.far_list.push_back(link);
    st.far_reach = std::max(st.far_reach, link.length);
}

void IndexBuilder::heap_insert(VectorId owner, Link link) {
    auto& heap = state_[static_cast<std::size_t>(owner)].near_heap;
    if (heap.size() < k_index_) {
        heap.push_back(link);
        // hand-rolled sift so layout is pinned by this code, not the STL
        std::size_t pos = heap.size() - 1;
        while (pos > 0) {
            const std::size_t parent = (pos - 1) / 2;
            if (!link_less(heap[parent], heap[pos])) break;
            std::swap(heap[parent], heap[pos]);
            pos = parent;
        }
        return;
    }

    // full: eject the top (furthest) link, then insert the new one
    const Link ejected = heap.front();
    heap.front() = link;
    std::size_t pos = 0;
    const std::size_t n = heap.size();
    for (;;) {
        std::size_t best = pos;
        const std::size_t l = 2 * pos + 1, r = 2 * pos + 2;
        if (l < n && link_less(heap[best], heap[l])) best = l;
        if (r < n && link_less(heap[best], heap[r])) best = r;
        if (best == pos) break;
        std::swap(heap[best], heap[pos]);
        pos = best;
    }

    // The ejected link survives on this side only if the other endpoint still
    // considers this vector near; otherwise it dies on both sides.
    if (heap_contains(ejected.endpoint, owner)) {
        list_push(owner, ejected);
    } else {
        list_remove(ejected.endpoint, owner);
    }
}

LinkPlacement IndexBuilder::try_add_link(VectorId a, VectorId b, float d) {
    LinkPlacement placement;
    const bool near_a = d < radius(a);
    const bool near_b = d < radius(b);
    if (!near_a && !near_b) return placement;  // neither endpoint considers the other near

    if (near_a) {
        heap_insert(a, Link{b, d});
        placement.a = Side::heap;
    } else {
        list_push(a, Link{b, d});
        placement.a = Side::list;
    }
    if (near_b) {
        heap_insert(b, Link{a, d});
        placement.b = Side::heap;
    } else {
        list_push(b, Link{a, d});
        placement.b = Side::list;
    }
    return placement;
}

void IndexBuilder::link_new_node(VectorId node) {
    const auto ni = static_cast<std::size_t>(node);
    ++visit_epoch_;
    visit_mark_[ni] = visit_epoch_;
    wave_ = {};

    // Seed the expansion with the node's existing links (all to nodes; their
    // distances are already known from the link lengths).
    auto seed_from = [&](std::span<const Link> links) {
        for (const Link& l : links) {
            const auto ei = static_cast<std::size_t>(l.endpoint);
            if (visit_mark_[ei] == visit_epoch_) continue;
            visit_mark_[ei] = visit_epoch_;
            dist_lo_[ei] = l.length;
            dist_hi_[ei] = l.length;
            wave_.push(WaveEntry{l.length, l.endpoint});
        }
    };
    seed_from(state_[ni].near_heap);
    seed_from(state_[ni].far_list);

    auto evaluate_candidate = [&](VectorId w) {
        const auto wi = static_cast<std::size_t>(w);
        const float d = eval_distance(node, w);
        if (!state_[wi].indexed) {
            try_add_link(node, w, d);
            update_nearest_node_dist(w, d);
            if (d < anchor_dist_[wi]) {
                anchor_[wi] = node;
                anchor_dist_[wi] = d;
            }
        }
        return d;
    };

    if (state_[ni].near_heap.empty() && state_[ni].far_list.empty()) {
        // No links yet (the first node): every vector is a candidate.
        for (std::size_t u = 0; u < vectors_.size(); ++u) {
            if (visit_mark_[u] == visit_epoch_) continue;
            visit_mark_[u] = visit_epoch_;
            evaluate_candidate(static_cast<VectorId>(u));
        }
        return;
    }

    // Best-first expansion over the link graph, nearest candidates first.
    // Unindexed candidates are evaluated exactly (they can still form
    // links); already-indexed candidates only steer the wave, so they carry
    // a triangle-inequality interval [lo, hi] instead of costing a distance
    // computation. A candidate is admitted while its lower bound leaves
    // room inside the node's neighborhood as it stood at creation (that
    // radius bounds how far the node's true neighbors can sit) or inside
    // the candidate's own; anything further can neither link nor lead to a
    // vector that could.
    const float radius_floor = radius(node);
    while (!wave_.empty()) {
        const WaveEntry entry = wave_.top();
        wave_.pop();
        const auto ui = static_cast<std::size_t>(entry.id);
        const float lo_u = dist_lo_[ui];
        const float hi_u = dist_hi_[ui];
        auto expand = [&](std::span<const Link> links) {
            for (const Link& l : links) {
                const auto wi = static_cast<std::size_t>(l.endpoint);
                if (visit_mark_[wi] == visit_epoch_) continue;
                float lo = std::max(lo_u - l.length, l.length - hi_u);
                if (lo < 0.0f) lo = 0.0f;
                if (lo >= radius_floor && lo >= radius(l.endpoint) &&
                    lo >= state_[wi].far_reach) continue;
                visit_mark_[wi] = visit_epoch_;
                const VectorId w = l.endpoint;
                if (state_[wi].indexed) {
                    dist_lo_[wi] = lo;
                    dist_hi_[wi] = hi_u + l.length;
                } else {
                    const float d = evaluate_candidate(w);
                    dist_lo_[wi] = d;
                    dist_hi_[wi] = d;
                }
                wave_.push(WaveEntry{dist_lo_[wi], w});
            }
        };
        // live links only; descend snapshots are long-range search aids and
        // would wreck the triangle bounds
        expand(state_[ui].near_heap);
        expand(state_[ui].far_list);
    }

    // Completeness sweep. The live mesh can split into distant components
    // (self-sufficient clusters grow no outward links), so the wave alone
    // can miss a vector that considers this node near. Every unindexed
    // vector is certified here: its closest evaluated node gives a triangle
    // lower bound on its distance; only vectors whose bound leaves linking
    // possible are evaluated. Bound >= R_v implies bound >= C_v too (links
    // always end at nodes, so C_v <= R_v), making the skip lossless.
    for (std::size_t u = 0; u < vectors_.size(); ++u) {
        if (visit_mark_[u] == visit_epoch_ || state_[u].indexed) continue;
        const VectorId a = anchor_[u];
        if (a != static_cast<VectorId>(npos)) {
            const auto ai = static_cast<std::size_t>(a);
            if (visit_mark_[ai] != visit_epoch_) {
                visit_mark_[ai] = visit_epoch_;
                const float da = eval_distance(node, a);
                dist_lo_[ai] = da;
                dist_hi_[ai] = da;
            }
            float bound = std::max(dist_lo_[ai] - anchor_dist_[u], anchor_dist_[u] - dist_hi_[ai]);
            if (bound < 0.0f) bound = 0.0f;
            if (bound >= radius(node) && bound >= radius(static_cast<VectorId>(u))) continue;
        }
        visit_mark_[u] = visit_epoch_;
        evaluate_candidate(static_cast<VectorId>(u));
    }
}

LinkIndex IndexBuilder::finalize() {
    if (!global_heap_.empty())
        throw std::runtime_error("finalize: " + std::to_string(global_heap_.size()) +
                                 " vectors are not indexed yet");

    LinkIndex index;
    index.count = vectors_.size();
    index.dim = static_cast<std::uint32_t>(vectors_.dim());
    index.root_id = node_order_.front();
    index.k_index = k_index_;
    index.seed = seed_;
    index.stats.distance_computations = distance_computations_;
    index.links.resize(vectors_.size());

    std::vector<Link> merged;
    for (std::size_t v = 0; v < vectors_.size(); ++v) {
        auto& st = state_[v];
        merged.clear();
        merged.insert(merged.end(), st.descend.begin(), st.descend.end());
        merged.insert(merged.end(), st.near_heap.begin(), st.near_heap.end());
        merged.insert(merged.end(), st.far_list.begin(), st.far_list.end());
        std::sort(merged.begin(), merged.end(),
                  [](const Link& a, const Link& b) { return a.endpoint < b.endpoint; });
        merged.erase(std::unique(merged.begin(), merged.end(),
                                 [](const Link& a, const Link& b) { return a.endpoint == b.endpoint; }),
                     merged.end());
        std::sort(merged.begin(), merged.end(), link_less);
        index.links[v] = merged;
        st = NodeState{};  // release build state as we go
    }
    return index;
}

LinkIndex build_index(const VectorSet& vectors, std::uint32_t k_index, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    IndexBuilder builder(vectors, k_index, seed);
    while (auto ev = builder.pop_create_vector()) builder.link_new_node(ev->id);
    LinkIndex index = builder.finalize();
    index.stats.build_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return index;
}

}  // namespace dls
