#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "dls/vecstore.hpp"

namespace dls {

// One edge of the index graph: the other endpoint and the Euclidean distance
// between the two endpoint vectors.
struct Link {
    VectorId endpoint{0};
    float length{0.0f};

    friend bool operator==(const Link&, const Link&) = default;
};

// (length, endpoint) lexicographic; the tie-break order used everywhere.
inline bool link_less(const Link& a, const Link& b) {
    if (a.length != b.length) return a.length < b.length;
    return a.endpoint < b.endpoint;
}

struct BuildStats {
    std::uint64_t distance_computations{0};
    double build_seconds{0.0};  // wall clock; not serialized
};

// Finished immutable index: per-node link arrays sorted ascending by
// (length, endpoint), unique endpoints, plus the root node and build metadata.
struct LinkIndex {
    std::uint64_t count{0};
    std::uint32_t dim{0};
    VectorId root_id{0};
    std::uint32_t k_index{0};
    std::uint64_t seed{0};
    std::vector<std::vector<Link>> links;
    BuildStats stats;

    std::span<const Link> links_of(VectorId v) const { return links[static_cast<std::size_t>(v)]; }
};

enum class Side { heap, list, none };

struct LinkPlacement {
    Side a{Side::none};
    Side b{Side::none};
    bool created() const { return a != Side::none || b != Side::none; }
};

struct CreateEvent {
    VectorId id{0};
    float create_distance{0.0f};
};

// Incremental index construction. Vectors become nodes in furthest-first
// order driven by a global max-heap over C_v (distance to the closest node).
// Each vector carries a bounded near-heap (capacity k_index, max on top, the
// top defines the neighborhood radius R_v) and a far-list of links whose other
// endpoint still considers this vector near.
class IndexBuilder {
public:
    IndexBuilder(const VectorSet& vectors, std::uint32_t k_index, std::uint64_t seed);

    // Removes and returns the unindexed vector with the largest C_v (the
    // create vector) and its create distance. The vector's near-heap is
    // snapshotted into its descend links before any new links are formed.
    // Returns nullopt once every vector is a node.
    std::optional<CreateEvent> pop_create_vector();

    // Evaluates candidate neighbors of a freshly popped node, creating links
    // and updating C values. A best-first wave expands the node's existing
    // links, evaluating unindexed candidates exactly and carrying triangle
    // intervals through already-indexed ones; a completeness sweep then
    // certifies every remaining unindexed vector against its closest
    // evaluated node, so no vector that could still link is missed.
    void link_new_node(VectorId node);

    // Places a link of length d between a and b according to the current
    // radii. A full near-heap ejects its top; the ejected link moves to the
    // ejecting vector's far-list iff the other endpoint still considers it
    // near, otherwise it is dropped from both sides.
    LinkPlacement try_add_link(VectorId a, VectorId b, float d);

    // C_v <- min(C_v, d); no-op if v is already a node.
    void update_nearest_node_dist(VectorId v, float d);

    // Merges descend snapshot + near-heap + far-list per node, de-duplicates
    // by endpoint and sorts ascending by (length, endpoint). Throws if
    // unindexed vectors remain.
    LinkIndex finalize();

    // introspection
    bool indexed(VectorId v) const { return state_[static_cast<std::size_t>(v)].indexed; }
    float radius(VectorId v) const;
    float nearest_node_dist(VectorId v) const;
    std::span<const Link> heap_links(VectorId v) const {
        return state_[static_cast<std::size_t>(v)].near_heap;
    }
    std::span<const Link> list_links(VectorId v) const {
        return state_[static_cast<std::size_t>(v)].far_list;
    }
    std::span<const Link> descend_links(VectorId v) const {
        return state_[static_cast<std::size_t>(v)].descend;
    }
    std::uint64_t distance_computations() const { return distance_computations_; }
    std::size_t nodes_created() const { return node_order_.size(); }

private:
    struct NodeState {
        std::vector<Link> near_heap;  // binary max-heap on (length, endpoint)
        std::vector<Link> far_list;
        std::vector<Link> descend;  // heap snapshot taken at pop
        float far_reach{0.0f};      // longest far_list link length
        bool indexed{false};

        void recompute_far_reach() {
            far_reach = 0.0f;
            for (const Link& l : far_list) far_reach = std::max(far_reach, l.length);
        }
    };

    float eval_distance(VectorId a, VectorId b);
    void heap_insert(VectorId owner, Link link);
    bool heap_contains(VectorId owner, VectorId endpoint) const;
    void list_remove(VectorId owner, VectorId endpoint);
    void list_push(VectorId owner, Link link);

    // global heap primitives (position-indexed max-heap on (C, smaller id))
    bool heap_priority_less(VectorId a, VectorId b) const;
    void sift_up(std::size_t pos);
    void sift_down(std::size_t pos);
    void heap_remove_at(std::size_t pos);

    const VectorSet& vectors_;
    std::uint32_t k_index_;
    std::uint64_t seed_;
    VectorId start_id_;
    bool start_popped_{false};

    std::vector<NodeState> state_;
    std::vector<float> nearest_dist_;  // C_v
    std::vector<VectorId> anchor_;     // closest evaluated node per vector
    std::vector<float> anchor_dist_;
    std::vector<VectorId> global_heap_;
    std::vector<std::size_t> heap_pos_;  // id -> position, npos when removed
    std::vector<VectorId> node_order_;
    std::uint64_t distance_computations_{0};

    // per-creation scratch (epoch-stamped visit marks)
    struct WaveEntry {
        float key;  // exact distance or interval lower bound
        VectorId id;
        bool operator>(const WaveEntry& o) const {
            if (key != o.key) return key > o.key;
            return id > o.id;
        }
    };
    std::vector<std::uint32_t> visit_mark_;
    std::uint32_t visit_epoch_{0};
    std::priority_queue<WaveEntry, std::vector<WaveEntry>, std::greater<WaveEntry>> wave_;
    std::vector<float> dist_lo_;  // per-wave-member distance interval
    std::vector<float> dist_hi_;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// One-shot build: pop/link until done, then finalize. Deterministic given
// (vectors, k_index, seed). Throws std::invalid_argument on empty input or
// k_index == 0.
LinkIndex build_index(const VectorSet& vectors, std::uint32_t k_index, std::uint64_t seed = 0);

}  // namespace dls
