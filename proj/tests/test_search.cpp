#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "dls/exact.hpp"
#include "dls/link_index.hpp"
#include "dls/rng.hpp"
#include "dls/search.hpp"
#include "dls/synth.hpp"

using namespace dls;

namespace {

std::vector<VectorId> ids_of(const std::vector<SearchResult>& results) {
    std::vector<VectorId> ids;
    for (const SearchResult& r : results) ids.push_back(r.id);
    return ids;
}

// Independent re-coding of the whole query loop with plain containers; used
// to replay staged searches on small instances.
struct NaiveSearch {
    const LinkIndex& idx;
    const VectorSet& vs;
    std::map<VectorId, float> memo;
    std::set<VectorId> expanded;
    std::map<VectorId, std::size_t> progress;
    std::vector<std::pair<float, VectorId>> heap;  // kept sorted ascending
    std::uint32_t k_search;
    VectorId vc{0};
    float dc{0.0f};
    std::size_t evals{0};

    NaiveSearch(const LinkIndex& i, const VectorSet& v, std::span<const float> q,
                std::uint32_t ks)
        : idx(i), vs(v), k_search(ks), query(q.begin(), q.end()) {
        const float d = eval(idx.root_id);
        push(idx.root_id, d);
        vc = idx.root_id;
        dc = d;
    }

    std::vector<float> query;

    float eval(VectorId v) {
        ++evals;
        const float d = distance(query, vs[static_cast<std::size_t>(v)]);
        memo[v] = d;
        return d;
    }

    float boundary() const {
        return heap.size() < k_search ? std::numeric_limits<float>::infinity()
                                      : heap.back().first;
    }

    void push(VectorId v, float d) {
        if (heap.size() == k_search) {
            auto worst = heap.back();
            if (std::make_pair(d, v) >= worst) return;
            heap.pop_back();
        }
        heap.insert(std::lower_bound(heap.begin(), heap.end(), std::make_pair(d, v)),
                    {d, v});
    }

    bool descend() {
        VectorId best = vc;
        float best_d = dc;
        const float bnd = boundary();
        for (const Link& l : idx.links_of(vc)) {
            if (memo.count(l.endpoint)) continue;
            const float lb = std::fabs(dc - l.length);
            if (lb > bnd) continue;
            const float d = eval(l.endpoint);
            push(l.endpoint, d);
            if (d < best_d || (d == best_d && l.endpoint < best)) {
                best_d = d;
                best = l.endpoint;
            }
        }
        if (best_d < dc) {
            dc = best_d;
            vc = best;
            return true;
        }
        return false;
    }

    // returns 0 = improved-global, 1 = improved-local, 2 = exhausted
    int spread() {
        auto snapshot = heap;
        VectorId best = 0;
        float best_d = 0.0f;
        bool found = false, pushed = false, stop = false;
        for (auto [md, mid] : snapshot) {
            std::size_t& pos = progress[mid];
            const auto links = idx.links_of(mid);
            while (pos < links.size()) {
                const Link& l = links[pos];
                ++pos;
                if (memo.count(l.endpoint)) continue;
                const float lb = std::fabs(md - l.length);
                if (lb > boundary()) continue;
                const float d = eval(l.endpoint);
                const bool below = heap.size() < k_search ||
                                   std::make_pair(d, l.endpoint) < heap.back();
                push(l.endpoint, d);
                pushed = pushed || below;
                if (!found || d < best_d || (d == best_d && l.endpoint < best)) {
                    found = true;
                    best_d = d;
                    best = l.endpoint;
                }
                if (d < dc) {
                    stop = true;
                    break;
                }
            }
            if (stop) break;
        }
        if (found && best_d < dc) {
            dc = best_d;
            vc = best;
            return 0;
        }
        return pushed ? 1 : 2;
    }

    std::vector<SearchResult> run(std::uint32_t k) {
        for (;;) {
            while (descend()) {
            }
            int out = spread();
            while (out == 1) out = spread();
            if (out == 2) break;
        }
        std::vector<SearchResult> results;
        for (auto [d, v] : heap) results.push_back({v, d});
        if (results.size() > k) results.resize(k);
        return results;
    }
};

}  // namespace

TEST_CASE("a query equal to a database vector returns it first at distance zero") {
    VectorSet vs = generate_vectors(200, 8, Distribution::uniform, 3);
    LinkIndex idx = build_index(vs, 8, 0);
    Searcher searcher(idx, vs);
    for (std::size_t v : {0u, 57u, 199u}) {
        auto results = searcher.knn(vs[v], 10, 5);
        REQUIRE(!results.empty());
        CHECK(results[0].id == v);
        CHECK(results[0].distance == 0.0f);
    }
}

TEST_CASE("k_search = N reproduces brute-force answers exactly") {
    VectorSet vs = generate_vectors(200, 16, Distribution::uniform, 42);
    VectorSet qs = generate_vectors(40, 16, Distribution::uniform, 43);
    LinkIndex idx = build_index(vs, 10, 0);
    Searcher searcher(idx, vs);
    for (std::size_t q = 0; q < qs.size(); ++q) {
        auto got = searcher.knn(qs[q], 200, 10);
        auto want = brute_knn(vs, qs[q], 10);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].id == want[i].id);
            CHECK(got[i].distance == doctest::Approx(want[i].distance).epsilon(1e-5));
        }
    }
}

TEST_CASE("descend stops when no link improves, then spread takes over") {
    // Fig. 2 style setup: root at distance 18; its links land at 23 and 32.
    VectorSet vs(3, 2,
                 {18.0f, 0.0f,    // A (root)
                  0.0f, 23.0f,    // B
                  0.0f, -32.0f});  // E
    LinkIndex idx;
    idx.count = 3;
    idx.dim = 2;
    idx.root_id = 0;
    idx.k_index = 2;
    idx.seed = 0;
    idx.links.resize(3);
    idx.links[0] = {{1, distance(vs[0], vs[1])}, {2, distance(vs[0], vs[2])}};
    idx.links[1] = {{0, distance(vs[0], vs[1])}};
    idx.links[2] = {{0, distance(vs[0], vs[2])}};
    std::sort(idx.links[0].begin(), idx.links[0].end(), link_less);

    std::vector<float> q{0.0f, 0.0f};
    Searcher searcher(idx, vs);
    searcher.begin(q, 3);
    CHECK(searcher.closest_dist() == doctest::Approx(18.0));
    CHECK_FALSE(searcher.descend_stage());  // 23 and 32 are both worse than 18
    CHECK(searcher.closest_id() == 0);
    CHECK(searcher.stats().distance_evals == 3);
    // every endpoint is now memoized; spread finds nothing new
    CHECK(searcher.spread_stage() == SpreadOutcome::exhausted);
}

TEST_CASE("descend moves to a strictly closer link endpoint") {
    VectorSet vs(2, 1, {10.0f, 2.0f});
    LinkIndex idx;
    idx.count = 2;
    idx.dim = 1;
    idx.root_id = 0;
    idx.k_index = 1;
    idx.links = {{{1, 8.0f}}, {{0, 8.0f}}};
    std::vector<float> q{0.0f};
    Searcher searcher(idx, vs);
    searcher.begin(q, 2);
    CHECK(searcher.descend_stage());
    CHECK(searcher.closest_id() == 1);
    CHECK(searcher.closest_dist() == doctest::Approx(2.0));
}

TEST_CASE("descend over fully memoized links evaluates nothing") {
    VectorSet vs(2, 1, {10.0f, 2.0f});
    LinkIndex idx;
    idx.count = 2;
    idx.dim = 1;
    idx.root_id = 0;
    idx.k_index = 1;
    idx.links = {{{1, 8.0f}}, {{0, 8.0f}}};
    std::vector<float> q{0.0f};
    Searcher searcher(idx, vs);
    searcher.begin(q, 2);
    searcher.descend_stage();  // evaluates vector 1, moves there
    const auto evals = searcher.stats().distance_evals;
    CHECK_FALSE(searcher.descend_stage());  // all links of V_C already memoized
    CHECK(searcher.stats().distance_evals == evals);
}

TEST_CASE("spread outcome branches") {
    // chain 0 - 1 - 2 - 3 on a line; root 0; query sits past 3
    VectorSet vs(4, 1, {0.0f, 1.0f, 2.0f, 3.0f});
    LinkIndex idx;
    idx.count = 4;
    idx.dim = 1;
    idx.root_id = 0;
    idx.k_index = 1;
    idx.links.resize(4);
    auto link = [&](VectorId a, VectorId b) {
        const float d = distance(vs[a], vs[b]);
        idx.links[a].push_back({b, d});
        idx.links[b].push_back({a, d});
    };
    link(0, 1);
    link(2, 3);  // note: 1 and 2 are NOT linked; spread cannot jump the gap
    for (auto& ls : idx.links) std::sort(ls.begin(), ls.end(), link_less);

    std::vector<float> q{3.2f};
    Searcher searcher(idx, vs);
    searcher.begin(q, 4);
    while (searcher.descend_stage()) {
    }
    // descend reached vector 1 (distance 2.2); the graph break stops it
    CHECK(searcher.closest_id() == 1);
    // spread expands 1's links: only 0, already memoized -> exhausted
    CHECK(searcher.spread_stage() == SpreadOutcome::exhausted);
}

TEST_CASE("spread returns improved-global when a new endpoint beats D_C") {
    // 1-d: query 0, root at 5, a decoy at -6, and a winner at 3 behind the decoy
    VectorSet vs(3, 1, {5.0f, -6.0f, 3.0f});
    LinkIndex idx;
    idx.count = 3;
    idx.dim = 1;
    idx.root_id = 0;
    idx.k_index = 1;
    idx.links = {{{1, 11.0f}}, {{2, 9.0f}, {0, 11.0f}}, {{1, 9.0f}}};
    std::vector<float> q{0.0f};
    Searcher searcher(idx, vs);
    searcher.begin(q, 3);
    CHECK_FALSE(searcher.descend_stage());  // decoy at 6 does not beat 5
    CHECK(searcher.spread_stage() == SpreadOutcome::improved_global);
    CHECK(searcher.closest_id() == 2);
    CHECK(searcher.closest_dist() == doctest::Approx(3.0));
}

TEST_CASE("spread returns improved-local when a find lands between D_C and D_L") {
    VectorSet vs(3, 1, {5.0f, -6.0f, 5.5f});
    LinkIndex idx;
    idx.count = 3;
    idx.dim = 1;
    idx.root_id = 0;
    idx.k_index = 1;
    idx.links = {{{1, 11.0f}}, {{0, 11.0f}, {2, 11.5f}}, {{1, 11.5f}}};
    std::vector<float> q{0.0f};
    Searcher searcher(idx, vs);
    searcher.begin(q, 2);  // heap capacity 2: [(5, 0), (6, 1)] after descend
    CHECK_FALSE(searcher.descend_stage());
    // vector 2 at 5.5 enters the heap, ejecting the decoy, but D_C stays 5
    CHECK(searcher.spread_stage() == SpreadOutcome::improved_local);
    CHECK(searcher.closest_dist() == doctest::Approx(5.0));
    CHECK(searcher.spread_stage() == SpreadOutcome::exhausted);
}

TEST_CASE("staged replay equals an independent naive implementation") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 20 + rng.next_below(60);
        VectorSet vs = generate_vectors(n, 4, Distribution::uniform, rng.next());
        LinkIndex idx = build_index(vs, 4, 1);
        Searcher searcher(idx, vs);
        for (int qi = 0; qi < 5; ++qi) {
            std::vector<float> q(4);
            for (auto& x : q) x = static_cast<float>(rng.next_double());
            auto got = searcher.knn(q, 8, 8);
            NaiveSearch naive(idx, vs, q, 8);
            auto want = naive.run(8);
            CHECK(got == want);
            CHECK(searcher.stats().distance_evals == naive.evals);
        }
    }
}

TEST_CASE("results are sorted ascending and bounded below by the true 1-NN") {
    VectorSet vs = generate_vectors(400, 12, Distribution::gaussian, 9);
    VectorSet qs = generate_vectors(25, 12, Distribution::gaussian, 10);
    LinkIndex idx = build_index(vs, 6, 0);
    Searcher searcher(idx, vs);
    for (std::size_t q = 0; q < qs.size(); ++q) {
        auto results = searcher.knn(qs[q], 12, 12);
        auto truth = brute_knn(vs, qs[q], 1);
        for (std::size_t i = 0; i < results.size(); ++i) {
            CHECK(results[i].distance >= doctest::Approx(truth[0].distance).epsilon(1e-5));
            if (i > 0) {
                const bool ordered =
                    results[i - 1].distance < results[i].distance ||
                    (results[i - 1].distance == results[i].distance &&
                     results[i - 1].id < results[i].id);
                CHECK(ordered);
            }
        }
    }
}

TEST_CASE("distance evaluations never exceed N and iterations stay bounded") {
    VectorSet vs = generate_vectors(500, 10, Distribution::uniform, 14);
    VectorSet qs = generate_vectors(50, 10, Distribution::uniform, 15);
    LinkIndex idx = build_index(vs, 8, 0);
    Searcher searcher(idx, vs);
    for (std::size_t q = 0; q < qs.size(); ++q) {
        searcher.knn(qs[q], 20, 10);
        CHECK(searcher.stats().distance_evals <= vs.size());
        CHECK(searcher.stats().iterations <= vs.size());
    }
}

TEST_CASE("identical queries give identical results and eval counts") {
    VectorSet vs = generate_vectors(600, 16, Distribution::uniform, 77);
    LinkIndex idx = build_index(vs, 10, 0);
    Searcher a(idx, vs), b(idx, vs);
    VectorSet qs = generate_vectors(20, 16, Distribution::uniform, 78);
    for (std::size_t q = 0; q < qs.size(); ++q) {
        auto ra = a.knn(qs[q], 15, 10);
        auto rb = b.knn(qs[q], 15, 10);
        CHECK(ra == rb);
        CHECK(a.stats().distance_evals == b.stats().distance_evals);
    }
}

TEST_CASE("argument validation") {
    VectorSet vs = generate_vectors(50, 4, Distribution::uniform, 0);
    LinkIndex idx = build_index(vs, 4, 0);
    Searcher searcher(idx, vs);
    std::vector<float> q3(3, 0.0f), q4(4, 0.0f);
    CHECK_THROWS_AS(searcher.knn(q3, 10, 5), std::invalid_argument);   // dim mismatch
    CHECK_THROWS_AS(searcher.knn(q4, 5, 10), std::invalid_argument);   // k_search < k
    CHECK_THROWS_AS(searcher.knn(q4, 0, 0), std::invalid_argument);
}

TEST_CASE("tiny N returns everything evaluated, sorted") {
    VectorSet vs = generate_vectors(3, 2, Distribution::uniform, 1);
    LinkIndex idx = build_index(vs, 2, 0);
    Searcher searcher(idx, vs);
    std::vector<float> q{0.5f, 0.5f};
    auto results = searcher.knn(q, 10, 10);
    CHECK(results.size() == 3);
}

TEST_CASE("recall does not degrade as k_search grows (statistical)") {
    // fixed 10,000-point set, 500 queries, k_search in {10, 20, 50}
    VectorSet vs = generate_vectors(10000, 24, Distribution::uniform, 100);
    VectorSet qs = generate_vectors(500, 24, Distribution::uniform, 101);
    LinkIndex idx = build_index(vs, 20, 0);
    GroundTruth gt = compute_ground_truth(vs, qs, 10);
    Searcher searcher(idx, vs);

    std::map<std::uint32_t, double> recall;
    for (std::uint32_t ks : {10u, 20u, 50u}) {
        double sum = 0.0;
        for (std::size_t q = 0; q < qs.size(); ++q) {
            auto results = searcher.knn(qs[q], ks, 10);
            sum += recall_at_k(ids_of(results), gt.queries[q], 10);
        }
        recall[ks] = sum / static_cast<double>(qs.size());
    }
    // non-decreasing within 0.5 percentage points of slack
    CHECK(recall[20] >= recall[10] - 0.5);
    CHECK(recall[50] >= recall[20] - 0.5);
}
