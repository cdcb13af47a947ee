#include "dls/bench.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "dls/search.hpp"

namespace dls {

namespace {

double percentile(std::vector<double> sorted, double q) {
    if (sorted.empty()) return 0.0;
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1) + 0.5);
    return sorted[std::min(idx, sorted.size() - 1)];
}

}  // namespace

std::string BenchReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["dataset"] = dataset;
    j["n"] = n;
    j["dim"] = dim;
    j["k_index"] = k_index;
    j["k_search"] = k_search;
    j["k"] = k;
    j["seed"] = seed;
    j["query_count"] = query_count;
    j["atpq_ms"] = atpq_ms;
    j["latency_p50_ms"] = latency_p50_ms;
    j["latency_p95_ms"] = latency_p95_ms;
    j["latency_p99_ms"] = latency_p99_ms;
    j["recall_at_10"] = recall_at_10;
    j["distance_evals_mean"] = distance_evals_mean;
    j["build_seconds"] = build_seconds ? nlohmann::json(*build_seconds) : nlohmann::json(nullptr);
    j["brute_atpq_ms"] = brute_atpq_ms ? nlohmann::json(*brute_atpq_ms) : nlohmann::json(nullptr);
    return j.dump(2);
}

BenchReport run_search_benchmark(const LinkIndex& index, const VectorSet& base,
                                 const VectorSet& queries, std::uint32_t k_search, std::uint32_t k,
                                 const GroundTruth& truth, bool time_brute) {
    if (queries.dim() != base.dim())
        throw std::invalid_argument("benchmark: query dim != base dim");
    if (truth.queries.size() != queries.size())
        throw std::invalid_argument("benchmark: ground truth count != query count");

    BenchReport report;
    report.n = index.count;
    report.dim = index.dim;
    report.k_index = index.k_index;
    report.k_search = k_search;
    report.k = k;
    report.seed = index.seed;
    report.query_count = queries.size();

    Searcher searcher(index, base);
    std::vector<double> latencies_ms(queries.size());
    std::vector<std::vector<SearchResult>> results(queries.size());
    std::uint64_t total_evals = 0;

    using clock = std::chrono::steady_clock;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto t0 = clock::now();
        results[q] = searcher.knn(queries[q], k_search, k);
        const auto t1 = clock::now();
        latencies_ms[q] = std::chrono::duration<double, std::milli>(t1 - t0).count();
        total_evals += searcher.stats().distance_evals;
    }

    double total_ms = 0.0;
    for (double ms : latencies_ms) total_ms += ms;
    report.atpq_ms = queries.empty() ? 0.0 : total_ms / static_cast<double>(queries.size());
    std::sort(latencies_ms.begin(), latencies_ms.end());
    report.latency_p50_ms = percentile(latencies_ms, 0.50);
    report.latency_p95_ms = percentile(latencies_ms, 0.95);
    report.latency_p99_ms = percentile(latencies_ms, 0.99);
    report.distance_evals_mean =
        queries.empty() ? 0.0 : static_cast<double>(total_evals) / static_cast<double>(queries.size());

    // recall@10 over retrieved prefixes; ties at the boundary accepted
    double recall_sum = 0.0;
    std::vector<VectorId> ids;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        ids.clear();
        for (const SearchResult& r : results[q]) ids.push_back(r.id);
        recall_sum += recall_at_k(ids, truth.queries[q], 10);
    }
    report.recall_at_10 =
        queries.empty() ? 0.0 : recall_sum / static_cast<double>(queries.size());

    if (time_brute) {
        const auto t0 = clock::now();
        for (std::size_t q = 0; q < queries.size(); ++q) {
            volatile double sink = brute_knn(base, queries[q], 10).back().distance;
            (void)sink;
        }
        const auto t1 = clock::now();
        report.brute_atpq_ms = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                               static_cast<double>(queries.size());
    }
    return report;
}

}  // namespace dls
