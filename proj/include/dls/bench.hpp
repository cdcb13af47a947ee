#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dls/exact.hpp"
#include "dls/link_index.hpp"
#include "dls/vecstore.hpp"

namespace dls {

constexpr int kReportSchemaVersion = 1;

// One benchmark run. atpq_ms is the mean single-threaded wall time of the
// search call alone; ground-truth work, I/O, and report writing all happen
// outside the timed region.
struct BenchReport {
    std::string dataset;
    std::uint64_t n{0};
    std::uint32_t dim{0};
    std::uint32_t k_index{0};
    std::uint32_t k_search{0};
    std::uint32_t k{0};
    std::uint64_t seed{0};
    std::size_t query_count{0};
    double atpq_ms{0.0};
    double latency_p50_ms{0.0};
    double latency_p95_ms{0.0};
    double latency_p99_ms{0.0};
    double recall_at_10{0.0};  // percent
    double distance_evals_mean{0.0};
    std::optional<double> build_seconds;
    std::optional<double> brute_atpq_ms;

    std::string to_json() const;
};

// Runs every query through the index sequentially on this thread, then scores
// recall@10 against `truth` (which must carry k >= 10 entries per query, or
// all of N if N < 10). When time_brute is set, the same queries are also
// timed through the brute-force scan.
BenchReport run_search_benchmark(const LinkIndex& index, const VectorSet& base,
                                 const VectorSet& queries, std::uint32_t k_search, std::uint32_t k,
                                 const GroundTruth& truth, bool time_brute = false);

}  // namespace dls
