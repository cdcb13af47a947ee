#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace dls {

// Binary judgments for one query: docid -> relevant (true) or judged
// non-relevant (false). Unlisted documents are unjudged.
struct QueryJudgments {
    std::unordered_map<std::string, bool> by_doc;
    std::size_t relevant{0};
    std::size_t nonrelevant{0};

    void add(const std::string& doc, bool rel);
};

struct QrelSet {
    std::map<std::string, QueryJudgments> queries;  // ordered for stable iteration
};

struct RunEntry {
    std::string doc;
    double score{0.0};
};

// Per-query rankings, rank 1 first, scores non-increasing, no duplicate doc
// within a query.
struct RunRanking {
    std::map<std::string, std::vector<RunEntry>> queries;
};

enum class MapVariant { trec_eval, paper };
enum class BprefVariant { paper, trec_eval };

// Per-query scores. `ranking` is the ordered doc list for one query.
double precision_at_k(const std::vector<RunEntry>& ranking, const QueryJudgments& judgments,
                      std::size_t k);
double average_precision(const std::vector<RunEntry>& ranking, const QueryJudgments& judgments,
                         MapVariant variant = MapVariant::trec_eval);
double r_precision(const std::vector<RunEntry>& ranking, const QueryJudgments& judgments);
double bpref(const std::vector<RunEntry>& ranking, const QueryJudgments& judgments,
             BprefVariant variant = BprefVariant::paper);

struct IrScores {
    double map{0.0};
    double rprec{0.0};
    double bpref{0.0};
    std::map<std::size_t, double> p_at_k;
    std::size_t evaluated_queries{0};
    std::vector<std::string> skipped_queries;  // in the run but absent from qrels
};

// Averages the per-query metrics over queries present in both run and qrels;
// run-only queries are skipped (and reported).
IrScores evaluate_run(const RunRanking& run, const QrelSet& qrels,
                      const std::vector<std::size_t>& precision_cutoffs = {5, 10, 20},
                      MapVariant map_variant = MapVariant::trec_eval,
                      BprefVariant bpref_variant = BprefVariant::paper);

}  // namespace dls
