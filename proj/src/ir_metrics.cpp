#include "dls/ir_metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace dls {

void QueryJudgments::add(const std::string& doc, bool rel) {
    auto [it, inserted] = by_doc.emplace(doc, rel);
    if (!inserted) {
        if (it->second == rel) return;
        throw std::invalid_argument("qrels: conflicting judgments for document " + doc);
    }
    if (rel)
        ++relevant;
    else
        ++nonrelevant;
}

double precision_at_k(const std::vector<RunEntry>& ranking, const QueryJudgments& judgments,
                      std::size_t k) {
    if (k == 0) throw std::invalid_argument("precision_at_k: k must be >= 1");
    std::size_t hits = 0;
    const std::size_t scan = std::min(k, ranking.size());  // missing ranks count as non-relevant
    for (std::size_t i = 0; i < scan; ++i) {
        auto it = judgments.by_doc.find(ranking[i].doc);
        if (it != judgments.by_doc.end() && it->second) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double average_precision(const std::vector<RunEntry>& ranking, const QueryJudgments& judgments,
                         MapVariant variant) {
    if (variant == MapVariant::paper) {
        // literal formula: (1/m) * sum_{k=1..m} P@k, m = relevant docs retrieved
        std::size_t m = 0;
        for (const RunEntry& e : ranking) {
            auto it = judgments.by_doc.find(e.doc);
            if (it != judgments.by_doc.end() && it->second) ++m;
        }
        if (m == 0) return 0.0;
        double sum = 0.0;
        for (std::size_t k = 1; k <= m; ++k) sum += precision_at_k(ranking, judgments, k);
        return sum / static_cast<double>(m);
    }

    // trec_eval: precision at the rank of each relevant retrieved doc, over R
    if (judgments.relevant == 0) return 0.0;
    std::size_t rel_seen = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        auto it = judgments.by_doc.find(ranking[i].doc);
        if (it != judgments.by_doc.end() && it->second) {
            ++rel_seen;
            sum += static_cast<double>(rel_seen) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(judgments.relevant);
}

double r_precision(const std::vector<RunEntry>& ranking, const QueryJudgments& judgments) {
    const std::size_t r = judgments.relevant;
    if (r == 0) return 0.0;
    std::size_t hits = 0;
    const std::size_t scan = std::min(r, ranking.size());
    for (std::size_t i = 0; i < scan; ++i) {
        auto it = judgments.by_doc.find(ranking[i].doc);
        if (it != judgments.by_doc.end() && it->second) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(r);
}

double bpref(const std::vector<RunEntry>& ranking, const QueryJudgments& judgments,
             BprefVariant variant) {
    const std::size_t r_total = judgments.relevant;
    if (r_total == 0) return 0.0;

    // denominator: R for the literal formula, min(R, N) for trec_eval parity
    const std::size_t denom = variant == BprefVariant::paper
                                  ? r_total
                                  : std::min(r_total, judgments.nonrelevant);

    // Only the first `denom` judged non-relevant retrieved documents count
    // against a relevant document; unjudged documents are invisible.
    double sum = 0.0;
    std::size_t nonrel_above = 0;
    for (const RunEntry& e : ranking) {
        auto it = judgments.by_doc.find(e.doc);
        if (it == judgments.by_doc.end()) continue;
        if (it->second) {
            if (denom == 0)
                sum += 1.0;
            else
                sum += 1.0 - static_cast<double>(std::min(nonrel_above, denom)) /
                                 static_cast<double>(denom);
        } else {
            ++nonrel_above;
        }
    }
    return sum / static_cast<double>(r_total);
}

IrScores evaluate_run(const RunRanking& run, const QrelSet& qrels,
                      const std::vector<std::size_t>& precision_cutoffs, MapVariant map_variant,
                      BprefVariant bpref_variant) {
    IrScores scores;
    for (std::size_t k : precision_cutoffs) scores.p_at_k[k] = 0.0;

    for (const auto& [qid, ranking] : run.queries) {
        auto it = qrels.queries.find(qid);
        if (it == qrels.queries.end()) {
            scores.skipped_queries.push_back(qid);
            continue;
        }
        const QueryJudgments& judgments = it->second;
        scores.map += average_precision(ranking, judgments, map_variant);
        scores.rprec += r_precision(ranking, judgments);
        scores.bpref += bpref(ranking, judgments, bpref_variant);
        for (std::size_t k : precision_cutoffs)
            scores.p_at_k[k] += precision_at_k(ranking, judgments, k);
        ++scores.evaluated_queries;
    }

    if (scores.evaluated_queries > 0) {
        const auto n = static_cast<double>(scores.evaluated_queries);
        scores.map /= n;
        scores.rprec /= n;
        scores.bpref /= n;
        for (auto& [k, v] : scores.p_at_k) v /= n;
    }
    return scores;
}

}  // namespace dls
