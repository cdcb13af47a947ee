#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dls/bench.hpp"
#include "dls/exact.hpp"
#include "dls/io.hpp"
#include "dls/ir_metrics.hpp"
#include "dls/link_index.hpp"
#include "dls/pooling.hpp"
#include "dls/search.hpp"
#include "dls/synth.hpp"

namespace {

using nlohmann::json;

struct Preset {
    std::uint32_t k_index;
    std::uint32_t k_search;
};

// best hyper-parameter pairs per benchmark dataset
const std::map<std::string, Preset> kPresets = {
    {"artificial", {50, 20}}, {"faces", {50, 20}},        {"corel", {50, 10}},
    {"mnist", {40, 15}},      {"fmnist", {50, 10}},       {"covtype", {40, 50}},
    {"tinyimages", {20, 50}}, {"twitter", {30, 20}},      {"yearpred", {30, 25}},
    {"sift", {40, 30}},       {"gist", {40, 55}},         {"openi-resnet", {110, 35}},
    {"openi-convnext", {30, 110}},
};

int cmd_gen(const std::string& out, std::size_t n, std::size_t dim, const std::string& dist,
            std::uint64_t seed) {
    dls::Distribution d = dls::Distribution::uniform;
    if (dist == "gaussian")
        d = dls::Distribution::gaussian;
    else if (dist == "clustered")
        d = dls::Distribution::clustered;
    else if (dist != "uniform")
        throw std::invalid_argument("gen: unknown distribution " + dist);
    dls::VectorSet vs = dls::generate_vectors(n, dim, d, seed);
    dls::write_fvecs(vs, out);
    json j{{"schema_version", dls::kReportSchemaVersion}, {"action", "gen"},   {"n", n},
           {"dim", dim},                                  {"dist", dist},      {"seed", seed},
           {"out", out}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_build(const std::string& data, std::uint32_t k_index, std::uint64_t seed,
              const std::string& out) {
    dls::VectorSet vectors = dls::read_fvecs(data);
    dls::LinkIndex index = dls::build_index(vectors, k_index, seed);
    dls::write_index(index, out);
    json j{{"schema_version", dls::kReportSchemaVersion},
           {"action", "build"},
           {"data", data},
           {"n", index.count},
           {"dim", index.dim},
           {"k_index", index.k_index},
           {"seed", index.seed},
           {"root_id", index.root_id},
           {"distance_computations", index.stats.distance_computations},
           {"build_seconds", index.stats.build_seconds},
           {"out", out}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_search(const std::string& index_path, const std::string& data_path,
               const std::string& queries_path, std::uint32_t k_search, std::uint32_t k,
               const std::string& truth, const std::string& report_path, bool with_brute,
               const std::string& dataset_name) {
    if (k > k_search)
        throw std::invalid_argument("search: --k (" + std::to_string(k) +
                                    ") must not exceed --k-search (" + std::to_string(k_search) +
                                    ")");
    dls::LinkIndex index = dls::read_index(index_path);
    dls::VectorSet base = dls::read_fvecs(data_path);
    dls::VectorSet queries = dls::read_fvecs(queries_path);
    if (base.size() != index.count || base.dim() != index.dim)
        throw std::invalid_argument("search: data file does not match the index (n=" +
                                    std::to_string(base.size()) + ", dim=" +
                                    std::to_string(base.dim()) + ")");
    if (queries.dim() != base.dim())
        throw std::invalid_argument("search: query dim " + std::to_string(queries.dim()) +
                                    " != data dim " + std::to_string(base.dim()));

    const std::size_t truth_k = std::max<std::size_t>(k, 10);
    dls::GroundTruth gt;
    if (truth == "auto") {
        gt = dls::compute_ground_truth(base, queries, truth_k);
    } else {
        dls::IntMatrix m = dls::read_ivecs(truth);
        if (m.rows != queries.size() || m.cols < 10)
            throw std::invalid_argument(
                "search: truth file must have one row per query and >= 10 columns");
        gt.k = m.cols;
        gt.queries.resize(m.rows);
        for (std::size_t r = 0; r < m.rows; ++r) {
            for (std::size_t c = 0; c < m.cols; ++c) {
                const auto id = m.at(r, c);
                if (id < 0) continue;
                gt.queries[r].ranked.push_back({static_cast<dls::VectorId>(id), 0.0});
                gt.queries[r].acceptable.push_back(static_cast<dls::VectorId>(id));
            }
            std::sort(gt.queries[r].acceptable.begin(), gt.queries[r].acceptable.end());
        }
    }

    dls::BenchReport report =
        dls::run_search_benchmark(index, base, queries, k_search, k, gt, with_brute);
    report.dataset = dataset_name;
    const std::string text = report.to_json();
    std::cout << text << "\n";
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::trunc);
        if (!out) throw dls::io_error("cannot open " + report_path + " for writing");
        out << text << "\n";
    }
    return 0;
}

int cmd_pool(const std::string& tensor_path, const std::string& mode, float p,
             const std::string& params_path, float epsilon, const std::string& spatial_mode,
             const std::string& out) {
    dls::Tensor t = dls::read_tensor(tensor_path);
    dls::FeatureMap map = dls::tensor_to_feature_map(t);

    dls::Descriptor desc;
    if (mode == "max") {
        desc = dls::pool_max(map);
    } else if (mode == "sum") {
        desc = dls::pool_sum(map);
    } else if (mode == "mean") {
        desc = dls::pool_mean(map);
    } else if (mode == "gem") {
        desc = dls::pool_gem(map, p);
    } else if (mode == "spatial") {
        dls::SpatialAttentionMode m = dls::SpatialAttentionMode::averaged;
        if (spatial_mode == "row")
            m = dls::SpatialAttentionMode::row;
        else if (spatial_mode == "column")
            m = dls::SpatialAttentionMode::column;
        else if (spatial_mode != "averaged")
            throw std::invalid_argument("pool: unknown spatial mode " + spatial_mode);
        desc = dls::pool_spatial_attention(map, m);
    } else if (mode == "channel") {
        desc = dls::pool_channel_attention(map);
    } else if (mode == "lnorm-mean") {
        if (params_path.empty())
            throw std::invalid_argument("pool: --params is required for lnorm-mean");
        dls::LayerNormParams params =
            dls::tensor_to_layernorm_params(dls::read_tensor(params_path), epsilon);
        desc = dls::pool_layernorm_mean(map, params);
    } else {
        throw std::invalid_argument("pool: unknown mode " + mode);
    }

    dls::Tensor out_tensor;
    out_tensor.dims = {desc.size()};
    out_tensor.data = desc;
    dls::write_tensor(out_tensor, out);
    json j{{"schema_version", dls::kReportSchemaVersion},
           {"action", "pool"},
           {"mode", mode},
           {"channels", desc.size()},
           {"out", out}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_ireval(const std::string& run_path, const std::string& qrels_path,
               const std::string& map_variant, const std::string& bpref_variant,
               const std::string& report_path) {
    dls::RunRanking run = dls::parse_run(run_path);
    dls::QrelSet qrels = dls::parse_qrels(qrels_path);

    dls::MapVariant mv = dls::MapVariant::trec_eval;
    if (map_variant == "paper")
        mv = dls::MapVariant::paper;
    else if (map_variant != "trec")
        throw std::invalid_argument("ireval: unknown map variant " + map_variant);
    dls::BprefVariant bv = dls::BprefVariant::paper;
    if (bpref_variant == "trec")
        bv = dls::BprefVariant::trec_eval;
    else if (bpref_variant != "paper")
        throw std::invalid_argument("ireval: unknown bpref variant " + bpref_variant);

    if (run.queries.empty())
        std::cerr << "warning: run file contains no queries; all metrics are zero\n";

    dls::IrScores scores = dls::evaluate_run(run, qrels, {5, 10, 20}, mv, bv);
    for (const std::string& q : scores.skipped_queries)
        std::cerr << "warning: query " << q << " has no relevance judgments; skipped\n";

    json p;
    for (const auto& [cut, v] : scores.p_at_k) p[std::to_string(cut)] = v;
    json j{{"schema_version", dls::kReportSchemaVersion},
           {"action", "ireval"},
           {"map", scores.map},
           {"p_at_k", p},
           {"rprec", scores.rprec},
           {"bpref", scores.bpref},
           {"map_variant", map_variant},
           {"bpref_variant", bpref_variant},
           {"evaluated_queries", scores.evaluated_queries},
           {"skipped_queries", scores.skipped_queries}};
    const std::string text = j.dump(2);
    std::cout << text << "\n";
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::trunc);
        if (!out) throw dls::io_error("cannot open " + report_path + " for writing");
        out << text << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dls: dense-link nearest neighbor search toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "synthesize an fvecs dataset");
    std::size_t gen_n = 1000, gen_dim = 16;
    std::string gen_dist = "uniform", gen_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--n", gen_n, "vector count");
    gen->add_option("--dim", gen_dim, "dimensions");
    gen->add_option("--dist", gen_dist, "uniform|gaussian|clustered");
    gen->add_option("--seed", gen_seed, "rng seed");
    gen->add_option("--out", gen_out, "output fvecs path")->required();

    // build
    auto* build = app.add_subcommand("build", "build an index from an fvecs file");
    std::string build_data, build_out, build_preset;
    std::uint32_t build_k = 50;
    std::uint64_t build_seed = 0;
    build->add_option("--data", build_data, "fvecs input")->required();
    build->add_option("--k-index", build_k, "neighbors kept per node");
    build->add_option("--seed", build_seed, "build seed");
    build->add_option("--preset", build_preset, "dataset preset (sets --k-index)");
    build->add_option("--out", build_out, "output index path")->required();

    // search
    auto* search = app.add_subcommand("search", "run timed queries against an index");
    std::string s_index, s_data, s_queries, s_truth = "auto", s_report, s_preset, s_name;
    std::uint32_t s_ksearch = 20, s_k = 10;
    bool s_brute = false;
    search->add_option("--index", s_index)->required();
    search->add_option("--data", s_data)->required();
    search->add_option("--queries", s_queries)->required();
    search->add_option("--k-search", s_ksearch, "candidate heap size");
    search->add_option("--k", s_k, "neighbors returned");
    search->add_option("--truth", s_truth, "ivecs ground truth path, or 'auto'");
    search->add_option("--report", s_report, "write the JSON report here too");
    search->add_option("--preset", s_preset, "dataset preset (sets --k-search)");
    search->add_option("--name", s_name, "dataset label for the report");
    search->add_flag("--with-brute", s_brute, "also time the brute-force scan");

    // pool
    auto* pool = app.add_subcommand("pool", "aggregate a K x W x H feature map");
    std::string p_tensor, p_mode = "mean", p_params, p_out, p_spatial = "averaged";
    float p_p = 2.0f, p_eps = 1e-6f;
    pool->add_option("--tensor", p_tensor, "input DLST tensor (rank 3)")->required();
    pool->add_option("--mode", p_mode, "max|sum|mean|gem|spatial|channel|lnorm-mean");
    pool->add_option("--p", p_p, "generalized-mean exponent");
    pool->add_option("--params", p_params, "layer-norm parameter tensor [2, K]");
    pool->add_option("--epsilon", p_eps, "layer-norm epsilon");
    pool->add_option("--spatial-mode", p_spatial, "averaged|row|column");
    pool->add_option("--out", p_out, "output DLST tensor (rank 1)")->required();

    // ireval
    auto* ireval = app.add_subcommand("ireval", "score a run file against qrels");
    std::string i_run, i_qrels, i_map = "trec", i_bpref = "paper", i_report;
    ireval->add_option("--run", i_run)->required();
    ireval->add_option("--qrels", i_qrels)->required();
    ireval->add_option("--map-variant", i_map, "trec|paper");
    ireval->add_option("--bpref-variant", i_bpref, "paper|trec");
    ireval->add_option("--report", i_report, "write the JSON report here too");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_out, gen_n, gen_dim, gen_dist, gen_seed);
        if (build->parsed()) {
            if (!build_preset.empty()) {
                auto it = kPresets.find(build_preset);
                if (it == kPresets.end())
                    throw std::invalid_argument("unknown preset " + build_preset);
                build_k = it->second.k_index;
            }
            return cmd_build(build_data, build_k, build_seed, build_out);
        }
        if (search->parsed()) {
            if (!s_preset.empty()) {
                auto it = kPresets.find(s_preset);
                if (it == kPresets.end()) throw std::invalid_argument("unknown preset " + s_preset);
                s_ksearch = it->second.k_search;
                if (s_name.empty()) s_name = s_preset;
            }
            return cmd_search(s_index, s_data, s_queries, s_ksearch, s_k, s_truth, s_report,
                              s_brute, s_name);
        }
        if (pool->parsed())
            return cmd_pool(p_tensor, p_mode, p_p, p_params, p_eps, p_spatial, p_out);
        if (ireval->parsed()) return cmd_ireval(i_run, i_qrels, i_map, i_bpref, i_report);
    } catch (const dls::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
