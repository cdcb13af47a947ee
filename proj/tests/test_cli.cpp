#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dls/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = DLS_CLI_PATH;

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "dls-cli-tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args, const fs::path& stdout_file = {}) {
    std::string cmd = kCli + " " + args;
    if (!stdout_file.empty()) cmd += " > " + stdout_file.string();
    cmd += " 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

json json_from(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("gen -> build -> search pipeline") {
    const auto dir = work_dir();
    const auto data = dir / "base.fvecs";
    const auto queries = dir / "q.fvecs";
    const auto index = dir / "a.dlsi";
    const auto report = dir / "report.json";

    REQUIRE(run("gen --n 400 --dim 8 --dist uniform --seed 1 --out " + data.string()) == 0);
    REQUIRE(run("gen --n 30 --dim 8 --dist uniform --seed 2 --out " + queries.string()) == 0);
    REQUIRE(run("build --data " + data.string() + " --k-index 8 --seed 0 --out " +
                index.string()) == 0);
    CHECK(fs::exists(index));

    REQUIRE(run("search --index " + index.string() + " --data " + data.string() +
                " --queries " + queries.string() + " --k-search 20 --k 10 --truth auto" +
                " --report " + report.string()) == 0);
    const json r = json_from(report);
    CHECK(r["schema_version"] == 1);
    CHECK(r["n"] == 400);
    CHECK(r["k_search"] == 20);
    CHECK(r["recall_at_10"].get<double>() > 90.0);
    CHECK(r["atpq_ms"].get<double>() > 0.0);
    CHECK(r["distance_evals_mean"].get<double>() > 0.0);
}

TEST_CASE("rebuilding with the same seed produces byte-identical index files") {
    const auto dir = work_dir();
    const auto data = dir / "det.fvecs";
    const auto i1 = dir / "det1.dlsi";
    const auto i2 = dir / "det2.dlsi";
    REQUIRE(run("gen --n 250 --dim 6 --seed 9 --out " + data.string()) == 0);
    REQUIRE(run("build --data " + data.string() + " --k-index 5 --seed 3 --out " + i1.string()) == 0);
    REQUIRE(run("build --data " + data.string() + " --k-index 5 --seed 3 --out " + i2.string()) == 0);
    CHECK(file_bytes(i1) == file_bytes(i2));
}

TEST_CASE("identical search invocations produce identical metric fields") {
    const auto dir = work_dir();
    const auto r1 = dir / "s1.json", r2 = dir / "s2.json";
    const auto data = dir / "base.fvecs";
    const auto queries = dir / "q.fvecs";
    const auto index = dir / "a.dlsi";
    const std::string cmd = "search --index " + index.string() + " --data " + data.string() +
                            " --queries " + queries.string() + " --k-search 15 --k 10";
    REQUIRE(run(cmd + " --report " + r1.string()) == 0);
    REQUIRE(run(cmd + " --report " + r2.string()) == 0);
    const json a = json_from(r1), b = json_from(r2);
    CHECK(a["recall_at_10"] == b["recall_at_10"]);
    CHECK(a["distance_evals_mean"] == b["distance_evals_mean"]);
}

TEST_CASE("missing input file exits 2 with a diagnostic") {
    CHECK(run("build --data /nonexistent.fvecs --k-index 5 --out /tmp/x.dlsi") == 2);
}

TEST_CASE("k > k-search exits 2") {
    const auto dir = work_dir();
    CHECK(run("search --index " + (dir / "a.dlsi").string() + " --data " +
              (dir / "base.fvecs").string() + " --queries " + (dir / "q.fvecs").string() +
              " --k-search 5 --k 10") == 2);
}

TEST_CASE("pool subcommand") {
    const auto dir = work_dir();
    const auto tensor = dir / "map.dlst";
    const auto out = dir / "desc.dlst";

    dls::Tensor t;
    t.dims = {3, 2, 2};
    t.data = {1, 2, 3, 4, 2, 2, 2, 2, 0, 1, 0, 1};
    dls::write_tensor(t, tensor);

    SUBCASE("mean produces a K-vector") {
        REQUIRE(run("pool --tensor " + tensor.string() + " --mode mean --out " + out.string()) == 0);
        dls::Tensor d = dls::read_tensor(out);
        REQUIRE(d.dims == std::vector<std::uint64_t>{3});
        CHECK(d.data[0] == doctest::Approx(2.5));
        CHECK(d.data[1] == doctest::Approx(2.0));
        CHECK(d.data[2] == doctest::Approx(0.5));
    }
    SUBCASE("gem defaults to p = 2") {
        REQUIRE(run("pool --tensor " + tensor.string() + " --mode gem --out " + out.string()) == 0);
        dls::Tensor d = dls::read_tensor(out);
        CHECK(d.data[0] == doctest::Approx(std::sqrt(30.0 / 4.0)));  // (1+4+9+16)/4
    }
    SUBCASE("lnorm-mean without --params exits 2") {
        CHECK(run("pool --tensor " + tensor.string() + " --mode lnorm-mean --out " +
                  out.string()) == 2);
    }
    SUBCASE("lnorm-mean with params") {
        dls::Tensor params;
        params.dims = {2, 3};
        params.data = {1, 1, 1, 0, 0, 0};
        const auto pfile = dir / "ln.dlst";
        dls::write_tensor(params, pfile);
        REQUIRE(run("pool --tensor " + tensor.string() + " --mode lnorm-mean --params " +
                    pfile.string() + " --out " + out.string()) == 0);
        dls::Tensor d = dls::read_tensor(out);
        CHECK(d.dims == std::vector<std::uint64_t>{3});
    }
    SUBCASE("unknown mode exits 2") {
        CHECK(run("pool --tensor " + tensor.string() + " --mode bogus --out " + out.string()) == 2);
    }
}

TEST_CASE("ireval subcommand") {
    const auto dir = work_dir();
    const auto qrels = dir / "t.qrels";
    const auto runf = dir / "t.run";
    const auto report = dir / "ir.json";

    SUBCASE("perfect toy run scores 1.0 everywhere") {
        std::ofstream(qrels, std::ios::trunc)
            << "q1 0 a 1\nq1 0 b 1\nq1 0 x 0\nq1 0 y 0\n";
        std::ofstream(runf, std::ios::trunc)
            << "q1 Q0 a 1 4 t\nq1 Q0 b 2 3 t\nq1 Q0 x 3 2 t\nq1 Q0 y 4 1 t\n";
        REQUIRE(run("ireval --run " + runf.string() + " --qrels " + qrels.string() +
                    " --report " + report.string()) == 0);
        const json r = json_from(report);
        CHECK(r["map"].get<double>() == doctest::Approx(1.0));
        CHECK(r["rprec"].get<double>() == doctest::Approx(1.0));
        CHECK(r["bpref"].get<double>() == doctest::Approx(1.0));
    }
    SUBCASE("empty run exits 0 with zeros") {
        std::ofstream(qrels, std::ios::trunc) << "q1 0 a 1\n";
        std::ofstream(runf, std::ios::trunc) << "";
        REQUIRE(run("ireval --run " + runf.string() + " --qrels " + qrels.string() +
                    " --report " + report.string()) == 0);
        const json r = json_from(report);
        CHECK(r["map"].get<double>() == 0.0);
        CHECK(r["evaluated_queries"] == 0);
    }
    SUBCASE("3-query fixture matches the hand-traced values") {
        std::ofstream(qrels, std::ios::trunc)
            << "q1 0 d1 1\nq1 0 d2 1\nq1 0 d3 0\nq1 0 d4 0\n"
            << "q2 0 da 1\nq2 0 db 1\nq2 0 dc 0\n"
            << "q3 0 dx 1\nq3 0 dy 1\nq3 0 dz 0\nq3 0 dw 0\nq3 0 du 0\n";
        std::ofstream(runf, std::ios::trunc)
            << "q1 Q0 d1 1 9 t\nq1 Q0 d3 2 8 t\nq1 Q0 d2 3 7 t\nq1 Q0 d5 4 6 t\nq1 Q0 d4 5 5 t\n"
            << "q2 Q0 dc 1 9 t\nq2 Q0 da 2 8 t\nq2 Q0 dd 3 7 t\nq2 Q0 db 4 6 t\n"
            << "q3 Q0 dz 1 9 t\nq3 Q0 dw 2 8 t\nq3 Q0 dx 3 7 t\nq3 Q0 du 4 6 t\n"
            << "q3 Q0 dq 5 5 t\nq3 Q0 dy 6 4 t\n";
        REQUIRE(run("ireval --run " + runf.string() + " --qrels " + qrels.string() +
                    " --report " + report.string()) == 0);
        const json r = json_from(report);
        CHECK(r["map"].get<double>() == doctest::Approx((5.0 / 6.0 + 0.5 + 1.0 / 3.0) / 3.0));
        CHECK(r["p_at_k"]["5"].get<double>() == doctest::Approx(1.0 / 3.0));
        CHECK(r["rprec"].get<double>() == doctest::Approx(1.0 / 3.0));
        CHECK(r["bpref"].get<double>() == doctest::Approx((0.75 + 0.5) / 3.0));

        REQUIRE(run("ireval --run " + runf.string() + " --qrels " + qrels.string() +
                    " --bpref-variant trec --report " + report.string()) == 0);
        CHECK(json_from(report)["bpref"].get<double>() == doctest::Approx(0.25));
    }
}
