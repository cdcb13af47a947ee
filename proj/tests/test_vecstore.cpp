#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dls/rng.hpp"
#include "dls/vecstore.hpp"

using namespace dls;

namespace {

// naive scalar-loop reference, float accumulation on purpose
double naive_distance(const std::vector<float>& a, const std::vector<float>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += (double(a[i]) - double(b[i])) * (double(a[i]) - double(b[i]));
    return std::sqrt(acc);
}

// Kahan-compensated reference
double kahan_distance(const std::vector<float>& a, const std::vector<float>& b) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double term = (double(a[i]) - double(b[i])) * (double(a[i]) - double(b[i]));
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return std::sqrt(sum);
}

std::vector<float> random_vec(SplitMix64& rng, std::size_t d, double scale = 1.0) {
    std::vector<float> v(d);
    for (auto& x : v) x = static_cast<float>((rng.next_double() * 2.0 - 1.0) * scale);
    return v;
}

}  // namespace

TEST_CASE("distance identity and 3-4-5 triangle") {
    std::vector<float> z{0.0f, 0.0f}, p{3.0f, 4.0f};
    CHECK(distance(z, z) == 0.0f);
    CHECK(distance(z, p) == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(distance(p, z) == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("distance rejects dimension mismatch") {
    std::vector<float> a{1.0f, 2.0f}, b{1.0f, 2.0f, 3.0f};
    CHECK_THROWS_AS(distance(a, b), std::invalid_argument);
}

TEST_CASE("random 128-d pair matches the naive-loop reference") {
    SplitMix64 rng(42);
    for (int t = 0; t < 20; ++t) {
        auto a = random_vec(rng, 128);
        auto b = random_vec(rng, 128);
        const double expected = naive_distance(a, b);
        CHECK(distance(a, b) == doctest::Approx(expected).epsilon(1e-5));
    }
}

TEST_CASE("distance matches a Kahan reference up to d=1536") {
    SplitMix64 rng(7);
    for (std::size_t d : {8u, 64u, 400u, 1536u}) {
        auto a = random_vec(rng, d, 100.0);
        auto b = random_vec(rng, d, 100.0);
        const double expected = kahan_distance(a, b);
        CHECK(distance(a, b) == doctest::Approx(expected).epsilon(1e-5));
    }
}

TEST_CASE("distance is symmetric and satisfies the triangle inequality") {
    SplitMix64 rng(99);
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 2 + rng.next_below(30);
        auto a = random_vec(rng, d);
        auto b = random_vec(rng, d);
        auto c = random_vec(rng, d);
        const float ab = distance(a, b), ba = distance(b, a);
        const float bc = distance(b, c), ac = distance(a, c);
        CHECK(ab == ba);
        CHECK(ac <= ab + bc + 1e-4f);
    }
}

TEST_CASE("VectorSet rows are zero-copy views with bounds checking") {
    VectorSet set(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(set.size() == 2);
    CHECK(set.dim() == 3);
    CHECK(set[0][0] == 1.0f);
    CHECK(set.at(0).data() == set.data());          // first row aliases the storage
    CHECK(set.at(1).data() == set.data() + 3);      // last row
    CHECK(set.at(1)[2] == 6.0f);
    CHECK_THROWS_AS(set.at(2), std::out_of_range);  // id == N
}

TEST_CASE("VectorSet validates data length") {
    CHECK_THROWS_AS(VectorSet(2, 3, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(VectorSet(1, 0, {}), std::invalid_argument);
}
