#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "cachesort/floatsort.hpp"
#include "doctest.h"

using namespace cachesort;

TEST_CASE("ordered word mapping: anchors and domain") {
    CHECK(float_to_ordered_word(0.0f) == 0);
    CHECK(float_to_ordered_word(-0.0f) == 0);
    CHECK(float_to_ordered_word(0.5f) == uint64_t{126} << 23);
    CHECK(float_to_ordered_word(0.5) == uint64_t{1022} << 52);
    CHECK_THROWS_AS(float_to_ordered_word(-1.0f), std::invalid_argument);
    CHECK_THROWS_AS(float_to_ordered_word(std::nanf("")), std::invalid_argument);
    CHECK_THROWS_AS(float_to_ordered_word(INFINITY), std::invalid_argument);
}

TEST_CASE("ordered word mapping preserves order and round-trips") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 200000; i++) {
        const float a = std::ldexp(static_cast<float>(rng() % (1 << 24)), -(int)(rng() % 30) - 4);
        const float b = std::ldexp(static_cast<float>(rng() % (1 << 24)), -(int)(rng() % 30) - 4);
        const uint64_t wa = float_to_ordered_word(a), wb = float_to_ordered_word(b);
        if (a < b) CHECK(wa < wb);
        if (a == b) CHECK(wa == wb);
        CHECK(float_to_ordered_word(ordered_word_to_float32(wa)) == wa);
    }
}

TEST_CASE("expected largest class: both branches") {
    const uint32_t e = 8;
    const uint64_t n = 1 << 20;
    CHECK(expected_largest_class(e + 1, e, n) == doctest::Approx(n / 2.0));
    CHECK(expected_largest_class(e + 5, e, n) == doctest::Approx(n / 32.0));
    // wide radix on doubles: n / 2^(r-e)
    CHECK(expected_largest_class(22, 11, uint64_t{1} << 25) ==
          doctest::Approx(std::exp2(14)).epsilon(1e-12));
    // r <= e: verbatim double-exponent form
    CHECK(expected_largest_class(e, e, n) == doctest::Approx(n * (1 - 1.0 / 4)).epsilon(1e-12));
    CHECK(expected_largest_class(e - 1, e, n) ==
          doctest::Approx(n * (1 - 1.0 / 16)).epsilon(1e-12));
    CHECK(expected_largest_class(1, e, n) == doctest::Approx(static_cast<double>(n)));
}

TEST_CASE("largest class after a real first pass matches the wide-radix formula") {
    const uint64_t n = 200000;
    auto keys = generate_uniform_floats(n, 33);
    for (uint32_t r : {9u, 12u}) {
        std::map<uint32_t, uint64_t> hist;
        for (float f : keys) {
            const uint32_t w = static_cast<uint32_t>(float_to_ordered_word(f));
            hist[w >> (32 - r)]++;
        }
        uint64_t largest = 0;
        for (auto& [cls, cnt] : hist) largest = std::max(largest, cnt);
        const double expect = expected_largest_class(r, 8, n);
        CHECK(std::abs(largest - expect) / expect < 0.10);
    }
}

TEST_CASE("theta partition: binomial size and edge cases") {
    const uint64_t n = 1000000;
    auto keys = generate_uniform_floats(n, 7);
    auto [small, big] = partition_theta(keys, 1.0 / 400);
    const double expect = n / 400.0;
    CHECK(std::abs(static_cast<double>(small.size()) - expect) <= 4 * std::sqrt(expect));
    CHECK(small.size() + big.size() == n);
    for (float f : small) CHECK(f < 1.0f / 400);

    std::vector<float> high{0.5f, 0.9f, 0.25f};
    auto [s2, b2] = partition_theta(std::span<const float>(high), 0.01);
    CHECK(s2.empty());
    CHECK(b2.size() == 3);

    auto [s3, b3] = partition_theta(std::span<const float>(high), 1.0 / 3);  // theta = 1/n edge
    CHECK(s3.size() == 1);
}

TEST_CASE("auto plan: the tuned parameters at n = 2^20") {
    RadixPlan plan = auto_plan(uint64_t{1} << 20, FloatFormat::f32(), CacheGeometry(8, 128));
    CHECK(plan.theta == doctest::Approx(1.0 / 400).epsilon(1e-12));
    CHECK(plan.effective_exponent_bits == 4);
    CHECK(plan.groups == 16);
    // the plan always satisfies the bound's preconditions
    CHECK(static_cast<uint64_t>(plan.groups) * plan.group_width <= 8 * 128);
    CHECK(plan.group_width <= 128);
    CHECK(plan.predicted_first_pass_misses > 0);
}

TEST_CASE("auto plan caps the first radix even with an enormous cache") {
    const uint64_t n = 1 << 20;
    RadixPlan plan = auto_plan(n, FloatFormat::f32(), CacheGeometry(8, 1 << 22));
    const double budget =
        std::floor(std::log2((double)n)) - std::ceil(std::log2(std::log2((double)n)));
    CHECK(std::log2((double)plan.first_pass_classes()) <= budget + 1e-9);
}

TEST_CASE("sort matches the comparison oracle on random input") {
    const CacheGeometry geom(8, 128);
    for (uint64_t seed : {1u, 2u}) {
        auto keys = generate_uniform_floats(100000, seed);
        auto expect = keys;
        std::sort(expect.begin(), expect.end());
        sort_floats(keys, geom);
        CHECK(keys == expect);
    }
}

TEST_CASE("sort handles degenerate inputs") {
    const CacheGeometry geom(8, 128);

    std::vector<float> empty;
    sort_floats(empty, geom);
    CHECK(empty.empty());

    std::vector<float> one{0.25f};
    sort_floats(one, geom);
    CHECK(one == std::vector<float>{0.25f});

    auto sorted = generate_uniform_floats(20000, 5);
    std::sort(sorted.begin(), sorted.end());
    auto in = sorted;
    sort_floats(in, geom);
    CHECK(in == sorted);

    auto rev = sorted;
    std::reverse(rev.begin(), rev.end());
    sort_floats(rev, geom);
    CHECK(rev == sorted);

    std::vector<float> equal(20000, 0.75f);
    auto eq = equal;
    sort_floats(eq, geom);
    CHECK(eq == equal);

    std::vector<float> twopoint;
    std::mt19937_64 rng(6);
    for (int i = 0; i < 20000; i++) twopoint.push_back(rng() % 2 ? 0.125f : 0.875f);
    auto tp_expect = twopoint;
    std::sort(tp_expect.begin(), tp_expect.end());
    sort_floats(twopoint, geom);
    CHECK(twopoint == tp_expect);

    std::vector<float> bad{0.5f, 1.5f};
    CHECK_THROWS_AS(sort_floats(bad, geom), std::invalid_argument);
}

TEST_CASE("out-of-place first pass flag still sorts") {
    const CacheGeometry geom(8, 128);
    auto keys = generate_uniform_floats(50000, 9);
    auto expect = keys;
    std::sort(expect.begin(), expect.end());
    RadixPlan plan = auto_plan(keys.size(), FloatFormat::f32(), geom);
    plan.use_out_of_place = true;
    sort_floats(keys, plan);
    CHECK(keys == expect);
}

TEST_CASE("doubles sort too") {
    const CacheGeometry geom(8, 128);
    auto keys = generate_uniform_doubles(50000, 3);
    auto expect = keys;
    std::sort(expect.begin(), expect.end());
    sort_floats(keys, geom);
    CHECK(keys == expect);
}

TEST_CASE("exponent-group frequencies follow the halving law") {
    const uint64_t n = 1000000;
    auto keys = generate_uniform_floats(n, 17);
    std::map<int, uint64_t> groups;
    for (float f : keys) {
        if (f <= 0.0f) continue;
        int exp;
        std::frexp(f, &exp);  // f = m * 2^exp with m in [0.5, 1)
        groups[-exp + 1]++;   // unbiased exponent -i has frexp exponent -(i-1)
    }
    for (int i = 1; i <= 10; i++) {
        const double p = std::exp2(-i);
        const double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(groups[i] / static_cast<double>(n) - p) <= 4 * se);
    }
}

TEST_CASE("first pass trace stays under the group/K bound") {
    const CacheGeometry geom(8, 128);
    const uint64_t n = 200000;
    RadixPlan plan = auto_plan(n, FloatFormat::f32(), geom);
    for (uint64_t seed = 1; seed <= 5; seed++) {
        auto keys = generate_uniform_floats(n, seed);
        FirstPassTrace t = trace_first_pass(keys, plan, FloatFormat::f32(), geom);
        CHECK(t.pass_keys > 0);
        CHECK(static_cast<double>(t.model_misses()) <= t.bound_total);
    }
}

TEST_CASE("key file round trip") {
    auto keys = generate_uniform_floats(1000, 2);
    const std::string path = "/tmp/cachesort_test_keys.bin";
    write_key_file(path, std::span<const float>(keys));
    KeyFile kf = read_key_file(path);
    REQUIRE_FALSE(kf.is_f64);
    CHECK(kf.f32 == keys);
    std::remove(path.c_str());
}

TEST_CASE("audited pipelines sort correctly and the tuned one misses less") {
    const CacheGeometry geom(8, 128);
    auto keys = generate_uniform_floats(50000, 11);
    SortAudit tuned = run_sort_audit(keys, FloatFormat::f32(), geom, PipelineKind::Tuned);
    SortAudit naive =
        run_sort_audit(keys, FloatFormat::f32(), geom, PipelineKind::NaiveSinglePass);
    CHECK(tuned.sorted_ok);
    CHECK(naive.sorted_ok);
    CHECK(tuned.total_misses < naive.total_misses);
}
