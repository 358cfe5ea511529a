#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <random>

#include "cachesort/distsort.hpp"
#include "cachesort/process.hpp"
#include "doctest.h"

using namespace cachesort;

namespace {

Classifier identity(uint32_t k) {
    return Classifier::custom(k, [](uint64_t w) { return static_cast<uint32_t>(w); });
}

// independent oracle: stable counting sort
std::vector<uint64_t> counting_sort_oracle(std::span<const uint64_t> data, const Classifier& cls) {
    std::vector<std::vector<uint64_t>> buckets(cls.k());
    for (uint64_t w : data) buckets[cls.classify(w)].push_back(w);
    std::vector<uint64_t> out;
    for (auto& b : buckets) out.insert(out.end(), b.begin(), b.end());
    return out;
}

std::vector<uint64_t> random_words(size_t n, uint64_t seed, uint64_t modulo) {
    std::mt19937_64 rng(seed);
    std::vector<uint64_t> v(n);
    for (auto& w : v) w = rng() % modulo;
    return v;
}

std::pair<uint64_t, uint64_t> multiset_checksum(std::span<const uint64_t> v) {
    uint64_t sum = 0, x = 0;
    for (uint64_t w : v) {
        sum += w;
        x ^= w * 0x9e3779b97f4a7c15ull;
    }
    return {sum, x};
}

}  // namespace

TEST_CASE("count phase: cumulative starts") {
    std::vector<uint64_t> data{2, 0, 1};
    CountArrays ca = count_phase(data, identity(3));
    CHECK(ca.count == std::vector<uint64_t>{0, 1, 2});
    CHECK(ca.start == ca.count);

    CountArrays empty = count_phase(std::vector<uint64_t>{}, identity(3));
    CHECK(empty.count == std::vector<uint64_t>{0, 0, 0});
}

TEST_CASE("count phase: all-equal keys against a histogram") {
    std::vector<uint64_t> data(500, 2);
    CountArrays ca = count_phase(data, identity(4));
    CHECK(ca.count == std::vector<uint64_t>{0, 0, 0, 500});
}

TEST_CASE("out-of-place permute: tiny example and stability") {
    std::vector<uint64_t> data{2, 0, 1};
    CountArrays ca = count_phase(data, identity(3));
    CHECK(permute_out_of_place(data, ca, identity(3)) == std::vector<uint64_t>{0, 1, 2});

    // stability: equal-class keys keep their input order
    auto cls = Classifier::custom(2, [](uint64_t w) { return static_cast<uint32_t>(w >> 8); });
    std::vector<uint64_t> tagged{0x001, 0x102, 0x003, 0x104, 0x005};
    CountArrays ca2 = count_phase(tagged, cls);
    CHECK(permute_out_of_place(tagged, ca2, cls) ==
          std::vector<uint64_t>{0x001, 0x003, 0x005, 0x102, 0x104});

    // already grouped input is returned unchanged
    std::vector<uint64_t> grouped{0, 0, 1, 2, 2};
    CountArrays ca3 = count_phase(grouped, identity(3));
    CHECK(permute_out_of_place(grouped, ca3, identity(3)) == grouped);
}

TEST_CASE("out-of-place permute matches the counting-sort oracle") {
    auto data = random_words(100000, 21, 64);
    Classifier cls = identity(64);
    CountArrays ca = count_phase(data, cls);
    CHECK(permute_out_of_place(data, ca, cls) == counting_sort_oracle(data, cls));
}

TEST_CASE("in-place permute: the single 3-cycle example") {
    std::vector<uint64_t> data{2, 0, 1};
    CountArrays ca = count_phase(data, identity(3));
    std::vector<MemRef> trace;
    uint64_t steps = permute_in_place_traced(std::span<uint64_t>(data), ca, identity(3),
                                             TraceLayout{100, 0, 0, 50},
                                             [&trace](const MemRef& r) { trace.push_back(r); });
    CHECK(data == std::vector<uint64_t>{0, 1, 2});
    CHECK(steps == 3);
    int count_acc = 0, data_acc = 0, other_acc = 0;
    for (const MemRef& r : trace) {
        if (r.tag == MemTag::count()) count_acc++;
        if (r.tag == MemTag::data()) data_acc++;
        if (r.tag == MemTag::other()) other_acc++;
    }
    CHECK(count_acc == 3);
    CHECK(data_acc == 3);
    CHECK(other_acc > 0);
}

TEST_CASE("in-place permute: already-grouped input is unchanged") {
    std::vector<uint64_t> data{0, 0, 1, 1, 2, 3, 3, 3};
    std::vector<uint64_t> orig = data;
    CountArrays ca = count_phase(data, identity(4));
    uint64_t steps = permute_in_place(data, ca, identity(4));
    CHECK(data == orig);
    CHECK(steps == data.size());
}

TEST_CASE("in-place permute: grouped output, same per-class multisets as out-of-place") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        auto data = random_words(100000, seed, 1 << 20);
        Classifier cls = Classifier::top_bits(14, 63);  // 64 classes from bits 14..19
        CountArrays ca = count_phase(data, cls);
        std::vector<uint64_t> oop = permute_out_of_place(data, ca, cls);

        std::vector<uint64_t> inp = data;
        uint64_t steps = permute_in_place(inp, ca, cls);
        CHECK(steps == data.size());

        // same class boundaries and, within each class, the same multiset
        for (uint32_t c = 0; c < cls.k(); c++) {
            const uint64_t lo = ca.start[c];
            const uint64_t hi = c + 1 < cls.k() ? ca.start[c + 1] : data.size();
            auto a = multiset_checksum(std::span<const uint64_t>(oop.data() + lo, hi - lo));
            auto b = multiset_checksum(std::span<const uint64_t>(inp.data() + lo, hi - lo));
            CHECK(a == b);
        }
        // grouping: class labels never decrease along the output
        for (size_t i = 1; i < inp.size(); i++)
            CHECK(cls.classify(inp[i - 1]) <= cls.classify(inp[i]));
        // permutation: whole-array multiset preserved
        CHECK(multiset_checksum(inp) == multiset_checksum(data));
    }
}

TEST_CASE("in-place permute handles empty and heavy classes") {
    // two-point mass with empty top classes
    std::vector<uint64_t> data;
    std::mt19937_64 rng(9);
    for (int i = 0; i < 5000; i++) data.push_back(rng() % 2 ? 1 : 6);
    Classifier cls = identity(8);
    CountArrays ca = count_phase(data, cls);
    std::vector<uint64_t> inp = data;
    permute_in_place(inp, ca, cls);
    CHECK(std::is_sorted(inp.begin(), inp.end()));
    CHECK(multiset_checksum(inp) == multiset_checksum(data));
}

TEST_CASE("traced_permute materializes result and trace together") {
    std::vector<uint64_t> data{2, 0, 1};
    TracedPermute t =
        traced_permute(PermuteVariant::InPlace, data, identity(3), TraceLayout{10, 0, 0, 5});
    CHECK(t.result == std::vector<uint64_t>{0, 1, 2});
    CHECK(t.trace.size() > 6);
    TracedPermute o =
        traced_permute(PermuteVariant::OutOfPlace, data, identity(3), TraceLayout{10, 20, 0, 5});
    CHECK(o.result == std::vector<uint64_t>{0, 1, 2});
    CHECK(o.trace.size() == 9);  // n SRC + n COUNT + n DEST
}

TEST_CASE("traced out-of-place: exactly n SRC, n COUNT, n DEST model accesses") {
    auto data = random_words(1000, 4, 16);
    Classifier cls = identity(16);
    CountArrays ca = count_phase(data, cls);
    size_t src = 0, cnt = 0, dst = 0, other = 0;
    permute_out_of_place_traced(data, ca, cls, TraceLayout{0, 2000, 4000, 5000},
                                [&](const MemRef& r) {
                                    if (r.tag == MemTag::src()) src++;
                                    if (r.tag == MemTag::count()) cnt++;
                                    if (r.tag == MemTag::dest()) dst++;
                                    if (r.tag == MemTag::other()) other++;
                                });
    CHECK(src == 1000);
    CHECK(cnt == 1000);
    CHECK(dst == 1000);
    CHECK(other == 0);
}

TEST_CASE("traced permutes reproduce process-level miss rates") {
    // uniform random keys through the real permute vs the modelled process
    const CacheGeometry geom(8, 128);
    const uint32_t k = 16;
    const uint64_t n = 1000000;
    const int seeds = 8;

    auto run_traced = [&](bool in_place, uint64_t seed) {
        auto data = random_words(n, seed, uint64_t{1} << 32);
        Classifier cls = Classifier::top_bits(28, k - 1);
        CountArrays ca = count_phase(data, cls);
        // layout mirrors the model: aligned count array, start array and
        // the data/dest regions disjoint from it
        const uint64_t start_base = 64;
        const uint64_t data_base = 256;
        const uint64_t dest_base = data_base + n + 64;
        Simulator sim(geom, dest_base + n + 64);
        auto sink = [&sim](const MemRef& r) { sim.access(r); };
        if (in_place) {
            std::vector<uint64_t> copy = data;
            permute_in_place_traced(std::span<uint64_t>(copy), ca, cls,
                                    TraceLayout{data_base, 0, 0, start_base}, sink);
            const auto& st = sim.stats();
            return (st.at(MemTag::count()).misses + st.at(MemTag::data()).misses) /
                   static_cast<double>(n);
        }
        permute_out_of_place_traced(data, ca, cls, TraceLayout{data_base, dest_base, 0, start_base},
                                    sink);
        const auto& st = sim.stats();
        return (st.at(MemTag::count()).misses + st.at(MemTag::dest()).misses +
                st.at(MemTag::src()).misses) /
               static_cast<double>(n);
    };

    for (bool in_place : {true, false}) {
        double traced = 0, modelled = 0;
        for (int s = 0; s < seeds; s++) {
            traced += run_traced(in_place, 500 + s);
            ProcessParams p{ClassDistribution::uniform(k), n, geom, 500 + (uint64_t)s,
                            in_place ? ProcessVariant::InPlace : ProcessVariant::OutOfPlace};
            modelled += run_process(p).total_rate();
        }
        traced /= seeds;
        modelled /= seeds;
        CHECK(std::abs(traced - modelled) / modelled < 0.10);
    }
}

TEST_CASE("range classifier: exact arithmetic at the top edge") {
    Classifier cls = Classifier::range(0, 1000, 10);
    CHECK(cls.classify(0) == 0);
    CHECK(cls.classify(999) == 9);
    CHECK(cls.classify(100) == 1);
    CHECK_THROWS_AS(cls.classify(1000), std::out_of_range);

    // huge range, no overflow
    Classifier wide = Classifier::range(0, uint64_t(1) << 62, 1 << 16);
    CHECK(wide.classify((uint64_t(1) << 62) - 1) == (1 << 16) - 1);
}
