#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>
#include <set>
#include <sstream>

#include "cachesort/cache.hpp"
#include "doctest.h"

using namespace cachesort;

TEST_CASE("geometry accepts powers of two only") {
    CHECK_NOTHROW(CacheGeometry(4, 4));
    CHECK_NOTHROW(CacheGeometry(1, 1));
    CHECK_THROWS_AS(CacheGeometry(3, 4), std::invalid_argument);
    CHECK_THROWS_AS(CacheGeometry(4, 12), std::invalid_argument);
    CHECK_THROWS_AS(CacheGeometry(0, 4), std::invalid_argument);
}

TEST_CASE("fresh simulator is empty") {
    Simulator sim(CacheGeometry(4, 4), 64);
    CHECK(sim.stats().total().accesses == 0);
    CHECK(sim.address_space() == 64);
}

TEST_CASE("direct-mapped eviction on aliasing addresses") {
    Simulator sim(CacheGeometry(4, 4), 64);
    CHECK(sim.access({0, MemTag::data()}) == AccessOutcome::CompulsoryMiss);
    // (16 div 4) mod 4 = 0, evicts block 0
    CHECK(sim.access({16, MemTag::data()}) == AccessOutcome::CompulsoryMiss);
    CHECK(sim.access({0, MemTag::data()}) == AccessOutcome::ConflictMiss);
}

TEST_CASE("same-block access hits") {
    Simulator sim(CacheGeometry(4, 4), 64);
    CHECK(sim.access({0, MemTag::data()}) == AccessOutcome::CompulsoryMiss);
    CHECK(sim.access({1, MemTag::data()}) == AccessOutcome::Hit);
}

TEST_CASE("distinct sets do not interact") {
    Simulator sim(CacheGeometry(4, 4), 64);
    CHECK(sim.access({0, MemTag::data()}) == AccessOutcome::CompulsoryMiss);
    // (20 div 4) mod 4 = 1
    CHECK(sim.access({20, MemTag::data()}) == AccessOutcome::CompulsoryMiss);
    CHECK(sim.access({0, MemTag::data()}) == AccessOutcome::Hit);
    CHECK(sim.access({20, MemTag::data()}) == AccessOutcome::Hit);
}

TEST_CASE("out-of-range address is rejected with trace position") {
    Simulator sim(CacheGeometry(4, 4), 16);
    CHECK_THROWS_AS(sim.access({16, MemTag::data()}), std::out_of_range);

    std::vector<MemRef> trace{{0, MemTag::data()}, {99, MemTag::data()}};
    try {
        run_trace(CacheGeometry(4, 4), 16, trace);
        FAIL("expected out_of_range");
    } catch (const std::out_of_range& e) {
        CHECK(std::string(e.what()).find("position 1") != std::string::npos);
    }
}

TEST_CASE("empty trace gives all-zero stats") {
    MissStats s = run_trace(CacheGeometry(4, 4), 64, {});
    CHECK(s.total().accesses == 0);
    CHECK(s.total().misses == 0);
}

TEST_CASE("repeated identical address: one compulsory miss") {
    std::vector<MemRef> trace(100, MemRef{7, MemTag::count()});
    MissStats s = run_trace(CacheGeometry(4, 8), 64, trace);
    CHECK(s.at(MemTag::count()).accesses == 100);
    CHECK(s.at(MemTag::count()).misses == 1);
    CHECK(s.at(MemTag::count()).compulsory_misses == 1);
}

TEST_CASE("single-set thrash: hand-checked 10-access trace") {
    // B=4, C=4: addresses 0,16,32 all map to set 0
    std::vector<MemRef> trace;
    const uint64_t addrs[10] = {0, 16, 32, 0, 16, 32, 0, 1, 17, 33};
    for (uint64_t a : addrs) trace.push_back({a, MemTag::data()});
    MissStats s = run_trace(CacheGeometry(4, 4), 64, trace);
    // first three compulsory, next four conflict, then 1 hits (block 0
    // resident after access 6), 17 and 33 conflict again
    CHECK(s.total().compulsory_misses == 3);
    CHECK(s.total().conflict_misses == 6);
    CHECK(s.total().misses == 9);
}

TEST_CASE("sequential scan misses once per fresh block") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 50; rep++) {
        const uint64_t B = uint64_t{1} << (rng() % 4);
        const uint64_t C = uint64_t{1} << (2 + rng() % 5);
        const uint64_t start = rng() % (B * C);
        const uint64_t w = 1 + rng() % (B * C);  // <= cache capacity: no conflicts
        Simulator sim(CacheGeometry(B, C), 4 * B * C);
        std::set<uint64_t> blocks;
        for (uint64_t i = 0; i < w; i++) {
            sim.access({start + i, MemTag::data()});
            blocks.insert((start + i) / B);
        }
        CHECK(sim.stats().total().misses == blocks.size());
        CHECK(sim.stats().total().compulsory_misses == blocks.size());
    }
}

TEST_CASE("compulsory misses equal distinct blocks touched") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; rep++) {
        const uint64_t B = uint64_t{1} << (rng() % 4);
        const uint64_t C = uint64_t{1} << (rng() % 4);
        const uint64_t space = 512;
        Simulator sim(CacheGeometry(B, C), space);
        std::set<uint64_t> blocks;
        for (int i = 0; i < 300; i++) {
            const uint64_t a = rng() % space;
            sim.access({a, MemTag::data()});
            blocks.insert(a / B);
        }
        CHECK(sim.stats().total().compulsory_misses == blocks.size());
        CHECK(sim.stats().total().misses ==
              sim.stats().total().compulsory_misses + sim.stats().total().conflict_misses);
    }
}

TEST_CASE("identical traces give identical stats") {
    std::mt19937_64 rng(3);
    std::vector<MemRef> trace;
    for (int i = 0; i < 500; i++)
        trace.push_back({rng() % 256, i % 2 ? MemTag::data() : MemTag::count()});
    MissStats a = run_trace(CacheGeometry(4, 8), 256, trace);
    MissStats b = run_trace(CacheGeometry(4, 8), 256, trace);
    CHECK(a == b);
}

TEST_CASE("trace text round trip") {
    std::vector<MemRef> trace{{0, MemTag::count()},
                              {5, MemTag::data()},
                              {9, MemTag::seq(3)},
                              {2, MemTag::src()},
                              {7, MemTag::other()}};
    std::stringstream ss;
    write_trace(ss, trace);
    std::vector<MemRef> back = read_trace(ss);
    REQUIRE(back.size() == trace.size());
    for (size_t i = 0; i < trace.size(); i++) {
        CHECK(back[i].address == trace[i].address);
        CHECK(back[i].tag == trace[i].tag);
    }
}

TEST_CASE("per-tag attribution is separate") {
    Simulator sim(CacheGeometry(4, 4), 64);
    sim.access({0, MemTag::count()});
    sim.access({16, MemTag::data()});
    sim.access({0, MemTag::count()});
    CHECK(sim.stats().at(MemTag::count()).conflict_misses == 1);
    CHECK(sim.stats().at(MemTag::data()).misses == 1);
    CHECK(sim.stats().at(MemTag::data()).conflict_misses == 0);
}
