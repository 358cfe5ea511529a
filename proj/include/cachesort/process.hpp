#ifndef CACHESORT_PROCESS_HPP
#define CACHESORT_PROCESS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cachesort/cache.hpp"
#include "cachesort/distribution.hpp"

namespace cachesort {

enum class ProcessVariant : uint8_t { InPlace, OutOfPlace, Sequences };

std::string variant_name(ProcessVariant v);
ProcessVariant parse_variant(const std::string& name);

struct ProcessParams {
    ClassDistribution dist;
    uint64_t rounds = 0;  // n
    CacheGeometry geom;
    uint64_t seed = 1;
    ProcessVariant variant = ProcessVariant::InPlace;
};

// Address assignment satisfying the modelled layout: the count array is
// block-aligned, every pointer region is disjoint from everything else
// and long enough for n advances, and each pointer starts at an offset
// drawn uniformly from [0, BC) within its region, so pointer starts are
// independent and uniform over the cache and land in distinct blocks.
struct AddressPlan {
    uint64_t address_space = 0;
    uint64_t count_base = 0;      // k consecutive words, count_base % B == 0
    uint64_t src_base = 0;        // out-of-place only; n consecutive words
    bool has_count = false;
    bool has_src = false;
    std::vector<uint64_t> pointer_start;  // one per (padded) class
};

// Consumes exactly k draws from rng, one uniform offset per pointer.
AddressPlan layout_addresses(const ProcessParams& params, std::mt19937_64& rng);

struct ProcessRunReport {
    ProcessVariant variant = ProcessVariant::InPlace;
    uint32_t k = 0;  // classes as requested (before padding)
    CacheGeometry geom;
    uint64_t rounds = 0;
    uint64_t seed = 0;
    MissStats stats;
    std::vector<uint64_t> draws_per_class;
    std::vector<uint64_t> pointer_start;
    std::vector<uint64_t> pointer_end;

    double per_round_rate(MemTag tag) const {
        return rounds == 0 ? 0.0 : static_cast<double>(stats.at(tag).misses) / rounds;
    }
    double total_rate() const {
        return rounds == 0 ? 0.0 : static_cast<double>(stats.total().misses) / rounds;
    }

    // One CSV line per tag: variant,k,B,C,n,seed,tag,accesses,misses,compulsory,conflict
    std::vector<std::string> csv_rows() const;
    static std::string csv_header();
};

// `tee`, when set, observes every access in emission order.
using TraceTee = std::function<void(const MemRef&)>;

ProcessRunReport run_process(const ProcessParams& params, const TraceTee& tee = {});
ProcessRunReport run_inplace_process(const ProcessParams& params);
ProcessRunReport run_outofplace_process(const ProcessParams& params);
ProcessRunReport run_sequences_process(const ProcessParams& params);

}  // namespace cachesort

#endif
