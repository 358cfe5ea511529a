#include "cachesort/process.hpp"

#include <stdexcept>

namespace cachesort {

std::string variant_name(ProcessVariant v) {
    switch (v) {
        case ProcessVariant::InPlace: return "inplace";
        case ProcessVariant::OutOfPlace: return "outofplace";
        case ProcessVariant::Sequences: return "sequences";
    }
    return "inplace";
}

ProcessVariant parse_variant(const std::string& name) {
    if (name == "inplace") return ProcessVariant::InPlace;
    if (name == "outofplace") return ProcessVariant::OutOfPlace;
    if (name == "sequences") return ProcessVariant::Sequences;
    throw std::invalid_argument("unknown process variant: " + name);
}

namespace {

uint64_t align_up(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

void validate(const ProcessParams& params, uint32_t padded_k) {
    const uint64_t cap = params.geom.words();
    if (params.variant == ProcessVariant::Sequences) {
        if (params.dist.k() < 1) throw std::invalid_argument("sequences: k must be >= 1");
    } else {
        if (params.dist.k() < 2) throw std::invalid_argument("process: k must be >= 2");
        if (padded_k > cap)
            throw std::invalid_argument("process: k exceeds C*B = " + std::to_string(cap));
    }
}

}  // namespace

AddressPlan layout_addresses(const ProcessParams& params, std::mt19937_64& rng) {
    const uint64_t bc = params.geom.words();
    const ClassDistribution padded = params.dist.padded_to_multiple(params.geom.block_size);
    const uint32_t k = padded.k();
    validate(params, k);

    AddressPlan plan;
    plan.has_count = params.variant != ProcessVariant::Sequences;
    plan.has_src = params.variant == ProcessVariant::OutOfPlace;

    uint64_t next = 0;
    if (plan.has_count) {
        plan.count_base = 0;  // block-aligned by construction
        next = align_up(k, bc);
    }
    if (plan.has_src) {
        plan.src_base = next;
        next = align_up(next + std::max<uint64_t>(params.rounds, 1), bc);
    }

    // Worst case all n rounds advance one pointer, plus room for the
    // random start offset; regions stay pairwise disjoint.
    const uint64_t region = align_up(params.rounds + bc, bc);
    plan.pointer_start.resize(k);
    for (uint32_t i = 0; i < k; i++) {
        uint64_t offset = rng() & (bc - 1);  // BC is a power of two
        plan.pointer_start[i] = next + static_cast<uint64_t>(i) * region + offset;
    }
    plan.address_space = next + static_cast<uint64_t>(k) * region;
    return plan;
}

namespace {

ProcessRunReport run_impl(const ProcessParams& params, const TraceTee& tee) {
    std::mt19937_64 rng(params.seed);
    AddressPlan plan = layout_addresses(params, rng);
    const ClassDistribution padded = params.dist.padded_to_multiple(params.geom.block_size);
    ClassSampler sampler(padded);

    Simulator sim(params.geom, plan.address_space);
    std::vector<uint64_t> pos = plan.pointer_start;
    std::vector<uint64_t> draws(padded.k(), 0);

    const bool seq = params.variant == ProcessVariant::Sequences;
    const bool oop = params.variant == ProcessVariant::OutOfPlace;
    const MemTag ptr_tag = oop ? MemTag::dest() : MemTag::data();
    uint64_t s = plan.src_base;

    auto touch = [&](MemRef ref) {
        sim.access(ref);
        if (tee) tee(ref);
    };
    for (uint64_t round = 0; round < params.rounds; round++) {
        if (oop) touch({s++, MemTag::src()});
        const uint32_t x = sampler.draw(rng);
        draws[x]++;
        if (!seq) touch({plan.count_base + x, MemTag::count()});
        touch({pos[x]++, seq ? MemTag::seq(x) : ptr_tag});
    }

    ProcessRunReport report;
    report.variant = params.variant;
    report.k = params.dist.k();
    report.geom = params.geom;
    report.rounds = params.rounds;
    report.seed = params.seed;
    report.stats = sim.stats();
    report.draws_per_class = std::move(draws);
    report.pointer_start = std::move(plan.pointer_start);
    report.pointer_end = std::move(pos);
    return report;
}

}  // namespace

ProcessRunReport run_process(const ProcessParams& params, const TraceTee& tee) {
    return run_impl(params, tee);
}

ProcessRunReport run_inplace_process(const ProcessParams& params) {
    if (params.variant != ProcessVariant::InPlace)
        throw std::invalid_argument("run_inplace_process: wrong variant");
    return run_impl(params, {});
}

ProcessRunReport run_outofplace_process(const ProcessParams& params) {
    if (params.variant != ProcessVariant::OutOfPlace)
        throw std::invalid_argument("run_outofplace_process: wrong variant");
    return run_impl(params, {});
}

ProcessRunReport run_sequences_process(const ProcessParams& params) {
    if (params.variant != ProcessVariant::Sequences)
        throw std::invalid_argument("run_sequences_process: wrong variant");
    return run_impl(params, {});
}

std::string ProcessRunReport::csv_header() {
    return "variant,k,B,C,n,seed,tag,accesses,misses,compulsory,conflict";
}

std::vector<std::string> ProcessRunReport::csv_rows() const {
    std::vector<std::string> rows;
    auto tags = stats.touched_tags();
    if (tags.empty()) {
        // canonical zero rows so an n=0 run still reports its tags
        switch (variant) {
            case ProcessVariant::InPlace: tags = {MemTag::count(), MemTag::data()}; break;
            case ProcessVariant::OutOfPlace:
                tags = {MemTag::src(), MemTag::count(), MemTag::dest()};
                break;
            case ProcessVariant::Sequences:
                for (uint32_t i = 0; i < k; i++) tags.push_back(MemTag::seq(i));
                break;
        }
    }
    for (MemTag t : tags) {
        const Counters& c = stats.at(t);
        rows.push_back(variant_name(variant) + ',' + std::to_string(k) + ',' +
                       std::to_string(geom.block_size) + ',' + std::to_string(geom.num_blocks) +
                       ',' + std::to_string(rounds) + ',' + std::to_string(seed) + ',' +
                       tag_name(t) + ',' + std::to_string(c.accesses) + ',' +
                       std::to_string(c.misses) + ',' + std::to_string(c.compulsory_misses) + ',' +
                       std::to_string(c.conflict_misses));
    }
    return rows;
}

}  // namespace cachesort
