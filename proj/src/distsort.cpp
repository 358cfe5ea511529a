#include "cachesort/distsort.hpp"

namespace cachesort {

CountArrays count_phase(std::span<const uint64_t> data, const Classifier& cls) {
    const uint32_t k = cls.k();
    std::vector<uint64_t> sizes(k, 0);
    for (uint64_t key : data) sizes[cls.classify(key)]++;
    CountArrays ca;
    ca.count.resize(k);
    uint64_t acc = 0;
    for (uint32_t j = 0; j < k; j++) {
        ca.count[j] = acc;
        acc += sizes[j];
    }
    ca.start = ca.count;
    return ca;
}

std::vector<uint64_t> permute_out_of_place(std::span<const uint64_t> data, const CountArrays& ca,
                                           const Classifier& cls) {
    return permute_out_of_place_traced(data, ca, cls, TraceLayout{}, NullSink{});
}

uint64_t permute_in_place(std::span<uint64_t> data, const CountArrays& ca, const Classifier& cls) {
    return permute_in_place_traced(data, ca, cls, TraceLayout{}, NullSink{});
}

TracedPermute traced_permute(PermuteVariant variant, std::span<const uint64_t> data,
                             const Classifier& cls, const TraceLayout& layout) {
    TracedPermute out;
    CountArrays ca = count_phase(data, cls);
    auto sink = [&out](const MemRef& r) { out.trace.push_back(r); };
    if (variant == PermuteVariant::OutOfPlace) {
        out.result = permute_out_of_place_traced(data, ca, cls, layout, sink);
    } else {
        out.result.assign(data.begin(), data.end());
        permute_in_place_traced(std::span<uint64_t>(out.result), ca, cls, layout, sink);
    }
    return out;
}

}  // namespace cachesort
