#ifndef CACHESORT_DISTSORT_HPP
#define CACHESORT_DISTSORT_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cachesort/cache.hpp"

namespace cachesort {

// Maps a key word to a class in {0..k-1}.
class Classifier {
public:
    static Classifier range(uint64_t lo, uint64_t hi, uint32_t k) {
        if (lo >= hi || k == 0) throw std::invalid_argument("range classifier: need lo < hi, k >= 1");
        Classifier c;
        c.k_ = k;
        c.lo_ = lo;
        c.hi_ = hi;
        c.kind_ = Kind::Range;
        return c;
    }
    static Classifier top_bits(uint32_t shift, uint64_t mask) {
        if (mask == 0 || (mask & (mask + 1)) != 0)
            throw std::invalid_argument("top-bits classifier: mask must be 2^r - 1");
        Classifier c;
        c.k_ = static_cast<uint32_t>(mask + 1);
        c.shift_ = shift;
        c.mask_ = mask;
        c.kind_ = Kind::TopBits;
        return c;
    }
    static Classifier custom(uint32_t k, std::function<uint32_t(uint64_t)> fn) {
        Classifier c;
        c.k_ = k;
        c.fn_ = std::move(fn);
        c.kind_ = Kind::Custom;
        return c;
    }

    uint32_t k() const { return k_; }

    uint32_t classify(uint64_t key) const {
        switch (kind_) {
            case Kind::Range: {
                if (key < lo_ || key >= hi_)
                    throw std::out_of_range("range classifier: key outside [lo, hi)");
                // exact integer arithmetic, so the result is always < k
                return static_cast<uint32_t>(
                    static_cast<unsigned __int128>(key - lo_) * k_ / (hi_ - lo_));
            }
            case Kind::TopBits: return static_cast<uint32_t>((key >> shift_) & mask_);
            case Kind::Custom: {
                uint32_t c = fn_(key);
                if (c >= k_) throw std::out_of_range("custom classifier returned class >= k");
                return c;
            }
        }
        return 0;
    }

private:
    enum class Kind { Range, TopBits, Custom };
    Kind kind_ = Kind::TopBits;
    uint32_t k_ = 0;
    uint64_t lo_ = 0, hi_ = 0;
    uint32_t shift_ = 0;
    uint64_t mask_ = 0;
    std::function<uint32_t(uint64_t)> fn_;
};

// Cumulative class start positions plus the frozen copy consumed by the
// in-place permute: while class j is being filled, positions
// start[j] .. count[j]-1 already hold class-j keys.
struct CountArrays {
    std::vector<uint64_t> count;
    std::vector<uint64_t> start;
};

// Word-index bases used when a permute emits its memory accesses.
struct TraceLayout {
    uint64_t data_base = 0;
    uint64_t dest_base = 0;
    uint64_t count_base = 0;
    uint64_t start_base = 0;
};

CountArrays count_phase(std::span<const uint64_t> data, const Classifier& cls);

std::vector<uint64_t> permute_out_of_place(std::span<const uint64_t> data, const CountArrays& ca,
                                           const Classifier& cls);

// Cycle-leader permute; grouped but not stable. Returns the number of
// placement steps performed (always equal to data.size()).
uint64_t permute_in_place(std::span<uint64_t> data, const CountArrays& ca, const Classifier& cls);

// Traced variants stream one MemRef per modelled access into `sink`:
// per permuted key one COUNT access (read+increment counts once) and
// one DATA/DEST access (a swap counts once); the out-of-place variant
// adds one sequential source read per key. Cycle-leader bookkeeping is
// tagged OTHER so comparisons can exclude it.

template <class Sink>
std::vector<uint64_t> permute_out_of_place_traced(std::span<const uint64_t> data,
                                                  const CountArrays& ca, const Classifier& cls,
                                                  const TraceLayout& layout, Sink&& sink) {
    std::vector<uint64_t> cnt = ca.count;
    std::vector<uint64_t> dest(data.size());
    for (size_t i = 0; i < data.size(); i++) {
        const uint64_t key = data[i];
        sink(MemRef{layout.data_base + i, MemTag::src()});
        const uint32_t x = cls.classify(key);
        const uint64_t idx = cnt[x]++;
        sink(MemRef{layout.count_base + x, MemTag::count()});
        dest[idx] = key;
        sink(MemRef{layout.dest_base + idx, MemTag::dest()});
    }
    return dest;
}

template <class Sink>
uint64_t permute_in_place_traced(std::span<uint64_t> data, const CountArrays& ca,
                                 const Classifier& cls, const TraceLayout& layout, Sink&& sink) {
    const uint64_t n = data.size();
    if (n == 0) return 0;
    std::vector<uint64_t> cnt = ca.count;
    const std::vector<uint64_t>& start = ca.start;
    uint64_t steps = 0;

    uint64_t leader = n - 1;
    for (;;) {
        uint64_t key = data[leader];
        sink(MemRef{layout.data_base + leader, MemTag::other()});  // hole read, not modelled
        uint64_t idx;
        uint32_t x;
        do {
            x = cls.classify(key);
            idx = cnt[x]++;
            sink(MemRef{layout.count_base + x, MemTag::count()});
            std::swap(key, data[idx]);
            sink(MemRef{layout.data_base + idx, MemTag::data()});
            steps++;
        } while (idx != leader);

        // find the next cycle leader: rightmost slot of the
        // highest-numbered incomplete class
        while (x > 0) {
            sink(MemRef{layout.count_base + x - 1, MemTag::other()});
            sink(MemRef{layout.start_base + x, MemTag::other()});
            if (cnt[x - 1] >= start[x])
                x--;
            else
                break;
        }
        if (x == 0) break;
        leader = start[x] - 1;
    }
    return steps;
}

struct NullSink {
    void operator()(const MemRef&) const {}
};

enum class PermuteVariant { InPlace, OutOfPlace };

// Convenience form that materializes the access trace.
struct TracedPermute {
    std::vector<uint64_t> result;
    std::vector<MemRef> trace;
};
TracedPermute traced_permute(PermuteVariant variant, std::span<const uint64_t> data,
                             const Classifier& cls, const TraceLayout& layout);

}  // namespace cachesort

#endif
