#ifndef CACHESORT_CACHE_HPP
#define CACHESORT_CACHE_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cachesort {

// Geometry of a direct-mapped cache: B words per block, C cache blocks.
// Memory location x lives in cache block (x div B) mod C.
struct CacheGeometry {
    uint64_t block_size = 0;  // B, in key-sized words
    uint64_t num_blocks = 0;  // C

    CacheGeometry() = default;
    CacheGeometry(uint64_t b, uint64_t c) : block_size(b), num_blocks(c) {
        if (b == 0 || c == 0 || (b & (b - 1)) != 0 || (c & (c - 1)) != 0)
            throw std::invalid_argument("cache geometry: B and C must be powers of two >= 1");
    }

    uint64_t words() const { return block_size * num_blocks; }  // B*C
};

enum class TagKind : uint8_t { Count, Data, Dest, Src, Seq, Other };

struct MemTag {
    TagKind kind = TagKind::Other;
    uint32_t index = 0;  // sequence number, used for Seq only

    static MemTag count() { return {TagKind::Count, 0}; }
    static MemTag data() { return {TagKind::Data, 0}; }
    static MemTag dest() { return {TagKind::Dest, 0}; }
    static MemTag src() { return {TagKind::Src, 0}; }
    static MemTag seq(uint32_t i) { return {TagKind::Seq, i}; }
    static MemTag other() { return {TagKind::Other, 0}; }

    bool operator==(const MemTag&) const = default;
};

std::string tag_name(MemTag tag);
MemTag parse_tag(const std::string& name);

// One word-granularity access, attributed to a named array.
struct MemRef {
    uint64_t address = 0;  // word index
    MemTag tag;
};

enum class AccessOutcome : uint8_t { Hit, CompulsoryMiss, ConflictMiss };

struct Counters {
    uint64_t accesses = 0;
    uint64_t misses = 0;
    uint64_t compulsory_misses = 0;
    uint64_t conflict_misses = 0;

    void add(const Counters& o) {
        accesses += o.accesses;
        misses += o.misses;
        compulsory_misses += o.compulsory_misses;
        conflict_misses += o.conflict_misses;
    }
};

// Per-tag access/miss counters. Capacity misses are folded into
// conflict_misses: a direct-mapped simulator cannot tell them apart.
class MissStats {
public:
    Counters& at(MemTag tag) {
        if (tag.kind == TagKind::Seq) {
            if (seq_.size() <= tag.index) seq_.resize(tag.index + 1);
            return seq_[tag.index];
        }
        return fixed_[static_cast<size_t>(tag.kind)];
    }
    const Counters& at(MemTag tag) const {
        static const Counters zero{};
        if (tag.kind == TagKind::Seq)
            return tag.index < seq_.size() ? seq_[tag.index] : zero;
        return fixed_[static_cast<size_t>(tag.kind)];
    }

    Counters total() const {
        Counters t;
        for (const auto& c : fixed_) t.add(c);
        for (const auto& c : seq_) t.add(c);
        return t;
    }

    size_t seq_count() const { return seq_.size(); }

    // Tags with at least one access, in a fixed canonical order.
    std::vector<MemTag> touched_tags() const;

    bool operator==(const MissStats&) const = default;

private:
    std::array<Counters, 6> fixed_{};
    std::vector<Counters> seq_;

    friend bool operator==(const Counters&, const Counters&);
};

inline bool operator==(const Counters& a, const Counters& b) {
    return a.accesses == b.accesses && a.misses == b.misses &&
           a.compulsory_misses == b.compulsory_misses &&
           a.conflict_misses == b.conflict_misses;
}

// Trace-driven direct-mapped cache over a word-addressed memory.
// Single-threaded; one instance per worker.
class Simulator {
public:
    Simulator(CacheGeometry geom, uint64_t address_space)
        : geom_(geom),
          address_space_(address_space),
          block_shift_(log2_u64(geom.block_size)),
          set_mask_(geom.num_blocks - 1),
          lines_(geom.num_blocks, kEmpty),
          seen_((address_space + geom.block_size - 1) / geom.block_size, false) {
        if (address_space == 0)
            throw std::invalid_argument("simulator: address space must be >= 1 word");
    }

    AccessOutcome access(MemRef ref) {
        if (ref.address >= address_space_)
            throw std::out_of_range("simulator: address " + std::to_string(ref.address) +
                                    " outside address space of " + std::to_string(address_space_) +
                                    " words");
        const uint64_t block = ref.address >> block_shift_;
        const uint64_t set = block & set_mask_;
        Counters& c = stats_.at(ref.tag);
        c.accesses++;
        if (lines_[set] == static_cast<int64_t>(block)) return AccessOutcome::Hit;
        c.misses++;
        lines_[set] = static_cast<int64_t>(block);
        if (!seen_[block]) {
            seen_[block] = true;
            c.compulsory_misses++;
            return AccessOutcome::CompulsoryMiss;
        }
        c.conflict_misses++;
        return AccessOutcome::ConflictMiss;
    }

    const MissStats& stats() const { return stats_; }
    const CacheGeometry& geometry() const { return geom_; }
    uint64_t address_space() const { return address_space_; }

private:
    static constexpr int64_t kEmpty = -1;

    static uint32_t log2_u64(uint64_t v) {
        uint32_t s = 0;
        while ((uint64_t{1} << s) < v) s++;
        return s;
    }

    CacheGeometry geom_;
    uint64_t address_space_;
    uint32_t block_shift_;
    uint64_t set_mask_;
    std::vector<int64_t> lines_;
    std::vector<bool> seen_;
    MissStats stats_;
};

// Runs a whole trace through a fresh simulator. Errors carry the
// offending trace position.
MissStats run_trace(CacheGeometry geom, uint64_t address_space, std::span<const MemRef> trace);

// Text trace format, one access per line: "tag,address".
void write_trace(std::ostream& out, std::span<const MemRef> trace);
std::vector<MemRef> read_trace(std::istream& in);

}  // namespace cachesort

#endif
