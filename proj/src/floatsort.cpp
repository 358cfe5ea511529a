#include "cachesort/floatsort.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace cachesort {

namespace {

void check_float_domain(double x) {
    if (std::isnan(x)) throw std::invalid_argument("float key: NaN not supported");
    if (std::isinf(x)) throw std::invalid_argument("float key: infinity not supported");
    if (x < 0) throw std::invalid_argument("float key: negative values not supported");
}

uint64_t align_up(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

}  // namespace

uint64_t float_to_ordered_word(float x) {
    check_float_domain(x);
    if (x == 0.0f) return 0;  // folds -0
    return std::bit_cast<uint32_t>(x);
}

uint64_t float_to_ordered_word(double x) {
    check_float_domain(x);
    if (x == 0.0) return 0;
    return std::bit_cast<uint64_t>(x);
}

float ordered_word_to_float32(uint64_t w) {
    if (w > 0xFFFFFFFFull) throw std::invalid_argument("ordered word exceeds 32 bits");
    return std::bit_cast<float>(static_cast<uint32_t>(w));
}

double ordered_word_to_float64(uint64_t w) { return std::bit_cast<double>(w); }

double expected_largest_class(uint32_t radix_bits, uint32_t exponent_bits, uint64_t n) {
    if (radix_bits < 1) throw std::invalid_argument("expected_largest_class: r >= 1");
    const double dn = static_cast<double>(n);
    if (radix_bits < exponent_bits + 1) {
        const double outer = std::exp2(static_cast<double>(exponent_bits - radix_bits + 1));
        return dn * (1.0 - std::exp2(-outer));
    }
    return dn * std::exp2(-static_cast<double>(radix_bits - exponent_bits));
}

RadixPlan auto_plan(uint64_t n, FloatFormat fmt, const CacheGeometry& geom) {
    RadixPlan plan;
    // recursion radix cap: cost-model choice, never beyond a count array
    // of C*B words
    analysis::TuneResult rec =
        analysis::choose_k_uniform(geom, n, analysis::TuneCriterion::TradeOff, {});
    plan.max_radix_bits = std::max(
        1u, static_cast<uint32_t>(std::log2(static_cast<double>(std::max(2u, rec.k)))));
    if (n < 16) {
        plan.warning = true;
        plan.theta = 0.25;
        plan.effective_exponent_bits = 1;
        plan.groups = 2;
        plan.group_width = 1;
        return plan;
    }
    const double log2n = std::log2(static_cast<double>(n));
    plan.theta = 1.0 / (log2n * log2n);
    const double log2_inv_theta = std::log2(1.0 / plan.theta);
    plan.effective_exponent_bits = static_cast<uint32_t>(std::min(
        std::ceil(std::log2(log2_inv_theta)), static_cast<double>(fmt.exponent_bits)));
    plan.groups = 1u << plan.effective_exponent_bits;

    // first-radix budget: at most log2 n - log2 log2 n bits in total
    const double budget = std::floor(log2n) - std::ceil(std::log2(log2n));
    uint32_t mprime_cap = fmt.mantissa_bits;
    if (budget > plan.effective_exponent_bits)
        mprime_cap = std::min<uint32_t>(
            mprime_cap, static_cast<uint32_t>(budget) - plan.effective_exponent_bits);
    else
        mprime_cap = 0;

    analysis::TuneOptions topt;
    topt.insertion_threshold = plan.insertion_threshold;
    topt.max_k = mprime_cap >= 31 ? (1u << 31) - 1 : (1u << mprime_cap);
    analysis::TuneResult tuned = analysis::choose_group_width(
        geom, n, plan.groups, analysis::TuneCriterion::TradeOff, topt);
    plan.warning = !tuned.feasible;
    plan.group_width = std::max(1u, tuned.k);
    plan.first_pass_mantissa_bits =
        static_cast<uint32_t>(std::log2(static_cast<double>(plan.group_width)));
    plan.predicted_first_pass_misses =
        analysis::msb_radix_bound(geom, plan.groups, plan.group_width, n);
    return plan;
}

Classifier first_pass_classifier(const RadixPlan& plan, FloatFormat fmt) {
    const uint32_t m = fmt.mantissa_bits;
    const uint32_t bias = fmt.bias();
    const uint32_t g = plan.groups;
    const uint32_t K = plan.group_width;
    const uint32_t mshift = m - plan.first_pass_mantissa_bits;
    return Classifier::custom(g * K, [m, bias, g, K, mshift](uint64_t w) -> uint32_t {
        const uint32_t j = static_cast<uint32_t>(w >> m);
        if (j == 0 || j >= bias) return g * K;  // below theta or >= 1.0: domain error
        const uint32_t i = bias - j;            // unbiased exponent is -i
        if (i > g) return g * K;
        const uint32_t top = K == 1 ? 0 : static_cast<uint32_t>((w >> mshift) & (K - 1));
        return (g - i) * K + top;
    });
}

std::pair<std::vector<float>, std::vector<float>> partition_theta(std::span<const float> data,
                                                                  double theta) {
    std::vector<float> small, big;
    for (float x : data)
        (static_cast<double>(x) < theta ? small : big).push_back(x);
    return {std::move(small), std::move(big)};
}

std::pair<std::vector<double>, std::vector<double>> partition_theta(std::span<const double> data,
                                                                    double theta) {
    std::vector<double> small, big;
    for (double x : data)
        (x < theta ? small : big).push_back(x);
    return {std::move(small), std::move(big)};
}

// ---------------------------------------------------------------------------
// Pipeline internals, shared by the plain sort and the traced audit
// ---------------------------------------------------------------------------

namespace {

template <class Sink>
void insertion_sort_traced(std::span<uint64_t> a, uint64_t base, Sink&& sink) {
    for (size_t i = 1; i < a.size(); i++) {
        const uint64_t v = a[i];
        sink(MemRef{base + i, MemTag::data()});
        size_t j = i;
        while (j > 0) {
            sink(MemRef{base + j - 1, MemTag::data()});
            if (a[j - 1] <= v) break;
            a[j] = a[j - 1];
            sink(MemRef{base + j, MemTag::data()});
            j--;
        }
        if (j != i) {
            a[j] = v;
            sink(MemRef{base + j, MemTag::data()});
        }
    }
}

template <class Sink>
void quicksort_traced(std::span<uint64_t> a, uint64_t base, Sink&& sink) {
    while (a.size() > 16) {
        const size_t mid = a.size() / 2, last = a.size() - 1;
        sink(MemRef{base, MemTag::data()});
        sink(MemRef{base + mid, MemTag::data()});
        sink(MemRef{base + last, MemTag::data()});
        const uint64_t x = a[0], y = a[mid], z = a[last];
        const uint64_t pivot = std::max(std::min(x, y), std::min(std::max(x, y), z));

        int64_t i = -1, j = static_cast<int64_t>(a.size());
        for (;;) {
            do {
                i++;
                sink(MemRef{base + static_cast<uint64_t>(i), MemTag::data()});
            } while (a[static_cast<size_t>(i)] < pivot);
            do {
                j--;
                sink(MemRef{base + static_cast<uint64_t>(j), MemTag::data()});
            } while (a[static_cast<size_t>(j)] > pivot);
            if (i >= j) break;
            std::swap(a[static_cast<size_t>(i)], a[static_cast<size_t>(j)]);
        }
        // recurse into the smaller side, iterate on the larger
        const size_t cut = static_cast<size_t>(j) + 1;
        if (cut <= a.size() - cut) {
            quicksort_traced(a.subspan(0, cut), base, sink);
            a = a.subspan(cut);
            base += cut;
        } else {
            quicksort_traced(a.subspan(cut), base + cut, sink);
            a = a.subspan(0, cut);
        }
    }
    insertion_sort_traced(a, base, sink);
}

template <class Sink>
CountArrays count_phase_traced(std::span<const uint64_t> data, const Classifier& cls,
                               uint64_t data_base, uint64_t count_base, uint64_t start_base,
                               Sink&& sink) {
    const uint32_t k = cls.k();
    std::vector<uint64_t> sizes(k, 0);
    for (size_t i = 0; i < data.size(); i++) {
        sink(MemRef{data_base + i, MemTag::src()});
        const uint32_t x = cls.classify(data[i]);
        sizes[x]++;
        sink(MemRef{count_base + x, MemTag::count()});
    }
    CountArrays ca;
    ca.count.resize(k);
    uint64_t acc = 0;
    for (uint32_t j = 0; j < k; j++) {
        ca.count[j] = acc;
        acc += sizes[j];
        sink(MemRef{count_base + j, MemTag::count()});   // cumulative rewrite
        sink(MemRef{start_base + j, MemTag::other()});   // frozen copy
    }
    ca.start = ca.count;
    return ca;
}

struct AuditLayout {
    uint64_t data_base = 0;
    uint64_t small_base = 0;
    uint64_t big_base = 0;
    uint64_t count_base = 0;
    uint64_t start_base = 0;
    uint64_t address_space = 1;
};

// Recursive mantissa passes below the first radix pass.
template <class Sink>
void sort_mantissa_range(std::vector<uint64_t>& a, size_t lo, size_t hi, uint32_t bits_left,
                         const RadixPlan& plan, uint64_t region_base, uint64_t count_base,
                         uint64_t start_base, Sink&& sink) {
    const size_t s = hi - lo;
    if (s <= plan.insertion_threshold || bits_left == 0) {
        insertion_sort_traced(std::span<uint64_t>(a.data() + lo, s), region_base + lo, sink);
        return;
    }
    uint32_t r = static_cast<uint32_t>(
        std::max(1.0, std::ceil(std::log2(static_cast<double>(s))) - 3.0));
    r = std::min({r, bits_left, plan.max_radix_bits});
    const Classifier cls = Classifier::top_bits(bits_left - r, (uint64_t{1} << r) - 1);

    std::span<uint64_t> range(a.data() + lo, s);
    const TraceLayout layout{region_base + lo, 0, count_base, start_base};
    CountArrays ca =
        count_phase_traced(range, cls, region_base + lo, count_base, start_base, sink);
    std::vector<uint64_t> bounds = ca.count;  // class starts before the permute consumes them
    permute_in_place_traced(range, ca, cls, layout, sink);

    const uint32_t k = cls.k();
    for (uint32_t c = 0; c < k; c++) {
        const size_t blo = lo + bounds[c];
        const size_t bhi = c + 1 < k ? lo + bounds[c + 1] : hi;
        if (bhi > blo) sort_mantissa_range(a, blo, bhi, bits_left - r, plan, region_base,
                                           count_base, start_base, sink);
    }
}

// Returns the region base where the grouped keys ended up (differs from
// big_base only for the out-of-place first pass).
template <class Sink>
uint64_t first_pass_and_recurse(std::vector<uint64_t>& big, const RadixPlan& plan,
                                FloatFormat fmt, uint64_t big_base, uint64_t dest_base,
                                uint64_t count_base, uint64_t start_base, Sink&& sink) {
    if (big.size() <= plan.insertion_threshold) {
        insertion_sort_traced(std::span<uint64_t>(big), big_base, sink);
        return big_base;
    }
    const Classifier cls = first_pass_classifier(plan, fmt);
    std::span<uint64_t> range(big);
    CountArrays ca = count_phase_traced(range, cls, big_base, count_base, start_base, sink);
    std::vector<uint64_t> bounds = ca.count;
    if (plan.use_out_of_place) {
        std::vector<uint64_t> dest = permute_out_of_place_traced(
            range, ca, cls, TraceLayout{big_base, dest_base, count_base, start_base}, sink);
        big = std::move(dest);
        big_base = dest_base;
    } else {
        permute_in_place_traced(range, ca, cls,
                                TraceLayout{big_base, 0, count_base, start_base}, sink);
    }
    const uint32_t k = cls.k();
    const uint32_t bits_left = fmt.mantissa_bits - plan.first_pass_mantissa_bits;
    for (uint32_t c = 0; c < k; c++) {
        const size_t blo = bounds[c];
        const size_t bhi = c + 1 < k ? bounds[c + 1] : big.size();
        if (bhi > blo)
            sort_mantissa_range(big, blo, bhi, bits_left, plan, big_base, count_base,
                                start_base, sink);
    }
    return big_base;
}

template <class T>
std::vector<uint64_t> to_words(std::span<const T> data) {
    std::vector<uint64_t> words(data.size());
    for (size_t i = 0; i < data.size(); i++) {
        if (!(data[i] < T(1)))
            throw std::invalid_argument("sort_floats: keys must lie in [0, 1)");
        words[i] = float_to_ordered_word(data[i]);
    }
    return words;
}

template <class T>
void sort_floats_impl(std::vector<T>& data, const RadixPlan& plan) {
    if (data.size() <= 1) return;
    const FloatFormat fmt = sizeof(T) == 4 ? FloatFormat::f32() : FloatFormat::f64();
    std::vector<uint64_t> words = to_words(std::span<const T>(data));
    const uint64_t theta_word = float_to_ordered_word(static_cast<T>(plan.theta));

    std::vector<uint64_t> small, big;
    small.reserve(words.size() / 16);
    big.reserve(words.size());
    for (uint64_t w : words) (w < theta_word ? small : big).push_back(w);

    quicksort_traced(std::span<uint64_t>(small), 0, NullSink{});
    first_pass_and_recurse(big, plan, fmt, 0, 0, 0, 0, NullSink{});

    auto from_word = [](uint64_t w) -> T {
        if constexpr (sizeof(T) == 4)
            return ordered_word_to_float32(w);
        else
            return ordered_word_to_float64(w);
    };
    size_t out = 0;
    for (uint64_t w : small) data[out++] = from_word(w);
    for (uint64_t w : big) data[out++] = from_word(w);
}

}  // namespace

void sort_floats(std::vector<float>& data, const RadixPlan& plan) { sort_floats_impl(data, plan); }
void sort_floats(std::vector<double>& data, const RadixPlan& plan) { sort_floats_impl(data, plan); }

void sort_floats(std::vector<float>& data, const CacheGeometry& geom) {
    sort_floats(data, auto_plan(data.size(), FloatFormat::f32(), geom));
}

void sort_floats(std::vector<double>& data, const CacheGeometry& geom) {
    sort_floats(data, auto_plan(data.size(), FloatFormat::f64(), geom));
}

std::vector<float> generate_uniform_floats(uint64_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<float> out(n);
    for (uint64_t i = 0; i < n; i++) {
        const double u = unit_double(rng);
        float f = static_cast<float>(u);
        if (static_cast<double>(f) > u) f = std::nextafterf(f, 0.0f);  // round down
        out[i] = f;
    }
    return out;
}

std::vector<double> generate_uniform_doubles(uint64_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    for (uint64_t i = 0; i < n; i++) out[i] = unit_double(rng);
    return out;
}

// ---------------------------------------------------------------------------
// Key files
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'S', 'K', 'F'};

void write_key_header(std::ofstream& out, uint32_t bits, uint64_t n) {
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&bits), 4);
    out.write(reinterpret_cast<const char*>(&n), 8);
}

}  // namespace

void write_key_file(const std::string& path, std::span<const float> keys) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open key file for writing: " + path);
    write_key_header(out, 32, keys.size());
    out.write(reinterpret_cast<const char*>(keys.data()),
              static_cast<std::streamsize>(keys.size() * sizeof(float)));
    if (!out) throw std::runtime_error("short write to key file: " + path);
}

void write_key_file(const std::string& path, std::span<const double> keys) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open key file for writing: " + path);
    write_key_header(out, 64, keys.size());
    out.write(reinterpret_cast<const char*>(keys.data()),
              static_cast<std::streamsize>(keys.size() * sizeof(double)));
    if (!out) throw std::runtime_error("short write to key file: " + path);
}

KeyFile read_key_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open key file: " + path);
    char magic[4];
    uint32_t bits = 0;
    uint64_t n = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&bits), 4);
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a key file: " + path);
    KeyFile kf;
    if (bits == 32) {
        kf.f32.resize(n);
        in.read(reinterpret_cast<char*>(kf.f32.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
    } else if (bits == 64) {
        kf.is_f64 = true;
        kf.f64.resize(n);
        in.read(reinterpret_cast<char*>(kf.f64.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        throw std::runtime_error("key file has unknown format code");
    }
    if (!in) throw std::runtime_error("truncated key file: " + path);
    return kf;
}

// ---------------------------------------------------------------------------
// Traced runs
// ---------------------------------------------------------------------------

FirstPassTrace trace_first_pass(std::span<const float> keys, const RadixPlan& plan,
                                FloatFormat fmt, const CacheGeometry& geom) {
    std::vector<uint64_t> words = to_words(keys);
    const uint64_t theta_word = float_to_ordered_word(static_cast<float>(plan.theta));
    std::vector<uint64_t> big;
    big.reserve(words.size());
    for (uint64_t w : words)
        if (w >= theta_word) big.push_back(w);

    const uint32_t k = plan.first_pass_classes();
    const uint64_t B = geom.block_size;
    const uint64_t count_base = 0;
    const uint64_t start_base = align_up(k, B);
    const uint64_t data_base = align_up(start_base + k, B);
    const uint64_t space = data_base + std::max<uint64_t>(big.size(), 1);

    const Classifier cls = first_pass_classifier(plan, fmt);
    CountArrays ca = count_phase(big, cls);

    Simulator sim(geom, space);
    auto sink = [&sim](const MemRef& r) { sim.access(r); };
    permute_in_place_traced(std::span<uint64_t>(big), ca, cls,
                            TraceLayout{data_base, 0, count_base, start_base}, sink);

    FirstPassTrace t;
    t.pass_keys = big.size();
    t.groups = plan.groups;
    t.group_width = plan.group_width;
    t.stats = sim.stats();
    t.bound_total = analysis::msb_radix_bound(geom, plan.groups, plan.group_width, big.size());
    return t;
}

SortAudit run_sort_audit(std::span<const float> keys, FloatFormat fmt, const CacheGeometry& geom,
                         PipelineKind kind, const RadixPlan* plan_in) {
    const uint64_t n = keys.size();
    std::vector<uint64_t> words = to_words(keys);

    RadixPlan plan;
    uint32_t max_k;
    uint32_t naive_r = 0;
    if (kind == PipelineKind::Tuned) {
        plan = plan_in ? *plan_in : auto_plan(n, fmt, geom);
        max_k = std::max(plan.first_pass_classes(), 1u << plan.max_radix_bits);
    } else {
        naive_r = static_cast<uint32_t>(std::max(
            1.0, std::ceil(std::log2(std::max<double>(2, static_cast<double>(n))) - 3.0)));
        naive_r = std::min(naive_r, fmt.total_bits());
        max_k = 1u << naive_r;
    }

    AuditLayout L;
    const uint64_t B = geom.block_size;
    L.data_base = 0;
    L.small_base = align_up(n + 1, B);
    L.big_base = align_up(L.small_base + n + 1, B);
    L.count_base = align_up(L.big_base + n + 1, B);
    L.start_base = align_up(L.count_base + max_k, B);
    L.address_space = L.start_base + max_k;

    Simulator sim(geom, L.address_space);
    auto sink = [&sim](const MemRef& r) { sim.access(r); };

    SortAudit audit;
    audit.keys = n;
    Counters prev{};
    auto snapshot = [&](const std::string& name) {
        Counters now = sim.stats().total();
        audit.phases.push_back({name, now.accesses - prev.accesses, now.misses - prev.misses});
        prev = now;
    };

    std::vector<uint64_t> result;
    if (kind == PipelineKind::Tuned) {
        const uint64_t theta_word = float_to_ordered_word(static_cast<float>(plan.theta));
        std::vector<uint64_t> small, big;
        big.reserve(n);
        for (size_t i = 0; i < words.size(); i++) {
            sink(MemRef{L.data_base + i, MemTag::src()});
            if (words[i] < theta_word) {
                sink(MemRef{L.small_base + small.size(), MemTag::dest()});
                small.push_back(words[i]);
            } else {
                sink(MemRef{L.big_base + big.size(), MemTag::dest()});
                big.push_back(words[i]);
            }
        }
        snapshot("partition");

        quicksort_traced(std::span<uint64_t>(small), L.small_base, sink);
        snapshot("quicksort_small");

        const uint64_t big_final = first_pass_and_recurse(
            big, plan, fmt, L.big_base, L.data_base, L.count_base, L.start_base, sink);
        snapshot("radix_passes");

        result.reserve(n);
        for (size_t i = 0; i < small.size(); i++) {
            sink(MemRef{L.small_base + i, MemTag::src()});
            sink(MemRef{L.data_base + result.size(), MemTag::dest()});
            result.push_back(small[i]);
        }
        for (size_t i = 0; i < big.size(); i++) {
            sink(MemRef{big_final + i, MemTag::src()});
            sink(MemRef{L.data_base + result.size(), MemTag::dest()});
            result.push_back(big[i]);
        }
        snapshot("copy_back");
    } else {
        const Classifier cls =
            Classifier::top_bits(fmt.total_bits() - naive_r, (uint64_t{1} << naive_r) - 1);
        std::span<uint64_t> range(words);
        CountArrays ca =
            count_phase_traced(range, cls, L.data_base, L.count_base, L.start_base, sink);
        snapshot("count");
        std::vector<uint64_t> bounds = ca.count;
        permute_in_place_traced(range, ca, cls,
                                TraceLayout{L.data_base, 0, L.count_base, L.start_base}, sink);
        snapshot("permute");
        const uint32_t k = cls.k();
        for (uint32_t c = 0; c < k; c++) {
            const size_t blo = bounds[c];
            const size_t bhi = c + 1 < k ? bounds[c + 1] : words.size();
            if (bhi > blo)
                insertion_sort_traced(std::span<uint64_t>(words.data() + blo, bhi - blo),
                                      L.data_base + blo, sink);
        }
        snapshot("insertion");
        result = std::move(words);
    }

    audit.sorted_ok = std::is_sorted(result.begin(), result.end()) && result.size() == n;
    Counters total = sim.stats().total();
    audit.total_accesses = total.accesses;
    audit.total_misses = total.misses;
    return audit;
}

}  // namespace cachesort
