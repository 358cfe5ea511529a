#ifndef CACHESORT_FLOATSORT_HPP
#define CACHESORT_FLOATSORT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cachesort/analysis.hpp"
#include "cachesort/cache.hpp"
#include "cachesort/distsort.hpp"

namespace cachesort {

struct FloatFormat {
    uint32_t exponent_bits = 8;
    uint32_t mantissa_bits = 23;

    uint32_t bias() const { return (1u << (exponent_bits - 1)) - 1; }
    uint32_t total_bits() const { return 1 + exponent_bits + mantissa_bits; }

    static FloatFormat f32() { return {8, 23}; }
    static FloatFormat f64() { return {11, 52}; }

    bool operator==(const FloatFormat&) const = default;
};

// Order-preserving word view of a non-negative finite float:
// x < y iff word(x) < word(y), word(0) = 0. Negative, NaN and
// infinite inputs are rejected.
uint64_t float_to_ordered_word(float x);
uint64_t float_to_ordered_word(double x);
float ordered_word_to_float32(uint64_t w);
double ordered_word_to_float64(uint64_t w);

// Average size of the largest class after one radix-r pass over
// uniform [0,1) floats with e exponent bits.
double expected_largest_class(uint32_t radix_bits, uint32_t exponent_bits, uint64_t n);

struct RadixPlan {
    double theta = 0;                    // quicksort everything below this
    uint32_t effective_exponent_bits = 0;  // e': exponent bits still varying above theta
    uint32_t first_pass_mantissa_bits = 0; // m'
    uint32_t groups = 1;                 // g = 2^e'
    uint32_t group_width = 1;            // K = 2^m'
    uint32_t insertion_threshold = 8;
    uint32_t max_radix_bits = 10;        // recursion cap so count arrays fit in C*B words
    bool use_out_of_place = false;
    bool warning = false;
    double predicted_first_pass_misses = 0;

    uint32_t first_pass_classes() const { return groups * group_width; }
};

// theta = 1/(log2 n)^2, e' from the threshold, K tuned against the
// group/K miss bound subject to g*K <= C*B and K <= C.
RadixPlan auto_plan(uint64_t n, FloatFormat fmt, const CacheGeometry& geom);

// Classifier for the first pass over keys in [theta, 1): bucket index
// ascends with key value, (g - i)*K + top m' mantissa bits for a key
// with unbiased exponent -i.
Classifier first_pass_classifier(const RadixPlan& plan, FloatFormat fmt);

std::pair<std::vector<float>, std::vector<float>> partition_theta(std::span<const float> data,
                                                                  double theta);
std::pair<std::vector<double>, std::vector<double>> partition_theta(std::span<const double> data,
                                                                    double theta);

void sort_floats(std::vector<float>& data, const RadixPlan& plan);
void sort_floats(std::vector<double>& data, const RadixPlan& plan);
void sort_floats(std::vector<float>& data, const CacheGeometry& geom);
void sort_floats(std::vector<double>& data, const CacheGeometry& geom);

std::vector<float> generate_uniform_floats(uint64_t n, uint64_t seed);
std::vector<double> generate_uniform_doubles(uint64_t n, uint64_t seed);

// Binary key file: "CSKF" magic, 32 or 64 bit format code, key count,
// then raw little-endian IEEE words.
void write_key_file(const std::string& path, std::span<const float> keys);
void write_key_file(const std::string& path, std::span<const double> keys);

struct KeyFile {
    bool is_f64 = false;
    std::vector<float> f32;
    std::vector<double> f64;
    uint64_t size() const { return is_f64 ? f64.size() : f32.size(); }
};
KeyFile read_key_file(const std::string& path);

// Simulated cache behaviour of the first permute pass: COUNT and DATA
// tags carry the modelled accesses, OTHER the cycle-leader search.
struct FirstPassTrace {
    uint64_t pass_keys = 0;
    uint32_t groups = 0;
    uint32_t group_width = 0;
    MissStats stats;
    double bound_total = 0;  // group/K upper bound at (g, K, pass_keys)

    uint64_t model_misses() const {
        return stats.at(MemTag::count()).misses + stats.at(MemTag::data()).misses;
    }
};
FirstPassTrace trace_first_pass(std::span<const float> keys, const RadixPlan& plan,
                                FloatFormat fmt, const CacheGeometry& geom);

enum class PipelineKind { Tuned, NaiveSinglePass };

struct PhaseMisses {
    std::string phase;
    uint64_t accesses = 0;
    uint64_t misses = 0;
};

struct SortAudit {
    bool sorted_ok = false;
    uint64_t keys = 0;
    uint64_t total_accesses = 0;
    uint64_t total_misses = 0;
    std::vector<PhaseMisses> phases;
};

// Runs the full pipeline with every memory access fed through a cache
// simulator; the naive variant is one radix pass over the top
// ceil(log2 n - 3) bits with no partition, then insertion sort.
SortAudit run_sort_audit(std::span<const float> keys, FloatFormat fmt, const CacheGeometry& geom,
                         PipelineKind kind, const RadixPlan* plan = nullptr);

}  // namespace cachesort

#endif
