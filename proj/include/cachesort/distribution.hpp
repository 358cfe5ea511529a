#ifndef CACHESORT_DISTRIBUTION_HPP
#define CACHESORT_DISTRIBUTION_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cachesort {

// Access probabilities p_1..p_k over k classes, plus the block-level
// probabilities P_i derived from a block size B that divides k.
class ClassDistribution {
public:
    explicit ClassDistribution(std::vector<double> probs);

    uint32_t k() const { return static_cast<uint32_t>(probs_.size()); }
    double prob(uint32_t i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }

    // Number of classes with p_i > 0.
    uint32_t active_classes() const;

    // P_i = sum of p over the i-th block of B classes (0-based block index).
    double block_prob(uint32_t block, uint64_t block_size) const;

    // Appends zero-probability classes until block_size divides k.
    ClassDistribution padded_to_multiple(uint64_t block_size) const;

    static ClassDistribution uniform(uint32_t k);
    // p_i proportional to 2^-i, i = 1..k.
    static ClassDistribution geometric(uint32_t k);
    // The access distribution induced by uniform floats grouped into
    // g exponent groups of width K, conditioned on the keys kept by the
    // threshold partition. Classes are in bucket order (smallest keys
    // first), so group g comes first and group 1 last; every class in
    // group i has probability 2^-i / K before conditioning.
    static ClassDistribution float_model(uint32_t groups, uint32_t group_width);

private:
    std::vector<double> probs_;
};

// Samples class indices by inverse CDF over a precomputed cumulative
// table; zero-probability classes are never drawn.
class ClassSampler {
public:
    explicit ClassSampler(const ClassDistribution& dist);
    explicit ClassSampler(const std::vector<double>& probs);

    uint32_t draw(std::mt19937_64& rng) const;

private:
    std::vector<double> cum_;
};

// Uniform double in [0,1) with 53 random bits.
inline double unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cachesort

#endif
