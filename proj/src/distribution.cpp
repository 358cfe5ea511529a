#include "cachesort/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cachesort {

ClassDistribution::ClassDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw std::invalid_argument("class distribution: k must be >= 1");
    double sum = 0;
    for (double p : probs_) {
        if (p < 0 || !std::isfinite(p))
            throw std::invalid_argument("class distribution: probabilities must be finite and >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("class distribution: probabilities sum to " +
                                    std::to_string(sum) + ", expected 1");
}

uint32_t ClassDistribution::active_classes() const {
    uint32_t n = 0;
    for (double p : probs_)
        if (p > 0) n++;
    return n;
}

double ClassDistribution::block_prob(uint32_t block, uint64_t block_size) const {
    if (block_size == 0 || probs_.size() % block_size != 0)
        throw std::invalid_argument("block_prob: block size must divide k");
    double s = 0;
    for (uint64_t l = block * block_size; l < (block + 1) * block_size; l++) s += probs_[l];
    return s;
}

ClassDistribution ClassDistribution::padded_to_multiple(uint64_t block_size) const {
    std::vector<double> p = probs_;
    while (p.size() % block_size != 0) p.push_back(0.0);
    return ClassDistribution(std::move(p));
}

ClassDistribution ClassDistribution::uniform(uint32_t k) {
    if (k == 0) throw std::invalid_argument("uniform distribution: k must be >= 1");
    return ClassDistribution(std::vector<double>(k, 1.0 / k));
}

ClassDistribution ClassDistribution::geometric(uint32_t k) {
    if (k == 0) throw std::invalid_argument("geometric distribution: k must be >= 1");
    std::vector<double> p(k);
    double norm = 1.0 - std::ldexp(1.0, -static_cast<int>(k));
    for (uint32_t i = 0; i < k; i++) p[i] = std::ldexp(1.0, -static_cast<int>(i) - 1) / norm;
    return ClassDistribution(std::move(p));
}

ClassDistribution ClassDistribution::float_model(uint32_t groups, uint32_t group_width) {
    if (groups == 0 || group_width == 0)
        throw std::invalid_argument("float model distribution: g and K must be >= 1");
    std::vector<double> p(static_cast<size_t>(groups) * group_width);
    double kept = 1.0 - std::ldexp(1.0, -static_cast<int>(groups));
    for (uint32_t g = 0; g < groups; g++) {
        // bucket order: group index i = groups - g occupies the g-th slice
        uint32_t i = groups - g;
        double per_class = std::ldexp(1.0, -static_cast<int>(i)) / group_width / kept;
        for (uint32_t t = 0; t < group_width; t++)
            p[static_cast<size_t>(g) * group_width + t] = per_class;
    }
    return ClassDistribution(std::move(p));
}

ClassSampler::ClassSampler(const ClassDistribution& dist) : ClassSampler(dist.probs()) {}

ClassSampler::ClassSampler(const std::vector<double>& probs) {
    cum_.reserve(probs.size());
    double acc = 0;
    for (double p : probs) {
        acc += p;
        cum_.push_back(acc);
    }
    if (!cum_.empty()) cum_.back() = 1.0;
}

uint32_t ClassSampler::draw(std::mt19937_64& rng) const {
    double u = unit_double(rng);
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) --it;
    return static_cast<uint32_t>(it - cum_.begin());
}

}  // namespace cachesort
