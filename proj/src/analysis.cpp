#include "cachesort/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cachesort::analysis {

namespace {

constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

double safe_frac(double num, double den) { return den > 0 ? num / den : 0.0; }

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double clamp01(double v, bool& clamped) {
    if (v < 0) {
        clamped = true;
        return 0;
    }
    if (v > 1) {
        clamped = true;
        return 1;
    }
    return v;
}

double log2d(double v) { return std::log2(v); }

bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

double f_conflict(uint64_t x, const CacheGeometry& geom) {
    const double bc = static_cast<double>(geom.words());
    if (x == 0) return 1.0;
    if (x <= geom.words() - geom.block_size + 1)
        return 1.0 - (static_cast<double>(x) + static_cast<double>(geom.block_size) - 1.0) / bc;
    return 0.0;
}

double g_countload(std::span<const uint64_t> m, const CacheGeometry& geom) {
    if (m.size() % geom.block_size != 0)
        throw std::invalid_argument("g_countload: vector length must be a multiple of B");
    const size_t blocks = m.size() / geom.block_size;
    uint64_t touched = 0;
    for (size_t b = 0; b < blocks; b++) {
        uint64_t sum = 0;
        for (size_t l = b * geom.block_size; l < (b + 1) * geom.block_size; l++) sum += m[l];
        if (sum > 0) touched++;
    }
    return static_cast<double>(touched) / static_cast<double>(geom.num_blocks);
}

std::vector<double> OccupancyContext::excluded_class_probs(uint32_t i) const {
    const double pi = dist_.prob(i);
    std::vector<double> a(k(), 0.0);
    if (pi >= 1.0) return a;
    for (uint32_t j = 0; j < k(); j++)
        if (j != i) a[j] = dist_.prob(j) / (1.0 - pi);
    return a;
}

std::vector<double> OccupancyContext::excluded_block_probs(uint32_t block) const {
    const double Pi = dist_.block_prob(block, geom_.block_size);
    std::vector<double> b(k(), 0.0);
    if (Pi >= 1.0) return b;
    const uint32_t lo = block * static_cast<uint32_t>(geom_.block_size);
    const uint32_t hi = lo + static_cast<uint32_t>(geom_.block_size);
    for (uint32_t j = 0; j < k(); j++)
        if (j < lo || j >= hi) b[j] = dist_.prob(j) / (1.0 - Pi);
    return b;
}

// ---------------------------------------------------------------------------
// Exact expectations via sequential occupancy sampling
// ---------------------------------------------------------------------------

namespace {

struct StratumResult {
    double mean = 0;
    double sem = 0;    // standard error of the mean
    double trunc = 0;  // deterministic truncation slack
};

struct StreamTables {
    std::vector<double> f;      // f(x) for x in [0, BC+1]
    std::vector<double> ratio;  // f(x+1)/f(x)
};

StreamTables make_tables(const CacheGeometry& geom) {
    const uint64_t bc = geom.words();
    StreamTables t;
    t.f.resize(bc + 2);
    t.ratio.resize(bc + 2);
    for (uint64_t x = 0; x < bc + 2; x++) t.f[x] = f_conflict(x, geom);
    for (uint64_t x = 0; x + 1 < bc + 2; x++)
        t.ratio[x] = t.f[x] > 0 ? t.f[x + 1] / t.f[x] : 0.0;
    t.ratio[bc + 1] = 0.0;
    return t;
}

// Estimates Pr[no access hits the watched cache block between two
// consecutive accesses of a stratum with geometric gap parameter p].
// One long multinomial stream per sample supplies every truncated
// series term; the integrand only decreases along a stream, so sampling
// can stop once the geometric tail bound is negligible.
StratumResult estimate_survival(double p, const std::vector<double>& q, bool with_count_g,
                                bool with_src_factor, uint32_t forced_block,
                                const OccupancyContext& ctx, const StreamTables& tab,
                                uint64_t n_rounds, const ExactOptions& opt,
                                uint64_t stratum_seed) {
    const uint64_t bc = ctx.geom().words();
    const double inv_c = 1.0 / static_cast<double>(ctx.geom().num_blocks);
    const uint32_t k = ctx.k();
    const uint32_t kb = ctx.blocks();
    const double tail_tol = std::max(1e-12, opt.series_eps * 1e-2);

    uint64_t m_cap = opt.series_cap;
    {
        const double denom = std::max(p, n_rounds > 0 ? 1.0 / static_cast<double>(n_rounds) : p);
        const double m_from_eps = std::ceil(std::log(1.0 / opt.series_eps) / denom);
        if (m_from_eps < static_cast<double>(m_cap)) m_cap = static_cast<uint64_t>(m_from_eps);
    }

    ClassSampler sampler(q);
    std::mt19937_64 rng(stratum_seed);
    std::vector<uint32_t> cnt(k);
    std::vector<uint32_t> blk(kb);

    double sum = 0, sumsq = 0, max_tail = 0;
    const int S = std::max(1, opt.samples);
    for (int s = 0; s < S; s++) {
        std::fill(cnt.begin(), cnt.end(), 0);
        if (with_count_g) std::fill(blk.begin(), blk.end(), 0);

        double w = p;        // p(1-p)^m
        double fprod = 1.0;  // prod_j f(mu_j)
        double gfac = 1.0;   // 1 - g(mu)
        uint32_t touched = 0;
        if (with_count_g && forced_block != UINT32_MAX) {
            // the closing count access always touches the watched
            // class's own count block
            blk[forced_block] = 1;
            touched = 1;
            gfac = 1.0 - inv_c;
        }
        double v = w * gfac * (with_src_factor ? tab.f[1] : 1.0);
        double tail = 0;

        for (uint64_t m = 1; m <= m_cap; m++) {
            w *= 1.0 - p;
            if (w <= 0) break;
            const uint32_t j = sampler.draw(rng);
            fprod *= tab.ratio[std::min<uint64_t>(cnt[j], bc + 1)];
            cnt[j]++;
            if (fprod <= 0) break;
            if (with_count_g) {
                const uint32_t b = j / static_cast<uint32_t>(ctx.geom().block_size);
                if (blk[b]++ == 0) {
                    touched++;
                    gfac = 1.0 - touched * inv_c;
                }
            }
            double srcf = 1.0;
            if (with_src_factor) {
                srcf = m + 1 < tab.f.size() ? tab.f[m + 1] : 0.0;
                if (srcf <= 0) break;
            }
            const double term = w * fprod * gfac * srcf;
            v += term;
            // everything past m is bounded by the current integrand
            // times the remaining geometric mass
            const double rem = fprod * gfac * w * (1.0 - p) / p;
            if (rem <= tail_tol) {
                tail = rem;
                break;
            }
            if (m == m_cap) tail = w * (1.0 - p) / p;
        }
        sum += v;
        sumsq += v * v;
        max_tail = std::max(max_tail, tail);
    }

    StratumResult r;
    r.mean = sum / S;
    const double var = std::max(0.0, (sumsq - sum * sum / S) / std::max(1, S - 1));
    r.sem = std::sqrt(var / S);
    r.trunc = max_tail;
    return r;
}

// Classes (or blocks) with identical probability and an identical
// multiset of other blocks see the same survival probability, so one
// stratum serves the whole group.
struct StrataGroup {
    uint32_t representative;
    double weight;  // sum of p_i (or the single P_i) over members
};

std::vector<StrataGroup> group_pointer_strata(const OccupancyContext& ctx) {
    const uint64_t B = ctx.geom().block_size;
    std::map<std::vector<double>, StrataGroup> groups;
    for (uint32_t i = 0; i < ctx.k(); i++) {
        const double pi = ctx.dist().prob(i);
        if (pi <= 0) continue;
        std::vector<double> sig{pi};
        const uint32_t b = i / static_cast<uint32_t>(B);
        std::vector<double> own;
        for (uint32_t l = b * B; l < (b + 1) * B; l++)
            if (l != i) own.push_back(ctx.dist().prob(l));
        std::sort(own.begin(), own.end());
        sig.insert(sig.end(), own.begin(), own.end());
        std::vector<std::vector<double>> others;
        for (uint32_t ob = 0; ob < ctx.blocks(); ob++) {
            if (ob == b) continue;
            std::vector<double> blkp;
            for (uint32_t l = ob * B; l < (ob + 1) * B; l++) blkp.push_back(ctx.dist().prob(l));
            std::sort(blkp.begin(), blkp.end());
            others.push_back(std::move(blkp));
        }
        std::sort(others.begin(), others.end());
        for (auto& o : others) sig.insert(sig.end(), o.begin(), o.end());
        auto [it, fresh] = groups.try_emplace(std::move(sig), StrataGroup{i, 0.0});
        it->second.weight += pi;
    }
    std::vector<StrataGroup> out;
    for (auto& [sig, g] : groups) out.push_back(g);
    return out;
}

std::vector<StrataGroup> group_count_strata(const OccupancyContext& ctx) {
    const uint64_t B = ctx.geom().block_size;
    std::map<std::vector<double>, StrataGroup> groups;
    for (uint32_t b = 0; b < ctx.blocks(); b++) {
        const double Pb = ctx.dist().block_prob(b, B);
        if (Pb <= 0) continue;
        std::vector<double> sig{Pb};
        std::vector<double> others;
        for (uint32_t j = 0; j < ctx.k(); j++)
            if (j / B != b) others.push_back(ctx.dist().prob(j));
        std::sort(others.begin(), others.end());
        sig.insert(sig.end(), others.begin(), others.end());
        auto [it, fresh] = groups.try_emplace(std::move(sig), StrataGroup{b, 0.0});
        it->second.weight += Pb;
    }
    std::vector<StrataGroup> out;
    for (auto& [sig, g] : groups) out.push_back(g);
    return out;
}

BoundReport exact_impl(const OccupancyContext& ctx, uint64_t n, const ExactOptions& opt,
                       bool out_of_place) {
    const CacheGeometry& geom = ctx.geom();
    const double B = static_cast<double>(geom.block_size);
    const uint32_t k = ctx.k();
    if (ctx.original_k() < 2 || k > geom.words())
        throw std::invalid_argument("exact miss expectation: requires 2 <= k <= C*B");

    const StreamTables tab = make_tables(geom);
    const double tiny = opt.series_eps;
    // survival factor for the pointer access that trails the opening
    // count access inside every count re-access window
    const double count_scale =
        opt.process_window ? 1.0 - 1.0 / static_cast<double>(geom.num_blocks) : 1.0;

    double pd_sum = 0, pd_stat2 = 0, pd_det = 0;
    uint64_t stratum_idx = 0;
    for (const StrataGroup& g : group_pointer_strata(ctx)) {
        const double pi = ctx.dist().prob(g.representative);
        if (pi <= tiny) {
            pd_sum += g.weight;  // survival ~ 0, full slack accounted
            pd_det += g.weight;
            continue;
        }
        const uint32_t forced =
            opt.process_window
                ? g.representative / static_cast<uint32_t>(geom.block_size)
                : UINT32_MAX;
        auto q = ctx.excluded_class_probs(g.representative);
        StratumResult r =
            estimate_survival(pi, q, /*with_count_g=*/true, out_of_place, forced, ctx, tab, n,
                              opt, splitmix64(opt.seed ^ (0x8000 + stratum_idx++)));
        pd_sum += g.weight * (1.0 - r.mean);
        pd_stat2 += g.weight * r.sem * g.weight * r.sem;
        pd_det += g.weight * r.trunc;
    }
    const double pd = 1.0 / B + (B - 1.0) / B * pd_sum;
    const double pd_ci = (B - 1.0) / B * (kZ99 * std::sqrt(pd_stat2) + pd_det);

    double pc_sum = 0, pc_stat2 = 0, pc_det = 0;
    for (const StrataGroup& g : group_count_strata(ctx)) {
        const double Pb = ctx.dist().block_prob(g.representative, geom.block_size);
        if (Pb <= tiny) {
            pc_sum += g.weight;
            pc_det += g.weight;
            continue;
        }
        auto q = ctx.excluded_block_probs(g.representative);
        StratumResult r =
            estimate_survival(Pb, q, /*with_count_g=*/false, out_of_place, UINT32_MAX, ctx, tab,
                              n, opt, splitmix64(opt.seed ^ (0xC000 + stratum_idx++)));
        pc_sum += g.weight * (1.0 - count_scale * r.mean);
        pc_stat2 += g.weight * r.sem * g.weight * r.sem;
        pc_det += g.weight * r.trunc;
    }
    const double pc = pc_sum;
    const double pc_ci = kZ99 * std::sqrt(pc_stat2) + pc_det;

    BoundReport rep;
    rep.rounds = n;
    rep.p_d = pd;
    rep.p_c = pc;
    rep.p_s = out_of_place ? p_s_value(geom) : 0.0;
    const double rate = rep.per_round();
    const double ci_rate = pd_ci + pc_ci;
    const double dn = static_cast<double>(n);
    const double first_touch = k * (1.0 + 1.0 / B) + (out_of_place ? 1.0 : 0.0);
    rep.exact = ExactEstimate{rate * dn, ci_rate * dn, opt.samples};
    rep.lower_total = std::max(0.0, rate * dn - ci_rate * dn);
    rep.upper_total = rate * dn + first_touch + ci_rate * dn;
    rep.terms = {{"p_c", pc}, {"p_d", pd}, {"p_s", rep.p_s}, {"ci_rate", ci_rate}};
    return rep;
}

}  // namespace

BoundReport exact_inplace(const OccupancyContext& ctx, uint64_t n, const ExactOptions& opt) {
    return exact_impl(ctx, n, opt, false);
}

BoundReport exact_outofplace(const OccupancyContext& ctx, uint64_t n, const ExactOptions& opt) {
    return exact_impl(ctx, n, opt, true);
}

// ---------------------------------------------------------------------------
// Closed-form bounds
// ---------------------------------------------------------------------------

double p_s_value(const CacheGeometry& geom) {
    const double B = static_cast<double>(geom.block_size);
    const double C = static_cast<double>(geom.num_blocks);
    return 1.0 / B + (B - 1.0) / B * (1.0 - (1.0 - 1.0 / C) * (1.0 - 1.0 / C));
}

namespace {

void require_theorem_preconditions(const OccupancyContext& ctx) {
    if (ctx.original_k() < 2 || ctx.k() > ctx.geom().words())
        throw std::invalid_argument("miss bound: requires 2 <= k <= C*B");
}

}  // namespace

BoundReport upper_inplace(const OccupancyContext& ctx, uint64_t n) {
    require_theorem_preconditions(ctx);
    const double B = static_cast<double>(ctx.geom().block_size);
    const double C = static_cast<double>(ctx.geom().num_blocks);
    const uint32_t k = ctx.k();
    const auto& p = ctx.dist();

    double pd_pairs = 0;
    for (uint32_t i = 0; i < k; i++) {
        const double pi = p.prob(i);
        if (pi <= 0) continue;
        double blocky = 0;
        for (uint32_t b = 0; b < ctx.blocks(); b++) {
            const double Pj = p.block_prob(b, ctx.geom().block_size);
            blocky += safe_frac(pi * Pj, pi + Pj);
        }
        double classy = 0;
        for (uint32_t j = 0; j < k; j++) classy += safe_frac(pi * p.prob(j), pi + p.prob(j));
        pd_pairs += blocky + (B - 1.0) / B * classy;
    }
    double pd = 1.0 / B + k / (B * C) + (B - 1.0) / (B * C) * pd_pairs;

    double pc_pairs = 0;
    for (uint32_t b = 0; b < ctx.blocks(); b++) {
        const double Pi = p.block_prob(b, ctx.geom().block_size);
        for (uint32_t j = 0; j < k; j++) pc_pairs += safe_frac(Pi * p.prob(j), Pi + p.prob(j));
    }
    double pc = k / (B * B * C) + (B - 1.0) / (B * C) * pc_pairs;

    BoundReport rep;
    rep.rounds = n;
    rep.terms = {{"pd_base", 1.0 / B},
                 {"pd_k_term", k / (B * C)},
                 {"pd_pair_term", (B - 1.0) / (B * C) * pd_pairs},
                 {"pc_k_term", k / (B * B * C)},
                 {"pc_pair_term", (B - 1.0) / (B * C) * pc_pairs}};
    rep.p_d = clamp01(pd, rep.clamped);
    rep.p_c = clamp01(pc, rep.clamped);
    rep.lower_total = 0;
    rep.upper_total = static_cast<double>(n) * rep.per_round() + k * (1.0 + 1.0 / B);
    return rep;
}

BoundReport lower_inplace(const OccupancyContext& ctx, uint64_t n) {
    require_theorem_preconditions(ctx);
    const double B = static_cast<double>(ctx.geom().block_size);
    const double C = static_cast<double>(ctx.geom().num_blocks);
    const uint32_t k = ctx.k();
    const auto& p = ctx.dist();

    BoundReport rep;
    rep.rounds = n;
    for (uint32_t i = 0; i < k; i++) {
        if (p.prob(i) < 1.0 / C) {
            rep.applicable = false;
            rep.note = "lower bound inapplicable: requires every p_i >= 1/C";
            return rep;
        }
    }

    // O(k^2) sums
    double s_sq = 0;      // sum_i sum_j p_i^2/(p_i+p_j)
    double s_curve = 0;   // sum_i p_i sum_j p_i(1-p_i-p_j)/(p_i+p_j)^2
    double s_triple = 0;  // sum_i p_i sum_j sum_l p_i/(p_i+p_j+p_l-p_j p_l)
    for (uint32_t i = 0; i < k; i++) {
        const double pi = p.prob(i);
        double curve = 0;
        for (uint32_t j = 0; j < k; j++) {
            const double pj = p.prob(j);
            s_sq += pi * pi / (pi + pj);
            curve += pi * (1.0 - pi - pj) / ((pi + pj) * (pi + pj));
        }
        // exact O(k^3) triple sum; practical up to k ~ 1024
        double triple = 0;
        for (uint32_t j = 0; j < k; j++) {
            const double pj = p.prob(j);
            for (uint32_t l = 0; l < k; l++) {
                const double pl = p.prob(l);
                triple += pi / (pi + pj + pl - pj * pl);
            }
        }
        s_curve += pi * curve;
        s_triple += pi * triple;
    }

    const double kk = static_cast<double>(k);
    const double t1 = kk * (2.0 * C - kk) / (2.0 * C * C);
    const double t2 = kk * (kk - 3.0 * C) / (2.0 * B * C * C);
    const double t3 = -1.0 / (2.0 * B * C);
    const double t4 = -kk / (2.0 * B * B * C);
    const double t5 = (B * (kk - C) + 2.0 * C - 3.0 * kk) / (B * C * C) * s_sq;
    const double bb = (B - 1.0) * (B - 1.0) / (B * B * B * C * C);
    const double t6 = bb * (s_curve - (B - 1.0) / 2.0 * s_triple);

    double pd = 1.0 / B + t1 + t2 + t3 + t4 + t5 + t6;
    rep.terms = {{"pd_base", 1.0 / B}, {"k_linear", t1},   {"k_linear_B", t2},
                 {"const_B", t3},      {"const_B2", t4},   {"sq_sum", t5},
                 {"curvature", t6}};
    rep.p_d = clamp01(pd, rep.clamped);
    rep.asymptotic_terms_dropped = true;  // exp(-B)-order corrections omitted
    rep.lower_total = static_cast<double>(n) * rep.p_d + k;
    rep.upper_total = std::numeric_limits<double>::infinity();
    return rep;
}

BoundReport upper_outofplace(const OccupancyContext& ctx, uint64_t n) {
    require_theorem_preconditions(ctx);
    const double B = static_cast<double>(ctx.geom().block_size);
    const double C = static_cast<double>(ctx.geom().num_blocks);
    const uint32_t k = ctx.k();
    const auto& p = ctx.dist();

    double block_pairs = 0, class_pairs = 0;
    for (uint32_t i = 0; i < k; i++) {
        const double pi = p.prob(i);
        if (pi <= 0) continue;
        for (uint32_t b = 0; b < ctx.blocks(); b++) {
            const double Pj = p.block_prob(b, ctx.geom().block_size);
            block_pairs += safe_frac(pi * Pj, pi + Pj);
        }
        for (uint32_t j = 0; j < k; j++) class_pairs += safe_frac(pi * p.prob(j), pi + p.prob(j));
    }
    double pd = 1.0 / B + 2.0 * (B - 1.0) * k / (B * B * C) +
                (B - 1.0) / (B * C) * block_pairs +
                (B - 1.0) * (B - 1.0) / (B * B * C) * (1.0 + class_pairs);

    double pc_pairs = 0;
    for (uint32_t b = 0; b < ctx.blocks(); b++) {
        const double Pi = p.block_prob(b, ctx.geom().block_size);
        for (uint32_t j = 0; j < k; j++) pc_pairs += safe_frac(Pi * p.prob(j), Pi + p.prob(j));
    }
    double pc = 2.0 * k / (B * B * C) + (B - 1.0) / (B * C) * (1.0 + pc_pairs);

    BoundReport rep;
    rep.rounds = n;
    rep.terms = {{"pd_base", 1.0 / B},
                 {"pd_k_term", 2.0 * (B - 1.0) * k / (B * B * C)},
                 {"pd_block_pairs", (B - 1.0) / (B * C) * block_pairs},
                 {"pd_class_pairs", (B - 1.0) * (B - 1.0) / (B * B * C) * (1.0 + class_pairs)},
                 {"pc_k_term", 2.0 * k / (B * B * C)},
                 {"pc_pairs", (B - 1.0) / (B * C) * (1.0 + pc_pairs)}};
    rep.p_d = clamp01(pd, rep.clamped);
    rep.p_c = clamp01(pc, rep.clamped);
    rep.p_s = p_s_value(ctx.geom());
    rep.lower_total = 0;
    rep.upper_total = static_cast<double>(n) * rep.per_round() + k * (1.0 + 1.0 / B) + 1.0;
    return rep;
}

BoundReport upper_sequences(const OccupancyContext& ctx, uint64_t n) {
    const double B = static_cast<double>(ctx.geom().block_size);
    const double C = static_cast<double>(ctx.geom().num_blocks);
    const uint32_t k = ctx.original_k();
    const auto& p = ctx.dist();

    double class_pairs = 0;
    for (uint32_t i = 0; i < ctx.k(); i++)
        for (uint32_t j = 0; j < ctx.k(); j++)
            class_pairs += safe_frac(p.prob(i) * p.prob(j), p.prob(i) + p.prob(j));

    double pd = 1.0 / B + k * (B - 1.0) / (B * B * C) +
                (B - 1.0) * (B - 1.0) / (B * B * C) * class_pairs;
    BoundReport rep;
    rep.rounds = n;
    rep.terms = {{"pd_base", 1.0 / B},
                 {"pd_k_term", k * (B - 1.0) / (B * B * C)},
                 {"pd_pairs", (B - 1.0) * (B - 1.0) / (B * B * C) * class_pairs}};
    rep.p_d = clamp01(pd, rep.clamped);
    rep.lower_total = 0;
    rep.upper_total = static_cast<double>(n) * rep.p_d + k;
    return rep;
}

// ---------------------------------------------------------------------------
// Uniform corollaries
// ---------------------------------------------------------------------------

BoundReport cor1_uniform(const CacheGeometry& geom, uint32_t k, uint64_t n) {
    const double B = static_cast<double>(geom.block_size);
    const double C = static_cast<double>(geom.num_blocks);
    BoundReport rep;
    rep.rounds = n;
    double rate = 1.0 / B + k * (B + 5.0) / (2.0 * B * C) + k / (B * B * C);
    rep.terms = {{"base", 1.0 / B},
                 {"k_term", k * (B + 5.0) / (2.0 * B * C)},
                 {"k_term_B2", k / (B * B * C)}};
    rep.p_d = clamp01(rate, rep.clamped);
    rep.lower_total = 0;
    rep.upper_total = static_cast<double>(n) * rep.p_d + k * (1.0 + 1.0 / B);
    return rep;
}

BoundReport cor2_uniform(const CacheGeometry& geom, uint32_t k, uint64_t n) {
    const double B = static_cast<double>(geom.block_size);
    const double C = static_cast<double>(geom.num_blocks);
    const double kk = k;
    BoundReport rep;
    rep.rounds = n;
    double rate = 1.0 / B + kk / (2.0 * C) - kk * kk / (B * C * C) - (kk + 1.0) / (2.0 * B * C) -
                  kk / (2.0 * B * B * C) +
                  (B - 1.0) * (B - 1.0) * (kk * kk * (5.0 - 2.0 * B) - 7.0 * kk + 2.0) /
                      (12.0 * B * B * B * C * C);
    rep.terms = {{"base", 1.0 / B},
                 {"k_half_C", kk / (2.0 * C)},
                 {"k_sq", -kk * kk / (B * C * C)},
                 {"k_lin", -(kk + 1.0) / (2.0 * B * C) - kk / (2.0 * B * B * C)},
                 {"poly", (B - 1.0) * (B - 1.0) * (kk * kk * (5.0 - 2.0 * B) - 7.0 * kk + 2.0) /
                              (12.0 * B * B * B * C * C)}};
    rep.p_d = clamp01(rate, rep.clamped);
    rep.asymptotic_terms_dropped = true;
    rep.lower_total = static_cast<double>(n) * rep.p_d + k;
    rep.upper_total = std::numeric_limits<double>::infinity();
    return rep;
}

BoundReport cor3_stated_uniform(const CacheGeometry& geom, uint32_t k, uint64_t n) {
    const double B = static_cast<double>(geom.block_size);
    const double C = static_cast<double>(geom.num_blocks);
    BoundReport rep;
    rep.rounds = n;
    double rate = 1.0 / B + k * (B + 3.0) / (2.0 * B * C) + k / (B * B * C) + k / (B * C);
    rep.terms = {{"base", 1.0 / B},
                 {"k_term", k * (B + 3.0) / (2.0 * B * C)},
                 {"k_term_B2", k / (B * B * C)},
                 {"k_term_BC", k / (B * C)}};
    rep.p_d = clamp01(rate, rep.clamped);
    rep.note = "stated form; omits the source-scan component";
    rep.lower_total = 0;
    rep.upper_total = static_cast<double>(n) * rep.p_d + k * (1.0 + 1.0 / B);
    return rep;
}

BoundReport cor3_proof_uniform(const CacheGeometry& geom, uint32_t k, uint64_t n) {
    const double B = static_cast<double>(geom.block_size);
    const double C = static_cast<double>(geom.num_blocks);
    BoundReport rep;
    rep.rounds = n;
    double rate = 2.0 / B + k * (B + 7.0) / (2.0 * B * C) + 2.0 * k / (B * B * C) + 2.0 / C;
    rep.terms = {{"base", 2.0 / B},
                 {"k_term", k * (B + 7.0) / (2.0 * B * C)},
                 {"k_term_B2", 2.0 * k / (B * B * C)},
                 {"src_term", 2.0 / C}};
    rep.p_d = clamp01(rate, rep.clamped);
    rep.lower_total = 0;
    rep.upper_total = static_cast<double>(n) * rep.p_d + k * (1.0 + 1.0 / B) + 1.0;
    return rep;
}

BoundReport seq_cor_uniform(const CacheGeometry& geom, uint32_t k, uint64_t n) {
    const double B = static_cast<double>(geom.block_size);
    const double C = static_cast<double>(geom.num_blocks);
    BoundReport rep;
    rep.rounds = n;
    double rate = 1.0 / B + k * (B + 3.0) / (2.0 * B * C);
    rep.terms = {{"base", 1.0 / B}, {"k_term", k * (B + 3.0) / (2.0 * B * C)}};
    rep.p_d = clamp01(rate, rep.clamped);
    rep.lower_total = 0;
    rep.upper_total = static_cast<double>(n) * rep.p_d + k;
    return rep;
}

// ---------------------------------------------------------------------------
// MSB radix bound and tuning
// ---------------------------------------------------------------------------

double msb_radix_bound_rate(const CacheGeometry& geom, uint32_t groups, uint32_t group_width) {
    if (groups < 1 || group_width < 1 || !is_pow2(groups) || !is_pow2(group_width))
        throw std::invalid_argument("msb_radix_bound: g and K must be powers of two >= 1");
    if (static_cast<uint64_t>(groups) * group_width > geom.words() ||
        group_width > geom.num_blocks)
        throw std::invalid_argument("msb_radix_bound: requires g*K <= C*B and K <= C");
    const double B = static_cast<double>(geom.block_size);
    const double C = static_cast<double>(geom.num_blocks);
    const double K = static_cast<double>(group_width);
    double rate = 1.0 / B + (2.0 * K / (B * C)) *
                                (2.3 * B + 2.0 * log2d(B) + log2d(C) - log2d(K) + 0.7);
    return std::min(rate, 1.0);
}

double msb_radix_bound(const CacheGeometry& geom, uint32_t groups, uint32_t group_width,
                       uint64_t n) {
    const double rate = msb_radix_bound_rate(geom, groups, group_width);
    return static_cast<double>(n) * rate +
           static_cast<double>(groups) * group_width * (1.0 + 1.0 / geom.block_size);
}

namespace {

// Recursive pass count of the radix pipeline on a subproblem of size s:
// each pass splits by min(2^(ceil(log2 s) - 3), C*B) classes until the
// insertion-sort threshold is reached.
uint32_t passes_for_subproblem(double s, const CacheGeometry& geom, uint64_t threshold) {
    uint32_t passes = 0;
    const double cap = static_cast<double>(geom.words());
    while (s > static_cast<double>(threshold) && passes < 64) {
        double radix = std::exp2(std::max(1.0, std::ceil(std::log2(s)) - 3.0));
        s /= std::min(radix, cap);
        passes++;
    }
    return passes;
}

}  // namespace

TuneResult choose_k_uniform(const CacheGeometry& geom, uint64_t n, TuneCriterion criterion,
                            const TuneOptions& opt) {
    const double B = static_cast<double>(geom.block_size);
    const uint64_t cap_words = geom.words();
    std::vector<uint32_t> candidates;
    for (uint64_t k = geom.block_size; k <= opt.max_k && k <= cap_words; k *= 2) {
        if (n >= opt.insertion_threshold && k > n / opt.insertion_threshold && k > geom.block_size)
            break;
        candidates.push_back(static_cast<uint32_t>(k));
    }
    if (candidates.empty()) candidates.push_back(static_cast<uint32_t>(geom.block_size));

    auto per_key = [&](uint32_t k) { return 1.0 / B + cor1_uniform(geom, k, 1).p_d; };

    TuneResult res;
    if (criterion == TuneCriterion::StrictMisses) {
        const double budget = (2.0 + opt.epsilon) / B;
        res.feasible = false;
        res.k = static_cast<uint32_t>(geom.block_size);
        for (uint32_t k : candidates) {
            if (per_key(k) <= budget) {
                res.k = k;
                res.feasible = true;
            }
        }
        res.predicted_rate = per_key(res.k);
        return res;
    }

    double best = std::numeric_limits<double>::infinity();
    for (uint32_t k : candidates) {
        const double rate = per_key(k);
        const double denom = std::log2(static_cast<double>(k));
        const double np = std::max(1.0, std::ceil(
            std::log2(std::max(1.0, static_cast<double>(n) / opt.insertion_threshold)) / denom));
        const double cost = np * (rate * opt.miss_penalty + opt.per_key_work);
        if (cost < best) {
            best = cost;
            res.k = k;
            res.predicted_rate = rate;
            res.predicted_cost = cost;
        }
    }
    return res;
}

TuneResult choose_group_width(const CacheGeometry& geom, uint64_t n, uint32_t groups,
                              TuneCriterion criterion, const TuneOptions& opt) {
    TuneResult res;
    res.k = 1;
    if (static_cast<uint64_t>(groups) > geom.words()) {
        res.feasible = false;
        return res;
    }
    std::vector<uint32_t> candidates;
    for (uint64_t K = 1; K <= geom.num_blocks && static_cast<uint64_t>(groups) * K <= geom.words()
                         && K <= opt.max_k;
         K *= 2)
        candidates.push_back(static_cast<uint32_t>(K));

    const double B = static_cast<double>(geom.block_size);
    auto per_key = [&](uint32_t K) {
        return 1.0 / B + msb_radix_bound_rate(geom, groups, K);
    };

    if (criterion == TuneCriterion::StrictMisses) {
        const double budget = (2.0 + opt.epsilon) / B;
        res.feasible = false;
        for (uint32_t K : candidates) {
            if (per_key(K) <= budget) {
                res.k = K;
                res.feasible = true;
            }
        }
        res.predicted_rate = per_key(res.k);
        return res;
    }

    double best = std::numeric_limits<double>::infinity();
    for (uint32_t K : candidates) {
        const double rate = per_key(K);
        // first pass plus recursion on the heaviest bucket (~ n / 2K keys)
        const double largest = static_cast<double>(n) / (2.0 * K);
        const double np = 1.0 + passes_for_subproblem(largest, geom, opt.insertion_threshold);
        const double cost = np * (rate * opt.miss_penalty + opt.per_key_work);
        if (cost < best) {
            best = cost;
            res.k = K;
            res.predicted_rate = rate;
            res.predicted_cost = cost;
        }
    }
    return res;
}

}  // namespace cachesort::analysis
