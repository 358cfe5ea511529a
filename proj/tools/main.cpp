// Command-line harness: run the modelled processes through the cache
// simulator, evaluate the analytical bounds, join the two into
// pass/fail comparisons, and benchmark the float radix sort.
//
// Exit codes: 0 all checks pass, 1 usage error, 2 comparison failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cachesort/analysis.hpp"
#include "cachesort/cache.hpp"
#include "cachesort/distribution.hpp"
#include "cachesort/distsort.hpp"
#include "cachesort/floatsort.hpp"
#include "cachesort/process.hpp"

using namespace cachesort;

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string resolve_out_path(const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    const char* dir = std::getenv("CACHESORT_OUT_DIR");
    if (!dir || !*dir) return path;
    return std::string(dir) + "/" + path;
}

struct OutStream {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit OutStream(const std::string& path) {
        if (!path.empty()) {
            file.open(resolve_out_path(path));
            if (!file) throw CLI::ValidationError("--out", "cannot open " + path);
            os = &file;
        }
    }
    std::ostream& get() { return *os; }
};

struct DistSpec {
    std::string label;
    ClassDistribution dist = ClassDistribution::uniform(1);
    bool is_uniform = false;
    uint32_t k = 0;
    uint32_t fm_groups = 0, fm_width = 0;  // float-model only
};

struct DistFlags {
    uint32_t uniform_k = 0;
    uint32_t geometric_k = 0;
    std::vector<uint32_t> float_model;  // e', m'
    std::string dist_file;
};

void add_dist_flags(CLI::App* cmd, DistFlags& f) {
    auto* a = cmd->add_option("--uniform-k", f.uniform_k, "uniform distribution over k classes");
    auto* b = cmd->add_option("--geometric-k", f.geometric_k,
                              "geometric distribution, p_i ~ 2^-i, over k classes");
    auto* c = cmd->add_option("--float-model", f.float_model,
                              "float-model distribution, takes e' and m'")
                  ->expected(2);
    auto* d = cmd->add_option("--dist-file", f.dist_file,
                              "file with whitespace-separated class probabilities");
    a->excludes(b)->excludes(c)->excludes(d);
    b->excludes(c)->excludes(d);
    c->excludes(d);
}

DistSpec make_dist(const DistFlags& f) {
    DistSpec spec;
    if (f.uniform_k > 0) {
        spec.label = "uniform:" + std::to_string(f.uniform_k);
        spec.dist = ClassDistribution::uniform(f.uniform_k);
        spec.is_uniform = true;
        spec.k = f.uniform_k;
    } else if (f.geometric_k > 0) {
        spec.label = "geometric:" + std::to_string(f.geometric_k);
        spec.dist = ClassDistribution::geometric(f.geometric_k);
        spec.k = f.geometric_k;
    } else if (f.float_model.size() == 2) {
        const uint32_t g = 1u << f.float_model[0];
        const uint32_t K = 1u << f.float_model[1];
        spec.label = "floatmodel:" + std::to_string(f.float_model[0]) + ":" +
                     std::to_string(f.float_model[1]);
        spec.dist = ClassDistribution::float_model(g, K);
        spec.k = g * K;
        spec.fm_groups = g;
        spec.fm_width = K;
    } else if (!f.dist_file.empty()) {
        std::ifstream in(f.dist_file);
        if (!in) throw CLI::ValidationError("--dist-file", "cannot open " + f.dist_file);
        std::vector<double> p;
        double v;
        while (in >> v) p.push_back(v);
        spec.label = "file:" + f.dist_file;
        spec.dist = ClassDistribution(p);
        spec.k = spec.dist.k();
    } else {
        throw CLI::ValidationError("distribution", "one distribution option is required");
    }
    return spec;
}

struct GeomFlags {
    uint64_t B = 8;
    uint64_t C = 128;
    std::string preset;
};

void add_geom_flags(CLI::App* cmd, GeomFlags& g) {
    cmd->add_option("-B,--block-size", g.B, "cache block size in keys")->capture_default_str();
    cmd->add_option("-C,--cache-blocks", g.C, "number of cache blocks")->capture_default_str();
    cmd->add_option("--preset", g.preset, "geometry preset: tiny (B=8,C=128) or paper-L2 (B=8,C=8192)");
}

CacheGeometry make_geom(const GeomFlags& g) {
    if (g.preset == "tiny") return CacheGeometry(8, 128);
    if (g.preset == "paper-L2") return CacheGeometry(8, 8192);
    if (!g.preset.empty())
        throw CLI::ValidationError("--preset", "unknown preset " + g.preset);
    return CacheGeometry(g.B, g.C);
}

constexpr const char* kSimHeader =
    "variant,dist,k,B,C,n,seed,tag,accesses,misses,compulsory,conflict";
constexpr const char* kPredHeader =
    "variant,dist,k,B,C,n,formula,role,per_round,additive,total,ci,applicable,note";

// ------------------------------------------------------------------ simulate

int cmd_simulate(const std::string& variant_name_in, const DistFlags& dflags,
                 const GeomFlags& gflags, uint64_t n, uint32_t seeds, uint64_t seed_base,
                 const std::string& out, const std::string& dump_trace) {
    const DistSpec spec = make_dist(dflags);
    const CacheGeometry geom = make_geom(gflags);
    OutStream os(out);
    os.get() << kSimHeader << '\n';

    if (variant_name_in == "sort-trace") {
        if (spec.fm_groups == 0)
            throw CLI::ValidationError("--float-model", "sort-trace needs a float-model spec");
        RadixPlan plan = auto_plan(n, FloatFormat::f32(), geom);
        plan.groups = spec.fm_groups;
        plan.effective_exponent_bits =
            static_cast<uint32_t>(std::log2(static_cast<double>(spec.fm_groups)));
        plan.group_width = spec.fm_width;
        plan.first_pass_mantissa_bits =
            static_cast<uint32_t>(std::log2(static_cast<double>(spec.fm_width)));
        for (uint32_t s = 0; s < seeds; s++) {
            const uint64_t seed = seed_base + s;
            auto keys = generate_uniform_floats(n, seed);
            FirstPassTrace t = trace_first_pass(keys, plan, FloatFormat::f32(), geom);
            // rows are keyed by the requested n so they join against a
            // bound evaluated at n (>= the bound at the kept-key count)
            for (MemTag tag : t.stats.touched_tags()) {
                const Counters& c = t.stats.at(tag);
                os.get() << "sorttrace," << spec.label << ',' << spec.k << ','
                         << geom.block_size << ',' << geom.num_blocks << ',' << n << ','
                         << seed << ',' << tag_name(tag) << ',' << c.accesses << ','
                         << c.misses << ',' << c.compulsory_misses << ',' << c.conflict_misses
                         << '\n';
            }
        }
        return 0;
    }

    const ProcessVariant variant = parse_variant(variant_name_in);
    std::ofstream trace_file;
    if (!dump_trace.empty()) {
        trace_file.open(resolve_out_path(dump_trace));
        if (!trace_file) throw CLI::ValidationError("--dump-trace", "cannot open " + dump_trace);
    }

    // seed sweep over a worker pool; rows are merged in seed order
    std::vector<std::vector<std::string>> rows_by_seed(seeds);
    std::atomic<uint32_t> next{0};
    auto work = [&]() {
        for (uint32_t s; (s = next.fetch_add(1)) < seeds;) {
            ProcessParams params{spec.dist, n, geom, seed_base + s, variant};
            TraceTee tee;
            if (trace_file.is_open() && s == 0)
                tee = [&trace_file](const MemRef& r) {
                    trace_file << tag_name(r.tag) << ',' << r.address << '\n';
                };
            rows_by_seed[s] = run_process(params, tee).csv_rows();
        }
    };
    const uint32_t workers =
        std::max(1u, std::min(seeds, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (uint32_t w = 1; w < workers; w++) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();

    for (const auto& rows : rows_by_seed) {
        for (const std::string& row : rows) {
            // splice the dist label into the library's row format
            auto comma = row.find(',');
            os.get() << row.substr(0, comma + 1) << spec.label << ',' << row.substr(comma + 1)
                     << '\n';
        }
    }
    return 0;
}

// ------------------------------------------------------------------- predict

void emit_pred_row(std::ostream& os, const std::string& variant, const DistSpec& spec,
                   const CacheGeometry& geom, uint64_t n, const std::string& formula,
                   const std::string& role, const analysis::BoundReport& rep, bool show_terms,
                   bool pretty) {
    const double total = role == "lower"   ? rep.lower_total
                         : role == "exact" ? rep.exact->mean
                                           : rep.upper_total;
    const double ci = rep.exact ? rep.exact->ci_halfwidth : 0.0;
    const double additive = total - static_cast<double>(n) * rep.per_round();
    if (pretty) {
        os << formula << " (" << role << ") for " << variant << ", " << spec.label << ", B="
           << geom.block_size << " C=" << geom.num_blocks << " n=" << n << '\n';
        if (!rep.applicable) {
            os << "  " << rep.note << '\n';
            return;
        }
        os << "  per-round miss probability  " << fmt_double(rep.per_round()) << '\n';
        if (rep.p_c > 0) os << "    p_c " << fmt_double(rep.p_c) << '\n';
        if (rep.p_d > 0) os << "    p_d " << fmt_double(rep.p_d) << '\n';
        if (rep.p_s > 0) os << "    p_s " << fmt_double(rep.p_s) << '\n';
        os << "  expected misses over n      " << fmt_double(total);
        if (rep.exact) os << " +- " << fmt_double(ci) << " (99% CI)";
        os << '\n';
        if (show_terms)
            for (const auto& [name, value] : rep.terms)
                os << "    term " << name << " = " << fmt_double(value) << '\n';
        if (rep.clamped) os << "  note: a component was clamped into [0,1]\n";
        if (rep.asymptotic_terms_dropped)
            os << "  note: exp(-B)-order correction terms are dropped\n";
        if (!rep.note.empty()) os << "  note: " << rep.note << '\n';
        return;
    }
    if (show_terms)
        for (const auto& [name, value] : rep.terms)
            os << "# " << formula << ' ' << name << ' ' << fmt_double(value) << '\n';
    os << variant << ',' << spec.label << ',' << spec.k << ',' << geom.block_size << ','
       << geom.num_blocks << ',' << n << ',' << formula << ',' << role << ','
       << fmt_double(rep.per_round()) << ',' << fmt_double(rep.applicable ? additive : 0) << ','
       << fmt_double(rep.applicable ? total : 0) << ',' << fmt_double(ci) << ','
       << (rep.applicable ? "yes" : "no") << ','
       << (rep.note.empty() ? std::string("-") : rep.note) << '\n';
}

int cmd_predict(const std::string& formula, const DistFlags& dflags, const GeomFlags& gflags,
                uint64_t n, int samples, double eps, uint64_t est_seed, uint32_t thm6_g,
                uint32_t thm6_K, bool show_terms, bool pretty, std::string variant_override,
                const std::string& out) {
    const CacheGeometry geom = make_geom(gflags);
    OutStream os(out);
    if (!pretty) os.get() << kPredHeader << '\n';
    auto variant_or = [&variant_override](const char* dflt) {
        return variant_override.empty() ? std::string(dflt) : variant_override;
    };

    auto need_uniform = [&](const DistSpec& s) {
        if (!s.is_uniform)
            throw CLI::ValidationError("--formula", formula + " applies to uniform only");
    };

    if (formula == "thm6") {
        uint32_t g = thm6_g, K = thm6_K;
        DistSpec spec;
        if (!dflags.float_model.empty()) {
            spec = make_dist(dflags);
            g = spec.fm_groups;
            K = spec.fm_width;
        } else {
            if (g == 0 || K == 0)
                throw CLI::ValidationError("thm6", "needs --float-model or -g and -K");
            spec.label = "floatmodel:g" + std::to_string(g) + ":K" + std::to_string(K);
            spec.k = g * K;
        }
        analysis::BoundReport rep;
        rep.rounds = n;
        rep.p_d = analysis::msb_radix_bound_rate(geom, g, K);
        rep.upper_total = analysis::msb_radix_bound(geom, g, K, n);
        rep.terms = {{"rate", rep.p_d}};
        emit_pred_row(os.get(), variant_or("sorttrace"), spec, geom, n, formula, "upper", rep, show_terms, pretty);
        return 0;
    }

    const DistSpec spec = make_dist(dflags);
    const analysis::OccupancyContext ctx(geom, spec.dist);
    analysis::ExactOptions eopt;
    eopt.samples = samples;
    eopt.series_eps = eps;
    eopt.seed = est_seed;

    if (formula == "thm1")
        emit_pred_row(os.get(), variant_or("inplace"), spec, geom, n, formula, "exact",
                      analysis::exact_inplace(ctx, n, eopt), show_terms, pretty);
    else if (formula == "thm2")
        emit_pred_row(os.get(), variant_or("inplace"), spec, geom, n, formula, "upper",
                      analysis::upper_inplace(ctx, n), show_terms, pretty);
    else if (formula == "thm3")
        emit_pred_row(os.get(), variant_or("inplace"), spec, geom, n, formula, "lower",
                      analysis::lower_inplace(ctx, n), show_terms, pretty);
    else if (formula == "thm4")
        emit_pred_row(os.get(), variant_or("outofplace"), spec, geom, n, formula, "exact",
                      analysis::exact_outofplace(ctx, n, eopt), show_terms, pretty);
    else if (formula == "thm5")
        emit_pred_row(os.get(), variant_or("outofplace"), spec, geom, n, formula, "upper",
                      analysis::upper_outofplace(ctx, n), show_terms, pretty);
    else if (formula == "cor1") {
        need_uniform(spec);
        emit_pred_row(os.get(), variant_or("inplace"), spec, geom, n, formula, "upper",
                      analysis::cor1_uniform(geom, spec.k, n), show_terms, pretty);
    } else if (formula == "cor2") {
        need_uniform(spec);
        emit_pred_row(os.get(), variant_or("inplace"), spec, geom, n, formula, "lower",
                      analysis::cor2_uniform(geom, spec.k, n), show_terms, pretty);
    } else if (formula == "cor3a") {
        need_uniform(spec);
        emit_pred_row(os.get(), variant_or("outofplace"), spec, geom, n, formula, "upper",
                      analysis::cor3_stated_uniform(geom, spec.k, n), show_terms, pretty);
    } else if (formula == "cor3b") {
        need_uniform(spec);
        emit_pred_row(os.get(), variant_or("outofplace"), spec, geom, n, formula, "upper",
                      analysis::cor3_proof_uniform(geom, spec.k, n), show_terms, pretty);
    } else if (formula == "seq") {
        if (spec.is_uniform)
            emit_pred_row(os.get(), variant_or("sequences"), spec, geom, n, formula, "upper",
                          analysis::seq_cor_uniform(geom, spec.k, n), show_terms, pretty);
        else
            emit_pred_row(os.get(), variant_or("sequences"), spec, geom, n, formula, "upper",
                          analysis::upper_sequences(ctx, n), show_terms, pretty);
    } else {
        throw CLI::ValidationError("--formula", "unknown formula " + formula);
    }
    return 0;
}

// ------------------------------------------------------------------- compare

struct SimGroup {
    std::vector<double> totals_by_seed;
    uint64_t n = 0;
};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

int cmd_compare(const std::string& sim_path, const std::string& pred_path,
                const std::string& out) {
    std::ifstream sim_in(sim_path);
    if (!sim_in) throw CLI::ValidationError("--sim", "cannot open " + sim_path);
    std::ifstream pred_in(pred_path);
    if (!pred_in) throw CLI::ValidationError("--pred", "cannot open " + pred_path);

    // key = variant,dist,k,B,C,n
    std::map<std::string, std::map<uint64_t, double>> seed_totals;
    std::string line;
    std::getline(sim_in, line);
    if (line != kSimHeader) throw CLI::ValidationError("--sim", "unexpected CSV header");
    while (std::getline(sim_in, line)) {
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() < 12) throw CLI::ValidationError("--sim", "bad row: " + line);
        if (f[7] == "OTHER") continue;  // bookkeeping accesses are not modelled
        const std::string key =
            f[0] + ',' + f[1] + ',' + f[2] + ',' + f[3] + ',' + f[4] + ',' + f[5];
        seed_totals[key][std::stoull(f[6])] += std::stod(f[9]);
    }

    struct PredRow {
        std::string formula, role;
        double total, ci;
        bool applicable;
    };
    std::map<std::string, std::vector<PredRow>> preds;
    std::getline(pred_in, line);
    if (line != kPredHeader) throw CLI::ValidationError("--pred", "unexpected CSV header");
    while (std::getline(pred_in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto f = split_csv(line);
        if (f.size() < 14) throw CLI::ValidationError("--pred", "bad row: " + line);
        const std::string key =
            f[0] + ',' + f[1] + ',' + f[2] + ',' + f[3] + ',' + f[4] + ',' + f[5];
        preds[key].push_back({f[6], f[7], std::stod(f[10]), std::stod(f[11]), f[12] == "yes"});
    }

    OutStream os(out);
    bool any_fail = false;
    for (const auto& [key, by_seed] : seed_totals) {
        auto it = preds.find(key);
        if (it == preds.end())
            throw CLI::ValidationError("compare",
                                       "no prediction rows match simulation point " + key);
        double sum = 0, sumsq = 0;
        for (const auto& [seed, total] : by_seed) {
            sum += total;
            sumsq += total * total;
        }
        const double cnt = static_cast<double>(by_seed.size());
        const double mean = sum / cnt;
        const double var = cnt > 1 ? std::max(0.0, (sumsq - sum * sum / cnt) / (cnt - 1)) : 0.0;
        const double stderr_mean = std::sqrt(var / cnt);

        os.get() << key << "  empirical " << fmt_double(mean) << " +- "
                 << fmt_double(stderr_mean) << " (" << by_seed.size() << " seeds)\n";
        for (const PredRow& p : it->second) {
            bool pass = true;
            std::string what;
            if (!p.applicable) {
                what = "inapplicable";
            } else if (p.role == "lower") {
                pass = mean >= p.total - 3.0 * stderr_mean;
                what = "lower " + fmt_double(p.total);
            } else if (p.role == "upper") {
                pass = mean <= p.total + 3.0 * stderr_mean;
                what = "upper " + fmt_double(p.total);
            } else {
                const double rel = std::abs(mean - p.total) / std::max(1.0, mean);
                const bool overlap = std::abs(mean - p.total) <= 2.576 * stderr_mean + p.ci;
                pass = rel <= 0.02 || overlap;
                what = "exact " + fmt_double(p.total) + " rel " + fmt_double(rel);
            }
            os.get() << "  " << p.formula << "  " << what << "  "
                     << (pass ? "PASS" : "FAIL") << '\n';
            if (!pass) any_fail = true;
        }
    }
    return any_fail ? 2 : 0;
}

// ----------------------------------------------------------------- sortbench

int cmd_sortbench(uint64_t n, uint64_t seed, const std::string& keys_path,
                  const std::string& plan_sel, const GeomFlags& gflags, bool wall_clock,
                  const std::string& out) {
    if (plan_sel != "tuned" && plan_sel != "naive" && plan_sel != "both")
        throw CLI::ValidationError("--plan", "expected tuned, naive or both");
    const CacheGeometry geom = make_geom(gflags);
    std::vector<float> keys;
    if (!keys_path.empty()) {
        KeyFile kf = read_key_file(keys_path);
        if (kf.is_f64) throw CLI::ValidationError("--keys", "sortbench expects 32-bit keys");
        keys = std::move(kf.f32);
    } else {
        keys = generate_uniform_floats(n, seed);
    }
    OutStream os(out);

    std::vector<float> sorted = keys;
    RadixPlan plan = auto_plan(keys.size(), FloatFormat::f32(), geom);
    const auto t0 = std::chrono::steady_clock::now();
    sort_floats(sorted, plan);
    const auto t1 = std::chrono::steady_clock::now();

    std::vector<float> oracle = keys;
    std::sort(oracle.begin(), oracle.end());
    const bool correct = sorted == oracle;
    os.get() << "keys " << keys.size() << "\ncorrect " << (correct ? "true" : "false") << '\n';
    if (wall_clock)
        os.get() << "wall_clock_seconds (non-reproducible) "
                 << std::chrono::duration<double>(t1 - t0).count() << '\n';

    auto report_audit = [&](const char* name, const SortAudit& a) {
        os.get() << name << " total_accesses " << a.total_accesses << " total_misses "
                 << a.total_misses << " sorted " << (a.sorted_ok ? "true" : "false") << '\n';
        for (const PhaseMisses& ph : a.phases)
            os.get() << name << "  phase " << ph.phase << " accesses " << ph.accesses
                     << " misses " << ph.misses << '\n';
    };

    SortAudit tuned, naive;
    if (plan_sel == "tuned" || plan_sel == "both") {
        tuned = run_sort_audit(keys, FloatFormat::f32(), geom, PipelineKind::Tuned, &plan);
        report_audit("tuned", tuned);
    }
    if (plan_sel == "naive" || plan_sel == "both") {
        naive = run_sort_audit(keys, FloatFormat::f32(), geom, PipelineKind::NaiveSinglePass);
        report_audit("naive", naive);
    }
    if (plan_sel == "both" && naive.total_misses > 0) {
        const double reduction =
            1.0 - static_cast<double>(tuned.total_misses) / naive.total_misses;
        os.get() << "tuned_vs_naive_miss_reduction " << fmt_double(reduction) << '\n';
    }

    if (!correct) return 2;
    if ((plan_sel == "tuned" || plan_sel == "both") && !tuned.sorted_ok) return 2;
    if ((plan_sel == "naive" || plan_sel == "both") && !naive.sorted_ok) return 2;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distribution-sort cache analysis workbench"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a modelled process through the simulator");
    std::string sim_variant = "inplace";
    DistFlags sim_dist;
    GeomFlags sim_geom;
    uint64_t sim_n = 1000000, sim_seed_base = 1;
    uint32_t sim_seeds = 1;
    std::string sim_out, sim_dump;
    sim->add_option("--variant", sim_variant, "inplace | outofplace | sequences | sort-trace")
        ->capture_default_str();
    add_dist_flags(sim, sim_dist);
    add_geom_flags(sim, sim_geom);
    sim->add_option("-n,--rounds", sim_n, "rounds (keys) per run")->capture_default_str();
    sim->add_option("--seeds", sim_seeds, "number of consecutive seeds")->capture_default_str();
    sim->add_option("--seed-base", sim_seed_base, "first seed")->capture_default_str();
    sim->add_option("--out", sim_out, "CSV output path (default stdout)");
    sim->add_option("--dump-trace", sim_dump, "dump the first seed's access trace to a file");

    // predict
    auto* pred = app.add_subcommand("predict", "evaluate an analytical formula");
    std::string pred_formula;
    DistFlags pred_dist;
    GeomFlags pred_geom;
    uint64_t pred_n = 1000000, pred_eseed = 0x9e3779b97f4a7c15ull;
    int pred_samples = 10000;
    double pred_eps = 1e-9;
    uint32_t pred_g = 0, pred_K = 0;
    bool pred_terms = false;
    bool pred_pretty = false;
    std::string pred_out, pred_variant;
    pred->add_option("--formula", pred_formula,
                     "thm1|thm2|thm3|thm4|thm5|thm6|cor1|cor2|cor3a|cor3b|seq")
        ->required();
    add_dist_flags(pred, pred_dist);
    add_geom_flags(pred, pred_geom);
    pred->add_option("-n,--rounds", pred_n, "rounds")->capture_default_str();
    pred->add_option("--samples", pred_samples, "occupancy samples per stratum")
        ->capture_default_str();
    pred->add_option("--eps", pred_eps, "series truncation target")->capture_default_str();
    pred->add_option("--estimator-seed", pred_eseed, "seed for the exact estimators");
    pred->add_option("-g,--groups", pred_g, "thm6: exponent groups");
    pred->add_option("-K,--group-width", pred_K, "thm6: pointers per group");
    pred->add_flag("--show-terms", pred_terms, "print each summand as a comment line");
    pred->add_flag("--pretty", pred_pretty, "human-readable table instead of CSV");
    pred->add_option("--variant", pred_variant,
                     "override the row's process label, e.g. join thm3 against outofplace runs");
    pred->add_option("--out", pred_out, "CSV output path (default stdout)");

    // compare
    auto* cmp = app.add_subcommand("compare", "join simulation and prediction CSVs");
    std::string cmp_sim, cmp_pred, cmp_out;
    cmp->add_option("--sim", cmp_sim, "simulation CSV")->required();
    cmp->add_option("--pred", cmp_pred, "prediction CSV")->required();
    cmp->add_option("--out", cmp_out, "report path (default stdout)");

    // sortbench
    auto* bench = app.add_subcommand("sortbench", "sort floats, check against an oracle, audit misses");
    uint64_t bench_n = 1000000, bench_seed = 1;
    std::string bench_keys, bench_plan = "tuned", bench_out;
    GeomFlags bench_geom;
    bench_geom.preset = "tiny";
    bool bench_time = false;
    bench->add_option("-n,--keys-count", bench_n, "keys to generate")->capture_default_str();
    bench->add_option("--seed", bench_seed, "generator seed")->capture_default_str();
    bench->add_option("--keys", bench_keys, "key file (overrides -n/--seed)");
    bench->add_option("--plan", bench_plan, "tuned | naive | both")->capture_default_str();
    add_geom_flags(bench, bench_geom);
    bench->add_flag("--time", bench_time, "also print local wall-clock time");
    bench->add_option("--out", bench_out, "report path (default stdout)");

    // genkeys
    auto* gen = app.add_subcommand("genkeys", "write a uniform-keys file");
    uint64_t gen_n = 1000000, gen_seed = 1;
    std::string gen_fmt = "f32", gen_out;
    gen->add_option("-n,--keys-count", gen_n, "keys to generate")->capture_default_str();
    gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
    gen->add_option("--fmt", gen_fmt, "f32 | f64")->capture_default_str();
    gen->add_option("--out", gen_out, "output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_variant, sim_dist, sim_geom, sim_n, sim_seeds, sim_seed_base,
                                sim_out, sim_dump);
        if (pred->parsed())
            return cmd_predict(pred_formula, pred_dist, pred_geom, pred_n, pred_samples,
                               pred_eps, pred_eseed, pred_g, pred_K, pred_terms, pred_pretty,
                               pred_variant, pred_out);
        if (cmp->parsed()) return cmd_compare(cmp_sim, cmp_pred, cmp_out);
        if (bench->parsed())
            return cmd_sortbench(bench_n, bench_seed, bench_keys, bench_plan, bench_geom,
                                 bench_time, bench_out);
        if (gen->parsed()) {
            if (gen_fmt == "f32") {
                auto keys = generate_uniform_floats(gen_n, gen_seed);
                write_key_file(resolve_out_path(gen_out), std::span<const float>(keys));
            } else if (gen_fmt == "f64") {
                auto keys = generate_uniform_doubles(gen_n, gen_seed);
                write_key_file(resolve_out_path(gen_out), std::span<const double>(keys));
            } else {
                throw CLI::ValidationError("--fmt", "unknown format " + gen_fmt);
            }
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
