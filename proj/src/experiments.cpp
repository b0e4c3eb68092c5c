#include "rotorcover/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace rotorcover {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int thread_count(const ExperimentConfig& cfg, int replicas) {
    int t = cfg.threads > 0 ? cfg.threads
                            : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    return std::min(t, std::max(1, replicas));
}

// Runs fn(replica) for replica = 0..replicas-1 on a small pool. Results must
// go into per-replica slots; aggregation stays with the caller.
void parallel_replicas(int replicas, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1) {
        for (int r = 0; r < replicas; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= replicas) return;
                try {
                    fn(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct MeanStderr {
    double mean = 0;
    double se = 0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    const size_t n = xs.size();
    if (n == 0) return out;
    double s = 0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(n);
    if (n > 1) {
        double q = 0;
        for (double x : xs) q += (x - out.mean) * (x - out.mean);
        out.se = std::sqrt(q / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return out;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.replicas < 1) throw std::invalid_argument("experiment needs replicas >= 1");
    if (cfg.steps < 1 || cfg.returns < 1)
        throw std::invalid_argument("experiment needs a horizon >= 1");
    if (cfg.root_type < 0 || cfg.root_type >= cfg.gen.n_types)
        throw std::out_of_range("root type out of range");
}

void echo_config(ExperimentReport& rep, const ExperimentConfig& cfg) {
    rep.config_echo = {
        {"generator", cfg.generator_name},
        {"root_type", std::to_string(cfg.root_type + 1)},
        {"replicas", std::to_string(cfg.replicas)},
        {"steps", std::to_string(cfg.steps)},
        {"returns", std::to_string(cfg.returns)},
        {"seed_base", std::to_string(cfg.seed_base)},
        {"stride", std::to_string(cfg.stride)},
        {"step_cap", std::to_string(cfg.step_cap)},
        {"threads", std::to_string(cfg.threads)},
    };
}

double lln_tolerance(const ExperimentConfig& cfg, const MomentData& md) {
    if (cfg.tolerance) return *cfg.tolerance;
    return (md.gamma && *md.gamma < 1.2) ? 0.02 : 0.01;
}

bool require_positive_recurrent(ExperimentReport& rep, const MomentData& md) {
    if (md.classification == Classification::positive_recurrent && md.predicted_limit)
        return true;
    rep.verdict = Verdict::not_applicable;
    rep.details.emplace_back("reason", "classification is " + to_string(md.classification) +
                                           (md.predicted_limit ? "" : ", no predicted limit"));
    return false;
}

} // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::not_applicable: return "not_applicable";
        case Verdict::informational: return "informational";
    }
    return "?";
}

ExperimentReport lln_range(const ExperimentConfig& cfg, const MomentData& md) {
    validate(cfg);
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.name = "lln_range";
    rep.target_formula = "(1 - 1/gamma)/2, gamma = rho(I + (D-I)(I-M)^-1)";
    echo_config(rep, cfg);
    if (!require_positive_recurrent(rep, md)) {
        rep.runtime_seconds = seconds_since(t0);
        return rep;
    }
    rep.target = *md.predicted_limit;
    rep.tolerance = lln_tolerance(cfg, md);

    std::vector<double> finals(cfg.replicas);
    std::vector<std::vector<SeriesPoint>> logs(cfg.replicas);
    parallel_replicas(cfg.replicas, thread_count(cfg, cfg.replicas), [&](int r) {
        Walk::Options opts;
        opts.step_cap = cfg.steps;
        opts.range_log_stride = cfg.stride;
        Walk w(cfg.gen, cfg.law, cfg.root_type, cfg.seed_base + static_cast<std::uint64_t>(r),
               opts);
        w.run_steps(cfg.steps);
        finals[r] = static_cast<double>(w.range_size()) / static_cast<double>(w.n());
        for (const auto& [n, sz] : w.range_log())
            logs[r].push_back({r, n, static_cast<double>(sz) / static_cast<double>(n)});
        logs[r].push_back({r, w.n(), finals[r]});
    });
    for (auto& log : logs) rep.series.insert(rep.series.end(), log.begin(), log.end());

    const MeanStderr ms = mean_stderr(finals);
    rep.empirical_mean = ms.mean;
    rep.standard_error = ms.se;
    rep.verdict = std::abs(ms.mean - rep.target) <= rep.tolerance ? Verdict::pass : Verdict::fail;
    rep.details.emplace_back("abs_error", fmt(std::abs(ms.mean - rep.target)));
    rep.details.emplace_back("tolerance_kind", "engineering tolerance");
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

ExperimentReport lln_at_returns(const ExperimentConfig& cfg, const MomentData& md) {
    validate(cfg);
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.name = "lln_at_returns";
    rep.target_formula = "(1 - 1/gamma)/2 at sink-return times";
    echo_config(rep, cfg);
    if (!require_positive_recurrent(rep, md)) {
        rep.runtime_seconds = seconds_since(t0);
        return rep;
    }
    rep.target = *md.predicted_limit;
    rep.tolerance = lln_tolerance(cfg, md);

    std::vector<std::optional<double>> last_ratio(cfg.replicas);
    std::vector<std::vector<SeriesPoint>> logs(cfg.replicas);
    std::vector<std::int64_t> violations(cfg.replicas, 0);
    parallel_replicas(cfg.replicas, thread_count(cfg, cfg.replicas), [&](int r) {
        Walk::Options opts;
        opts.step_cap = cfg.step_cap;
        Walk w(cfg.gen, cfg.law, cfg.root_type, cfg.seed_base + static_cast<std::uint64_t>(r),
               opts);
        const ReturnRunResult res = w.run_until_returns(cfg.returns, true);
        for (const auto& rec : res.records) {
            const std::int64_t range = std::accumulate(rec.range_by_type.begin(),
                                                       rec.range_by_type.end(), std::int64_t{0});
            const double ratio = static_cast<double>(range) / static_cast<double>(rec.tau);
            logs[r].push_back({r, rec.k, ratio});
            last_ratio[r] = ratio;
            if (!rec.all_ok()) ++violations[r];
        }
    });
    for (auto& log : logs) rep.series.insert(rep.series.end(), log.begin(), log.end());
    for (auto v : violations) rep.identity_violations += v;

    std::vector<double> finals; // replicas that achieved no return contribute nothing
    for (const auto& x : last_ratio)
        if (x) finals.push_back(*x);
    const MeanStderr ms = mean_stderr(finals);
    rep.empirical_mean = ms.mean;
    rep.standard_error = ms.se;
    const bool ok =
        rep.identity_violations == 0 && std::abs(ms.mean - rep.target) <= rep.tolerance;
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

ExperimentReport leaf_growth(const ExperimentConfig& cfg, const MomentData& md) {
    validate(cfg);
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.name = "leaf_growth";
    rep.target_formula = "E[L_1 | root type i] = row i of I + V(D - I); growth rate gamma";
    echo_config(rep, cfg);
    if (!require_positive_recurrent(rep, md)) {
        rep.runtime_seconds = seconds_since(t0);
        return rep;
    }
    const int n = cfg.gen.n_types;
    rep.target = *md.gamma;
    rep.tolerance = cfg.tolerance.value_or(0.15);

    // (a) one-generation offspring mean of the leaf process from e_root.
    std::vector<std::vector<std::int64_t>> leaf1(cfg.replicas);
    parallel_replicas(cfg.replicas, thread_count(cfg, cfg.replicas), [&](int r) {
        Walk::Options opts;
        opts.step_cap = cfg.step_cap;
        Walk w(cfg.gen, cfg.law, cfg.root_type, cfg.seed_base + static_cast<std::uint64_t>(r),
               opts);
        const ReturnRunResult res = w.run_until_returns(1, false);
        if (!res.records.empty()) leaf1[r] = res.records[0].leaves_by_type;
    });
    bool mean_ok = true;
    const MatD leaf_mean = to_real(*md.leaf_mean);
    for (int j = 0; j < n; ++j) {
        std::vector<double> xs;
        xs.reserve(leaf1.size());
        for (const auto& v : leaf1)
            if (!v.empty()) xs.push_back(static_cast<double>(v[j]));
        const MeanStderr ms = mean_stderr(xs);
        const double expect = leaf_mean(cfg.root_type, j);
        const double err = std::abs(ms.mean - expect);
        if (err > 3 * ms.se + 1e-12) mean_ok = false;
        rep.details.emplace_back("leaf_mean_type_" + std::to_string(j + 1),
                                 fmt(ms.mean) + " vs " + fmt(expect) + " (se " + fmt(ms.se) + ")");
    }

    // (b) growth-rate ratios over the deepest achieved generations.
    const int growth_replicas = std::min(cfg.replicas, 64);
    std::vector<std::vector<double>> norms(growth_replicas);
    std::vector<std::vector<SeriesPoint>> logs(growth_replicas);
    parallel_replicas(growth_replicas, thread_count(cfg, growth_replicas), [&](int r) {
        Walk::Options opts;
        opts.step_cap = cfg.step_cap;
        Walk w(cfg.gen, cfg.law, cfg.root_type,
               cfg.seed_base + 1'000'003 + static_cast<std::uint64_t>(r), opts);
        const ReturnRunResult res = w.run_until_returns(cfg.returns, false);
        for (const auto& rec : res.records) {
            double norm = 0;
            for (auto c : rec.leaves_by_type) norm += static_cast<double>(c);
            norms[r].push_back(norm);
            logs[r].push_back({r, rec.k, norm});
        }
    });
    for (auto& log : logs) rep.series.insert(rep.series.end(), log.begin(), log.end());
    std::vector<double> ratios;
    for (const auto& ns : norms) {
        const size_t m = ns.size();
        for (size_t k = m >= 4 ? m - 4 : 0; k + 1 < m; ++k)
            if (ns[k] > 0) ratios.push_back(ns[k + 1] / ns[k]);
    }
    double median_ratio = 0;
    if (!ratios.empty()) {
        std::sort(ratios.begin(), ratios.end());
        median_ratio = ratios[ratios.size() / 2];
    }
    rep.empirical_mean = median_ratio;
    rep.details.emplace_back("median_growth_ratio", fmt(median_ratio));
    rep.details.emplace_back("gamma", fmt(*md.gamma));

    const bool growth_ok = std::abs(median_ratio - *md.gamma) <= rep.tolerance * *md.gamma;
    rep.verdict = (mean_ok && growth_ok) ? Verdict::pass : Verdict::fail;
    rep.details.emplace_back("one_generation_mean_ok", mean_ok ? "yes" : "no");
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

ExperimentReport verify_identities(const ExperimentConfig& cfg, const MomentData& md,
                                   bool corrupt) {
    validate(cfg);
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.name = "verify_identities";
    rep.target_formula =
        "tau_k - tau_{k-1} = 2|R_k|; leaves = (D^T - I) range + e_root; rotors restored";
    echo_config(rep, cfg);
    if (md.classification == Classification::transient) {
        rep.verdict = Verdict::not_applicable;
        rep.details.emplace_back("reason", "transient walk has no return guarantee");
        rep.runtime_seconds = seconds_since(t0);
        return rep;
    }

    std::vector<std::int64_t> achieved(cfg.replicas, 0);
    std::vector<std::int64_t> violations(cfg.replicas, 0);
    std::vector<std::optional<IdentityViolation>> firsts(cfg.replicas);
    parallel_replicas(cfg.replicas, thread_count(cfg, cfg.replicas), [&](int r) {
        const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(r);
        Walk::Options opts;
        opts.step_cap = cfg.step_cap;
        opts.corrupt_modulus = corrupt;
        Walk w(cfg.gen, cfg.law, cfg.root_type, seed, opts);
        const ReturnRunResult res = w.run_until_returns(cfg.returns, true);
        achieved[r] = static_cast<std::int64_t>(res.records.size());
        for (const auto& rec : res.records) {
            if (rec.all_ok()) continue;
            ++violations[r];
            if (!firsts[r]) {
                std::string which;
                if (!rec.eq_tau_ok) which += "tau-range;";
                if (!rec.leaves_ok) which += "leaves;";
                if (!rec.rotors_restored) which += "rotor-restoration;";
                firsts[r] = IdentityViolation{seed, rec.k, which};
            }
        }
    });

    std::int64_t total_returns = 0, min_k = -1, max_k = 0;
    for (int r = 0; r < cfg.replicas; ++r) {
        total_returns += achieved[r];
        min_k = min_k < 0 ? achieved[r] : std::min(min_k, achieved[r]);
        max_k = std::max(max_k, achieved[r]);
        rep.identity_violations += violations[r];
        if (!rep.first_violation && firsts[r]) rep.first_violation = firsts[r];
    }
    rep.empirical_mean = static_cast<double>(rep.identity_violations);
    rep.target = 0;
    rep.details.emplace_back("returns_checked", std::to_string(total_returns));
    rep.details.emplace_back("returns_min", std::to_string(min_k));
    rep.details.emplace_back("returns_max", std::to_string(max_k));
    if (rep.first_violation)
        rep.details.emplace_back("first_violation",
                                 "seed " + std::to_string(rep.first_violation->seed) + " k " +
                                     std::to_string(rep.first_violation->k) + " " +
                                     rep.first_violation->which);
    rep.verdict = (rep.identity_violations == 0 && total_returns > 0) ? Verdict::pass
                                                                      : Verdict::fail;
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

ExperimentReport conjecture_probe(const ExperimentConfig& cfg, const MomentData& md) {
    validate(cfg);
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.name = "conjecture_probe";
    rep.target_formula = "conjectured |R_n|/n -> 1/2 in the null recurrent case";
    echo_config(rep, cfg);
    if (md.classification != Classification::null_recurrent) {
        rep.verdict = Verdict::not_applicable;
        rep.details.emplace_back("reason", "classification is " + to_string(md.classification));
        rep.runtime_seconds = seconds_since(t0);
        return rep;
    }
    rep.target = 0.5;

    std::vector<double> finals(cfg.replicas);
    std::vector<std::vector<SeriesPoint>> logs(cfg.replicas);
    parallel_replicas(cfg.replicas, thread_count(cfg, cfg.replicas), [&](int r) {
        Walk::Options opts;
        opts.step_cap = cfg.steps;
        opts.range_log_stride = cfg.stride;
        Walk w(cfg.gen, cfg.law, cfg.root_type, cfg.seed_base + static_cast<std::uint64_t>(r),
               opts);
        w.run_steps(cfg.steps);
        finals[r] = static_cast<double>(w.range_size()) / static_cast<double>(w.n());
        for (const auto& [n, sz] : w.range_log())
            logs[r].push_back({r, n, static_cast<double>(sz) / static_cast<double>(n)});
        logs[r].push_back({r, w.n(), finals[r]});
    });
    for (auto& log : logs) rep.series.insert(rep.series.end(), log.begin(), log.end());

    const MeanStderr ms = mean_stderr(finals);
    rep.empirical_mean = ms.mean;
    rep.standard_error = ms.se;
    rep.details.emplace_back("distance_to_half", fmt(std::abs(ms.mean - 0.5)));
    rep.verdict = Verdict::informational;
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

ExperimentReport moment_check(const ExperimentConfig& cfg, const MomentData& md) {
    validate(cfg);
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.name = "moment_check";
    rep.target_formula = "E[Y] rows = (I-M)^-1; E[Y_j Y_k] = xi tensor";
    echo_config(rep, cfg);
    if (md.classification != Classification::positive_recurrent || !md.V || !md.xi) {
        rep.verdict = Verdict::not_applicable;
        rep.details.emplace_back("reason", "classification is " + to_string(md.classification));
        rep.runtime_seconds = seconds_since(t0);
        return rep;
    }

    const int n = cfg.gen.n_types;
    const int samples = cfg.replicas;
    const MatD v = to_real(*md.V);
    const Tensor3D xi = to_real(*md.xi);
    bool all_ok = true;
    std::int64_t truncated = 0;
    double worst_sigmas = 0;

    for (int root = 0; root < n; ++root) {
        std::vector<std::vector<std::int64_t>> ys(samples);
        std::vector<char> trunc(samples, 0);
        parallel_replicas(samples, thread_count(cfg, samples), [&](int s) {
            const std::uint64_t seed = cfg.seed_base +
                                       (static_cast<std::uint64_t>(root) << 40) +
                                       static_cast<std::uint64_t>(s);
            GoodTreeSample gts = sample_good_tree(cfg.gen, cfg.law, root, seed);
            ys[s] = std::move(gts.counts);
            trunc[s] = gts.truncated ? 1 : 0;
        });
        for (char t : trunc) truncated += t;
        for (int j = 0; j < n; ++j) {
            std::vector<double> xs(samples);
            for (int s = 0; s < samples; ++s) xs[s] = static_cast<double>(ys[s][j]);
            const MeanStderr ms = mean_stderr(xs);
            const double err = std::abs(ms.mean - v(root, j));
            const double sig = ms.se > 0 ? err / ms.se : (err == 0 ? 0 : 1e9);
            worst_sigmas = std::max(worst_sigmas, sig);
            if (err > 3 * ms.se + 1e-12) all_ok = false;
        }
        for (int j = 0; j < n; ++j)
            for (int k = j; k < n; ++k) {
                std::vector<double> xs(samples);
                for (int s = 0; s < samples; ++s)
                    xs[s] = static_cast<double>(ys[s][j]) * static_cast<double>(ys[s][k]);
                const MeanStderr ms = mean_stderr(xs);
                const double err = std::abs(ms.mean - xi(root, j, k));
                const double sig = ms.se > 0 ? err / ms.se : (err == 0 ? 0 : 1e9);
                worst_sigmas = std::max(worst_sigmas, sig);
                if (err > 3 * ms.se + 1e-12) all_ok = false;
            }
    }
    rep.empirical_mean = worst_sigmas; // worst deviation in units of standard errors
    rep.tolerance = 3.0;
    rep.details.emplace_back("samples_per_root_type", std::to_string(samples));
    rep.details.emplace_back("worst_deviation_sigmas", fmt(worst_sigmas));
    rep.details.emplace_back("truncated_samples", std::to_string(truncated));
    rep.verdict = (all_ok && truncated == 0) ? Verdict::pass : Verdict::fail;
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

std::string series_csv(const ExperimentReport& report) {
    std::ostringstream os;
    os << "replica,n_or_k,value\n";
    os.precision(12);
    for (const auto& p : report.series)
        os << p.replica << ',' << p.x << ',' << p.value << '\n';
    return os.str();
}

std::string summary_text(const ExperimentReport& report) {
    std::ostringstream os;
    os.precision(12);
    os << "name = " << report.name << '\n';
    os << "verdict = " << to_string(report.verdict) << '\n';
    os << "target_formula = " << report.target_formula << '\n';
    os << "target = " << report.target << '\n';
    os << "empirical_mean = " << report.empirical_mean << '\n';
    os << "standard_error = " << report.standard_error << '\n';
    os << "tolerance = " << report.tolerance << '\n';
    os << "identity_violations = " << report.identity_violations << '\n';
    os << "runtime_seconds = " << report.runtime_seconds << '\n';
    for (const auto& [k, v] : report.config_echo) os << "config." << k << " = " << v << '\n';
    for (const auto& [k, v] : report.details) os << "detail." << k << " = " << v << '\n';
    return os.str();
}

std::string report_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["name"] = report.name;
    j["verdict"] = to_string(report.verdict);
    j["target_formula"] = report.target_formula;
    j["target"] = report.target;
    j["empirical_mean"] = report.empirical_mean;
    j["standard_error"] = report.standard_error;
    j["tolerance"] = report.tolerance;
    j["identity_violations"] = report.identity_violations;
    j["runtime_seconds"] = report.runtime_seconds;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : report.config_echo) cfg[k] = v;
    j["config"] = cfg;
    nlohmann::json det = nlohmann::json::object();
    for (const auto& [k, v] : report.details) det[k] = v;
    j["details"] = det;
    if (report.first_violation) {
        j["first_violation"] = {{"seed", report.first_violation->seed},
                                {"k", report.first_violation->k},
                                {"which", report.first_violation->which}};
    }
    return j.dump(2);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

} // namespace rotorcover
