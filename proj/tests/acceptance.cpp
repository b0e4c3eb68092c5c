// Acceptance suite: one line per criterion, nonzero exit iff any failed.
// Budgets are wall-clock on a small CI box; seeds are frozen so every run is
// reproducible bit for bit.

#include "rotorcover/experiments.hpp"
#include "rotorcover/generator.hpp"
#include "rotorcover/mbp.hpp"
#include "rotorcover/rng.hpp"
#include "rotorcover/spectral.hpp"
#include "rotorcover/walk.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace rotorcover;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = ROTORCOVER_DATA_DIR;
const std::string kCliPath = ROTORCOVER_CLI_PATH;

int g_failures = 0;

struct Criterion {
    explicit Criterion(std::string name) : name_(std::move(name)), t0_(clock_::now()) {}
    void expect(bool ok, const std::string& what) {
        if (!ok) {
            problems_.push_back(what);
        }
        checks_ += 1;
    }
    ~Criterion() {
        const double dt =
            std::chrono::duration<double>(clock_::now() - t0_).count();
        if (problems_.empty()) {
            std::printf("[PASS] %-55s (%d checks, %.2f s)\n", name_.c_str(), checks_, dt);
        } else {
            ++g_failures;
            std::printf("[FAIL] %-55s (%.2f s)\n", name_.c_str(), dt);
            for (const auto& p : problems_) std::printf("       - %s\n", p.c_str());
        }
    }
    using clock_ = std::chrono::steady_clock;
    std::string name_;
    clock_::time_point t0_;
    std::vector<std::string> problems_;
    int checks_ = 0;
};

Generator load(const std::string& name) { return load_generator(kDataDir + "/" + name); }

ExperimentConfig make_config(const Generator& g, const std::string& name, std::uint64_t seed) {
    ExperimentConfig cfg{g,    RotorLaw::uniform(g), name, 0, 20, 1'000'000, 20, seed, 0,
                         std::nullopt, 2'000'000'000, 0};
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// -------------------------------------------------------------------------

void c1_appendix_reproduction() {
    Criterion c("C1 appendix reproduction (exact M, rho, classes)");
    const Generator g = load("appendix.toml");
    const MomentData md = analyze(g, RotorLaw::uniform(g));
    const MatQ expected{{Rational(3, 5), Rational(3, 5), Rational(4, 5), 0, 0},
                        {Rational(1, 2), 0, 0, 0, 0},
                        {0, 0, 0, Rational(1, 2), 0},
                        {0, 0, 0, 0, Rational(1, 2)},
                        {0, Rational(1, 2), 0, 0, 0}};
    c.expect(md.M == expected, "appendix M differs from the published matrix");
    c.expect(std::abs(md.rho_M - 0.967) <= 5e-4,
             "rho(M) = " + std::to_string(md.rho_M) + " not within 5e-4 of 0.967");
    c.expect(md.classification == Classification::positive_recurrent,
             "appendix should classify positive recurrent");

    const Generator sub = load("appendix_subtree.toml");
    const MomentData ms = analyze(sub, RotorLaw::uniform(sub));
    const MatQ expected_bar{{Rational(3, 4), Rational(3, 4)}, {Rational(1, 2), 0}};
    c.expect(ms.M == expected_bar, "subtree M differs from the published matrix");
    c.expect(std::abs(ms.rho_M - 1.093) <= 5e-4,
             "rho(M-bar) = " + std::to_string(ms.rho_M) + " not within 5e-4 of 1.093");
    c.expect(ms.classification == Classification::transient,
             "subtree should classify transient");
}

void c2_exact_identity_suite() {
    Criterion c("C2 exact identity suite (3.1, 3.6, rotor restoration)");
    // Per-generator step caps keep the run inside the budget: tau_k grows like
    // gamma^k, and gamma ranges from 1 (ray) to ~32.9 (appendix), so a fixed
    // k = 20 is reached only where gamma is small; elsewhere every return
    // achieved under the cap is checked.
    struct Item {
        const char* file;
        std::int64_t cap;
        std::int64_t min_total_returns;
    };
    const std::vector<Item> items = {
        {"appendix.toml", 400'000, 200},      // gamma ~ 32.9: k ~ 3-4 per seed
        {"sqrt2.toml", 2'000'000, 1000},      // gamma ~ 2.41: k ~ 12-13 per seed
        {"binary_critical.toml", 400'000, 150}, // critical: range grows doubly
                                                // exponentially, k ~ 2-3 per seed
        {"ray.toml", 1'000'000, 2000},        // gamma = 1: all 20 returns
        {"two_cycle", 1'000'000, 2000},       // palindromic, psi = 1: all 20
    };
    std::int64_t grand_returns = 0;
    for (const auto& item : items) {
        const Generator g = std::string(item.file) == "two_cycle"
                                ? parse_generator("n_types = 2\nword.1 = [2]\nword.2 = [1]\n")
                                : load(item.file);
        ExperimentConfig cfg = make_config(g, item.file, 1000);
        cfg.replicas = 100;
        cfg.returns = 20;
        cfg.step_cap = item.cap;
        const MomentData md = analyze(g, cfg.law);
        const ExperimentReport rep = verify_identities(cfg, md);
        c.expect(rep.identity_violations == 0,
                 std::string(item.file) + ": " + std::to_string(rep.identity_violations) +
                     " identity violations" +
                     (rep.first_violation ? " (first: " + rep.first_violation->which + ")" : ""));
        std::int64_t total = 0;
        for (const auto& [k, v] : rep.details)
            if (k == "returns_checked") total = std::stoll(v);
        grand_returns += total;
        c.expect(total >= item.min_total_returns,
                 std::string(item.file) + ": only " + std::to_string(total) +
                     " returns achieved");
    }
    c.expect(grand_returns >= 100 * 20,
             "fewer than 100 x 20 returns checked across the suite");

    // Harness self-test: the corrupted modulus must be caught.
    const Generator g = load("sqrt2.toml");
    ExperimentConfig cfg = make_config(g, "sqrt2-corrupt", 5);
    cfg.replicas = 5;
    cfg.returns = 3;
    cfg.step_cap = 100'000;
    const ExperimentReport bad = verify_identities(cfg, analyze(g, cfg.law), true);
    c.expect(bad.identity_violations > 0 && bad.verdict == Verdict::fail,
             "corrupted modulus was not detected");
}

Generator random_palindromic(RngStream& rng, int max_types, int max_half) {
    for (;;) {
        Generator g;
        g.n_types = 1 + static_cast<int>(rng.next() % max_types);
        g.words.resize(g.n_types);
        for (auto& w : g.words) {
            const int half = static_cast<int>(rng.next() % (max_half + 1));
            const bool odd = (rng.next() & 1) != 0;
            std::vector<int> head(half);
            for (auto& t : head) t = static_cast<int>(rng.next() % g.n_types);
            w = head;
            if (odd || half == 0) w.push_back(static_cast<int>(rng.next() % g.n_types));
            for (auto it = head.rbegin(); it != head.rend(); ++it) w.push_back(*it);
        }
        bool ok = true; // d_i <= 9 and strong connectivity
        for (const auto& w : g.words) ok = ok && !w.empty() && w.size() <= 9;
        if (!ok) continue;
        try {
            return parse_generator(serialize_generator(g));
        } catch (const ParseError&) {
        }
    }
}

void c3_palindromic_property() {
    Criterion c("C3 Lemma 4.2 property: 2M = D for 1000 palindromes");
    RngStream rng(20250810);
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Generator g = random_palindromic(rng, 5, 4);
        if (!is_palindromic(g) || !palindromic_first_moment_identity(g)) ++bad;
    }
    c.expect(bad == 0, std::to_string(bad) + " palindromic generators violated 2M = D");
}

void c4_closed_form_consistency() {
    Criterion c("C4 Lemma 4.3 / Theorem 4.4 consistency");
    std::vector<Generator> gens = {
        load("sqrt2.toml"),
        load("ray.toml"),
        parse_generator("n_types = 2\nword.1 = [2]\nword.2 = [1]\n"),
        parse_generator("n_types = 3\nword.1 = [2]\nword.2 = [3]\nword.3 = [1, 1]\n"),
    };
    RngStream rng(4);
    int found = 0;
    while (found < 30) { // random palindromic positive-recurrent instances
        const Generator g = random_palindromic(rng, 4, 1);
        if (spectral_radius(adjacency_real(g)) < 2.0 - 1e-9) {
            gens.push_back(g);
            ++found;
        }
    }
    int tested = 0;
    for (const Generator& g : gens) {
        if (!is_palindromic(g)) continue;
        const MatQ d = adjacency(g);
        const double psi = spectral_radius(to_real(d));
        if (psi >= 2.0 - 1e-9) continue;
        ++tested;
        const MatQ gm = gamma_matrix(d, Rational(1, 2) * d);
        const double direct = spectral_radius(to_real(gm));
        const double closed = gamma_closed_form(psi, 2.0);
        c.expect(std::abs(direct - closed) <= 1e-9,
                 "rho(gamma_matrix) vs closed form differ by " +
                     std::to_string(std::abs(direct - closed)));
        const double limit = 0.5 * (1.0 - 1.0 / direct);
        c.expect(std::abs(limit - (psi - 1.0) / psi) <= 1e-9,
                 "(1 - 1/gamma)/2 vs (psi - 1)/psi differ by " +
                     std::to_string(std::abs(limit - (psi - 1.0) / psi)));
    }
    c.expect(tested >= 30, "too few palindromic positive-recurrent instances tested");
}

void c5_total_progeny_means() {
    Criterion c("C5 Lemma 3.2 Monte-Carlo: E[Y] rows vs (I-M)^-1");
    for (const std::string name : {"appendix.toml", "sqrt2.toml"}) {
        const Generator g = load(name);
        const RotorLaw law = RotorLaw::uniform(g);
        const MomentData md = analyze(g, law);
        const MatD v = to_real(*md.V);
        const int samples = 100'000;
        for (int root = 0; root < g.n_types; ++root) {
            std::vector<double> sum(g.n_types, 0), sumsq(g.n_types, 0);
            for (int s = 0; s < samples; ++s) {
                const GoodTreeSample gt = sample_good_tree(
                    g, law, root, 90'000'000ull + static_cast<std::uint64_t>(s));
                for (int j = 0; j < g.n_types; ++j) {
                    const double x = static_cast<double>(gt.counts[j]);
                    sum[j] += x;
                    sumsq[j] += x * x;
                }
            }
            for (int j = 0; j < g.n_types; ++j) {
                const double mean = sum[j] / samples;
                const double var = (sumsq[j] - samples * mean * mean) / (samples - 1);
                const double se = std::sqrt(var / samples);
                const double err = std::abs(mean - v(root, j));
                c.expect(err <= 3 * se + 1e-12,
                         name + " root " + std::to_string(root + 1) + " type " +
                             std::to_string(j + 1) + ": |" + std::to_string(mean) + " - " +
                             std::to_string(v(root, j)) + "| > 3 s.e. (" + std::to_string(se) +
                             ")");
            }
        }
    }
}

void c6_total_progeny_second_moments() {
    Criterion c("C6 Lemma 3.3 / mixed second moments vs xi");
    const Generator g = load("sqrt2.toml");
    ExperimentConfig cfg = make_config(g, "sqrt2", 314159);
    cfg.replicas = 100'000;
    const MomentData md = analyze(g, cfg.law);
    const ExperimentReport rep = moment_check(cfg, md);
    c.expect(rep.verdict == Verdict::pass,
             "moment_check verdict " + to_string(rep.verdict) + ", worst deviation " +
                 std::to_string(rep.empirical_mean) + " s.e.");

    // single-type reduction against an independent scalar recursion:
    //   a = 1 + m a;  b = 1 + 2 m a + m (b - a^2) + E[Z^2] a^2
    const Generator ray = load("ray.toml");
    const OffspringLaw ol = offspring_law(ray, RotorLaw::uniform(ray));
    const TotalSizeMoments tsm = total_size_moments(first_moment_matrix(ol),
                                                    second_moments(ol));
    double a = 0, b = 0;
    const double m = 0.5, s = 0.5; // uniform one-child law: E[Z] = E[Z^2] = 1/2
    for (int it = 0; it < 200; ++it) {
        const double a2 = 1 + m * a;
        const double b2 = 1 + 2 * m * a + m * (b - a * a) + s * a * a;
        a = a2;
        b = b2;
    }
    c.expect(std::abs(to_double(tsm.V(0, 0)) - a) <= 1e-8,
             "scalar oracle mean mismatch: " + std::to_string(a));
    c.expect(std::abs(to_double(tsm.xi(0, 0, 0)) - b) <= 1e-8,
             "scalar oracle second moment mismatch: " + std::to_string(b));
}

void c7_range_density() {
    Criterion c("C7 Theorem 1.1 at desk scale: mean |R_n|/n");
    {
        const Generator g = load("sqrt2.toml");
        ExperimentConfig cfg = make_config(g, "sqrt2", 271828);
        cfg.replicas = 20;
        cfg.steps = 1'000'000;
        cfg.tolerance = 0.01;
        const MomentData md = analyze(g, cfg.law);
        const ExperimentReport rep = lln_range(cfg, md);
        c.expect(std::abs(rep.target - (1.0 - std::sqrt(2.0) / 2.0)) < 1e-9,
                 "sqrt2 target is not 1 - sqrt(2)/2");
        c.expect(rep.verdict == Verdict::pass,
                 "sqrt2 mean " + std::to_string(rep.empirical_mean) + " vs target " +
                     std::to_string(rep.target) + " missed 0.01");
    }
    {
        const Generator g = load("appendix.toml");
        ExperimentConfig cfg = make_config(g, "appendix", 161803);
        cfg.replicas = 20;
        cfg.steps = 1'000'000;
        cfg.tolerance = 0.02;
        const MomentData md = analyze(g, cfg.law);
        const ExperimentReport rep = lln_range(cfg, md);
        c.expect(rep.verdict == Verdict::pass,
                 "appendix mean " + std::to_string(rep.empirical_mean) + " vs target " +
                     std::to_string(rep.target) + " missed 0.02");
    }
}

void c8_generating_functions() {
    Criterion c("C8 generating function checks (f, F, grad F = V)");
    for (const std::string name : {"appendix.toml", "sqrt2.toml", "ray.toml"}) {
        const Generator g = load(name);
        const RotorLaw law = RotorLaw::uniform(g);
        const OffspringLaw ol = offspring_law(g, law);
        const int n = g.n_types;

        // f(1) = 1 exactly: the rational offspring probabilities sum to one
        for (int i = 0; i < n; ++i) {
            Rational total = 0;
            for (const auto& e : ol.per_type[i]) total += e.prob;
            c.expect(total == 1, name + ": offspring probabilities of type " +
                                     std::to_string(i + 1) + " sum to " + to_string(total));
        }

        // F(1) = 1 within 1e-8 for positive recurrent instances
        const MomentData md = analyze(g, law);
        if (md.classification != Classification::positive_recurrent) continue;
        const std::vector<double> ones(n, 1.0);
        const std::vector<double> f1 = total_size_gf(ol, ones, 1e-13);
        for (int i = 0; i < n; ++i)
            c.expect(std::abs(f1[i] - 1.0) <= 1e-8,
                     name + ": F_" + std::to_string(i + 1) + "(1) = " + std::to_string(f1[i]));

        // gradient of F at 1 reproduces V within 1e-4 relative
        // (second-order one-sided stencil; z must stay inside [0,1]^N)
        const MatD v = to_real(*md.V);
        const double h = 1e-5;
        for (int j = 0; j < n; ++j) {
            std::vector<double> z(n, 1.0);
            const std::vector<double> f0 = total_size_gf(ol, z, 1e-14);
            z[j] = 1.0 - h;
            const std::vector<double> fa = total_size_gf(ol, z, 1e-14);
            z[j] = 1.0 - 2 * h;
            const std::vector<double> fb = total_size_gf(ol, z, 1e-14);
            for (int i = 0; i < n; ++i) {
                const double fd = (3 * f0[i] - 4 * fa[i] + fb[i]) / (2 * h);
                const double rel = std::abs(fd - v(i, j)) / std::max(std::abs(v(i, j)), 1e-12);
                c.expect(rel <= 1e-4, name + ": dF_" + std::to_string(i + 1) + "/dz_" +
                                          std::to_string(j + 1) + " off by relative " +
                                          std::to_string(rel));
            }
        }
    }
}

void c9_cli_determinism() {
    Criterion c("C9 simulate determinism: byte-identical outputs");
    const fs::path base = fs::temp_directory_path() / "rotorcover_acceptance";
    std::error_code ec;
    fs::remove_all(base, ec);
    fs::create_directories(base);
    const std::string gen = kDataDir + "/sqrt2.toml";
    for (int run = 0; run < 2; ++run) {
        const std::string out = (base / ("run" + std::to_string(run))).string();
        const std::string cmd = "\"" + kCliPath + "\" simulate \"" + gen +
                                "\" --root 1 --seed 4242 --steps 200000 --stride 1000 --out \"" +
                                out + "\" > \"" + out + ".stdout\" 2>&1";
        const int rc = std::system(cmd.c_str());
        c.expect(rc == 0, "simulate exited with code " + std::to_string(rc));
    }
    for (const std::string f : {"/series.csv", "/summary.txt", ".stdout"}) {
        const std::string a = slurp((base / "run0").string() + f);
        const std::string b = slurp((base / "run1").string() + f);
        c.expect(!a.empty() && a == b, "output " + f + " differs between identical runs");
    }
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    c1_appendix_reproduction();
    c2_exact_identity_suite();
    c3_palindromic_property();
    c4_closed_form_consistency();
    c5_total_progeny_means();
    c6_total_progeny_second_moments();
    c7_range_density();
    c8_generating_functions();
    c9_cli_determinism();
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s: %d criterion(s) failed, total %.1f s\n",
                g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", g_failures, dt);
    return g_failures;
}
