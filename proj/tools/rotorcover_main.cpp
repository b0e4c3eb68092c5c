// rotorcover: analyze and simulate rotor walks on periodic trees.
//
// Subcommands:
//   analyze     moment matrices, spectral radius, classification, range limit
//   simulate    one seeded walk; emits a (n, |R_n|) series and a summary
//   verify      exact identity suite + branching-process moment checks
//   experiment  Monte-Carlo experiments against the analyzer's predictions
//   palindromic palindrome structure, 2M = D, branching-number limit
//
// Exit codes: 0 success/pass, 1 verification failure, 2 usage or input error.

#include <CLI11.hpp>

#include "rotorcover/experiments.hpp"
#include "rotorcover/generator.hpp"
#include "rotorcover/mbp.hpp"
#include "rotorcover/spectral.hpp"
#include "rotorcover/walk.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace rc = rotorcover;
using nlohmann::json;

namespace {

std::string mat_row(const rc::MatQ& m, int i) {
    std::string s = "[";
    for (int j = 0; j < m.dim(); ++j) {
        if (j) s += " ";
        s += rc::to_string(m(i, j));
    }
    return s + "]";
}

json mat_json(const rc::MatQ& m) {
    json rows = json::array();
    for (int i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.dim(); ++j) row.push_back(rc::to_string(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

json mat_json_real(const rc::MatQ& m) {
    json rows = json::array();
    for (int i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.dim(); ++j) row.push_back(rc::to_double(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

std::uint64_t choose_seed(std::optional<std::uint64_t> seed_flag) {
    if (seed_flag) return *seed_flag;
    std::random_device rd;
    const std::uint64_t s =
        (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
    std::cout << "seed = " << s << " (chosen randomly; pass --seed to reproduce)\n";
    return s;
}

int check_root(const rc::Generator& g, int root1) {
    if (root1 < 1 || root1 > g.n_types)
        throw rc::ParseError("--root " + std::to_string(root1) + " out of range 1.." +
                             std::to_string(g.n_types));
    return root1 - 1;
}

json analysis_json(const rc::Generator& g, const rc::MomentData& md) {
    json j;
    j["n_types"] = g.n_types;
    j["palindromic"] = rc::is_palindromic(g);
    j["D"] = mat_json(md.D);
    j["M"] = mat_json(md.M);
    j["M_real"] = mat_json_real(md.M);
    j["rho_M"] = md.rho_M;
    j["classification"] = rc::to_string(md.classification);
    if (md.V) j["V"] = mat_json(*md.V);
    if (md.leaf_mean) j["leaf_mean_matrix"] = mat_json(*md.leaf_mean);
    if (md.gamma) j["gamma"] = *md.gamma;
    if (md.predicted_limit) j["predicted_limit"] = *md.predicted_limit;
    j["warnings"] = md.warnings;
    return j;
}

void print_analysis(const rc::Generator& g, const rc::MomentData& md) {
    std::cout << "n_types        = " << g.n_types << "\n";
    std::cout << "palindromic    = " << (rc::is_palindromic(g) ? "yes" : "no") << "\n";
    std::cout << "adjacency D:\n";
    for (int i = 0; i < g.n_types; ++i) std::cout << "  " << mat_row(md.D, i) << "\n";
    std::cout << "first moment matrix M:\n";
    for (int i = 0; i < g.n_types; ++i) std::cout << "  " << mat_row(md.M, i) << "\n";
    std::cout.precision(10);
    std::cout << "rho(M)         = " << md.rho_M << "\n";
    std::cout << "classification = " << rc::to_string(md.classification) << " (rho(M) = "
              << md.rho_M << ")\n";
    if (md.V) {
        std::cout << "V = (I-M)^-1:\n";
        for (int i = 0; i < g.n_types; ++i) std::cout << "  " << mat_row(*md.V, i) << "\n";
    }
    if (md.gamma) std::cout << "gamma          = " << *md.gamma << "\n";
    if (md.predicted_limit)
        std::cout << "range limit    = " << *md.predicted_limit << "   (|R_n|/n -> (1-1/gamma)/2)\n";
    for (const auto& w : md.warnings) std::cout << "warning: " << w << "\n";
}

void emit_report(const rc::ExperimentReport& rep, const std::string& out_dir, bool as_json) {
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        rc::write_file(out_dir + "/series.csv", rc::series_csv(rep));
        rc::write_file(out_dir + "/summary.txt", rc::summary_text(rep));
    }
    if (as_json)
        std::cout << rc::report_json(rep) << "\n";
    else
        std::cout << rc::summary_text(rep);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rotor walks on periodic trees: spectral analysis and simulation"};
    app.require_subcommand(1);

    std::string path;
    std::string out_dir;
    std::string law_path;
    std::string kind = "lln";
    std::optional<std::uint64_t> seed_flag;
    int root1 = 1;
    std::int64_t steps = 1'000'000;
    int returns = 20;
    int replicas = 20;
    std::int64_t stride = 0;
    std::int64_t step_cap = 2'000'000'000;
    int threads = 0;
    bool as_json = false;
    bool trace = false;
    std::optional<double> tol;

    auto add_common = [&](CLI::App* cmd, bool with_sim_flags) {
        cmd->add_option("generator", path, "generator file (TOML)")->required();
        cmd->add_flag("--json", as_json, "machine-readable JSON output");
        if (cmd->get_name() != "palindromic")
            cmd->add_option("--law", law_path,
                            "rotor law file (rotor.<i> lines; replaces laws in the "
                            "generator file)");
        if (with_sim_flags) {
            cmd->add_option("--root", root1, "root type (1-based)")
                ->check(CLI::PositiveNumber);
            cmd->add_option("--seed", seed_flag, "base RNG seed");
            cmd->add_option("--steps", steps, "step horizon")->check(CLI::PositiveNumber);
            cmd->add_option("--returns", returns, "sink-return horizon")
                ->check(CLI::PositiveNumber);
            cmd->add_option("--replicas", replicas, "number of replicas / samples")
                ->check(CLI::PositiveNumber);
            cmd->add_option("--stride", stride, "series sampling stride")
                ->check(CLI::NonNegativeNumber);
            cmd->add_option("--out", out_dir, "output directory for series.csv + summary.txt");
            cmd->add_option("--cap", step_cap, "step cap guarding transient runs")
                ->check(CLI::PositiveNumber);
            cmd->add_option("--threads", threads, "worker threads (0 = hardware)")
                ->check(CLI::NonNegativeNumber);
            cmd->add_option("--tol", tol, "tolerance override for pass/fail verdicts");
        }
    };

    CLI::App* cmd_analyze = app.add_subcommand("analyze", "moment matrices and classification");
    add_common(cmd_analyze, false);

    CLI::App* cmd_simulate = app.add_subcommand("simulate", "run one seeded rotor walk");
    add_common(cmd_simulate, true);
    cmd_simulate->add_flag("--trace", trace, "emit per-step trace.csv (debug)");

    CLI::App* cmd_verify = app.add_subcommand("verify", "exact identities + moment checks");
    add_common(cmd_verify, true);

    CLI::App* cmd_experiment = app.add_subcommand("experiment", "Monte-Carlo experiment");
    add_common(cmd_experiment, true);
    cmd_experiment
        ->add_option("--kind", kind,
                     "one of: lln, lln-returns, leaf-growth, identities, conjecture, moments")
        ->required();

    CLI::App* cmd_palindromic = app.add_subcommand("palindromic", "palindrome checks and limit");
    add_common(cmd_palindromic, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        rc::Generator g = rc::load_generator(path);
        if (!law_path.empty()) {
            std::ifstream in(law_path, std::ios::binary);
            if (!in) throw rc::ParseError("cannot open law file '" + law_path + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            g.rotor_overrides = rc::parse_rotor_overrides(ss.str(), g);
        }
        const rc::RotorLaw law = rc::RotorLaw::from_generator(g);
        const rc::MomentData md = rc::analyze(g, law);

        if (app.got_subcommand(cmd_analyze)) {
            if (as_json)
                std::cout << analysis_json(g, md).dump(2) << "\n";
            else
                print_analysis(g, md);
            return 0;
        }

        if (app.got_subcommand(cmd_palindromic)) {
            const bool pal = rc::is_palindromic(g);
            json j;
            j["palindromic"] = pal;
            if (pal) {
                const bool identity = rc::palindromic_first_moment_identity(g);
                const double psi = rc::spectral_radius(rc::adjacency_real(g));
                j["first_moment_identity_2M_eq_D"] = identity;
                j["branching_number"] = psi;
                j["recurrent"] = psi <= 2.0 + 1e-12;
                if (psi < 2.0 - rc::kClassificationTol) {
                    const double gamma = rc::gamma_closed_form(psi, 2.0);
                    j["gamma_closed_form"] = gamma;
                    j["range_limit_br_formula"] = (psi - 1.0) / psi;
                }
                if (!as_json) {
                    std::cout << "palindromic          = yes\n"
                              << "2M = D (exact)       = " << (identity ? "pass" : "FAIL") << "\n"
                              << "branching number     = " << psi << "\n";
                    if (psi < 2.0 - rc::kClassificationTol)
                        std::cout << "range limit (br-1)/br = " << (psi - 1.0) / psi << "\n";
                    else
                        std::cout << "not positive recurrent (br >= 2): no limit prediction\n";
                }
                if (as_json) std::cout << j.dump(2) << "\n";
                return identity ? 0 : 1;
            }
            if (as_json)
                std::cout << j.dump(2) << "\n";
            else
                std::cout << "palindromic          = no\n";
            return 0;
        }

        const int root = check_root(g, root1);

        if (app.got_subcommand(cmd_simulate)) {
            const std::uint64_t seed = choose_seed(seed_flag);
            if (md.classification == rc::Classification::transient)
                std::cerr << "warning: transient walk (rho(M) = " << md.rho_M
                          << " > 1); no return guarantee, the step cap applies\n";
            rc::Walk::Options opts;
            opts.step_cap = std::min(step_cap, steps);
            opts.range_log_stride = stride > 0 ? stride : std::max<std::int64_t>(steps / 1000, 1);
            std::ofstream trace_out;
            if (trace) {
                const std::string tp = (out_dir.empty() ? std::string(".") : out_dir) +
                                       "/trace.csv";
                if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
                trace_out.open(tp, std::ios::binary);
                trace_out << "n,vertex_path,type,rotor_after\n";
                opts.trace = &trace_out;
            }
            rc::Walk w(g, law, root, seed, opts);
            const bool completed = w.run_steps(steps);

            std::ostringstream series;
            series << "n,range\n";
            for (const auto& [n, sz] : w.range_log()) series << n << ',' << sz << '\n';
            if (w.range_log().empty() || w.range_log().back().first != w.n())
                series << w.n() << ',' << w.range_size() << '\n';

            std::ostringstream summary;
            summary.precision(12);
            summary << "generator = " << std::filesystem::path(path).filename().string() << '\n'
                    << "root_type = " << root1 << '\n'
                    << "seed = " << seed << '\n'
                    << "steps = " << w.n() << '\n'
                    << "completed = " << (completed ? "yes" : "no (cap exhausted)") << '\n'
                    << "range = " << w.range_size() << '\n'
                    << "range_over_n = "
                    << static_cast<double>(w.range_size()) / static_cast<double>(w.n()) << '\n'
                    << "returns = " << w.sink_visit_times().size() << '\n';
            for (int j = 0; j < g.n_types; ++j)
                summary << "range_type_" << (j + 1) << " = " << w.range_by_type()[j] << '\n';
            for (int j = 0; j < g.n_types; ++j)
                summary << "edge_traversals_type_" << (j + 1) << " = "
                        << w.edge_traversals_by_type()[j] << '\n';
            if (md.predicted_limit) summary << "predicted_limit = " << *md.predicted_limit << '\n';

            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                rc::write_file(out_dir + "/series.csv", series.str());
                rc::write_file(out_dir + "/summary.txt", summary.str());
            }
            if (as_json) {
                json j;
                j["generator"] = std::filesystem::path(path).filename().string();
                j["root_type"] = root1;
                j["seed"] = seed;
                j["steps"] = w.n();
                j["completed"] = completed;
                j["range"] = w.range_size();
                j["range_over_n"] =
                    static_cast<double>(w.range_size()) / static_cast<double>(w.n());
                j["returns"] = w.sink_visit_times().size();
                j["range_by_type"] = w.range_by_type();
                j["edge_traversals_by_type"] = w.edge_traversals_by_type();
                if (md.predicted_limit) j["predicted_limit"] = *md.predicted_limit;
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << summary.str();
            }
            return completed ? 0 : 1;
        }

        rc::ExperimentConfig cfg{g,
                                 law,
                                 std::filesystem::path(path).filename().string(),
                                 root,
                                 replicas,
                                 steps,
                                 returns,
                                 choose_seed(seed_flag),
                                 stride,
                                 tol,
                                 step_cap,
                                 threads};

        if (app.got_subcommand(cmd_verify)) {
            const rc::ExperimentReport ids = rc::verify_identities(cfg, md);
            rc::ExperimentConfig mc_cfg = cfg;
            mc_cfg.replicas = std::max(replicas, 10000);
            const rc::ExperimentReport moments = rc::moment_check(mc_cfg, md);
            bool pal_ok = true;
            if (rc::is_palindromic(g) && law.uniform_flag()) {
                pal_ok = rc::palindromic_first_moment_identity(g);
                std::cout << "2M = D (exact): " << (pal_ok ? "pass" : "FAIL") << "\n";
            }
            if (as_json) {
                json j;
                j["identities"] = json::parse(rc::report_json(ids));
                j["moments"] = json::parse(rc::report_json(moments));
                j["palindromic_identity"] = pal_ok;
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << rc::summary_text(ids) << "\n" << rc::summary_text(moments);
            }
            const bool ok = ids.verdict != rc::Verdict::fail &&
                            moments.verdict != rc::Verdict::fail && pal_ok;
            return ok ? 0 : 1;
        }

        if (app.got_subcommand(cmd_experiment)) {
            rc::ExperimentReport rep;
            if (kind == "lln")
                rep = rc::lln_range(cfg, md);
            else if (kind == "lln-returns")
                rep = rc::lln_at_returns(cfg, md);
            else if (kind == "leaf-growth")
                rep = rc::leaf_growth(cfg, md);
            else if (kind == "identities")
                rep = rc::verify_identities(cfg, md);
            else if (kind == "conjecture")
                rep = rc::conjecture_probe(cfg, md);
            else if (kind == "moments")
                rep = rc::moment_check(cfg, md);
            else
                throw rc::ParseError("unknown experiment kind '" + kind + "'");
            emit_report(rep, out_dir, as_json);
            return rep.verdict == rc::Verdict::fail ? 1 : 0;
        }
    } catch (const rc::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
