#pragma once

#include "rotorcover/generator.hpp"
#include "rotorcover/mbp.hpp"
#include "rotorcover/walk.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rotorcover {

// Monte-Carlo harness confronting simulation with the analyzer's predictions.
// Targets always come from a precomputed MomentData; nothing in here
// re-derives theory. Replicas get independent seeds and may run on several
// threads; results are aggregated in replica order, so parallel and serial
// runs produce identical reports.

enum class Verdict { pass, fail, not_applicable, informational };
std::string to_string(Verdict v);

struct ExperimentConfig {
    Generator gen;
    RotorLaw law;
    std::string generator_name = "generator";
    int root_type = 0; // 0-based
    int replicas = 20;
    std::int64_t steps = 1'000'000; // horizon for step-based experiments
    int returns = 20;               // horizon for return-based experiments
    std::uint64_t seed_base = 1;
    std::int64_t stride = 0; // series sampling stride; 0 = endpoints only
    std::optional<double> tolerance;
    std::int64_t step_cap = 2'000'000'000;
    int threads = 0; // 0 = hardware concurrency
};

struct SeriesPoint {
    int replica;
    std::int64_t x; // n or k
    double value;
};

struct IdentityViolation {
    std::uint64_t seed = 0;
    std::int64_t k = 0;
    std::string which;
};

struct ExperimentReport {
    std::string name;
    std::string target_formula; // provenance of the theoretical target
    Verdict verdict = Verdict::not_applicable;
    double target = 0;
    double empirical_mean = 0;
    double standard_error = 0;
    double tolerance = 0;
    std::int64_t identity_violations = 0;
    std::optional<IdentityViolation> first_violation;
    std::vector<SeriesPoint> series;
    std::vector<std::pair<std::string, std::string>> details;
    std::vector<std::pair<std::string, std::string>> config_echo;
    double runtime_seconds = 0;
    bool passed() const { return verdict == Verdict::pass; }
};

// mean |R_n|/n over replicas vs the predicted limit (1 - 1/gamma)/2.
// Default tolerance 0.01, widened to 0.02 when gamma < 1.2 (convergence gets
// slow near criticality); both are engineering bands, stated in the report.
ExperimentReport lln_range(const ExperimentConfig& cfg, const MomentData& md);

// |R_k|/tau_k at sink returns; the final achieved ratio per replica is
// compared with the same limit.
ExperimentReport lln_at_returns(const ExperimentConfig& cfg, const MomentData& md);

// Leaf process L_k: (a) empirical one-generation mean from a type-i root vs
// row i of the leaf mean matrix, three standard errors per type; (b) median
// ratio ||L_{k+1}||_1 / ||L_k||_1 over the last three recorded generations,
// reported next to gamma.
ExperimentReport leaf_growth(const ExperimentConfig& cfg, const MomentData& md);

// Exact identities at every achieved return within the step cap:
// tau_k - tau_{k-1} = 2|R_k|, leaves = (D^T - I) range + e_root, and full
// rotor restoration. Zero violations tolerated. `corrupt` switches on the
// engine's modulus fault, which must make the harness report violations
// (self-test of the harness).
ExperimentReport verify_identities(const ExperimentConfig& cfg, const MomentData& md,
                                   bool corrupt = false);

// Null-recurrent probe: trajectory of |R_n|/n next to the conjectured 1/2.
// Never pass/fail; the verdict is informational.
ExperimentReport conjecture_probe(const ExperimentConfig& cfg, const MomentData& md);

// Direct branching-process sampling: empirical means of the total progeny Y
// vs every row of V, and empirical raw mixed second moments vs the xi tensor,
// three standard errors each.
ExperimentReport moment_check(const ExperimentConfig& cfg, const MomentData& md);

std::string series_csv(const ExperimentReport& report);
std::string summary_text(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report); // single JSON document

void write_file(const std::string& path, const std::string& content);

} // namespace rotorcover
