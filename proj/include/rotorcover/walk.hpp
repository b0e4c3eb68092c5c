#pragma once

#include "rotorcover/generator.hpp"
#include "rotorcover/mbp.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace rotorcover {

// A run hit its step or vertex budget (thrown only where noted; the batch
// runners catch it and report partial results instead).
class WalkCapError : public std::runtime_error {
public:
    explicit WalkCapError(const std::string& what) : std::runtime_error(what) {}
};

// State captured when the walker hits the sink for the k-th time. The leaf
// vector is measured by direct enumeration of the arena (unvisited children
// of visited vertices), independently of the counters the identities predict:
//   eq_tau_ok:        tau_k - tau_{k-1} == 2 * |R_k|
//   leaves_ok:        leaves == (D^T - I) * range + e_root
//   rotors_restored:  every visited vertex's rotor points at its ancestor
struct SinkReturnRecord {
    std::int64_t k = 0;
    std::int64_t tau = 0;
    std::vector<std::int64_t> range_by_type;
    std::vector<std::int64_t> leaves_by_type;
    bool eq_tau_ok = false;
    bool leaves_ok = false;
    bool rotors_restored = false;
    bool all_ok() const { return eq_tau_ok && leaves_ok && rotors_restored; }
};

struct ReturnRunResult {
    std::vector<SinkReturnRecord> records;
    bool step_capped = false;
    bool memory_capped = false;
};

// Deterministic rotor walk on the lazily materialized periodic tree, with a
// degree-one sink above the root. The walk starts at the sink, so every
// interval between consecutive sink visits (the first one included) is one
// full depth-first excursion and tau_k - tau_{k-1} = 2|R_k| holds exactly.
//
// Rotor state k of a type-t vertex points at neighbor k, where neighbor 0 is
// the ancestor and neighbors 1..d_t are the children in word order; one step
// increments the rotor modulo d_t + 1, then moves along it. Rotors are
// sampled once, when the vertex is materialized, from a counter-based RNG
// keyed by (seed, path), so the trajectory is a pure function of
// (generator, law, root type, seed).
class Walk {
public:
    struct Options {
        std::int64_t step_cap = 2'000'000'000;        // guard for transient inputs
        std::uint64_t memory_cap_vertices = 100'000'000;
        std::int64_t range_log_stride = 0;            // 0 = no (n, |R_n|) log
        // Fault-injection hook for the harness self-test: the ROOT rotates
        // modulo d + 2, the phantom state re-entering its last child. The
        // re-walk of a restored subtree adds steps without new range, so
        // tau_k - tau_{k-1} = 2|R_k| must trip by the second return, while
        // subtree excursions stay finite and the walk keeps returning.
        // (Two tempting alternatives fail as self-tests: rotating modulo d_t
        // everywhere simulates a correct rotor walk on the cover with every
        // last child deleted, so all identities still hold; over-rotating
        // everywhere forces at least one child visit per cycle, the good
        // path never dies, and the walk never returns to be checked.)
        bool corrupt_modulus = false;
        std::ostream* trace = nullptr;
    };

    Walk(const Generator& g, const RotorLaw& law, int root_type, std::uint64_t seed);
    Walk(const Generator& g, const RotorLaw& law, int root_type, std::uint64_t seed,
         Options opts);

    // One rotor-walk step. Throws WalkCapError if materialization would
    // exceed the vertex budget.
    void step();

    // Steps until n == n_target; returns false if a cap stopped the run early.
    bool run_steps(std::int64_t n_target);

    // Runs until the k-th sink return (or a cap), recording and checking each
    // return. With collect_violations = false a failed check throws
    // std::logic_error -- the identities are exact theorems, so a violation
    // is an engine bug, not a user error. The verification harness passes
    // true and inspects the flags itself.
    ReturnRunResult run_until_returns(int k, bool collect_violations = false);

    // Observables.
    std::int64_t n() const { return n_; }
    bool at_sink() const { return at_sink_; }
    std::int64_t range_size() const { return range_total_; }
    const std::vector<std::int64_t>& range_by_type() const { return range_by_type_; }
    const std::vector<std::int64_t>& edge_traversals_by_type() const { return psi_; }
    const std::vector<std::int64_t>& sink_visit_times() const { return sink_times_; }
    const std::vector<std::pair<std::int64_t, std::int64_t>>& range_log() const {
        return range_log_;
    }

    // Direct counts of unvisited children of visited vertices, by type.
    std::vector<std::int64_t> measure_leaves() const;
    // (D^T - I) * range_by_type + e_root.
    std::vector<std::int64_t> predicted_leaves() const;
    bool rotors_restored() const;

    // Read-only arena access (tests inspect the materialized tree).
    std::size_t arena_size() const { return type_.size(); }
    int vertex_type(std::uint32_t v) const { return type_[v]; }
    std::uint32_t vertex_parent(std::uint32_t v) const { return parent_[v]; }
    std::uint32_t vertex_first_child(std::uint32_t v) const { return first_child_[v]; }
    bool vertex_visited(std::uint32_t v) const { return visited_[v] != 0; }
    int vertex_rotor(std::uint32_t v) const { return rotor_[v]; }
    std::optional<std::uint32_t> position() const; // nullopt when at the sink
    std::string vertex_path(std::uint32_t v) const; // "r", "r.2", "r.2.1", ...

    static constexpr std::uint32_t kNoVertex = 0xFFFFFFFFu;

private:
    std::uint32_t materialize_children(std::uint32_t v);
    int sample_rotor(int t, std::uint64_t key) const;
    void log_range();
    void trace_step(std::uint32_t departed, int rotor_after);

    // immutable model
    int n_types_;
    int root_type_;
    std::vector<std::uint8_t> limit_;      // d_t + 1 (minus 1 under fault injection)
    std::vector<std::uint8_t> deg_;
    std::vector<std::uint32_t> word_off_;
    std::vector<std::uint16_t> word_;
    std::vector<std::uint32_t> cdf_off_;
    std::vector<double> cdf_;
    std::vector<std::vector<std::int64_t>> d_rows_; // adjacency rows, for leaf prediction
    bool uniform_law_;
    std::uint8_t root_extra_ = 0; // fault hook: extra rotor state at the root
    Options opts_;

    // arena (struct of arrays)
    std::vector<std::uint16_t> type_;
    std::vector<std::uint8_t> rotor_;
    std::vector<std::uint8_t> visited_;
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> first_child_;
    std::vector<std::uint64_t> key_;

    // walk state
    std::uint32_t pos_ = 0;
    bool at_sink_ = true;
    std::int64_t n_ = 0;
    std::int64_t range_total_ = 0;
    std::vector<std::int64_t> range_by_type_;
    std::vector<std::int64_t> psi_;
    std::vector<std::int64_t> sink_times_;
    std::vector<std::pair<std::int64_t, std::int64_t>> range_log_;
};

struct GoodTreeSample {
    std::vector<std::int64_t> counts; // per-type total progeny, root included
    bool truncated = false;
};

// Samples the good-children branching process directly (no walk): every
// particle of type i draws a rotor state from the law and begets the
// corresponding good children. Equal in distribution to the per-type census
// of the walk's first-excursion range.
GoodTreeSample sample_good_tree(const Generator& g, const RotorLaw& law, int root_type,
                                std::uint64_t seed, std::int64_t size_cap = 100'000'000);

} // namespace rotorcover
