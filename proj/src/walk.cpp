#include "rotorcover/walk.hpp"

#include "rotorcover/rng.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace rotorcover {

namespace {
constexpr std::uint64_t kRootSalt = 0xC2B2AE3D27D4EB4Full;
constexpr std::uint64_t kChildSalt = 0xD1B54A32D192ED03ull;
constexpr std::uint64_t kRotorSalt = 0x94D049BB133111EBull;
constexpr std::uint64_t kGoodTreeSalt = 0x2545F4914F6CDD1Dull;

int sample_from_cdf(const double* cdf, int d, double u) {
    int k = 0;
    while (k < d && u >= cdf[k]) ++k;
    return k;
}
} // namespace

Walk::Walk(const Generator& g, const RotorLaw& law, int root_type, std::uint64_t seed)
    : Walk(g, law, root_type, seed, Options{}) {}

Walk::Walk(const Generator& g, const RotorLaw& law, int root_type, std::uint64_t seed,
           Options opts)
    : n_types_(g.n_types), root_type_(root_type), uniform_law_(law.uniform_flag()),
      opts_(opts) {
    if (root_type < 0 || root_type >= g.n_types)
        throw std::out_of_range("root type " + std::to_string(root_type + 1) +
                                " out of range 1.." + std::to_string(g.n_types));
    if (law.n_types() != g.n_types)
        throw std::invalid_argument("rotor law / generator dimension mismatch");

    limit_.resize(n_types_);
    deg_.resize(n_types_);
    word_off_.resize(n_types_);
    cdf_off_.resize(n_types_);
    d_rows_.assign(n_types_, std::vector<std::int64_t>(n_types_, 0));
    root_extra_ = opts_.corrupt_modulus ? 1 : 0;
    for (int t = 0; t < n_types_; ++t) {
        const int d = g.degree(t);
        deg_[t] = static_cast<std::uint8_t>(d);
        limit_[t] = static_cast<std::uint8_t>(d + 1);
        word_off_[t] = static_cast<std::uint32_t>(word_.size());
        for (int c : g.words[t]) {
            word_.push_back(static_cast<std::uint16_t>(c));
            d_rows_[t][c] += 1;
        }
        cdf_off_[t] = static_cast<std::uint32_t>(cdf_.size());
        for (double c : law.cdf(t)) cdf_.push_back(c);
    }

    range_by_type_.assign(n_types_, 0);
    psi_.assign(n_types_, 0);

    // Root vertex; children stay unmaterialized until first use.
    const std::uint64_t root_key = mix64(seed ^ kRootSalt);
    type_.push_back(static_cast<std::uint16_t>(root_type));
    rotor_.push_back(static_cast<std::uint8_t>(sample_rotor(root_type, root_key)));
    visited_.push_back(0);
    parent_.push_back(kNoVertex);
    first_child_.push_back(kNoVertex);
    key_.push_back(root_key);

    at_sink_ = true; // X_0 = o; the first step moves to the root
}

int Walk::sample_rotor(int t, std::uint64_t key) const {
    const double u = unit_from_bits(mix64(key ^ kRotorSalt));
    const int d = deg_[t];
    if (uniform_law_) {
        const int k = static_cast<int>(u * (d + 1));
        return k > d ? d : k;
    }
    return sample_from_cdf(&cdf_[cdf_off_[t]], d, u);
}

std::uint32_t Walk::materialize_children(std::uint32_t v) {
    const int t = type_[v];
    const int d = deg_[t];
    const std::size_t base = type_.size();
    if (base + d > opts_.memory_cap_vertices)
        throw WalkCapError("vertex budget of " + std::to_string(opts_.memory_cap_vertices) +
                           " exhausted");
    const std::uint64_t parent_key = key_[v];
    const std::uint16_t* w = &word_[word_off_[t]];
    for (int l = 0; l < d; ++l) {
        const std::uint16_t ct = w[l];
        const std::uint64_t ck = mix64(parent_key ^ (static_cast<std::uint64_t>(l + 1) * kChildSalt));
        type_.push_back(ct);
        rotor_.push_back(static_cast<std::uint8_t>(sample_rotor(ct, ck)));
        visited_.push_back(0);
        parent_.push_back(v);
        first_child_.push_back(kNoVertex);
        key_.push_back(ck);
    }
    first_child_[v] = static_cast<std::uint32_t>(base);
    return static_cast<std::uint32_t>(base);
}

void Walk::log_range() {
    if (opts_.range_log_stride > 0 && n_ % opts_.range_log_stride == 0)
        range_log_.emplace_back(n_, range_total_);
}

void Walk::trace_step(std::uint32_t departed, int rotor_after) {
    std::ostream& os = *opts_.trace;
    os << n_ << ',' << (at_sink_ ? "o" : vertex_path(pos_)) << ','
       << (at_sink_ ? 0 : type_[pos_] + 1) << ',';
    if (departed != kNoVertex) os << rotor_after;
    os << '\n';
}

void Walk::step() {
    std::uint32_t departed = kNoVertex;
    int rotor_after = 0;
    if (at_sink_) {
        // The sink has a single neighbor; it always forwards to the root.
        at_sink_ = false;
        pos_ = 0;
        ++n_;
        psi_[root_type_] += 1;
        if (!visited_[0]) {
            visited_[0] = 1;
            range_by_type_[root_type_] += 1;
            ++range_total_;
        }
    } else {
        const std::uint32_t v = pos_;
        const int t = type_[v];
        int r = rotor_[v] + 1;
        const int lim = limit_[t] + (v == 0 ? root_extra_ : 0);
        if (r >= lim) r = 0;
        departed = v;
        rotor_after = r;
        if (r == 0) {
            // Edge towards the ancestor: its type is the lower endpoint's.
            rotor_[v] = 0;
            psi_[t] += 1;
            const std::uint32_t p = parent_[v];
            ++n_;
            if (p == kNoVertex) {
                at_sink_ = true;
                sink_times_.push_back(n_);
            } else {
                pos_ = p;
            }
        } else {
            std::uint32_t fc = first_child_[v];
            // Materialize before touching any state so a cap error leaves the
            // walk exactly where it was.
            if (fc == kNoVertex) fc = materialize_children(v);
            rotor_[v] = static_cast<std::uint8_t>(r);
            int ci = r - 1;
            if (ci >= deg_[t]) ci = deg_[t] - 1; // reachable only under the fault hook
            const std::uint32_t c = fc + static_cast<std::uint32_t>(ci);
            pos_ = c;
            ++n_;
            const int ct = type_[c];
            psi_[ct] += 1;
            if (!visited_[c]) {
                visited_[c] = 1;
                range_by_type_[ct] += 1;
                ++range_total_;
            }
        }
    }
    log_range();
    if (opts_.trace) trace_step(departed, rotor_after);
}

bool Walk::run_steps(std::int64_t n_target) {
    while (n_ < n_target) {
        if (n_ >= opts_.step_cap) return false;
        try {
            step();
        } catch (const WalkCapError&) {
            return false;
        }
    }
    return true;
}

ReturnRunResult Walk::run_until_returns(int k, bool collect_violations) {
    ReturnRunResult out;
    while (static_cast<int>(out.records.size()) < k) {
        if (n_ >= opts_.step_cap) {
            out.step_capped = true;
            break;
        }
        try {
            step();
        } catch (const WalkCapError&) {
            out.memory_capped = true;
            break;
        }
        if (!at_sink_) continue;

        const std::size_t visits = sink_times_.size();
        const std::int64_t prev_tau = visits >= 2 ? sink_times_[visits - 2] : 0;
        SinkReturnRecord rec;
        rec.k = static_cast<std::int64_t>(visits);
        rec.tau = n_;
        rec.range_by_type = range_by_type_;
        rec.leaves_by_type = measure_leaves();
        rec.eq_tau_ok = (rec.tau - prev_tau) == 2 * range_total_;
        rec.leaves_ok = rec.leaves_by_type == predicted_leaves();
        rec.rotors_restored = rotors_restored();
        if (!collect_violations && !rec.all_ok())
            throw std::logic_error("rotor walk internal consistency failure at return " +
                                   std::to_string(rec.k) + " (tau = " + std::to_string(rec.tau) +
                                   ")");
        out.records.push_back(std::move(rec));
    }
    return out;
}

std::vector<std::int64_t> Walk::measure_leaves() const {
    std::vector<std::int64_t> leaves(n_types_, 0);
    const std::size_t sz = type_.size();
    for (std::size_t v = 0; v < sz; ++v) {
        if (!visited_[v]) continue;
        const int t = type_[v];
        const std::uint32_t fc = first_child_[v];
        if (fc == kNoVertex) {
            const auto& row = d_rows_[t];
            for (int j = 0; j < n_types_; ++j) leaves[j] += row[j];
        } else {
            const int d = deg_[t];
            for (int l = 0; l < d; ++l) {
                const std::uint32_t c = fc + static_cast<std::uint32_t>(l);
                if (!visited_[c]) leaves[type_[c]] += 1;
            }
        }
    }
    return leaves;
}

std::vector<std::int64_t> Walk::predicted_leaves() const {
    std::vector<std::int64_t> out(n_types_, 0);
    for (int j = 0; j < n_types_; ++j) {
        std::int64_t acc = -range_by_type_[j];
        for (int i = 0; i < n_types_; ++i) acc += d_rows_[i][j] * range_by_type_[i];
        out[j] = acc;
    }
    out[root_type_] += 1;
    return out;
}

bool Walk::rotors_restored() const {
    const std::size_t sz = type_.size();
    for (std::size_t v = 0; v < sz; ++v)
        if (visited_[v] && rotor_[v] != 0) return false;
    return true;
}

std::optional<std::uint32_t> Walk::position() const {
    if (at_sink_) return std::nullopt;
    return pos_;
}

std::string Walk::vertex_path(std::uint32_t v) const {
    std::vector<int> idx;
    while (parent_[v] != kNoVertex) {
        const std::uint32_t p = parent_[v];
        idx.push_back(static_cast<int>(v - first_child_[p]) + 1);
        v = p;
    }
    std::string path = "r";
    for (auto it = idx.rbegin(); it != idx.rend(); ++it)
        path += "." + std::to_string(*it);
    return path;
}

GoodTreeSample sample_good_tree(const Generator& g, const RotorLaw& law, int root_type,
                                std::uint64_t seed, std::int64_t size_cap) {
    if (root_type < 0 || root_type >= g.n_types)
        throw std::out_of_range("root type " + std::to_string(root_type + 1) +
                                " out of range 1.." + std::to_string(g.n_types));
    GoodTreeSample out;
    out.counts.assign(g.n_types, 0);
    RngStream rng(mix64(seed ^ kGoodTreeSalt));
    const bool uniform = law.uniform_flag();

    std::vector<int> stack{root_type};
    std::int64_t total = 0;
    while (!stack.empty()) {
        const int t = stack.back();
        stack.pop_back();
        out.counts[t] += 1;
        if (++total > size_cap) {
            out.truncated = true;
            break;
        }
        const int d = g.degree(t);
        const double u = rng.next_unit();
        int k;
        if (uniform) {
            k = static_cast<int>(u * (d + 1));
            if (k > d) k = d;
        } else {
            k = sample_from_cdf(law.cdf(t).data(), d, u);
        }
        for (int l = k; l < d; ++l) stack.push_back(g.words[t][l]);
    }
    return out;
}

} // namespace rotorcover
