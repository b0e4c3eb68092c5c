#include "rotorcover/mbp.hpp"

#include "rotorcover/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace rotorcover {

RotorLaw::RotorLaw(const Generator& g, std::vector<std::vector<Rational>> probs)
    : probs_(std::move(probs)) {
    if (static_cast<int>(probs_.size()) != g.n_types)
        throw std::invalid_argument("rotor law has " + std::to_string(probs_.size()) +
                                    " types, generator has " + std::to_string(g.n_types));
    uniform_ = true;
    probs_real_.resize(probs_.size());
    cdf_.resize(probs_.size());
    for (int i = 0; i < g.n_types; ++i) {
        const int d = g.degree(i);
        if (static_cast<int>(probs_[i].size()) != d + 1)
            throw std::invalid_argument("rotor law for type " + std::to_string(i + 1) +
                                        " must have " + std::to_string(d + 1) + " entries");
        Rational sum = 0;
        for (const Rational& p : probs_[i]) {
            if (p < 0)
                throw std::invalid_argument("negative rotor probability for type " +
                                            std::to_string(i + 1));
            sum += p;
        }
        if (abs(sum - 1) > Rational(1, 1000000000000LL))
            throw std::invalid_argument("rotor law for type " + std::to_string(i + 1) +
                                        " sums to " + to_string(sum));
        const Rational u(1, d + 1);
        double acc = 0;
        for (const Rational& p : probs_[i]) {
            if (p != u) uniform_ = false;
            const double pd = to_double(p);
            probs_real_[i].push_back(pd);
            acc += pd;
            cdf_[i].push_back(acc);
        }
        cdf_[i].back() = 1.0;
    }
}

RotorLaw RotorLaw::uniform(const Generator& g) {
    std::vector<std::vector<Rational>> p(g.n_types);
    for (int i = 0; i < g.n_types; ++i)
        p[i].assign(g.degree(i) + 1, Rational(1, g.degree(i) + 1));
    return RotorLaw(g, std::move(p));
}

RotorLaw RotorLaw::from_generator(const Generator& g) {
    if (g.rotor_overrides.empty()) return uniform(g);
    std::vector<std::vector<Rational>> p(g.n_types);
    for (int i = 0; i < g.n_types; ++i) {
        if (!g.rotor_overrides[i].empty())
            p[i] = g.rotor_overrides[i];
        else
            p[i].assign(g.degree(i) + 1, Rational(1, g.degree(i) + 1));
    }
    return RotorLaw(g, std::move(p));
}

Rational RotorLaw::mean(int i) const {
    Rational m = 0;
    for (size_t k = 0; k < probs_[i].size(); ++k) m += Rational(k) * probs_[i][k];
    return m;
}

Tensor3D to_real(const Tensor3Q& t) {
    Tensor3D r(t.n);
    for (size_t k = 0; k < t.v.size(); ++k) r.v[k] = to_double(t.v[k]);
    return r;
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::positive_recurrent: return "positive_recurrent";
        case Classification::null_recurrent: return "null_recurrent";
        case Classification::transient: return "transient";
    }
    return "?";
}

std::vector<int> good_children_counts(const Generator& g, int i, int k) {
    if (i < 0 || i >= g.n_types)
        throw std::out_of_range("type index " + std::to_string(i + 1) + " out of range 1.." +
                                std::to_string(g.n_types));
    const auto& w = g.words[i];
    if (k < 0 || k > static_cast<int>(w.size()))
        throw std::out_of_range("rotor state " + std::to_string(k) + " out of range 0.." +
                                std::to_string(w.size()) + " for type " + std::to_string(i + 1));
    std::vector<int> counts(g.n_types, 0);
    for (size_t l = k; l < w.size(); ++l) ++counts[w[l]];
    return counts;
}

OffspringLaw offspring_law(const Generator& g, const RotorLaw& law) {
    if (law.n_types() != g.n_types)
        throw std::invalid_argument("rotor law / generator dimension mismatch");
    OffspringLaw ol;
    ol.per_type.resize(g.n_types);
    for (int i = 0; i < g.n_types; ++i) {
        for (int k = 0; k <= g.degree(i); ++k) {
            const Rational& p = law.probs(i)[k];
            if (p == 0) continue;
            ol.per_type[i].push_back({k, good_children_counts(g, i, k), p});
        }
    }
    return ol;
}

MatQ first_moment_matrix(const OffspringLaw& ol) {
    const int n = ol.n_types();
    MatQ m(n);
    for (int i = 0; i < n; ++i)
        for (const auto& e : ol.per_type[i])
            for (int j = 0; j < n; ++j) m(i, j) += e.prob * e.counts[j];
    return m;
}

Tensor3Q second_moments(const OffspringLaw& ol) {
    const int n = ol.n_types();
    Tensor3Q s(n);
    for (int i = 0; i < n; ++i)
        for (const auto& e : ol.per_type[i])
            for (int j = 0; j < n; ++j) {
                if (e.counts[j] == 0) continue;
                for (int k = 0; k < n; ++k) s(i, j, k) += e.prob * e.counts[j] * e.counts[k];
            }
    return s;
}

TotalSizeMoments total_size_moments(const MatQ& m, const Tensor3Q& sigma) {
    const int n = m.dim();
    if (sigma.n != n) throw std::invalid_argument("sigma/M dimension mismatch");
    const double rho = spectral_radius(to_real(m));
    if (rho >= 1.0 - kClassificationTol)
        throw std::domain_error("total_size_moments requires rho(M) < 1, got rho = " +
                                std::to_string(rho));

    TotalSizeMoments out;
    out.V = inverse(MatQ::identity(n) - m);
    const MatQ& v = out.V;
    out.xi = Tensor3Q(n);

    // sigma_f(i,a,b) = E[Z_a (Z_b - delta_ab)]: the PGF second partials.
    for (int k = 0; k < n; ++k) {
        MatQ gamma_k(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Rational acc = 0;
                for (int a = 0; a < n; ++a) {
                    if (i == k) acc += m(i, a) * v(a, j);
                    if (i == j) acc += m(i, a) * v(a, k);
                }
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        Rational sf = sigma(i, a, b);
                        if (a == b) sf -= m(i, a);
                        if (sf != 0) acc += sf * v(a, j) * v(b, k);
                    }
                gamma_k(i, j) = acc;
            }
        const MatQ s_k = v * gamma_k; // (I - M)^{-1} Gamma_k
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                out.xi(i, j, k) = s_k(i, j);
                if (j == k) out.xi(i, j, k) += v(i, j);
            }
    }
    return out;
}

namespace {

// Positive regularity: some power of M strictly positive. On the support
// graph this is equivalent to (S + I)^n having no zero entry together with
// aperiodicity; the walk's processes only need the irreducible pattern check,
// violations are surfaced as warnings, not errors.
bool support_irreducible(const MatQ& m) {
    const int n = m.dim();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i) {
        std::vector<int> stack{i};
        reach[i][i] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int j = 0; j < n; ++j)
                if (m(v, j) != 0 && !reach[i][j]) {
                    reach[i][j] = 1;
                    stack.push_back(j);
                }
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!reach[i][j]) return false;
    return true;
}

bool law_singular(const OffspringLaw& ol) {
    for (const auto& entries : ol.per_type)
        for (const auto& e : entries) {
            int total = 0;
            for (int c : e.counts) total += c;
            if (total != 1) return false;
        }
    return true;
}

} // namespace

MomentData analyze(const Generator& g, const RotorLaw& law) {
    MomentData md;
    md.D = adjacency(g);
    const OffspringLaw ol = offspring_law(g, law);
    md.M = first_moment_matrix(ol);
    md.sigma = second_moments(ol);
    md.rho_M = spectral_radius(to_real(md.M));

    if (!support_irreducible(md.M))
        md.warnings.push_back("first moment matrix is not irreducible; the survival dichotomy "
                              "assumes a positive regular process");
    if (law_singular(ol))
        md.warnings.push_back("offspring law is singular (every rotor state yields exactly one "
                              "good child)");

    if (std::abs(md.rho_M - 1.0) < kClassificationTol)
        md.classification = Classification::null_recurrent;
    else if (md.rho_M < 1.0)
        md.classification = Classification::positive_recurrent;
    else
        md.classification = Classification::transient;

    if (md.classification == Classification::positive_recurrent) {
        TotalSizeMoments tsm = total_size_moments(md.M, md.sigma);
        md.V = std::move(tsm.V);
        md.xi = std::move(tsm.xi);
        const int n = g.n_types;
        MatQ leaf = MatQ::identity(n) + *md.V * (md.D - MatQ::identity(n));
        md.gamma = spectral_radius(to_real(leaf));
        md.leaf_mean = std::move(leaf);
        if (*md.gamma >= 1.0 - kClassificationTol) {
            md.predicted_limit = 0.5 * (1.0 - 1.0 / std::max(*md.gamma, 1.0));
        } else {
            md.warnings.push_back("leaf growth rate gamma = " + std::to_string(*md.gamma) +
                                  " is below 1; no range-density prediction is made");
        }
    }
    return md;
}

std::vector<double> mbp_generating_function(const OffspringLaw& ol, std::span<const double> z) {
    const int n = ol.n_types();
    if (static_cast<int>(z.size()) != n)
        throw std::invalid_argument("argument dimension mismatch");
    for (double zi : z)
        if (!(zi >= 0.0 && zi <= 1.0))
            throw std::domain_error("generating function argument outside [0,1]");
    std::vector<double> f(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (const auto& e : ol.per_type[i]) {
            double term = to_double(e.prob);
            for (int j = 0; j < n; ++j)
                for (int c = 0; c < e.counts[j]; ++c) term *= z[j];
            f[i] += term;
        }
    }
    return f;
}

std::vector<double> total_size_gf(const OffspringLaw& ol, std::span<const double> z, double tol,
                                  std::int64_t max_iter) {
    const int n = ol.n_types();
    if (static_cast<int>(z.size()) != n)
        throw std::invalid_argument("argument dimension mismatch");
    for (double zi : z)
        if (!(zi >= 0.0 && zi <= 1.0))
            throw std::domain_error("generating function argument outside [0,1]");

    std::vector<double> f(n, 0.0);
    for (std::int64_t it = 0; it < max_iter; ++it) {
        std::vector<double> fz = mbp_generating_function(ol, f);
        double step = 0;
        for (int i = 0; i < n; ++i) {
            fz[i] *= z[i];
            step = std::max(step, std::abs(fz[i] - f[i]));
        }
        f = std::move(fz);
        if (step <= tol) return f;
    }
    throw ConvergenceError("total-progeny generating function iteration did not converge", f,
                           tol);
}

bool palindromic_first_moment_identity(const Generator& g) {
    if (!is_palindromic(g))
        throw std::invalid_argument("palindromic_first_moment_identity requires a palindromic "
                                    "generator");
    const OffspringLaw ol = offspring_law(g, RotorLaw::uniform(g));
    const MatQ m = first_moment_matrix(ol);
    return Rational(2) * m == adjacency(g);
}

} // namespace rotorcover
