#pragma once

#include "rotorcover/generator.hpp"
#include "rotorcover/matrix.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rotorcover {

// Per-type probability distribution of the initial rotor state over
// {0, ..., d_i}. State 0 points at the ancestor; state k at the k-th child.
class RotorLaw {
public:
    static RotorLaw uniform(const Generator& g);
    // rotor.<i> override from the generator file where present, uniform elsewhere.
    static RotorLaw from_generator(const Generator& g);
    RotorLaw(const Generator& g, std::vector<std::vector<Rational>> probs);

    int n_types() const { return static_cast<int>(probs_.size()); }
    const std::vector<Rational>& probs(int i) const { return probs_[i]; }
    const std::vector<double>& probs_real(int i) const { return probs_real_[i]; }
    // Cumulative distribution, cdf(i)[k] = P[rotor <= k]; used for sampling.
    const std::vector<double>& cdf(int i) const { return cdf_[i]; }
    Rational mean(int i) const; // E[rotor state of type i]
    bool uniform_flag() const { return uniform_; }

private:
    std::vector<std::vector<Rational>> probs_;
    std::vector<std::vector<double>> probs_real_;
    std::vector<std::vector<double>> cdf_;
    bool uniform_ = false;
};

// One atom of the good-children offspring law of type i: rotor state k,
// its deterministic per-type offspring vector, and P[rotor = k]. Entries with
// equal offspring vectors are kept separate so the walk engine and the
// branching process sample the identical coupling of (rotor, offspring).
struct OffspringEntry {
    int rotor_state = 0;
    std::vector<int> counts; // counts[j] = good children of type j
    Rational prob;
};

struct OffspringLaw {
    std::vector<std::vector<OffspringEntry>> per_type;
    int n_types() const { return static_cast<int>(per_type.size()); }
};

// Rank-3 tensor t(i,j,k), n^3 entries.
template <class T>
struct Tensor3 {
    Tensor3() = default;
    explicit Tensor3(int n) : n(n), v(static_cast<size_t>(n) * n * n, T(0)) {}
    T& operator()(int i, int j, int k) { return v[(static_cast<size_t>(i) * n + j) * n + k]; }
    const T& operator()(int i, int j, int k) const {
        return v[(static_cast<size_t>(i) * n + j) * n + k];
    }
    int n = 0;
    std::vector<T> v;
};
using Tensor3Q = Tensor3<Rational>;
using Tensor3D = Tensor3<double>;

Tensor3D to_real(const Tensor3Q& t);

enum class Classification { positive_recurrent, null_recurrent, transient };
std::string to_string(Classification c);

// Everything analyze() derives from (generator, rotor law):
//   M      first moments of the good-children process
//   sigma  sigma(i,j,k) = E[Z_j Z_k | one type-i parent], raw mixed moments
//   V      = (I - M)^{-1}, mean total progeny per type (rho(M) < 1 only)
//   xi     xi(i,j,k) = E[Y_j Y_k], raw mixed moments of total progeny
//   leaf_mean  mean matrix of the leaf process between sink returns:
//              row i = E[leaves after one excursion round | one type-i leaf]
//              = row i of I + V(D - I); same spectrum as I + (D-I)V
//   gamma  its Perron root; predicted_limit = (1 - 1/gamma)/2
struct MomentData {
    MatQ D;
    MatQ M;
    Tensor3Q sigma;
    double rho_M = 0;
    Classification classification = Classification::transient;
    std::optional<MatQ> V;
    std::optional<Tensor3Q> xi;
    std::optional<MatQ> leaf_mean;
    std::optional<double> gamma;
    std::optional<double> predicted_limit;
    std::vector<std::string> warnings;
};

// counts[j] = #{positions l > k in the word of type i with child type j};
// the children a walker visits before retreating when the rotor starts at k.
std::vector<int> good_children_counts(const Generator& g, int i, int k);

OffspringLaw offspring_law(const Generator& g, const RotorLaw& law);

// m_ij = sum_k P[rotor = k] * counts_ij(k), exact.
MatQ first_moment_matrix(const OffspringLaw& ol);

// sigma(i,j,k) = sum_r P[rotor = r] * c_j(r) * c_k(r)  (offspring vector is
// deterministic given the rotor state).
Tensor3Q second_moments(const OffspringLaw& ol);

struct TotalSizeMoments {
    MatQ V;
    Tensor3Q xi;
};

// Total-progeny moments by the linear-system route: V = (I-M)^{-1}; for the
// second moments, assemble per k the matrix Gamma_k from M, V and the
// *factorial* second moments of the offspring law, solve S_k = (I-M)^{-1}
// Gamma_k, then convert the result back to raw mixed moments:
//   xi(i,j,k) = S_k(i,j) + [j == k] * V(i,j).
// Requires rho(M) < 1.
TotalSizeMoments total_size_moments(const MatQ& m, const Tensor3Q& sigma);

MomentData analyze(const Generator& g, const RotorLaw& law);

// f^i(z) evaluated from the offspring law; valid for z in [0,1]^N.
std::vector<double> mbp_generating_function(const OffspringLaw& ol, std::span<const double> z);

// Minimal solution of F_i = z_i * f^i(F), by monotone fixed-point iteration
// from 0. F is the generating function of the per-type total progeny.
std::vector<double> total_size_gf(const OffspringLaw& ol, std::span<const double> z,
                                  double tol = 1e-12, std::int64_t max_iter = 10'000'000);

// Exact test of 2M == D for palindromic generators under the uniform law.
// Throws std::invalid_argument when g is not palindromic.
bool palindromic_first_moment_identity(const Generator& g);

inline constexpr double kClassificationTol = 1e-9;

} // namespace rotorcover
