#pragma once

#include "rotorcover/matrix.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rotorcover {

// Power iteration failed to meet tolerance within the iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(std::string what, std::vector<double> last_iterate, double residual)
        : std::runtime_error(std::move(what)),
          last_iterate_(std::move(last_iterate)),
          residual_(residual) {}
    const std::vector<double>& last_iterate() const { return last_iterate_; }
    double residual() const { return residual_; }

private:
    std::vector<double> last_iterate_;
    double residual_;
};

// Perron root of a nonnegative matrix, by power iteration on A + I (the shift
// keeps the Perron pair and adds 1 to every eigenvalue, which kills the
// oscillation of periodic matrices like [[0,1],[1,0]]). Convergence is
// certified with Collatz-Wielandt bounds: for x > 0,
//   min_i (Bx)_i/x_i  <=  rho(B)  <=  max_i (Bx)_i/x_i.
// The result always lies between the min and max row sums of A; that bracket
// is asserted on every call.
double spectral_radius(const MatD& a, double tol = 1e-12, std::int64_t max_iter = 1'000'000);

// Entrywise-positive right Perron eigenvector, normalized to unit 1-norm.
// On return, ||A v - rho(A) v||_1 <= tol * rho(A).
std::vector<double> perron_vector(const MatD& a, double tol = 1e-12,
                                  std::int64_t max_iter = 1'000'000);

// I + (D - I)(I - M)^{-1}. Caller guarantees rho(M) < 1.
MatD gamma_matrix(const MatD& d, const MatD& m);
MatQ gamma_matrix(const MatQ& d, const MatQ& m);

// (alpha - 1) * psi / (alpha - psi); the closed form of the range-limit
// growth rate for a mean matrix proportional to the adjacency (M = D/alpha).
double gamma_closed_form(double psi, double alpha);

} // namespace rotorcover
