#include "rotorcover/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rotorcover {

namespace {

struct PerronResult {
    double rho; // of A itself (shift already removed)
    std::vector<double> vec;
};

PerronResult power_iterate(const MatD& a, double tol, std::int64_t max_iter) {
    const int n = a.dim();
    double min_row = std::numeric_limits<double>::infinity();
    double max_row = 0;
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (int j = 0; j < n; ++j) {
            if (!(a(i, j) >= 0))
                throw std::invalid_argument("spectral_radius: matrix has a negative entry at (" +
                                            std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                            ")");
            s += a(i, j);
        }
        min_row = std::min(min_row, s);
        max_row = std::max(max_row, s);
    }

    // B = A + I applied implicitly: y = A x + x. Primary stop: the
    // Collatz-Wielandt gap, a certified two-sided bracket for irreducible
    // matrices. For reducible input the Perron vector can have zero entries
    // and the gap stalls, so a plain eigen-residual serves as secondary stop
    // (rho(B) is still the strictly dominant eigenvalue of B).
    std::vector<double> x(n, 1.0 / n), y(n);
    double gap = 0;
    for (std::int64_t it = 0; it < max_iter; ++it) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0;
        double norm = 0;
        for (int i = 0; i < n; ++i) {
            double s = x[i];
            for (int j = 0; j < n; ++j) s += a(i, j) * x[j];
            y[i] = s;
            const double q = s / x[i];
            lo = std::min(lo, q);
            hi = std::max(hi, q);
            norm += s;
        }
        double residual = 0;
        for (int i = 0; i < n; ++i) residual += std::abs(y[i] - norm * x[i]);
        for (int i = 0; i < n; ++i) x[i] = y[i] / norm;
        gap = hi - lo;
        const bool certified = gap <= tol;
        if (certified || residual <= tol * norm) {
            const double rho = certified ? (lo + hi) / 2 - 1.0 : norm - 1.0;
            const double slack = tol + 1e-9 * std::max(1.0, max_row);
            if (rho < min_row - slack || rho > max_row + slack)
                throw std::logic_error("spectral_radius: Perron estimate " + std::to_string(rho) +
                                       " escapes the row-sum bracket [" + std::to_string(min_row) +
                                       "," + std::to_string(max_row) + "]");
            return {rho, x};
        }
    }
    throw ConvergenceError("power iteration did not converge in " + std::to_string(max_iter) +
                               " iterations (Collatz-Wielandt gap " + std::to_string(gap) + ")",
                           x, gap);
}

} // namespace

double spectral_radius(const MatD& a, double tol, std::int64_t max_iter) {
    return power_iterate(a, tol, max_iter).rho;
}

std::vector<double> perron_vector(const MatD& a, double tol, std::int64_t max_iter) {
    PerronResult r = power_iterate(a, tol, max_iter);
    // Tighten until the eigen-residual meets the advertised contract.
    const int n = a.dim();
    for (std::int64_t it = 0; it < max_iter; ++it) {
        std::vector<double> av(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) av[i] += a(i, j) * r.vec[j];
        double res = 0;
        for (int i = 0; i < n; ++i) res += std::abs(av[i] - r.rho * r.vec[i]);
        if (res <= tol * std::max(r.rho, std::numeric_limits<double>::min())) return r.vec;
        double norm = 0;
        for (int i = 0; i < n; ++i) {
            av[i] += r.vec[i]; // one more B = A + I step
            norm += av[i];
        }
        for (int i = 0; i < n; ++i) r.vec[i] = av[i] / norm;
    }
    throw ConvergenceError("perron_vector residual did not reach tolerance", r.vec, tol);
}

MatD gamma_matrix(const MatD& d, const MatD& m) {
    const int n = d.dim();
    if (m.dim() != n) throw std::invalid_argument("gamma_matrix: dimension mismatch");
    const MatD id = MatD::identity(n);
    return id + (d - id) * inverse(id - m);
}

MatQ gamma_matrix(const MatQ& d, const MatQ& m) {
    const int n = d.dim();
    if (m.dim() != n) throw std::invalid_argument("gamma_matrix: dimension mismatch");
    const MatQ id = MatQ::identity(n);
    return id + (d - id) * inverse(id - m);
}

double gamma_closed_form(double psi, double alpha) {
    if (psi == alpha)
        throw std::domain_error("gamma_closed_form: psi == alpha makes the formula singular");
    return (alpha - 1.0) * psi / (alpha - psi);
}

} // namespace rotorcover
