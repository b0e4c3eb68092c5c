#include "rotorcover/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace rotorcover {

namespace {

// Augmented [A | I] elimination; Pivot is a callable deciding pivot quality.
template <class T, class AbsBetter, class IsZero>
SquareMat<T> invert_impl(const SquareMat<T>& a, AbsBetter better, IsZero is_zero) {
    const int n = a.dim();
    SquareMat<T> lhs = a;
    SquareMat<T> rhs = SquareMat<T>::identity(n);

    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (better(lhs(r, col), lhs(piv, col))) piv = r;
        if (is_zero(lhs(piv, col)))
            throw SingularMatrixError(col, "singular matrix: no usable pivot in column " +
                                               std::to_string(col + 1));
        if (piv != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(lhs(piv, j), lhs(col, j));
                std::swap(rhs(piv, j), rhs(col, j));
            }
        }
        const T p = lhs(col, col);
        for (int j = 0; j < n; ++j) {
            lhs(col, j) = lhs(col, j) / p;
            rhs(col, j) = rhs(col, j) / p;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const T f = lhs(r, col);
            if (f == T(0)) continue;
            for (int j = 0; j < n; ++j) {
                lhs(r, j) -= f * lhs(col, j);
                rhs(r, j) -= f * rhs(col, j);
            }
        }
    }
    return rhs;
}

} // namespace

MatD inverse(const MatD& a, double pivot_tol) {
    return invert_impl(
        a, [](double x, double y) { return std::abs(x) > std::abs(y); },
        [pivot_tol](double x) { return std::abs(x) < pivot_tol; });
}

MatQ inverse(const MatQ& a) {
    return invert_impl(
        a,
        [](const Rational& x, const Rational& y) {
            return abs(x) > abs(y); // exact, but prefer nonzero pivots of larger magnitude
        },
        [](const Rational& x) { return x == 0; });
}

double max_abs_diff(const MatD& a, const MatD& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("matrix dimension mismatch");
    double m = 0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

} // namespace rotorcover
