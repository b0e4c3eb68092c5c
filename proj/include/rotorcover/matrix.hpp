#pragma once

#include "rotorcover/rational.hpp"

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace rotorcover {

class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(int column, const std::string& what)
        : std::runtime_error(what), column_(column) {}
    int column() const { return column_; } // 0-based pivot column that failed
private:
    int column_;
};

// Dense square matrix over T (double for numerics, Rational for the exact
// twin). N is tiny here, so everything is plain O(n^3) with no cleverness.
template <class T>
class SquareMat {
public:
    SquareMat() = default;
    explicit SquareMat(int n) : n_(n), a_(static_cast<size_t>(n) * n, T(0)) {
        if (n < 1) throw std::invalid_argument("matrix dimension must be >= 1");
    }
    SquareMat(std::initializer_list<std::initializer_list<T>> rows)
        : SquareMat(static_cast<int>(rows.size())) {
        int i = 0;
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != n_)
                throw std::invalid_argument("ragged matrix initializer");
            int j = 0;
            for (const auto& x : row) (*this)(i, j++) = x;
            ++i;
        }
    }

    static SquareMat identity(int n) {
        SquareMat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    int dim() const { return n_; }
    T& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    const T& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

    bool operator==(const SquareMat&) const = default;

    SquareMat transpose() const {
        SquareMat r(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    std::vector<T> row_sums() const {
        std::vector<T> s(n_, T(0));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) s[i] += (*this)(i, j);
        return s;
    }

    friend SquareMat operator+(const SquareMat& a, const SquareMat& b) {
        check_dims(a, b);
        SquareMat r(a.n_);
        for (size_t k = 0; k < a.a_.size(); ++k) r.a_[k] = a.a_[k] + b.a_[k];
        return r;
    }
    friend SquareMat operator-(const SquareMat& a, const SquareMat& b) {
        check_dims(a, b);
        SquareMat r(a.n_);
        for (size_t k = 0; k < a.a_.size(); ++k) r.a_[k] = a.a_[k] - b.a_[k];
        return r;
    }
    friend SquareMat operator*(const SquareMat& a, const SquareMat& b) {
        check_dims(a, b);
        SquareMat r(a.n_);
        for (int i = 0; i < a.n_; ++i)
            for (int k = 0; k < a.n_; ++k) {
                const T aik = a(i, k);
                if (aik == T(0)) continue;
                for (int j = 0; j < a.n_; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }
    friend SquareMat operator*(const T& c, const SquareMat& a) {
        SquareMat r(a.n_);
        for (size_t k = 0; k < a.a_.size(); ++k) r.a_[k] = c * a.a_[k];
        return r;
    }
    friend std::vector<T> operator*(const SquareMat& a, const std::vector<T>& x) {
        if (static_cast<int>(x.size()) != a.n_)
            throw std::invalid_argument("matrix/vector dimension mismatch");
        std::vector<T> y(a.n_, T(0));
        for (int i = 0; i < a.n_; ++i)
            for (int j = 0; j < a.n_; ++j) y[i] += a(i, j) * x[j];
        return y;
    }

private:
    static void check_dims(const SquareMat& a, const SquareMat& b) {
        if (a.n_ != b.n_) throw std::invalid_argument("matrix dimension mismatch");
    }
    int n_ = 0;
    std::vector<T> a_;
};

using MatD = SquareMat<double>;
using MatQ = SquareMat<Rational>;

inline MatD to_real(const MatQ& q) {
    MatD r(q.dim());
    for (int i = 0; i < q.dim(); ++i)
        for (int j = 0; j < q.dim(); ++j) r(i, j) = to_double(q(i, j));
    return r;
}

// Gaussian elimination with partial pivoting. For the Rational overload the
// pivot test is exact; for double, a pivot below `pivot_tol` counts as
// singular and the offending column is reported.
MatD inverse(const MatD& a, double pivot_tol = 1e-13);
MatQ inverse(const MatQ& a);

double max_abs_diff(const MatD& a, const MatD& b);

} // namespace rotorcover
