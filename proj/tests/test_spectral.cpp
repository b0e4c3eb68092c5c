#include <doctest.h>

#include "rotorcover/generator.hpp"
#include "rotorcover/mbp.hpp"
#include "rotorcover/rng.hpp"
#include "rotorcover/spectral.hpp"

#include <cmath>

using namespace rotorcover;

namespace {

// Closed-form Perron data of a 2x2 nonnegative matrix, from the quadratic
// characteristic polynomial. Independent of the power-iteration path.
struct Closed2x2 {
    double rho;
    double v0, v1; // right eigenvector, 1-normalized
};

Closed2x2 closed_form_2x2(double a, double b, double c, double d) {
    const double tr = a + d, det = a * d - b * c;
    const double rho = (tr + std::sqrt(tr * tr - 4 * det)) / 2;
    // (A - rho I) v = 0  ->  v = (b, rho - a) unless b == 0
    double v0 = b, v1 = rho - a;
    if (b == 0 && c == 0) { v0 = a >= d ? 1 : 0; v1 = a >= d ? 0 : 1; }
    else if (b == 0) { v0 = rho - d; v1 = c; }
    const double s = v0 + v1;
    return {rho, v0 / s, v1 / s};
}

MatQ appendix_m() {
    return MatQ{{Rational(3, 5), Rational(3, 5), Rational(4, 5), 0, 0},
                {Rational(1, 2), 0, 0, 0, 0},
                {0, 0, 0, Rational(1, 2), 0},
                {0, 0, 0, 0, Rational(1, 2)},
                {0, Rational(1, 2), 0, 0, 0}};
}

} // namespace

TEST_CASE("spectral_radius: published appendix values") {
    CHECK(std::abs(spectral_radius(to_real(appendix_m())) - 0.967) < 5e-4);
    const MatD m_bar{{0.75, 0.75}, {0.5, 0.0}};
    CHECK(std::abs(spectral_radius(m_bar) - 1.093) < 5e-4);
}

TEST_CASE("spectral_radius: identity is exactly one") {
    for (int n : {1, 3, 7}) CHECK(spectral_radius(MatD::identity(n)) == 1.0);
}

TEST_CASE("spectral_radius: periodic matrix needs the shift") {
    CHECK(spectral_radius(MatD{{0, 1}, {1, 0}}) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(spectral_radius(MatD{{0, 2}, {1, 0}}) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-11));
}

TEST_CASE("spectral_radius: negative entry rejected") {
    CHECK_THROWS_AS(spectral_radius(MatD{{1, -0.5}, {0, 1}}), std::invalid_argument);
}

TEST_CASE("spectral_radius lies between min and max row sums") {
    RngStream rng(5150);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.next() % 6);
        MatD a(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                a(i, j) = rng.next_unit() < 0.3 ? 0.0 : 3.0 * rng.next_unit();
        for (int i = 0; i < n; ++i) a(i, (i + 1) % n) += 0.05; // keep it irreducible
        const double rho = spectral_radius(a, 1e-10);
        const auto sums = a.row_sums();
        double lo = sums[0], hi = sums[0];
        for (double s : sums) { lo = std::min(lo, s); hi = std::max(hi, s); }
        CHECK(rho >= lo - 1e-8);
        CHECK(rho <= hi + 1e-8);
    }
}

TEST_CASE("spectral_radius handles reducible input via the residual stop") {
    // Perron vector (0, 1): the Collatz-Wielandt gap never closes here.
    CHECK(spectral_radius(MatD{{1, 0}, {1, 2}}) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(spectral_radius(MatD{{0.5, 0}, {0, 0.25}}) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("perron_vector examples") {
    const auto sym = perron_vector(MatD{{0, 1}, {1, 0}});
    CHECK(sym[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(sym[1] == doctest::Approx(0.5).epsilon(1e-10));

    const auto v = perron_vector(MatD{{0, 2}, {1, 0}});
    const Closed2x2 oracle = closed_form_2x2(0, 2, 1, 0);
    CHECK(oracle.rho == doctest::Approx(std::sqrt(2.0)));
    CHECK(v[0] == doctest::Approx(oracle.v0).epsilon(1e-9)); // 2/3
    CHECK(v[1] == doctest::Approx(oracle.v1).epsilon(1e-9)); // 1/3

    const auto u = perron_vector(MatD::identity(4));
    for (double x : u) CHECK(x == doctest::Approx(0.25));
}

TEST_CASE("perron_vector is positive with a small residual") {
    RngStream rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() % 4);
        MatD a(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = 0.05 + rng.next_unit();
        const double tol = 1e-11;
        const auto v = perron_vector(a, tol);
        const double rho = spectral_radius(a, tol);
        double res = 0, norm = 0;
        for (int i = 0; i < n; ++i) {
            double av = 0;
            for (int j = 0; j < n; ++j) av += a(i, j) * v[j];
            res += std::abs(av - rho * v[i]);
            norm += v[i];
            CHECK(v[i] > 0);
        }
        CHECK(norm == doctest::Approx(1.0));
        CHECK(res <= 2 * tol * rho + 1e-13);
    }
}

TEST_CASE("inverse: examples and adjugate oracle") {
    const MatQ m{{0, 1}, {Rational(1, 2), 0}};
    const MatQ v = inverse(MatQ::identity(2) - m);
    CHECK(v == MatQ{{2, 2}, {1, 2}});

    CHECK(inverse(MatQ::identity(3)) == MatQ::identity(3));
    CHECK(max_abs_diff(inverse(MatD::identity(3)), MatD::identity(3)) == 0.0);

    // I - M_bar for the transient subtree: still nonsingular. Adjugate oracle:
    // [[a,b],[c,d]]^-1 = [[d,-b],[-c,a]] / (ad - bc).
    const MatQ mb{{Rational(3, 4), Rational(3, 4)}, {Rational(1, 2), 0}};
    const MatQ im = MatQ::identity(2) - mb;
    const Rational det = im(0, 0) * im(1, 1) - im(0, 1) * im(1, 0);
    const MatQ adj{{im(1, 1) / det, -im(0, 1) / det}, {-im(1, 0) / det, im(0, 0) / det}};
    CHECK(inverse(im) == adj);

    CHECK_THROWS_AS(inverse(MatQ{{1, 1}, {1, 1}}), SingularMatrixError);
    try {
        inverse(MatD{{1, 1}, {1, 1}});
        CHECK(false);
    } catch (const SingularMatrixError& e) {
        CHECK(e.column() == 1);
    }
}

TEST_CASE("inverse: A * inverse(A) = I to 1e-10") {
    RngStream rng(661);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.next() % 6);
        MatD a(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) a(i, j) = 2.0 * rng.next_unit() - 1.0;
            a(i, i) += n; // diagonally dominant, comfortably nonsingular
        }
        CHECK(max_abs_diff(a * inverse(a), MatD::identity(n)) < 1e-10);
    }
}

TEST_CASE("gamma_matrix examples") {
    // scalar: D = [2], M = [2/3]: 1 + 1 * 1/(1/3) = 4
    const MatD g1 = gamma_matrix(MatD{{2}}, MatD{{2.0 / 3.0}});
    CHECK(g1(0, 0) == doctest::Approx(4.0).epsilon(1e-12));

    // D = [[0,2],[1,0]], M = D/2: spectral radius 1 + sqrt(2) (Lemma-4.3 oracle)
    const MatQ d{{0, 2}, {1, 0}};
    const MatQ m{{0, 1}, {Rational(1, 2), 0}};
    const MatQ gm = gamma_matrix(d, m);
    CHECK(gm == MatQ{{1, 2}, {1, 1}}); // = V - I + I with V = [[2,2],[1,2]]
    const double rho = spectral_radius(to_real(gm));
    const double oracle = gamma_closed_form(std::sqrt(2.0), 2.0);
    CHECK(rho == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(rho == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-10));

    // D = I: gamma matrix is I, gamma = 1, predicted limit 0
    const MatQ eye = MatQ::identity(3);
    MatQ any_m(3);
    any_m(0, 1) = Rational(1, 3); // arbitrary M with rho < 1
    any_m(1, 2) = Rational(1, 4);
    CHECK(gamma_matrix(eye, any_m) == eye);
}

TEST_CASE("gamma_closed_form") {
    CHECK(gamma_closed_form(1.5, 2.0) == doctest::Approx(3.0));
    CHECK(gamma_closed_form(1.0, 2.0) == doctest::Approx(1.0));
    CHECK(gamma_closed_form(1.0, 7.5) == doctest::Approx(1.0));
    CHECK(gamma_closed_form(std::sqrt(2.0), 2.0) ==
          doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(gamma_closed_form(2.0, 2.0), std::domain_error);
}

TEST_CASE("Neumann series oracle for (I-M)^-1 and rho(V) = 1/(1-rho(M))") {
    RngStream rng(4242);
    int done = 0;
    while (done < 25) {
        const int n = 1 + static_cast<int>(rng.next() % 5);
        MatD m(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = 0.9 * rng.next_unit() / n;
        const double rho = spectral_radius(m);
        if (rho >= 0.95) continue;
        ++done;
        const MatD v = inverse(MatD::identity(n) - m);

        CHECK(spectral_radius(v) ==
              doctest::Approx(1.0 / (1.0 - rho)).epsilon(1e-8 * (1.0 / (1.0 - rho))));

        // sum M^k until rho^K < 1e-12 (1 - rho)
        MatD sum = MatD::identity(n), pw = MatD::identity(n);
        const int kmax =
            static_cast<int>(std::ceil(std::log(1e-12 * (1.0 - rho)) / std::log(rho))) + 2;
        for (int k = 1; k <= kmax; ++k) {
            pw = pw * m;
            sum = sum + pw;
        }
        CHECK(max_abs_diff(sum, v) < 1e-8);
    }
}

TEST_CASE("palindromic uniform cross-check of the closed form") {
    // rho(gamma_matrix(D, D/2)) == gamma_closed_form(rho(D), 2) for palindromic
    // positive-recurrent generators under the uniform law.
    const std::vector<std::string> texts = {
        "n_types = 2\nword.1 = [2, 2]\nword.2 = [1]\n",
        "n_types = 1\nword.1 = [1]\n",
        "n_types = 2\nword.1 = [2]\nword.2 = [1]\n",
        "n_types = 3\nword.1 = [2]\nword.2 = [3]\nword.3 = [1, 1]\n",
    };
    for (const auto& text : texts) {
        const Generator g = parse_generator(text);
        REQUIRE(is_palindromic(g));
        const MatQ d = adjacency(g);
        const double psi = spectral_radius(to_real(d));
        if (psi >= 2.0 - 1e-9) continue;
        const MatQ half = Rational(1, 2) * d;
        const double direct = spectral_radius(to_real(gamma_matrix(d, half)));
        CHECK(std::abs(direct - gamma_closed_form(psi, 2.0)) < 1e-9);
    }
}
