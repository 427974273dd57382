#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ergolab/linalg.hpp"
#include "oracles.hpp"

using namespace ergolab;

TEST_CASE("norms of simple matrices") {
    Matrix d = Matrix::diagonal({2.0, 0.5});
    CHECK(spectral_norm(d) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(frobenius_norm(d) == doctest::Approx(std::sqrt(4.25)).epsilon(1e-12));

    // Rotation by 90 degrees: all singular values are 1.
    Matrix r(2, {0.0, -1.0, 1.0, 0.0});
    CHECK(spectral_norm(r) == doctest::Approx(1.0).epsilon(1e-12));

    Matrix z(3);
    CHECK(spectral_norm(z) == 0.0);
}

TEST_CASE("spectral norm matches the largest singular value on a 3x3") {
    // A = U S V^T built by hand is overkill here; instead check the
    // submultiplicative and symmetric-eigenvalue routes agree.
    Matrix a(3, {1.0, 2.0, 0.5, -1.0, 0.25, 3.0, 0.0, 1.5, -2.0});
    const double s = spectral_norm(a);
    const auto eig = symmetric_eigenvalues(a.transposed() * a);
    CHECK(s == doctest::Approx(std::sqrt(eig.back())).epsilon(1e-10));
    CHECK(s <= frobenius_norm(a) + 1e-12);
}

TEST_CASE("spectral radius closed form and squaring agree") {
    Matrix d = Matrix::diagonal({2.0, 0.5});
    CHECK(spectral_radius(d) == doctest::Approx(2.0).epsilon(1e-12));

    Matrix rot(2, {0.0, -3.0, 3.0, 0.0}); // complex pair, |lambda| = 3
    CHECK(spectral_radius(rot) == doctest::Approx(3.0).epsilon(1e-12));

    Matrix jordan(2, {1.0, 1.0, 0.0, 1.0});
    CHECK(spectral_radius(jordan) == doctest::Approx(1.0).epsilon(1e-9));

    Matrix nilpotent(2, {0.0, 1.0, 0.0, 0.0});
    CHECK(spectral_radius(nilpotent) == 0.0);
    CHECK(std::isinf(log_spectral_radius(nilpotent)));

    // 3x3 via Gelfand squaring vs a block-diagonal oracle.
    Matrix m(3, {0.0, -2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.5});
    CHECK(spectral_radius(m) == doctest::Approx(2.0).epsilon(1e-9));

    // Random-ish 2x2: squaring path must agree with the closed form.
    Matrix g(2, {0.7, -1.3, 2.1, 0.4});
    const double closed = oracles::spectral_radius_2x2(0.7, -1.3, 2.1, 0.4);
    CHECK(spectral_radius(g) == doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("matrix exponential against closed forms") {
    Matrix a = Matrix::diagonal({-1.0, 2.0});
    Matrix e = matrix_exponential(a);
    CHECK(e.at(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(e.at(1, 1) == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
    CHECK(e.at(0, 1) == doctest::Approx(0.0));

    // Planar rotation generator: exp = rotation matrix.
    Matrix w(2, {0.0, -1.0, 1.0, 0.0});
    Matrix r = matrix_exponential(w.scaled(M_PI / 3.0));
    CHECK(r.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.at(1, 0) == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("linear solve and jacobian") {
    Matrix a(2, {2.0, 1.0, 1.0, 3.0});
    bool singular = false;
    const auto x = solve_linear(a, {5.0, 10.0}, &singular);
    CHECK(!singular);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(3.0).epsilon(1e-12));

    Matrix s(2, {1.0, 2.0, 2.0, 4.0});
    solve_linear(s, {1.0, 2.0}, &singular);
    CHECK(singular);

    auto field = [](const std::vector<double>& p, std::vector<double>& out) {
        out[0] = p[0] * p[0] - p[1];
        out[1] = 3.0 * p[1];
    };
    const Matrix j = numerical_jacobian(field, {2.0, 1.0});
    CHECK(j.at(0, 0) == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(j.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(j.at(1, 0) == doctest::Approx(0.0));
    CHECK(j.at(1, 1) == doctest::Approx(3.0).epsilon(1e-8));
}
