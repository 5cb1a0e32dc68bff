#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "probe/linalg.hpp"
#include "probe/rng.hpp"

using namespace probe;

TEST_CASE("spectral norm of identity is 1") {
    CHECK(spectral_norm(Matrix::identity(3)).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral norm of diag(3,1) is 3") {
    Matrix m(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = 1.0;
    CHECK(spectral_norm(m).value == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("spectral norm matches the Jacobi SVD oracle on seeded matrices") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = 3 + static_cast<int>(rng.below(5));
        const int cols = 2 + static_cast<int>(rng.below(5));
        Matrix m(rows, cols);
        for (double& x : m.data) x = rng.normal();
        const double expected = oracle::svd_largest(m);
        CHECK(spectral_norm(m).value == doctest::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("spectral norm lower-bound witness: ||Wv||/||v|| never exceeds it") {
    Rng rng(7);
    Matrix m(5, 4);
    for (double& x : m.data) x = rng.normal();
    const double sn = spectral_norm(m).value;
    for (int t = 0; t < 50; ++t) {
        Vec v(4);
        for (double& x : v) x = rng.normal();
        const double ratio = norm2(matvec(m, v)) / norm2(v);
        CHECK(ratio <= sn + 1e-9);
    }
}

TEST_CASE("pivoted inverse matches the 3x3 adjugate oracle") {
    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
        Matrix m(3, 3);
        for (double& x : m.data) x = rng.normal();
        m(0, 0) += 3.0;  // keep it comfortably nonsingular
        m(1, 1) += 3.0;
        m(2, 2) += 3.0;
        const InverseResult r = invert(m);
        REQUIRE_FALSE(r.singular);
        const Matrix expected = oracle::inverse3(m);
        for (int i = 0; i < 9; ++i)
            CHECK(r.inverse.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-10));
    }
}

TEST_CASE("inverse residual gate ||W W^-1 - I||_max") {
    Rng rng(11);
    Matrix m(6, 6);
    for (int i = 0; i < 6; ++i) {
        m(i, i) = 2.0 + rng.uniform();
        for (int j = 0; j < 6; ++j)
            if (i != j) m(i, j) = 0.2 * rng.normal();
    }
    const InverseResult r = invert(m);
    REQUIRE_FALSE(r.singular);
    Matrix prod = matmul(m, r.inverse);
    for (int i = 0; i < 6; ++i) prod(i, i) -= 1.0;
    CHECK(max_abs(prod) <= 1e-8);
}

TEST_CASE("singular matrix is reported") {
    Matrix m(2, 2);
    m(0, 0) = 1.0;
    m(0, 1) = 2.0;
    m(1, 0) = 2.0;
    m(1, 1) = 4.0;
    CHECK(invert(m).singular);
}

TEST_CASE("softplus and sigmoid are stable at extremes") {
    CHECK(softplus(800.0) == doctest::Approx(800.0));
    CHECK(softplus(-800.0) == doctest::Approx(0.0));
    CHECK(sigmoid(800.0) == doctest::Approx(1.0));
    CHECK(sigmoid(-800.0) == doctest::Approx(0.0));
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("softmax sums to one and stays in (0,1)") {
    const Vec p = softmax({3.0, -1.0, 0.5, 900.0});
    double s = 0.0;
    for (double x : p) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        s += x;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matrix p-norms: 1 is max column sum, inf is max row sum") {
    Matrix m(2, 3);
    m(0, 0) = 1.0;
    m(0, 1) = -2.0;
    m(0, 2) = 3.0;
    m(1, 0) = 4.0;
    m(1, 1) = 5.0;
    m(1, 2) = -6.0;
    CHECK(operator_norm_1(m) == doctest::Approx(9.0));    // col 2: |3| + |-6|
    CHECK(operator_norm_inf(m) == doctest::Approx(15.0)); // row 1: 4+5+6
}
