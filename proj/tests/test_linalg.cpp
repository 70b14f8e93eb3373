#include "gaussop/linalg.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace gaussop;
using namespace testutil;

TEST_CASE("generalized dagger of blocks") {
    BlockMatrix2x2 x{CMatrix::Constant(1, 1, 1.0), CMatrix::Constant(1, 1, 2.0), CMatrix::Constant(1, 1, 3.0),
                     CMatrix::Constant(1, 1, 4.0)};
    const BlockMatrix2x2 y = generalized_dagger(x);
    CHECK(y.a(0, 0) == cplx(4.0));
    CHECK(y.b(0, 0) == cplx(2.0));
    CHECK(y.c(0, 0) == cplx(3.0));
    CHECK(y.d(0, 0) == cplx(1.0));

    const CMatrix id = CMatrix::Identity(6, 6);
    CHECK(err(generalized_dagger(id), id) == 0.0);
}

TEST_CASE("generalized dagger is an involution and fixes sigma") {
    for (Index m = 1; m <= 3; ++m) {
        const CMatrix x = random_matrix(2 * m);
        CHECK(err(generalized_dagger(generalized_dagger(x)), x) == 0.0);

        const CMatrix n = random_matrix(m);
        const CMatrix mm = random_symmetric(m);
        const CMatrix mp = random_symmetric(m);
        const CMatrix id = CMatrix::Identity(m, m);
        const CMatrix sigma = BlockMatrix2x2{id + n, mm, mp, id + n.transpose()}.assemble();
        CHECK(err(generalized_dagger(sigma), sigma) == 0.0);
    }
    CVector v(4);
    v << 1.0, 2.0, 3.0, 4.0;
    const CVector w = generalized_dagger(v);
    CHECK(w(0) == cplx(3.0));
    CHECK(w(3) == cplx(2.0));
}

TEST_CASE("block split rejects odd sizes") {
    CHECK_THROWS_AS(BlockMatrix2x2::split(CMatrix::Identity(3, 3)), DimensionError);
    const CMatrix x = random_matrix(4);
    CHECK(err(BlockMatrix2x2::split(x).assemble(), x) == 0.0);
}

TEST_CASE("matrix exponential") {
    CHECK(err(matrix_exp(CMatrix::Zero(3, 3)), CMatrix::Identity(3, 3)) < 1e-15);

    CMatrix d = CMatrix::Zero(3, 3);
    d.diagonal() << cplx(0.5, 1.0), cplx(-2.0, 0.0), cplx(0.0, 3.0);
    const CMatrix e = matrix_exp(d);
    for (Index i = 0; i < 3; ++i) CHECK(err(e(i, i), std::exp(d(i, i))) < 1e-13);

    CMatrix nil(2, 2);
    nil << 0.0, 1.0, 0.0, 0.0;
    CMatrix expect(2, 2);
    expect << 1.0, 1.0, 0.0, 1.0;
    CHECK(err(matrix_exp(nil), expect) < 1e-15);
}

TEST_CASE("matrix exponential inverse property") {
    for (int trial = 0; trial < 20; ++trial) {
        CMatrix x = random_matrix(4);
        x *= uniform(0.1, 5.0) / x.norm();
        CHECK(err(matrix_exp(x) * matrix_exp(-x), CMatrix::Identity(4, 4)) < 1e-10);
    }
}

TEST_CASE("hyperbolic functions") {
    auto [mu0, nu0] = matrix_cosh_sinh(CMatrix::Zero(2, 2));
    CHECK(err(mu0, CMatrix::Identity(2, 2)) == 0.0);
    CHECK(err(nu0, CMatrix::Zero(2, 2)) == 0.0);

    auto [mu, nu] = matrix_cosh_sinh(CMatrix::Constant(1, 1, 0.8));
    CHECK(std::abs(mu(0, 0) - std::cosh(0.8)) < 1e-15);
    CHECK(std::abs(nu(0, 0) - std::sinh(0.8)) < 1e-15);

    for (int trial = 0; trial < 20; ++trial) {
        const Index m = 1 + trial % 3;
        CMatrix xi = random_symmetric(m);
        xi *= uniform(0.05, 2.0) / xi.norm();
        auto [u, v] = matrix_cosh_sinh(xi);
        CHECK(err(u * u - v * v.conjugate(), CMatrix::Identity(m, m)) < 1e-10);
        const CMatrix r = u.inverse() * v;
        CHECK(err(r, r.transpose()) < 1e-10);
    }
}

TEST_CASE("hyperbolic functions with independent partner") {
    const CMatrix xi = random_symmetric(2, 0.6);
    const CMatrix xp = random_symmetric(2, 0.6);
    const Hyperbolic h = matrix_cosh_sinh(xi, xp);
    // exp(-[[0, xi], [xi+, 0]]) = [[mu, -nu], [-nu+, mu^T]]
    const CMatrix z = CMatrix::Zero(2, 2);
    const CMatrix ex = matrix_exp(-BlockMatrix2x2{z, xi, xp, z}.assemble());
    const CMatrix blocks = BlockMatrix2x2{h.mu, -h.nu, -h.nu_plus, h.mu.transpose()}.assemble();
    CHECK(err(ex, blocks) < 1e-12);
    CMatrix skew(2, 2);
    skew << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(matrix_cosh_sinh(skew), SymmetryError);
}

TEST_CASE("sylvester solve") {
    const CMatrix b = random_matrix(4);
    const CMatrix e = -CMatrix::Identity(4, 4);
    CHECK(err(sylvester_solve(e, e, -2.0 * b), b) < 1e-12);

    for (int trial = 0; trial < 10; ++trial) {
        const CMatrix a = random_matrix(4) - 3.0 * CMatrix::Identity(4, 4);
        const CMatrix c = random_matrix(4) - 3.0 * CMatrix::Identity(4, 4);
        const CMatrix rhs = random_matrix(4);
        const CMatrix x = sylvester_solve(a, c, rhs);
        CHECK(err(a * x + x * c, rhs) < 1e-10 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("sylvester resonance") {
    // E = [[0, chi], [chi, 0]] with E+ = E: eigenvalues +-chi pair up resonantly
    CMatrix e(2, 2);
    e << 0.0, 0.7, 0.7, 0.0;
    CHECK_THROWS_AS(sylvester_solve(e, e, e), SingularPencilError);
    const SylvesterSolution s = sylvester_particular(e, e, e);
    CHECK_FALSE(s.unique);
    CHECK(err(s.x, 0.5 * CMatrix::Identity(2, 2)) < 1e-12);
    CHECK(s.residual < 1e-12);

    CMatrix bad(2, 2);
    bad << 0.0, 1.0, -1.0, 0.0;
    CHECK_THROWS_AS(sylvester_particular(e, e, bad), SingularPencilError);
}

TEST_CASE("determinant and inverse") {
    const CMatrix id = CMatrix::Identity(3, 3);
    CHECK(err(det(id), cplx(1.0)) < 1e-15);
    CHECK(err(inverse(id), id) < 1e-15);

    const CMatrix sigma = 2.0 * CMatrix::Identity(2, 2);
    CHECK(err(det(sigma), cplx(4.0)) < 1e-14);

    CMatrix sing(2, 2);
    sing << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(inverse(sing), SingularMatrixError);
    CHECK_THROWS_AS(inverse(CMatrix::Identity(2, 3)), DimensionError);
}

TEST_CASE("non-finite input is rejected") {
    CMatrix x = CMatrix::Identity(2, 2);
    x(0, 1) = std::nan("");
    CHECK_THROWS_AS(matrix_exp(x), std::invalid_argument);
}
