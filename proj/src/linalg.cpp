#include "gaussop/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <sstream>

namespace gaussop {

void require_square(const CMatrix& x, const char* name) {
    if (x.rows() == 0 || x.rows() != x.cols()) {
        std::ostringstream msg;
        msg << name << ": expected a non-empty square matrix, got " << x.rows() << "x" << x.cols();
        throw DimensionError(msg.str());
    }
}

double max_abs(const CMatrix& x) {
    return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

double asymmetry(const CMatrix& x) {
    return max_abs(x - x.transpose());
}

bool near_zero(double value, double scale) {
    return std::abs(value) <= k_atol + k_rtol * scale;
}

CMatrix BlockMatrix2x2::assemble() const {
    const Index m = a.rows();
    CMatrix out(2 * m, 2 * m);
    out << a, b, c, d;
    return out;
}

BlockMatrix2x2 BlockMatrix2x2::split(const CMatrix& x) {
    if (x.rows() != x.cols() || x.rows() % 2 != 0 || x.rows() == 0)
        throw DimensionError("split: need a square matrix of even dimension");
    const Index m = x.rows() / 2;
    return {x.topLeftCorner(m, m), x.topRightCorner(m, m), x.bottomLeftCorner(m, m),
            x.bottomRightCorner(m, m)};
}

BlockMatrix2x2 generalized_dagger(const BlockMatrix2x2& x) {
    const Index m = x.a.rows();
    for (const CMatrix* blk : {&x.a, &x.b, &x.c, &x.d}) {
        if (blk->rows() != m || blk->cols() != m)
            throw DimensionError("generalized_dagger: blocks must be square and of equal size");
    }
    return {x.d.transpose(), x.b.transpose(), x.c.transpose(), x.a.transpose()};
}

CMatrix generalized_dagger(const CMatrix& x) {
    return generalized_dagger(BlockMatrix2x2::split(x)).assemble();
}

CVector generalized_dagger(const CVector& v) {
    if (v.size() % 2 != 0) throw DimensionError("generalized_dagger: vector length must be even");
    const Index m = v.size() / 2;
    CVector out(v.size());
    out << v.tail(m), v.head(m);
    return out;
}

CMatrix matrix_exp(const CMatrix& x) {
    require_square(x, "matrix_exp");
    if (!x.allFinite()) throw std::invalid_argument("matrix_exp: non-finite entries");
    return x.exp();
}

namespace {

// series for f(X) = sum X^k/(2k)! and g(X) = sum X^k/(2k+1)!
std::pair<CMatrix, CMatrix> even_odd_series(const CMatrix& x) {
    const Index m = x.rows();
    CMatrix c = CMatrix::Identity(m, m);
    CMatrix s = CMatrix::Identity(m, m);
    CMatrix power = CMatrix::Identity(m, m);
    double fe = 1.0, fo = 1.0;  // (2k)!, (2k+1)!
    for (int k = 1; k < 400; ++k) {
        power = power * x;
        fe *= (2.0 * k - 1.0) * (2.0 * k);
        fo *= (2.0 * k) * (2.0 * k + 1.0);
        const CMatrix tc = power / fe;
        const CMatrix ts = power / fo;
        c += tc;
        s += ts;
        const double pn = power.norm();
        if (!std::isfinite(pn)) throw std::overflow_error("matrix_cosh_sinh: series overflow");
        if (tc.norm() <= 1e-16 * c.norm() && ts.norm() <= 1e-16 * s.norm()) break;
    }
    return {c, s};
}

}  // namespace

Hyperbolic matrix_cosh_sinh(const CMatrix& xi, const CMatrix& xi_plus) {
    require_square(xi, "matrix_cosh_sinh");
    require_square(xi_plus, "matrix_cosh_sinh");
    if (xi.rows() != xi_plus.rows()) throw DimensionError("matrix_cosh_sinh: xi and xi_plus differ in size");
    const double scale = std::max(1.0, max_abs(xi));
    if (asymmetry(xi) > 1e-10 * scale) throw SymmetryError("matrix_cosh_sinh: xi is not symmetric");
    if (asymmetry(xi_plus) > 1e-10 * std::max(1.0, max_abs(xi_plus)))
        throw SymmetryError("matrix_cosh_sinh: xi_plus is not symmetric");

    auto [c, s] = even_odd_series(xi * xi_plus);
    Hyperbolic h;
    h.mu = c;
    h.nu = s * xi;
    h.nu_plus = xi_plus * s;
    return h;
}

std::pair<CMatrix, CMatrix> matrix_cosh_sinh(const CMatrix& xi) {
    auto h = matrix_cosh_sinh(xi, CMatrix(xi.conjugate()));
    return {h.mu, h.nu};
}

namespace {

void check_sylvester_shapes(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs) {
    require_square(e, "sylvester_solve(E)");
    require_square(edag, "sylvester_solve(Edag)");
    require_square(rhs, "sylvester_solve(RHS)");
    if (edag.rows() != e.rows() || rhs.rows() != e.rows())
        throw DimensionError("sylvester_solve: E, Edag and RHS must share one size");
}

double sylvester_residual(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs, const CMatrix& x) {
    return (e * x + x * edag - rhs).norm();
}

double sylvester_tolerance(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs, const CMatrix& x) {
    return k_atol + 1e-10 * ((e.norm() + edag.norm()) * x.norm() + rhs.norm());
}

double condition_number(const CMatrix& v) {
    Eigen::JacobiSVD<CMatrix> svd(v);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    return smin > 0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
}

// dense Kronecker fallback for non-diagonalizable pencils
SylvesterSolution sylvester_kronecker(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs,
                                      bool allow_singular) {
    const Index n = e.rows();
    const CMatrix id = CMatrix::Identity(n, n);
    CMatrix big = CMatrix::Zero(n * n, n * n);
    // column-major vec: vec(E X) = (I kron E) vec X, vec(X F) = (F^T kron I) vec X
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            big.block(j * n, i * n, n, n) += edag(i, j) * id;
            if (i == j) big.block(j * n, j * n, n, n) += e;
        }
    const CVector b = Eigen::Map<const CVector>(rhs.data(), n * n);
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(big);
    cod.setThreshold(1e-12);
    SylvesterSolution out;
    const CVector xv = cod.solve(b);
    out.x = Eigen::Map<const CMatrix>(xv.data(), n, n);
    out.unique = cod.rank() == n * n;
    out.residual = sylvester_residual(e, edag, rhs, out.x);
    if (!out.unique && !allow_singular)
        throw SingularPencilError("sylvester_solve: pencil is singular (rank " + std::to_string(cod.rank()) + ")");
    if (out.residual > sylvester_tolerance(e, edag, rhs, out.x))
        throw SingularPencilError("sylvester_solve: no solution, residual " + std::to_string(out.residual));
    return out;
}

SylvesterSolution solve_impl(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs, bool allow_singular) {
    check_sylvester_shapes(e, edag, rhs);
    Eigen::ComplexEigenSolver<CMatrix> es1(e), es2(edag);
    if (es1.info() != Eigen::Success || es2.info() != Eigen::Success)
        return sylvester_kronecker(e, edag, rhs, allow_singular);
    const CMatrix& v = es1.eigenvectors();
    const CMatrix& w = es2.eigenvectors();
    if (condition_number(v) > 1e10 || condition_number(w) > 1e10)
        return sylvester_kronecker(e, edag, rhs, allow_singular);

    const CVector& lam = es1.eigenvalues();
    const CVector& mu = es2.eigenvalues();
    const CMatrix rt = v.partialPivLu().solve(rhs * w);
    const double scale = std::max(e.norm(), edag.norm());
    const double rscale = rt.norm();

    SylvesterSolution out;
    CMatrix y(rt.rows(), rt.cols());
    for (Index i = 0; i < y.rows(); ++i)
        for (Index j = 0; j < y.cols(); ++j) {
            const cplx denom = lam(i) + mu(j);
            if (near_zero(std::abs(denom), scale)) {
                if (!allow_singular)
                    throw SingularPencilError("sylvester_solve: eigenvalues of E and Edag sum to zero");
                if (!near_zero(std::abs(rt(i, j)), rscale))
                    throw SingularPencilError("sylvester_solve: singular pencil with inconsistent right-hand side");
                y(i, j) = 0.0;
                out.unique = false;
            } else {
                y(i, j) = rt(i, j) / denom;
            }
        }
    out.x = v * y * w.inverse();
    out.residual = sylvester_residual(e, edag, rhs, out.x);
    if (out.residual > sylvester_tolerance(e, edag, rhs, out.x))
        return sylvester_kronecker(e, edag, rhs, allow_singular);
    return out;
}

}  // namespace

CMatrix sylvester_solve(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs) {
    return solve_impl(e, edag, rhs, false).x;
}

SylvesterSolution sylvester_particular(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs) {
    return solve_impl(e, edag, rhs, true);
}

cplx det(const CMatrix& x) {
    require_square(x, "det");
    return x.partialPivLu().determinant();
}

CMatrix inverse(const CMatrix& x) {
    require_square(x, "inverse");
    Eigen::FullPivLU<CMatrix> lu(x);
    const double rc = lu.rcond();
    if (!(rc > k_atol))
        throw SingularMatrixError("inverse: matrix is singular to working precision", rc > 0 ? 1.0 / rc : INFINITY);
    CMatrix inv = lu.inverse();
    const double res = max_abs(x * inv - CMatrix::Identity(x.rows(), x.cols()));
    if (res > 1e-10) throw SingularMatrixError("inverse: residual " + std::to_string(res) + " too large", 1.0 / rc);
    return inv;
}

}  // namespace gaussop
