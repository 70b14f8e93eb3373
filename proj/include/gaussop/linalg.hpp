#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace gaussop {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double k_atol = 1e-13;
inline constexpr double k_rtol = 1e-10;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SymmetryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

class SingularPencilError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// 2x2 arrangement of equal square blocks, [[a, b], [c, d]]
struct BlockMatrix2x2 {
    CMatrix a, b, c, d;

    Index dim() const { return a.rows(); }
    CMatrix assemble() const;
    static BlockMatrix2x2 split(const CMatrix& x);
};

BlockMatrix2x2 generalized_dagger(const BlockMatrix2x2& x);
CMatrix generalized_dagger(const CMatrix& x);

// vector version: (v1, v2) -> (v2, v1)
CVector generalized_dagger(const CVector& v);

CMatrix matrix_exp(const CMatrix& x);

struct Hyperbolic {
    CMatrix mu;       // sum (xi xi+)^k / (2k)!
    CMatrix nu;       // sum (xi xi+)^k xi / (2k+1)!
    CMatrix nu_plus;  // sum (xi+ xi)^k xi+ / (2k+1)!
};

std::pair<CMatrix, CMatrix> matrix_cosh_sinh(const CMatrix& xi);
Hyperbolic matrix_cosh_sinh(const CMatrix& xi, const CMatrix& xi_plus);

struct SylvesterSolution {
    CMatrix x;
    bool unique = true;
    double residual = 0.0;
};

// E X + X Edag = rhs; throws SingularPencilError on any resonant pair
CMatrix sylvester_solve(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs);

// as above but resonant pairs with vanishing right-hand side are zeroed
SylvesterSolution sylvester_particular(const CMatrix& e, const CMatrix& edag, const CMatrix& rhs);

cplx det(const CMatrix& x);
CMatrix inverse(const CMatrix& x);

double max_abs(const CMatrix& x);
double asymmetry(const CMatrix& x);
bool near_zero(double value, double scale);
void require_square(const CMatrix& x, const char* name);

}  // namespace gaussop
