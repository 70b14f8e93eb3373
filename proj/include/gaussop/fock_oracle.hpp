#pragma once

#include "gaussop/gaussian_state.hpp"
#include "gaussop/qme.hpp"

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace gaussop {

using SpMatrix = Eigen::SparseMatrix<cplx>;

// product basis |n_0 ... n_{M-1}>, n_k <= nmax, mode 0 most significant, dimension at most 5000
class FockSpace {
public:
    FockSpace(Index modes, int nmax);

    Index modes() const { return modes_; }
    int nmax() const { return nmax_; }
    Index dim() const { return dim_; }

    const SpMatrix& a(Index mode) const { return a_.at(mode); }
    const SpMatrix& adag(Index mode) const { return adag_.at(mode); }
    int occupation(Index state, Index mode) const;
    Index index_of(const std::vector<int>& occ) const;

private:
    Index modes_;
    int nmax_;
    Index dim_;
    std::vector<SpMatrix> a_, adag_;
};

struct DensityMatrix {
    CMatrix rho;
    bool hermitian = true;  // false for non-Hermitian kernels, which are exempt from the state checks
};

class TruncationError : public std::runtime_error {
public:
    TruncationError(const std::string& what, double measured)
        : std::runtime_error(what), measured_(measured) {}
    double measured() const { return measured_; }

private:
    double measured_;
};

class UnsupportedRegion : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ValidityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class StateKind { vacuum, coherent, thermal, squeezed_vacuum, squeezed_thermal, displaced_squeezed_thermal };

// physical parameters: alpha (displacement), diagonal nbar, symmetric xi
struct FockStateSpec {
    CVector alpha;
    CMatrix nbar;
    CMatrix xi;
};

// rho = D(alpha) S(xi) rho_th(nbar) S(xi)^dagger D(alpha)^dagger with S(xi) = exp(-a^dag xi a^dag / 2 + a xi^* a / 2)
DensityMatrix build_state(StateKind kind, const FockStateSpec& spec, const FockSpace& space,
                          double tail_threshold = 1e-12);

// every retained matrix element is exact; the trace carries the truncated tail
DensityMatrix build_kernel(const GaussianParams& g, const FockSpace& space);

struct StateCheck {
    double hermiticity;
    cplx trace;
    double min_eigenvalue;
};
StateCheck check_density_matrix(const DensityMatrix& d);

double edge_population(const CMatrix& rho, const FockSpace& space);

struct EvolveOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double dt0 = 1e-3;
    double edge_threshold = 1e-8;
};

struct EvolveResult {
    std::vector<DensityMatrix> states;  // one per requested time
    double max_edge_population = 0.0;
    double max_trace_drift = 0.0;
};

EvolveResult evolve_lindblad(const LindbladSpec& spec, const FockSpace& space, const DensityMatrix& rho0,
                             const std::vector<double>& times, const EvolveOptions& opt = {});
DensityMatrix evolve_lindblad(const LindbladSpec& spec, const FockSpace& space, const DensityMatrix& rho0, double t,
                              const EvolveOptions& opt = {});

SpMatrix lindblad_hamiltonian(const LindbladSpec& spec, const FockSpace& space);
CMatrix apply_lindblad(const LindbladSpec& spec, const FockSpace& space, const CMatrix& rho);
// the quadratic master equation superoperator written directly in operator form
CMatrix apply_qme(const QuadraticME& q, const FockSpace& space, const CMatrix& rho);

Moments moments_fock(const CMatrix& rho, const FockSpace& space);

struct IdentityResidual {
    std::string name;
    double residual;
};

struct IdentityReport {
    std::vector<IdentityResidual> residuals;
    double step;
    double max() const;
};

IdentityReport verify_coherent_identities(cplx alpha, cplx beta, const FockSpace& space, double h = 1e-5);
IdentityReport verify_thermal_identities(cplx nbar, const FockSpace& space, double h = 1e-5);

struct IntegralResult {
    cplx numeric;
    cplx analytic;
    double rel_dev;
};

// integral over the complex plane of exp(-dz+ sigma^-1 dz / 2), dz = (z - alpha, z^* - alpha_plus)
IntegralResult verify_gaussian_integral(const CMatrix& sigma, cplx alpha, cplx alpha_plus);

}  // namespace gaussop
