#pragma once

#include "gaussop/gaussian_state.hpp"

namespace gaussop {

struct SqueezeSpec {
    CMatrix xi;       // symmetric squeeze matrix
    CMatrix xi_plus;  // independent partner, conj(xi) in the Hermitian case

    static SqueezeSpec hermitian(const CMatrix& xi) { return {xi, xi.conjugate()}; }
    Index modes() const { return xi.rows(); }
    void validate() const;
};

struct ThermalSpec {
    CMatrix nbar;

    static ThermalSpec from_nbar(const CMatrix& nbar) { return {nbar}; }
    // per-mode phi_k = eps_k / kT, nbar_k = 1 / (e^phi_k - 1)
    static ThermalSpec from_phi(const CVector& phi);
    Index modes() const { return nbar.rows(); }
};

GaussianParams vacuum(Index modes);
GaussianParams coherent_projector(cplx omega, const CVector& alpha, const CVector& beta);
GaussianParams thermal(cplx omega, const ThermalSpec& spec);

GaussianParams squeezed_vacuum(const CVector& alpha, const SqueezeSpec& sq);
GaussianParams squeezed_vacuum(const CVector& alpha, const CVector& alpha_plus, const SqueezeSpec& sq);

GaussianParams squeezed_thermal(const SqueezeSpec& sq, const ThermalSpec& th, const CVector& alpha,
                                const CVector& alpha_plus);

enum class BasisKind { wigner, q, p, plus_p, s_ordered };

// n = (s-1)/2 I for s-ordered; wigner s=0, q s=-1, p and plus_p s=1
GaussianParams classical_basis(BasisKind kind, const CVector& alpha, const CVector& beta, double s = 0.0,
                               cplx omega = 1.0);

// single-mode ensemble of K thermal kernels on the circle phi_j = r + 2 pi i j / K
WeightedEnsemble number_state_ensemble(int n0, double r = 1.0, int k = 32);

// blocks [[mu, -nu], [-nu+, mu^T]] compared against exp(-[[0, xi], [xi+, 0]])
double squeeze_consistency_residual(const SqueezeSpec& sq);

}  // namespace gaussop
