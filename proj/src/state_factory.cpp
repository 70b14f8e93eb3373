#include "gaussop/state_factory.hpp"

#include <cmath>
#include <numbers>

namespace gaussop {

void SqueezeSpec::validate() const {
    require_square(xi, "SqueezeSpec.xi");
    require_square(xi_plus, "SqueezeSpec.xi_plus");
    if (xi.rows() != xi_plus.rows()) throw DimensionError("SqueezeSpec: xi and xi_plus differ in size");
    if (asymmetry(xi) > 1e-10 * std::max(1.0, max_abs(xi))) throw SymmetryError("SqueezeSpec: xi is not symmetric");
    if (asymmetry(xi_plus) > 1e-10 * std::max(1.0, max_abs(xi_plus)))
        throw SymmetryError("SqueezeSpec: xi_plus is not symmetric");
}

ThermalSpec ThermalSpec::from_phi(const CVector& phi) {
    CMatrix nbar = CMatrix::Zero(phi.size(), phi.size());
    for (Index k = 0; k < phi.size(); ++k) nbar(k, k) = 1.0 / (std::exp(phi(k)) - 1.0);
    return {nbar};
}

GaussianParams vacuum(Index modes) {
    if (modes < 1) throw DimensionError("vacuum: need at least one mode");
    const CMatrix z = CMatrix::Zero(modes, modes);
    return GaussianParams(1.0, CVector::Zero(modes), CVector::Zero(modes), z, z, z);
}

GaussianParams coherent_projector(cplx omega, const CVector& alpha, const CVector& beta) {
    if (alpha.size() != beta.size()) throw DimensionError("coherent_projector: alpha and beta differ in length");
    const CMatrix z = CMatrix::Zero(alpha.size(), alpha.size());
    return GaussianParams(omega, alpha, beta, z, z, z);
}

GaussianParams thermal(cplx omega, const ThermalSpec& spec) {
    require_square(spec.nbar, "thermal(nbar)");
    const Index modes = spec.nbar.rows();
    const CMatrix z = CMatrix::Zero(modes, modes);
    return GaussianParams(omega, CVector::Zero(modes), CVector::Zero(modes), spec.nbar, z, z);
}

GaussianParams squeezed_vacuum(const CVector& alpha, const SqueezeSpec& sq) {
    return squeezed_vacuum(alpha, alpha.conjugate(), sq);
}

GaussianParams squeezed_vacuum(const CVector& alpha, const CVector& alpha_plus, const SqueezeSpec& sq) {
    const Index modes = sq.modes();
    return squeezed_thermal(sq, ThermalSpec{CMatrix::Zero(modes, modes)}, alpha, alpha_plus);
}

GaussianParams squeezed_thermal(const SqueezeSpec& sq, const ThermalSpec& th, const CVector& alpha,
                                const CVector& alpha_plus) {
    sq.validate();
    require_square(th.nbar, "squeezed_thermal(nbar)");
    const Index modes = sq.modes();
    if (th.modes() != modes || alpha.size() != modes || alpha_plus.size() != modes)
        throw DimensionError("squeezed_thermal: inconsistent mode counts");

    const Hyperbolic h = matrix_cosh_sinh(sq.xi, sq.xi_plus);
    const CMatrix id = CMatrix::Identity(modes, modes);
    const CMatrix& mu = h.mu;
    const CMatrix mu_t = mu.transpose();
    const CMatrix& nb = th.nbar;
    const CMatrix nb_t = nb.transpose();

    const CMatrix n = mu * nb * mu + h.nu * (nb_t + id) * h.nu_plus;
    const CMatrix m = -mu * (nb + id) * h.nu - h.nu * nb_t * mu_t;
    const CMatrix m_plus = -mu_t * nb_t * h.nu_plus - h.nu_plus * (nb + id) * mu;
    return GaussianParams(1.0, alpha, alpha_plus, n, m, m_plus);
}

GaussianParams classical_basis(BasisKind kind, const CVector& alpha, const CVector& beta, double s, cplx omega) {
    if (alpha.size() != beta.size()) throw DimensionError("classical_basis: alpha and beta differ in length");
    double order = 0.0;
    switch (kind) {
    case BasisKind::wigner: order = 0.0; break;
    case BasisKind::q: order = -1.0; break;
    case BasisKind::p:
    case BasisKind::plus_p: order = 1.0; break;
    case BasisKind::s_ordered: order = s; break;
    }
    const Index modes = alpha.size();
    const CMatrix z = CMatrix::Zero(modes, modes);
    const CMatrix n = 0.5 * (order - 1.0) * CMatrix::Identity(modes, modes);
    return GaussianParams(omega, alpha, beta, n, z, z);
}

WeightedEnsemble number_state_ensemble(int n0, double r, int k) {
    if (n0 < 0) throw std::invalid_argument("number_state_ensemble: n0 must be nonnegative");
    if (k < 2) throw std::invalid_argument("number_state_ensemble: need K >= 2");
    if (!(r > 0.0)) throw std::invalid_argument("number_state_ensemble: need r > 0");
    std::vector<GaussianParams> members;
    members.reserve(k);
    for (int j = 0; j < k; ++j) {
        const cplx phi(r, 2.0 * std::numbers::pi * j / k);
        const cplx w = std::exp(static_cast<double>(n0) * phi) / (static_cast<double>(k) * (1.0 - std::exp(-phi)));
        CVector p(1);
        p << phi;
        members.push_back(thermal(w, ThermalSpec::from_phi(p)));
    }
    return WeightedEnsemble(std::move(members));
}

double squeeze_consistency_residual(const SqueezeSpec& sq) {
    sq.validate();
    const Index modes = sq.modes();
    const Hyperbolic h = matrix_cosh_sinh(sq.xi, sq.xi_plus);
    const CMatrix z = CMatrix::Zero(modes, modes);
    const CMatrix gen = BlockMatrix2x2{z, sq.xi, sq.xi_plus, z}.assemble();
    const CMatrix mu_block = BlockMatrix2x2{h.mu, -h.nu, -h.nu_plus, h.mu.transpose()}.assemble();
    return max_abs(matrix_exp(-gen) - mu_block);
}

}  // namespace gaussop
