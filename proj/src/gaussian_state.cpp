#include "gaussop/gaussian_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gaussop {

namespace {

double tolerance_for(const CMatrix& x) {
    return 1e-10 * std::max(1.0, max_abs(x));
}

CMatrix symmetrized(const CMatrix& x, const char* name) {
    if (asymmetry(x) > tolerance_for(x)) {
        std::ostringstream msg;
        msg << "GaussianParams: " << name << " is not symmetric (asymmetry " << asymmetry(x) << ")";
        throw SymmetryError(msg.str());
    }
    return 0.5 * (x + x.transpose());
}

}  // namespace

GaussianParams::GaussianParams(cplx omega, CVector alpha, CVector alpha_plus, CMatrix n, CMatrix m, CMatrix m_plus)
    : omega_(omega), alpha_(std::move(alpha)), alpha_plus_(std::move(alpha_plus)) {
    const Index modes = alpha_.size();
    if (modes < 1) throw DimensionError("GaussianParams: need at least one mode");
    if (alpha_plus_.size() != modes) throw DimensionError("GaussianParams: alpha_plus length differs from alpha");
    for (const CMatrix* x : {&n, &m, &m_plus})
        if (x->rows() != modes || x->cols() != modes)
            throw DimensionError("GaussianParams: correlation blocks must be M x M");
    if (!std::isfinite(omega.real()) || !std::isfinite(omega.imag()) || !alpha_.allFinite() ||
        !alpha_plus_.allFinite() || !n.allFinite() || !m.allFinite() || !m_plus.allFinite())
        throw std::invalid_argument("GaussianParams: non-finite parameter");
    n_ = std::move(n);
    m_ = symmetrized(m, "m");
    m_plus_ = symmetrized(m_plus, "m_plus");
}

GaussianParams GaussianParams::from_covariance(cplx omega, CVector alpha, CVector alpha_plus, const CMatrix& sigma) {
    const auto blk = BlockMatrix2x2::split(sigma);
    const Index modes = blk.dim();
    const CMatrix id = CMatrix::Identity(modes, modes);
    CMatrix n = blk.a - id;
    const double mismatch = max_abs(blk.d - id - n.transpose());
    if (mismatch > tolerance_for(sigma))
        throw SymmetryError("from_covariance: lower-right block is not I + n^T (mismatch " + std::to_string(mismatch) + ")");
    return GaussianParams(omega, std::move(alpha), std::move(alpha_plus), std::move(n), blk.b, blk.c);
}

CVector GaussianParams::displacement() const {
    CVector out(2 * modes());
    out << alpha_, alpha_plus_;
    return out;
}

GaussianParams GaussianParams::with_omega(cplx omega) const {
    GaussianParams out = *this;
    out.omega_ = omega;
    return out;
}

Covariance assemble_covariance(const GaussianParams& g) {
    const Index modes = g.modes();
    const CMatrix id = CMatrix::Identity(modes, modes);
    return {BlockMatrix2x2{id + g.n(), g.m(), g.m_plus(), id + g.n().transpose()}.assemble()};
}

cplx sqrt_det_sigma(const GaussianParams& g) {
    const Index modes = g.modes();
    const CMatrix id = CMatrix::Identity(modes, modes);
    const CMatrix in = id + g.n();
    Eigen::FullPivLU<CMatrix> lu(in);
    if (lu.rcond() <= k_atol) return std::sqrt(det(assemble_covariance(g).sigma));
    const CMatrix x = in.transpose().fullPivLu().solve(g.m_plus()) * lu.solve(g.m());
    return lu.determinant() * std::sqrt(det(id - x));
}

TraceResult trace(const GaussianParams& g) {
    Eigen::ComplexEigenSolver<CMatrix> es(assemble_covariance(g).sigma, false);
    bool ok = es.info() == Eigen::Success;
    if (ok)
        for (Index i = 0; i < es.eigenvalues().size(); ++i) ok = ok && es.eigenvalues()(i).real() > 0.0;
    return {g.omega(), ok};
}

FirstMoments moments_first(const GaussianParams& g) {
    return {g.alpha(), g.alpha_plus()};
}

SecondMoments moments_second(const GaussianParams& g) {
    const CVector& a = g.alpha();
    const CVector& ap = g.alpha_plus();
    return {a * a.transpose() + g.m(), a * ap.transpose() + g.n(), ap * ap.transpose() + g.m_plus()};
}

Moments moments(const GaussianParams& g) {
    return {moments_first(g), moments_second(g)};
}

WeightedEnsemble::WeightedEnsemble(std::vector<GaussianParams> m) : members(std::move(m)) {
    if (members.empty()) throw std::invalid_argument("WeightedEnsemble: no members");
    for (const auto& g : members)
        if (g.modes() != members.front().modes())
            throw DimensionError("WeightedEnsemble: members have different mode counts");
}

cplx WeightedEnsemble::total_weight() const {
    cplx s = 0.0;
    for (const auto& g : members) s += g.omega();
    return s;
}

Moments ensemble_moments(const WeightedEnsemble& e) {
    double abs_sum = 0.0;
    for (const auto& g : e.members) abs_sum += std::abs(g.omega());
    const cplx total = e.total_weight();
    if (std::abs(total) <= k_atol * std::max(1.0, abs_sum))
        throw ZeroWeightError("ensemble_moments: total weight is zero");

    const Index modes = e.members.front().modes();
    Moments acc{{CVector::Zero(modes), CVector::Zero(modes)},
                {CMatrix::Zero(modes, modes), CMatrix::Zero(modes, modes), CMatrix::Zero(modes, modes)}};
    for (const auto& g : e.members) {
        const Moments mg = moments(g);
        const cplx w = g.omega();
        acc.first.a += w * mg.first.a;
        acc.first.adag += w * mg.first.adag;
        acc.second.aa += w * mg.second.aa;
        acc.second.normal_a_adag += w * mg.second.normal_a_adag;
        acc.second.adag_adag += w * mg.second.adag_adag;
    }
    acc.first.a /= total;
    acc.first.adag /= total;
    acc.second.aa /= total;
    acc.second.normal_a_adag /= total;
    acc.second.adag_adag /= total;
    return acc;
}

bool PhysicalityReport::physical() const {
    return std::all_of(checks.begin(), checks.end(), [](const PhysicalCheck& c) { return c.passed; });
}

bool PhysicalityReport::passed(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c.passed;
    throw std::out_of_range("PhysicalityReport: no check named " + name);
}

std::string PhysicalityReport::describe() const {
    std::ostringstream out;
    for (const auto& c : checks)
        out << (c.passed ? "  pass  " : "  FAIL  ") << c.name << " (margin " << c.margin << ")\n";
    return out.str();
}

PhysicalityReport check_physical(const GaussianParams& g, double tol) {
    PhysicalityReport rep;
    auto add = [&](std::string name, double violation) {
        rep.checks.push_back({std::move(name), violation <= tol, violation});
    };
    const Index modes = g.modes();
    const CMatrix& n = g.n();
    const CMatrix& m = g.m();

    add("alpha_plus_is_conjugate", (g.alpha_plus() - g.alpha().conjugate()).cwiseAbs().maxCoeff());
    const double herm = max_abs(n - n.adjoint());
    add("n_hermitian", herm);
    add("m_plus_is_m_adjoint", max_abs(g.m_plus() - m.adjoint()));

    const CMatrix nh = 0.5 * (n + n.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(nh, Eigen::EigenvaluesOnly);
    add("n_eigenvalues_nonnegative", -es.eigenvalues().minCoeff());

    double single = -INFINITY;
    for (Index k = 0; k < modes; ++k) {
        const double bound = std::sqrt(std::norm(m(k, k)) + 0.25) - 0.5;
        single = std::max(single, bound - n(k, k).real());
    }
    add("single_mode_bound", single);

    double pair = -INFINITY;
    for (Index k = 0; k < modes; ++k)
        for (Index j = 0; j < modes; ++j)
            pair = std::max(pair, std::norm(m(k, j)) - n(k, k).real() * (1.0 + n(j, j).real()));
    add("pairwise_bound", pair);
    return rep;
}

}  // namespace gaussop
