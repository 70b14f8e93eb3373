#include "gaussop/fock_oracle.hpp"
#include "gaussop/state_factory.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace gaussop {

namespace odeint = boost::numeric::odeint;

FockSpace::FockSpace(Index modes, int nmax) : modes_(modes), nmax_(nmax) {
    if (modes < 1) throw DimensionError("FockSpace: need at least one mode");
    if (nmax < 1) throw std::invalid_argument("FockSpace: nmax must be at least 1");
    double d = std::pow(nmax + 1.0, static_cast<double>(modes));
    if (d > 5000.0) throw std::invalid_argument("FockSpace: dimension too large for the dense oracle");
    dim_ = static_cast<Index>(std::llround(d));

    for (Index k = 0; k < modes; ++k) {
        std::vector<Eigen::Triplet<cplx>> trip;
        trip.reserve(dim_);
        Index stride = 1;
        for (Index j = k + 1; j < modes; ++j) stride *= nmax + 1;
        for (Index s = 0; s < dim_; ++s) {
            const int nk = occupation(s, k);
            if (nk > 0) trip.emplace_back(s - stride, s, std::sqrt(static_cast<double>(nk)));
        }
        SpMatrix a(dim_, dim_);
        a.setFromTriplets(trip.begin(), trip.end());
        adag_.push_back(SpMatrix(a.adjoint()));
        a_.push_back(std::move(a));
    }
}

int FockSpace::occupation(Index state, Index mode) const {
    Index stride = 1;
    for (Index j = mode + 1; j < modes_; ++j) stride *= nmax_ + 1;
    return static_cast<int>((state / stride) % (nmax_ + 1));
}

Index FockSpace::index_of(const std::vector<int>& occ) const {
    if (static_cast<Index>(occ.size()) != modes_) throw DimensionError("FockSpace::index_of: wrong length");
    Index s = 0;
    for (int n : occ) {
        if (n < 0 || n > nmax_) throw std::out_of_range("FockSpace::index_of: occupation outside truncation");
        s = s * (nmax_ + 1) + n;
    }
    return s;
}

namespace {

double norm1(const SpMatrix& x) {
    double best = 0.0;
    for (Index c = 0; c < x.outerSize(); ++c) {
        double s = 0.0;
        for (SpMatrix::InnerIterator it(x, c); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

// exp(G) v by scaled Taylor steps
CMatrix expm_apply(const SpMatrix& g, const CMatrix& v) {
    const int steps = std::max(1, static_cast<int>(std::ceil(norm1(g))));
    CMatrix w = v;
    for (int s = 0; s < steps; ++s) {
        CMatrix term = w;
        CMatrix acc = w;
        for (int k = 1; k < 200; ++k) {
            term = (g * term) / (static_cast<double>(k) * steps);
            acc += term;
            if (term.norm() <= 1e-17 * acc.norm()) break;
        }
        w = acc;
    }
    return w;
}

// exp(X) for an X that strictly raises (or strictly lowers) total number: the series terminates
CMatrix nilpotent_exp(const SpMatrix& x, Index max_power) {
    const Index d = x.rows();
    CMatrix acc = CMatrix::Identity(d, d);
    CMatrix term = CMatrix::Identity(d, d);
    for (Index k = 1; k <= max_power; ++k) {
        term = (x * term) / static_cast<double>(k);
        if (term.cwiseAbs().maxCoeff() == 0.0) break;
        acc += term;
    }
    return acc;
}

SpMatrix quadratic(const FockSpace& sp, const CMatrix& coef, bool creation) {
    SpMatrix out(sp.dim(), sp.dim());
    for (Index i = 0; i < sp.modes(); ++i)
        for (Index j = 0; j < sp.modes(); ++j) {
            if (coef(i, j) == 0.0) continue;
            if (creation)
                out += coef(i, j) * SpMatrix(sp.adag(i) * sp.adag(j));
            else
                out += coef(i, j) * SpMatrix(sp.a(i) * sp.a(j));
        }
    return out;
}

SpMatrix linear(const FockSpace& sp, const CVector& coef, bool creation) {
    SpMatrix out(sp.dim(), sp.dim());
    for (Index i = 0; i < sp.modes(); ++i)
        if (coef(i) != 0.0) out += coef(i) * (creation ? sp.adag(i) : sp.a(i));
    return out;
}

// number-preserving second quantization of T: |n> -> prod_j (sum_i T_ij a_i^dag)^{n_j} / sqrt(n_j!) |0>
CMatrix second_quantize(const CMatrix& t, const FockSpace& sp) {
    const Index d = sp.dim();
    CMatrix out = CMatrix::Zero(d, d);
    if (sp.modes() == 1) {
        cplx p = 1.0;
        for (Index n = 0; n < d; ++n) {
            out(n, n) = p;
            p *= t(0, 0);
        }
        return out;
    }
    std::vector<SpMatrix> raise;
    for (Index j = 0; j < sp.modes(); ++j) {
        SpMatrix b(d, d);
        for (Index i = 0; i < sp.modes(); ++i)
            if (t(i, j) != 0.0) b += t(i, j) * sp.adag(i);
        raise.push_back(b);
    }
    for (Index col = 0; col < d; ++col) {
        CVector v = CVector::Zero(d);
        v(0) = 1.0;
        for (Index j = 0; j < sp.modes(); ++j) {
            const int nj = sp.occupation(col, j);
            for (int c = 1; c <= nj; ++c) v = (raise[j] * v) / std::sqrt(static_cast<double>(c));
        }
        out.col(col) = v;
    }
    return out;
}

bool is_diagonal(const CMatrix& x) {
    CMatrix off = x;
    off.diagonal().setZero();
    return max_abs(off) == 0.0;
}

double thermal_prob(double nbar, int k) {
    if (nbar == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::pow(nbar / (1.0 + nbar), k) / (1.0 + nbar);
}

bool hermitian_params(const GaussianParams& g) {
    const double tol = 1e-14;
    return std::abs(g.omega().imag()) <= tol * std::abs(g.omega()) &&
           (g.alpha_plus() - g.alpha().conjugate()).cwiseAbs().maxCoeff() <= tol &&
           max_abs(g.n() - g.n().adjoint()) <= tol && max_abs(g.m_plus() - g.m().adjoint()) <= tol;
}

}  // namespace

DensityMatrix build_kernel(const GaussianParams& g, const FockSpace& space) {
    const Index modes = g.modes();
    if (modes != space.modes()) throw DimensionError("build_kernel: mode count differs from the Fock space");
    const CMatrix sigma = assemble_covariance(g).sigma;
    CMatrix s;
    try {
        s = inverse(sigma);
    } catch (const SingularMatrixError& e) {
        throw UnsupportedRegion(std::string("build_kernel: singular covariance: ") + e.what());
    }
    const CMatrix p = s.topLeftCorner(modes, modes);
    const CMatrix q = s.topRightCorner(modes, modes);
    const CMatrix r = s.bottomLeftCorner(modes, modes);
    const CMatrix p2 = s.bottomRightCorner(modes, modes);
    const CMatrix k = p + p2.transpose();
    const CMatrix qs = 0.5 * (q + q.transpose());
    const CMatrix rs = 0.5 * (r + r.transpose());
    const CVector& al = g.alpha();
    const CVector& ap = g.alpha_plus();

    const CVector u = 0.5 * k * al + qs * ap;
    const CVector v = 0.5 * k.transpose() * ap + rs * al;
    const cplx c0 = -0.5 * ((ap.transpose() * k * al)(0) + (ap.transpose() * q * ap)(0) +
                            (al.transpose() * r * al)(0));
    const cplx sq = sqrt_det_sigma(g);
    if (std::abs(sq) == 0.0) throw UnsupportedRegion("build_kernel: vanishing normalization determinant");

    const Index max_power = modes * space.nmax() + 1;
    const SpMatrix raise = linear(space, u, true) - 0.5 * quadratic(space, q, true);
    const SpMatrix lower = linear(space, v, false) - 0.5 * quadratic(space, r, false);
    const CMatrix t = CMatrix::Identity(modes, modes) - 0.5 * k;

    DensityMatrix out;
    const CMatrix left = nilpotent_exp(raise, max_power);
    const CMatrix right = nilpotent_exp(lower, max_power);
    out.rho = (g.omega() * std::exp(c0) / sq) * (left * second_quantize(t, space) * right);
    out.hermitian = hermitian_params(g);
    if (!out.rho.allFinite()) throw UnsupportedRegion("build_kernel: non-finite matrix elements");
    return out;
}

DensityMatrix build_state(StateKind kind, const FockStateSpec& spec, const FockSpace& space, double tail_threshold) {
    const Index modes = space.modes();
    const CVector alpha = spec.alpha.size() ? spec.alpha : CVector(CVector::Zero(modes));
    const CMatrix nbar = spec.nbar.size() ? spec.nbar : CMatrix(CMatrix::Zero(modes, modes));
    const CMatrix xi = spec.xi.size() ? spec.xi : CMatrix(CMatrix::Zero(modes, modes));
    if (alpha.size() != modes || nbar.rows() != modes || nbar.cols() != modes || xi.rows() != modes ||
        xi.cols() != modes)
        throw DimensionError("build_state: parameter shapes do not match the Fock space");
    if (!is_diagonal(nbar) || nbar.diagonal().imag().cwiseAbs().maxCoeff() > 0.0 ||
        nbar.diagonal().real().minCoeff() < 0.0)
        throw UnsupportedRegion("build_state: nbar must be real, diagonal and nonnegative");
    if (asymmetry(xi) > 1e-12 * std::max(1.0, max_abs(xi))) throw SymmetryError("build_state: xi must be symmetric");

    const bool use_alpha = kind == StateKind::coherent || kind == StateKind::displaced_squeezed_thermal;
    const bool use_nbar = kind == StateKind::thermal || kind == StateKind::squeezed_thermal ||
                          kind == StateKind::displaced_squeezed_thermal;
    const bool use_xi = kind == StateKind::squeezed_vacuum || kind == StateKind::squeezed_thermal ||
                        kind == StateKind::displaced_squeezed_thermal;
    const Index d = space.dim();
    DensityMatrix out;

    auto finish = [&](double tail) {
        if (tail > tail_threshold) {
            std::ostringstream msg;
            msg << "build_state: truncation tail mass " << tail << " exceeds " << tail_threshold << "; raise nmax";
            throw TruncationError(msg.str(), tail);
        }
        return out;
    };

    if (!use_xi) {
        // product of per-mode coherent amplitudes or thermal populations
        std::vector<CVector> amp(modes);
        std::vector<Eigen::VectorXd> pop(modes);
        double kept = 1.0;
        for (Index k = 0; k < modes; ++k) {
            amp[k] = CVector::Zero(space.nmax() + 1);
            pop[k] = Eigen::VectorXd::Zero(space.nmax() + 1);
            const cplx a = use_alpha ? alpha(k) : cplx(0.0);
            const double nb = use_nbar ? nbar(k, k).real() : 0.0;
            cplx c = std::exp(-0.5 * std::norm(a));
            double mass = 0.0;
            for (int n = 0; n <= space.nmax(); ++n) {
                if (n > 0) c *= a / std::sqrt(static_cast<double>(n));
                amp[k](n) = c;
                pop[k](n) = thermal_prob(nb, n);
                mass += use_nbar ? pop[k](n) : std::norm(c);
            }
            kept *= mass;
        }
        if (use_nbar) {
            out.rho = CMatrix::Zero(d, d);
            for (Index s = 0; s < d; ++s) {
                double p = 1.0;
                for (Index k = 0; k < modes; ++k) p *= pop[k](space.occupation(s, k));
                out.rho(s, s) = p;
            }
        } else {
            CVector psi(d);
            for (Index s = 0; s < d; ++s) {
                cplx c = 1.0;
                for (Index k = 0; k < modes; ++k) c *= amp[k](space.occupation(s, k));
                psi(s) = c;
            }
            out.rho = psi * psi.adjoint();
        }
        return finish(std::max(0.0, 1.0 - kept));
    }

    // operator composition in a padded space, then projection
    const int pad = std::max(12, space.nmax());
    const FockSpace work(modes, space.nmax() + pad);
    const Index dw = work.dim();
    const SpMatrix gen_s =
        -0.5 * quadratic(work, xi, true) + 0.5 * quadratic(work, CMatrix(xi.conjugate()), false);
    SpMatrix gen_d(dw, dw);
    if (use_alpha) gen_d = linear(work, alpha, true) - linear(work, CVector(alpha.conjugate()), false);

    // columns sqrt(p_s) e_s of the thermal state, carried through D S together
    std::vector<std::pair<Index, double>> cols;
    for (Index s = 0; s < dw; ++s) {
        double p = 1.0;
        for (Index k = 0; k < modes; ++k) p *= thermal_prob(use_nbar ? nbar(k, k).real() : 0.0, work.occupation(s, k));
        if (p >= 1e-18) cols.emplace_back(s, std::sqrt(p));
    }
    CMatrix v = CMatrix::Zero(dw, static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) v(cols[c].first, static_cast<Index>(c)) = cols[c].second;
    v = expm_apply(gen_s, v);
    if (use_alpha) v = expm_apply(gen_d, v);
    CMatrix rho_w(dw, dw);
    rho_w.noalias() = v * v.adjoint();
    out.rho = CMatrix::Zero(d, d);
    std::vector<int> occ(modes);
    std::vector<Index> map(d);
    for (Index s = 0; s < d; ++s) {
        for (Index k = 0; k < modes; ++k) occ[k] = space.occupation(s, k);
        map[s] = work.index_of(occ);
    }
    double inside = 0.0;
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) out.rho(i, j) = rho_w(map[i], map[j]);
        inside += out.rho(i, i).real();
    }
    return finish(std::max(0.0, 1.0 - inside));
}

StateCheck check_density_matrix(const DensityMatrix& d) {
    StateCheck c;
    c.hermiticity = max_abs(d.rho - d.rho.adjoint());
    c.trace = d.rho.trace();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (d.rho + d.rho.adjoint()), Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    return c;
}

double edge_population(const CMatrix& rho, const FockSpace& space) {
    const int edge = space.nmax() >= 3 ? space.nmax() - 1 : space.nmax();
    double pop = 0.0;
    for (Index s = 0; s < space.dim(); ++s) {
        bool at_edge = false;
        for (Index k = 0; k < space.modes(); ++k) at_edge = at_edge || space.occupation(s, k) >= edge;
        if (at_edge) pop += std::abs(rho(s, s));
    }
    const double tr = std::abs(rho.trace());
    return tr > 0.0 ? pop / tr : pop;
}

SpMatrix lindblad_hamiltonian(const LindbladSpec& spec, const FockSpace& space) {
    spec.validate();
    if (spec.modes() != space.modes()) throw DimensionError("lindblad: mode count differs from the Fock space");
    SpMatrix h(space.dim(), space.dim());
    for (Index i = 0; i < space.modes(); ++i)
        for (Index j = 0; j < space.modes(); ++j)
            if (spec.H1(i, j) != 0.0) h += 2.0 * spec.H1(i, j) * SpMatrix(space.adag(i) * space.a(j));
    h += quadratic(space, spec.H2, true) + quadratic(space, CMatrix(spec.H2.conjugate()), false);
    return h;
}

namespace {

struct LindbladOperators {
    SpMatrix g;  // H - i sum O^dag O, so L(rho) = -i(G rho - rho G^dag) + 2 sum O rho O^dag
    std::vector<SpMatrix> o, od;
};

LindbladOperators lindblad_operators(const LindbladSpec& spec, const FockSpace& space) {
    LindbladOperators ops;
    ops.g = lindblad_hamiltonian(spec, space);
    const cplx i(0.0, 1.0);
    for (const auto& l : spec.loss_ops) {
        SpMatrix o = linear(space, CVector(l.o1.conjugate()), false) + linear(space, CVector(l.o2.conjugate()), true);
        SpMatrix od = o.adjoint();
        ops.g -= i * SpMatrix(od * o);
        ops.o.push_back(o);
        ops.od.push_back(od);
    }
    return ops;
}

// vec(X rho Y) = (Y^T kron X) vec(rho), column-major vec
void kron_into(std::vector<Eigen::Triplet<cplx>>& trip, const SpMatrix& yt, const SpMatrix& x, cplx scale) {
    const Index d = x.rows();
    for (int ko = 0; ko < yt.outerSize(); ++ko)
        for (SpMatrix::InnerIterator iy(yt, ko); iy; ++iy)
            for (int kx = 0; kx < x.outerSize(); ++kx)
                for (SpMatrix::InnerIterator ix(x, kx); ix; ++ix)
                    trip.emplace_back(iy.row() * d + ix.row(), iy.col() * d + ix.col(), scale * iy.value() * ix.value());
}

SpMatrix superoperator(const LindbladOperators& ops, Index d) {
    const cplx i(0.0, 1.0);
    SpMatrix id(d, d);
    id.setIdentity();
    std::vector<Eigen::Triplet<cplx>> trip;
    kron_into(trip, id, ops.g, -i);
    kron_into(trip, SpMatrix(ops.g.conjugate()), id, i);
    for (std::size_t k = 0; k < ops.o.size(); ++k) kron_into(trip, SpMatrix(ops.o[k].conjugate()), ops.o[k], 2.0);
    SpMatrix l(d * d, d * d);
    l.setFromTriplets(trip.begin(), trip.end());
    l.prune(cplx(0.0));
    return l;
}

CMatrix apply_ops(const LindbladOperators& ops, const CMatrix& rho) {
    const cplx i(0.0, 1.0);
    const SpMatrix gd = ops.g.adjoint();
    CMatrix out = -i * (ops.g * rho - rho * gd);
    for (std::size_t k = 0; k < ops.o.size(); ++k) out += 2.0 * (ops.o[k] * (rho * ops.od[k]));
    return out;
}

}  // namespace

CMatrix apply_lindblad(const LindbladSpec& spec, const FockSpace& space, const CMatrix& rho) {
    return apply_ops(lindblad_operators(spec, space), rho);
}

CMatrix apply_qme(const QuadraticME& q, const FockSpace& space, const CMatrix& rho) {
    q.check_shapes();
    const Index modes = space.modes();
    if (q.modes() != modes) throw DimensionError("apply_qme: mode count differs from the Fock space");
    const Index n = 2 * modes;
    // stacked a = (a, a^dag^T) and a^dag = (a^dag, a^T)
    auto op = [&](Index mu) -> const SpMatrix& { return mu < modes ? space.a(mu) : space.adag(mu - modes); };
    auto op_dag = [&](Index nu) -> const SpMatrix& { return nu < modes ? space.adag(nu) : space.a(nu - modes); };
    auto is_ann = [&](Index mu) { return mu < modes; };

    CMatrix out = q.A0 * rho;
    for (Index mu = 0; mu < n; ++mu) {
        const SpMatrix& x = op(mu);
        const cplx a1 = q.A1((mu + modes) % n);
        const cplx b1 = q.B1((mu + modes) % n);
        if (a1 != 0.0) out += a1 * (is_ann(mu) ? CMatrix(rho * x) : CMatrix(x * rho));
        if (b1 != 0.0) out += b1 * (is_ann(mu) ? CMatrix(x * rho) : CMatrix(rho * x));
    }
    for (Index mu = 0; mu < n; ++mu)
        for (Index nu = 0; nu < n; ++nu) {
            const SpMatrix& x = op(mu);
            const SpMatrix& y = op_dag(nu);
            const bool xa = is_ann(mu);
            const bool ya = nu >= modes;
            if (q.A(nu, mu) != 0.0) {
                CMatrix t = rho;
                if (!xa) t = x * t;
                if (!ya) t = y * t;
                if (xa) t = t * x;
                if (ya) t = t * y;
                out += q.A(nu, mu) * t;
            }
            if (q.B(nu, mu) != 0.0) {
                CMatrix t = rho;
                if (xa) t = x * t;
                if (ya) t = y * t;
                if (!xa) t = t * x;
                if (!ya) t = t * y;
                out += q.B(nu, mu) * t;
            }
            if (q.C(nu, mu) != 0.0) {
                CMatrix t = ya ? CMatrix(rho * y) : CMatrix(y * rho);
                t = xa ? CMatrix(x * t) : CMatrix(t * x);
                out += q.C(nu, mu) * t;
            }
        }
    return out;
}

EvolveResult evolve_lindblad(const LindbladSpec& spec, const FockSpace& space, const DensityMatrix& rho0,
                             const std::vector<double>& times, const EvolveOptions& opt) {
    const Index d = space.dim();
    if (rho0.rho.rows() != d || rho0.rho.cols() != d)
        throw DimensionError("evolve_lindblad: density matrix does not match the Fock space");
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1]))
            throw std::invalid_argument("evolve_lindblad: times must be nonnegative and nondecreasing");

    const LindbladOperators ops = lindblad_operators(spec, space);
    using state = std::vector<double>;
    state y(2 * d * d);
    std::copy_n(reinterpret_cast<const double*>(rho0.rho.data()), y.size(), y.begin());
    const cplx tr0 = rho0.rho.trace();

    EvolveResult res;
    const SpMatrix lsup = superoperator(ops, d);
    auto sys = [&](const state& x, state& dx, double) {
        Eigen::Map<const CVector> r(reinterpret_cast<const cplx*>(x.data()), d * d);
        dx.resize(x.size());
        Eigen::Map<CVector> dr(reinterpret_cast<cplx*>(dx.data()), d * d);
        dr.noalias() = lsup * r;
    };
    auto observe = [&](const state& x, double t) {
        Eigen::Map<const CMatrix> r(reinterpret_cast<const cplx*>(x.data()), d, d);
        const double pop = edge_population(r, space);
        res.max_edge_population = std::max(res.max_edge_population, pop);
        res.max_trace_drift = std::max(res.max_trace_drift, std::abs(r.trace() - tr0));
        if (pop > opt.edge_threshold) {
            std::ostringstream msg;
            msg << "evolve_lindblad: edge population " << pop << " exceeds " << opt.edge_threshold << " at t=" << t
                << "; raise nmax";
            throw TruncationError(msg.str(), pop);
        }
    };

    observe(y, 0.0);
    double tcur = 0.0;
    for (double t : times) {
        if (t > tcur) {
            auto stepper = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<state>());
            try {
                odeint::integrate_adaptive(stepper, sys, y, tcur, t, std::min(opt.dt0, t - tcur), observe);
            } catch (const odeint::odeint_error& e) {
                throw StepSizeUnderflow(std::string("evolve_lindblad: ") + e.what());
            }
            tcur = t;
        }
        DensityMatrix dm;
        dm.rho = Eigen::Map<const CMatrix>(reinterpret_cast<const cplx*>(y.data()), d, d);
        dm.hermitian = rho0.hermitian;
        if (!dm.rho.allFinite()) throw StepSizeUnderflow("evolve_lindblad: non-finite density matrix");
        res.states.push_back(std::move(dm));
    }
    return res;
}

DensityMatrix evolve_lindblad(const LindbladSpec& spec, const FockSpace& space, const DensityMatrix& rho0, double t,
                              const EvolveOptions& opt) {
    return evolve_lindblad(spec, space, rho0, std::vector<double>{t}, opt).states.front();
}

Moments moments_fock(const CMatrix& rho, const FockSpace& space) {
    const Index modes = space.modes();
    const cplx tr = rho.trace();
    if (std::abs(tr) == 0.0) throw std::domain_error("moments_fock: zero trace");
    auto expect = [&](const SpMatrix& op) { return CMatrix(op * rho).trace() / tr; };

    Moments m{{CVector(modes), CVector(modes)}, {CMatrix(modes, modes), CMatrix(modes, modes), CMatrix(modes, modes)}};
    for (Index i = 0; i < modes; ++i) {
        m.first.a(i) = expect(space.a(i));
        m.first.adag(i) = expect(space.adag(i));
        for (Index j = 0; j < modes; ++j) {
            m.second.aa(i, j) = expect(SpMatrix(space.a(i) * space.a(j)));
            m.second.normal_a_adag(i, j) = expect(SpMatrix(space.adag(j) * space.a(i)));
            m.second.adag_adag(i, j) = expect(SpMatrix(space.adag(i) * space.adag(j)));
        }
    }
    return m;
}

double IdentityReport::max() const {
    double best = 0.0;
    for (const auto& r : residuals) best = std::max(best, r.residual);
    return best;
}

namespace {

// residuals on the block that stays clear of the truncation edge
double interior_residual(const CMatrix& x, int nmax) {
    return x.topLeftCorner(nmax, nmax).cwiseAbs().maxCoeff();
}

void require_single_mode(const FockSpace& space, const char* who) {
    if (space.modes() != 1) throw DimensionError(std::string(who) + ": single-mode Fock space required");
    if (space.nmax() < 2) throw std::invalid_argument(std::string(who) + ": nmax must be at least 2");
}

}  // namespace

IdentityReport verify_coherent_identities(cplx alpha, cplx beta, const FockSpace& space, double h) {
    require_single_mode(space, "verify_coherent_identities");
    auto kernel = [&](cplx a, cplx b) {
        return build_kernel(coherent_projector(1.0, CVector::Constant(1, a), CVector::Constant(1, b)), space).rho;
    };
    const CMatrix lam = kernel(alpha, beta);
    const CMatrix d_alpha = (kernel(alpha + h, beta) - kernel(alpha - h, beta)) / (2.0 * h);
    const CMatrix d_beta = (kernel(alpha, beta + h) - kernel(alpha, beta - h)) / (2.0 * h);
    const SpMatrix& a = space.a(0);
    const SpMatrix& ad = space.adag(0);
    const int nm = space.nmax();

    IdentityReport rep;
    rep.step = h;
    rep.residuals.push_back({"a_Lambda", interior_residual(a * lam - alpha * lam, nm)});
    rep.residuals.push_back({"adag_Lambda", interior_residual(ad * lam - (beta * lam + d_alpha), nm)});
    rep.residuals.push_back({"Lambda_a", interior_residual(lam * a - (alpha * lam + d_beta), nm)});
    rep.residuals.push_back({"Lambda_adag", interior_residual(lam * ad - beta * lam, nm)});
    return rep;
}

IdentityReport verify_thermal_identities(cplx nbar, const FockSpace& space, double h) {
    require_single_mode(space, "verify_thermal_identities");
    auto kernel = [&](cplx n) { return build_kernel(thermal(1.0, ThermalSpec{CMatrix::Constant(1, 1, n)}), space).rho; };
    const CMatrix lam = kernel(nbar);
    const CMatrix dn = (kernel(nbar + h) - kernel(nbar - h)) / (2.0 * h);
    const SpMatrix& a = space.a(0);
    const SpMatrix& ad = space.adag(0);
    const int nm = space.nmax();
    const cplx n = nbar;
    const cplx n1 = 1.0 + nbar;

    IdentityReport rep;
    rep.step = h;
    rep.residuals.push_back({"normal_a_adag_Lambda", interior_residual(ad * lam * a - (n1 * lam + n1 * dn * n1), nm)});
    rep.residuals.push_back({"a_normal_adag_Lambda", interior_residual(a * (ad * lam) - (n1 * lam + n * dn * n1), nm)});
    rep.residuals.push_back({"normal_a_Lambda_adag", interior_residual((lam * a) * ad - (n1 * lam + n1 * dn * n), nm)});
    rep.residuals.push_back({"antinormal_a_adag_Lambda", interior_residual(a * lam * ad - (n * lam + n * dn * n), nm)});
    return rep;
}

IntegralResult verify_gaussian_integral(const CMatrix& sigma, cplx alpha, cplx alpha_plus) {
    if (sigma.rows() != 2 || sigma.cols() != 2) throw DimensionError("verify_gaussian_integral: sigma must be 2x2");
    if (std::abs(sigma(0, 0) - sigma(1, 1)) > 1e-12 * std::max(1.0, max_abs(sigma)))
        throw ValidityError("verify_gaussian_integral: sigma lacks the generalized Hermitian symmetry");
    Eigen::ComplexEigenSolver<CMatrix> es(sigma, false);
    for (Index i = 0; i < 2; ++i)
        if (!(es.eigenvalues()(i).real() > 0.0))
            throw ValidityError("verify_gaussian_integral: sigma has an eigenvalue with nonpositive real part");
    const CMatrix s = inverse(sigma);

    // real quadratic form of the leading term in (x, y) must be positive definite
    const cplx diag = s(0, 0) + s(1, 1);
    const cplx anti = s(0, 1) + s(1, 0);
    const cplx cross = cplx(0.0, 1.0) * (s(1, 0) - s(0, 1));
    Eigen::Matrix2d form;
    form << diag.real() + anti.real(), cross.real(), cross.real(), diag.real() - anti.real();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> fs(form);
    if (!(fs.eigenvalues().minCoeff() > 0.0))
        throw ValidityError("verify_gaussian_integral: integrand does not decay on the real plane");

    auto integrand = [&](double x, double y) {
        const cplx z(x, y);
        const cplx d1 = z - alpha;
        const cplx d2 = std::conj(z) - alpha_plus;
        const cplx quad = d2 * (s(0, 0) * d1 + s(0, 1) * d2) + d1 * (s(1, 0) * d1 + s(1, 1) * d2);
        return std::exp(-0.5 * quad);
    };

    using boost::math::quadrature::gauss_kronrod;
    const double inf = std::numeric_limits<double>::infinity();
    auto line = [&](double x, bool imag_part) {
        auto f = [&](double y) {
            const cplx v = integrand(x, y);
            return imag_part ? v.imag() : v.real();
        };
        return gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-12);
    };
    auto plane = [&](bool imag_part) {
        auto f = [&](double x) { return line(x, imag_part); };
        return gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-11);
    };

    IntegralResult r;
    r.numeric = cplx(plane(false), plane(true));
    // principal root on the factored form keeps the branch continuous with sigma = I
    const cplx n1 = sigma(0, 0);
    r.analytic = std::numbers::pi * n1 * std::sqrt(1.0 - sigma(0, 1) * sigma(1, 0) / (n1 * n1));
    r.rel_dev = std::abs(r.numeric - r.analytic) / std::abs(r.analytic);
    return r;
}

}  // namespace gaussop
