#include "gaussop/qme.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gaussop {

namespace odeint = boost::numeric::odeint;

namespace {

using real_state = std::vector<double>;

CMatrix sym(const CMatrix& x) {
    return 0.5 * (x + x.transpose());
}

double scale_of(std::initializer_list<const CMatrix*> xs) {
    double s = 1.0;
    for (const CMatrix* x : xs) s = std::max(s, max_abs(*x));
    return s;
}

// pack/unpack a complex vector into interleaved reals for the integrator
void pack(const cplx* src, Index n, real_state& dst, std::size_t offset) {
    for (Index i = 0; i < n; ++i) {
        dst[offset + 2 * i] = src[i].real();
        dst[offset + 2 * i + 1] = src[i].imag();
    }
}

void unpack(const real_state& src, std::size_t offset, cplx* dst, Index n) {
    for (Index i = 0; i < n; ++i) dst[i] = cplx(src[offset + 2 * i], src[offset + 2 * i + 1]);
}

template <class System>
void integrate(System sys, real_state& y, double t0, double t1, const OdeControl& ctl) {
    if (t1 == t0) return;
    auto stepper = odeint::make_controlled(ctl.atol, ctl.rtol, odeint::runge_kutta_dopri5<real_state>());
    const double dt = std::copysign(std::min(ctl.dt0, std::abs(t1 - t0)), t1 - t0);
    try {
        odeint::integrate_adaptive(stepper, sys, y, t0, t1, dt);
    } catch (const odeint::odeint_error& e) {
        throw StepSizeUnderflow(std::string("ODE integration stalled: ") + e.what());
    }
    for (double v : y)
        if (!std::isfinite(v)) throw StepSizeUnderflow("ODE integration produced non-finite values");
}

// the linear moment equations hold only for trace-preserving generators
void require_trace_preserving(const QuadraticME& q, const char* where) {
    if (!validate_trace_preserving(q).passed())
        throw std::invalid_argument(std::string(where) +
                                    ": QME is not trace preserving; use propagate_imaginary_time for anticommutator flows");
}

}  // namespace

QuadraticME QuadraticME::zero(Index modes) {
    QuadraticME q;
    q.A1 = CVector::Zero(2 * modes);
    q.B1 = CVector::Zero(2 * modes);
    q.A = CMatrix::Zero(2 * modes, 2 * modes);
    q.B = q.A;
    q.C = q.A;
    return q;
}

void QuadraticME::check_shapes() const {
    const Index n = A.rows();
    if (n == 0 || n % 2 != 0) throw DimensionError("QuadraticME: A must be 2M x 2M");
    for (const CMatrix* x : {&A, &B, &C})
        if (x->rows() != n || x->cols() != n) throw DimensionError("QuadraticME: A, B, C must share size 2M x 2M");
    if (A1.size() != n || B1.size() != n) throw DimensionError("QuadraticME: A1, B1 must have length 2M");
}

void LindbladSpec::validate() const {
    const Index modes = H1.rows();
    if (modes < 1 || H1.cols() != modes) throw SpecError("H1", "must be a square M x M matrix");
    if (H2.rows() != modes || H2.cols() != modes) throw SpecError("H2", "must be M x M");
    const double herm = max_abs(H1 - H1.adjoint());
    if (herm > 1e-12 * std::max(1.0, max_abs(H1)))
        throw SpecError("H1", "not Hermitian (deviation " + std::to_string(herm) + ")");
    const double asym = asymmetry(H2);
    if (asym > 1e-12 * std::max(1.0, max_abs(H2)))
        throw SpecError("H2", "not symmetric (deviation " + std::to_string(asym) + ")");
    for (std::size_t k = 0; k < loss_ops.size(); ++k) {
        const auto& op = loss_ops[k];
        if (op.o1.size() != modes || op.o2.size() != modes)
            throw SpecError("loss_ops[" + std::to_string(k) + "]", "o1 and o2 must have length M");
    }
}

QuadraticME lindblad_to_qme(const LindbladSpec& spec) {
    spec.validate();
    const Index modes = spec.modes();
    const CMatrix z = CMatrix::Zero(modes, modes);
    const cplx i(0.0, 1.0);

    QuadraticME q = QuadraticME::zero(modes);
    const CMatrix ah = BlockMatrix2x2{z, -i * spec.H2, i * spec.H2.conjugate(), z}.assemble();
    q.A = ah;
    q.B = -ah;
    q.C = BlockMatrix2x2{-2.0 * i * spec.H1, z, z, 2.0 * i * spec.H1.transpose()}.assemble();

    for (const auto& op : spec.loss_ops) {
        const CVector c = op.o1.conjugate();
        const CVector d = op.o2.conjugate();
        const CMatrix cc = c * c.adjoint();
        const CMatrix dd = d * d.adjoint();
        const CMatrix dc = d * c.adjoint();
        const CMatrix cd = c * d.adjoint();
        q.A += BlockMatrix2x2{dd, -sym(dc), -sym(cd), dd.transpose()}.assemble();
        q.B += BlockMatrix2x2{cc.transpose(), -sym(dc), -sym(cd), cc}.assemble();
        q.C += BlockMatrix2x2{-dd - cc.transpose(), 2.0 * dc, 2.0 * d.conjugate() * c.transpose(),
                              -cc - dd.transpose()}
                   .assemble();
    }
    q.A0 = q.B.trace();
    return q;
}

LindbladSpec lossy_trap_lindblad(const CMatrix& omega, const CMatrix& gamma) {
    require_square(omega, "lossy_trap(omega)");
    require_square(gamma, "lossy_trap(gamma)");
    const Index modes = omega.rows();
    if (gamma.rows() != modes) throw SpecError("gamma", "must match omega in size");
    if (max_abs(gamma - gamma.adjoint()) > 1e-12 * std::max(1.0, max_abs(gamma)))
        throw SpecError("gamma", "not Hermitian");

    LindbladSpec spec{0.5 * omega, CMatrix::Zero(modes, modes), {}};
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (gamma + gamma.adjoint()));
    const double tol = 1e-12 * std::max(1.0, max_abs(gamma));
    for (Index k = 0; k < modes; ++k) {
        const double lam = 0.5 * es.eigenvalues()(k);
        if (lam < -tol) throw SpecError("gamma", "not positive semidefinite");
        if (lam <= tol) continue;
        const CVector c = std::sqrt(lam) * es.eigenvectors().col(k);
        spec.loss_ops.push_back({c.conjugate(), CVector::Zero(modes)});
    }
    return spec;
}

LindbladSpec parametric_amplifier_lindblad(cplx chi, double gamma) {
    if (gamma < 0.0) throw SpecError("gamma", "must be nonnegative");
    LindbladSpec spec{CMatrix::Zero(1, 1), CMatrix::Constant(1, 1, cplx(0.0, 0.5) * chi), {}};
    if (gamma > 0.0) spec.loss_ops.push_back({CVector::Constant(1, std::sqrt(0.5 * gamma)), CVector::Zero(1)});
    return spec;
}

LindbladSpec bogoliubov_lindblad(const CMatrix& chi) {
    require_square(chi, "bogoliubov(chi)");
    const Index modes = chi.rows();
    return {CMatrix::Zero(modes, modes), cplx(0.0, 0.5) * chi, {}};
}

QuadraticME imaginary_time_qme(const CMatrix& omega) {
    require_square(omega, "imaginary_time_qme(omega)");
    const Index modes = omega.rows();
    QuadraticME q = QuadraticME::zero(modes);
    const CMatrix z = CMatrix::Zero(modes, modes);
    q.C = BlockMatrix2x2{-0.5 * omega, z, z, -0.5 * omega.transpose()}.assemble();
    q.A0 = omega.trace();
    return q;
}

bool QmeReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const QmeCheck& c) { return c.passed; });
}

std::string QmeReport::describe() const {
    std::ostringstream out;
    for (const auto& c : checks)
        out << (c.passed ? "  pass  " : "  FAIL  ") << c.name << " (residual " << c.residual << ")\n";
    return out.str();
}

QmeReport validate_trace_preserving(const QuadraticME& q, double tol) {
    q.check_shapes();
    const double s = scale_of({&q.A, &q.B, &q.C});
    QmeReport rep;
    auto add = [&](std::string name, double r) { rep.checks.push_back({std::move(name), r <= tol * s, r}); };
    add("A1_equals_minus_B1", q.A1.size() ? (q.A1 + q.B1).cwiseAbs().maxCoeff() : 0.0);
    add("trace_B_equals_A0", std::abs(q.B.trace() - q.A0));
    add("trace_B_equals_minus_trace_A_plus_C", std::abs(q.B.trace() + (q.A + q.C).trace()));
    const CMatrix d = q.A + q.B + q.C;
    add("D_generalized_antisymmetric", max_abs(generalized_dagger(d) + d));
    return rep;
}

QmeReport validate_symmetries(const QuadraticME& q, double tol) {
    q.check_shapes();
    const double s = scale_of({&q.A, &q.B, &q.C});
    QmeReport rep;
    auto add = [&](std::string name, double r) { rep.checks.push_back({std::move(name), r <= tol * s, r}); };
    add("A_generalized_symmetric", max_abs(q.A - generalized_dagger(q.A)));
    add("B_generalized_symmetric", max_abs(q.B - generalized_dagger(q.B)));
    add("A_hermitian_density", max_abs(q.A.adjoint() - generalized_dagger(q.A)));
    add("B_hermitian_density", max_abs(q.B.adjoint() - generalized_dagger(q.B)));
    add("C_hermitian_density", max_abs(q.C.adjoint() - generalized_dagger(q.C)));
    return rep;
}

DriftSolution drift_matrices(const QuadraticME& q) {
    q.check_shapes();
    DriftSolution d;
    d.E = 2.0 * q.A + q.C;
    d.E_dag = generalized_dagger(d.E);
    const Index n = d.E.rows();

    Eigen::ComplexEigenSolver<CMatrix> es(d.E, false);
    d.spectrum = es.eigenvalues();

    Eigen::FullPivLU<CMatrix> lu(d.E);
    if (lu.rcond() > k_atol) {
        d.alpha0 = lu.solve(-q.A1);
        d.has_alpha0 = d.alpha0_unique = true;
    } else {
        Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(d.E);
        d.alpha0 = cod.solve(-q.A1);
        const double res = (d.E * d.alpha0 + q.A1).norm();
        d.has_alpha0 = res <= k_atol + k_rtol * std::max(1.0, q.A1.norm());
        if (!d.has_alpha0) d.alpha0 = CVector::Zero(n);
    }

    try {
        auto sol = sylvester_particular(d.E, d.E_dag, -2.0 * q.B);
        CMatrix s0 = sol.x;
        if (max_abs(q.B - generalized_dagger(q.B)) <= 1e-10 * std::max(1.0, max_abs(q.B)))
            s0 = 0.5 * (s0 + generalized_dagger(s0));
        d.sigma0 = s0;
        d.has_sigma0 = true;
        d.sigma0_unique = sol.unique;
    } catch (const SingularPencilError&) {
        d.sigma0 = CMatrix::Zero(n, n);
    }
    return d;
}

GaussianParams propagate_closed_form(const DriftSolution& d, const GaussianParams& g, double t) {
    if (!d.has_alpha0 || !d.has_sigma0)
        throw SteadyStateUnavailable("closed form needs a steady state; use propagate_ode");
    const Index modes = g.modes();
    if (d.E.rows() != 2 * modes) throw DimensionError("propagate_closed_form: QME and state differ in mode count");
    if (t == 0.0) return g;
    const CMatrix u = matrix_exp(d.E * t);
    const CVector a = u * (g.displacement() - d.alpha0) + d.alpha0;
    const CMatrix s = u * (assemble_covariance(g).sigma - d.sigma0) * generalized_dagger(u) + d.sigma0;
    return GaussianParams::from_covariance(g.omega(), a.head(modes), a.tail(modes), s);
}

GaussianParams propagate_closed_form(const QuadraticME& q, const GaussianParams& g, double t) {
    require_trace_preserving(q, "propagate_closed_form");
    return propagate_closed_form(drift_matrices(q), g, t);
}

GaussianParams propagate_ode(const QuadraticME& q, const GaussianParams& g, double t, const OdeControl& ctl) {
    q.check_shapes();
    const Index modes = g.modes();
    const Index n = 2 * modes;
    if (q.modes() != modes) throw DimensionError("propagate_ode: QME and state differ in mode count");
    require_trace_preserving(q, "propagate_ode");
    if (t == 0.0) return g;

    const CMatrix e = 2.0 * q.A + q.C;
    const CMatrix edag = generalized_dagger(e);
    const CMatrix b2 = 2.0 * q.B;
    const CVector a1 = q.A1;

    real_state y(2 * (n + n * n));
    const CVector a0 = g.displacement();
    const CMatrix s0 = assemble_covariance(g).sigma;
    pack(a0.data(), n, y, 0);
    pack(s0.data(), n * n, y, 2 * n);

    auto rhs = [&](const real_state& x, real_state& dx, double) {
        CVector a(n);
        CMatrix s(n, n);
        unpack(x, 0, a.data(), n);
        unpack(x, 2 * n, s.data(), n * n);
        const CVector da = a1 + e * a;
        const CMatrix ds = b2 + e * s + s * edag;
        dx.resize(x.size());
        pack(da.data(), n, dx, 0);
        pack(ds.data(), n * n, dx, 2 * n);
    };
    integrate(rhs, y, 0.0, t, ctl);

    CVector a(n);
    CMatrix s(n, n);
    unpack(y, 0, a.data(), n);
    unpack(y, 2 * n, s.data(), n * n);
    return GaussianParams::from_covariance(g.omega(), a.head(modes), a.tail(modes), s);
}

GaussianParams propagate(const QuadraticME& q, const GaussianParams& g, double t) {
    require_trace_preserving(q, "propagate");
    const DriftSolution d = drift_matrices(q);
    if (d.has_alpha0 && d.has_sigma0) return propagate_closed_form(d, g, t);
    return propagate_ode(q, g, t);
}

std::vector<GaussianParams> propagate_imaginary_time(const Eigen::VectorXd& omega, double tau0,
                                                     const std::vector<double>& taus,
                                                     const std::optional<GaussianParams>& g0,
                                                     ImaginaryTimeMethod method, const OdeControl& ctl) {
    const Index modes = omega.size();
    if (modes < 1) throw DimensionError("propagate_imaginary_time: need at least one mode");
    for (Index k = 0; k < modes; ++k)
        if (!(omega(k) > 0.0)) throw std::invalid_argument("propagate_imaginary_time: omega_k must be positive");
    if (!(tau0 > 0.0)) throw std::invalid_argument("propagate_imaginary_time: tau0 must be positive");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (taus[i] < tau0) throw std::invalid_argument("propagate_imaginary_time: tau below tau0");
        if (i > 0 && taus[i] <= taus[i - 1])
            throw std::invalid_argument("propagate_imaginary_time: tau grid must be strictly increasing");
    }

    // occupation and weight on the characteristic at tau0
    CVector n0(modes);
    cplx w0 = 1.0;
    if (g0) {
        const GaussianParams& g = *g0;
        if (g.modes() != modes) throw DimensionError("propagate_imaginary_time: g0 mode count differs from omega");
        CMatrix off = g.n();
        off.diagonal().setZero();
        if (g.alpha().norm() > 0.0 || g.alpha_plus().norm() > 0.0 || max_abs(g.m()) > 0.0 ||
            max_abs(g.m_plus()) > 0.0 || max_abs(off) > 0.0)
            throw std::invalid_argument("propagate_imaginary_time: g0 must be a diagonal thermal kernel");
        n0 = g.n().diagonal();
        w0 = g.omega();
    } else {
        for (Index k = 0; k < modes; ++k) {
            n0(k) = 1.0 / std::expm1(omega(k) * tau0);
            w0 /= -std::expm1(-omega(k) * tau0);
        }
    }

    auto make = [&](cplx w, const CVector& n) {
        const CMatrix z = CMatrix::Zero(modes, modes);
        return GaussianParams(w, CVector::Zero(modes), CVector::Zero(modes), CMatrix(n.asDiagonal()), z, z);
    };

    std::vector<GaussianParams> out;
    out.reserve(taus.size());
    if (method == ImaginaryTimeMethod::analytic) {
        for (double tau : taus) {
            CVector n(modes);
            cplx w = w0;
            if (!g0) {
                w = 1.0;
                for (Index k = 0; k < modes; ++k) {
                    n(k) = 1.0 / std::expm1(omega(k) * tau);
                    w /= -std::expm1(-omega(k) * tau);
                }
            } else {
                const double s = tau - tau0;
                for (Index k = 0; k < modes; ++k) {
                    if (n0(k) == 0.0) {
                        n(k) = 0.0;
                        continue;
                    }
                    const cplx c = 1.0 + 1.0 / n0(k);
                    n(k) = 1.0 / (c * std::exp(omega(k) * s) - 1.0);
                    w *= (1.0 - 1.0 / c) / (1.0 - std::exp(-omega(k) * s) / c);
                }
            }
            out.push_back(make(w, n));
        }
        return out;
    }

    // characteristics: dn_k/dtau = -w_k n_k (1 + n_k), dOmega/dtau = -sum_k w_k n_k Omega
    real_state y(2 * (modes + 1));
    pack(n0.data(), modes, y, 0);
    pack(&w0, 1, y, 2 * modes);
    auto rhs = [&](const real_state& x, real_state& dx, double) {
        dx.resize(x.size());
        cplx rate = 0.0;
        for (Index k = 0; k < modes; ++k) {
            const cplx nk(x[2 * k], x[2 * k + 1]);
            const cplx d = -omega(k) * nk * (1.0 + nk);
            dx[2 * k] = d.real();
            dx[2 * k + 1] = d.imag();
            rate += omega(k) * nk;
        }
        const cplx w(x[2 * modes], x[2 * modes + 1]);
        const cplx dw = -rate * w;
        dx[2 * modes] = dw.real();
        dx[2 * modes + 1] = dw.imag();
    };
    double tcur = tau0;
    OdeControl c2 = ctl;
    c2.dt0 = std::min(ctl.dt0, 1e-3 * tau0);
    for (double tau : taus) {
        integrate(rhs, y, tcur, tau, c2);
        tcur = tau;
        CVector n(modes);
        cplx w;
        unpack(y, 0, n.data(), modes);
        unpack(y, 2 * modes, &w, 1);
        out.push_back(make(w, n));
    }
    return out;
}

std::vector<MomentRow> moment_trajectory(const QuadraticME& q, const GaussianParams& g0,
                                         const std::vector<double>& times, Engine engine) {
    std::vector<MomentRow> rows;
    rows.reserve(times.size());
    require_trace_preserving(q, "moment_trajectory");
    const DriftSolution d = drift_matrices(q);
    const bool closed = engine == Engine::closed_form && d.has_alpha0 && d.has_sigma0;
    GaussianParams cur = g0;
    double tcur = 0.0;
    for (double t : times) {
        if (closed) {
            rows.push_back({t, moments(propagate_closed_form(d, g0, t))});
        } else {
            cur = propagate_ode(q, cur, t - tcur);
            tcur = t;
            rows.push_back({t, moments(cur)});
        }
    }
    return rows;
}

}  // namespace gaussop
