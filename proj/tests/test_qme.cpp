#include "gaussop/fock_oracle.hpp"
#include "gaussop/qme.hpp"
#include "gaussop/state_factory.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace gaussop;
using namespace testutil;

namespace {

LindbladSpec random_spec(Index modes, int ops) {
    LindbladSpec s{random_hermitian(modes, 0.5), random_symmetric(modes, 0.3), {}};
    for (int k = 0; k < ops; ++k) s.loss_ops.push_back({random_vector(modes, 0.5), random_vector(modes, 0.2)});
    return s;
}

CMatrix random_psd(Index modes, double scale) {
    const CMatrix x = random_matrix(modes, scale);
    return x * x.adjoint();
}

// random density-like matrix supported on low occupations, away from the truncation edge
CMatrix low_number_matrix(const FockSpace& space, int top) {
    CMatrix rho = CMatrix::Zero(space.dim(), space.dim());
    for (Index i = 0; i < space.dim(); ++i)
        for (Index j = 0; j < space.dim(); ++j) {
            bool low = true;
            for (Index k = 0; k < space.modes(); ++k)
                low = low && space.occupation(i, k) <= top && space.occupation(j, k) <= top;
            if (low) rho(i, j) = random_cplx();
        }
    return rho;
}

CMatrix number_operator(const FockSpace& space, const CMatrix& omega) {
    CMatrix h = CMatrix::Zero(space.dim(), space.dim());
    for (Index i = 0; i < space.modes(); ++i)
        for (Index j = 0; j < space.modes(); ++j) h += omega(i, j) * CMatrix(SpMatrix(space.adag(i) * space.a(j)));
    return h;
}

GaussianParams random_physical(Index modes) {
    const CMatrix xi = random_symmetric(modes, 0.3);
    CMatrix nbar = CMatrix::Zero(modes, modes);
    for (Index k = 0; k < modes; ++k) nbar(k, k) = uniform(0.0, 0.5);
    const CVector a = random_vector(modes, 0.5);
    return squeezed_thermal(SqueezeSpec::hermitian(xi), {nbar}, a, a.conjugate());
}

CMatrix sigma_of(const GaussianParams& g) {
    return assemble_covariance(g).sigma;
}

}  // namespace

TEST_CASE("lossy trap coefficients") {
    for (int trial = 0; trial < 5; ++trial) {
        const CMatrix omega = random_hermitian(2);
        const CMatrix gamma = random_psd(2, 0.5);
        const QuadraticME q = lindblad_to_qme(lossy_trap_lindblad(omega, gamma));
        const CMatrix z = CMatrix::Zero(2, 2);
        const CMatrix wt = omega - cplx(0.0, 0.5) * gamma.transpose();
        CHECK(max_abs(q.A) < 1e-15);
        CHECK(err(q.B, 0.5 * BlockMatrix2x2{gamma.transpose(), z, z, gamma}.assemble()) < 1e-12);
        CHECK(err(q.C, cplx(0.0, -1.0) * BlockMatrix2x2{wt, z, z, -wt.conjugate()}.assemble()) < 1e-12);
        CHECK(err(q.A0, gamma.trace()) < 1e-12);
    }
}

TEST_CASE("parametric amplifier coefficients") {
    const double chi = 0.25, gamma = 1.0;
    const QuadraticME q = lindblad_to_qme(parametric_amplifier_lindblad(chi, gamma));
    CMatrix a(2, 2), b(2, 2);
    a << 0.0, chi, chi, 0.0;
    b << gamma, -chi, -chi, gamma;
    CHECK(err(q.A, 0.5 * a) < 1e-15);
    CHECK(err(q.B, 0.5 * b) < 1e-15);
    CHECK(err(q.C, -0.5 * gamma * CMatrix::Identity(2, 2)) < 1e-15);

    // complex pump: the a^dag a^dag coefficient sits in the upper-right block of E
    const cplx c(0.2, 0.1);
    const QuadraticME qc = lindblad_to_qme(parametric_amplifier_lindblad(c, 0.0));
    CHECK(err(qc.A(0, 1), 0.5 * c) < 1e-15);
    CHECK(err(qc.A(1, 0), 0.5 * std::conj(c)) < 1e-15);
}

TEST_CASE("bogoliubov coefficients") {
    const CMatrix chi = random_symmetric(2);
    const QuadraticME q = lindblad_to_qme(bogoliubov_lindblad(chi));
    CHECK(max_abs(q.C) == 0.0);
    CHECK(q.A0 == cplx(0.0));
    const CMatrix z = CMatrix::Zero(2, 2);
    const CMatrix e = BlockMatrix2x2{z, chi, chi.conjugate(), z}.assemble();
    CHECK(err(2.0 * q.A, e) < 1e-15);
    CHECK(err(-2.0 * q.B, e) < 1e-15);
}

TEST_CASE("coefficients reproduce the Lindblad superoperator on Fock space") {
    for (int trial = 0; trial < 4; ++trial) {
        const Index modes = 1 + trial % 2;
        const LindbladSpec spec = random_spec(modes, 2);
        const FockSpace space(modes, modes == 1 ? 12 : 6);
        const CMatrix rho = low_number_matrix(space, space.nmax() - 2);
        const CMatrix l = apply_lindblad(spec, space, rho);
        const CMatrix q = apply_qme(lindblad_to_qme(spec), space, rho);
        CHECK(err(l, q) < 1e-12);
    }
}

TEST_CASE("imaginary-time coefficients give the anticommutator") {
    const CMatrix omega = random_hermitian(2);
    const FockSpace space(2, 6);
    const CMatrix rho = low_number_matrix(space, 4);
    const CMatrix h = number_operator(space, omega);
    const CMatrix expect = -0.5 * (h * rho + rho * h);
    CHECK(err(apply_qme(imaginary_time_qme(omega), space, rho), expect) < 1e-12);
}

TEST_CASE("trace preservation checks") {
    for (int trial = 0; trial < 10; ++trial) {
        const QuadraticME q = lindblad_to_qme(random_spec(1 + trial % 3, 1 + trial % 2));
        CHECK(validate_trace_preserving(q).passed());
        CHECK(validate_symmetries(q).passed());
    }
    CHECK(validate_trace_preserving(QuadraticME::zero(2)).passed());
    const QmeReport it = validate_trace_preserving(imaginary_time_qme(CMatrix::Identity(2, 2)));
    CHECK_FALSE(it.passed());
    CHECK(it.describe().find("FAIL") != std::string::npos);
}

TEST_CASE("spec validation names the field") {
    LindbladSpec s = random_spec(2, 1);
    s.H2(0, 1) += 0.1;
    try {
        s.validate();
        FAIL("expected a SpecError");
    } catch (const SpecError& e) {
        CHECK(e.field() == "H2");
    }
    LindbladSpec h = random_spec(2, 0);
    h.H1(0, 1) += 0.1;
    CHECK_THROWS_AS(h.validate(), SpecError);
    LindbladSpec o = random_spec(2, 1);
    o.loss_ops[0].o1 = CVector::Zero(3);
    CHECK_THROWS_AS(o.validate(), SpecError);
    CHECK_THROWS_AS(lossy_trap_lindblad(CMatrix::Identity(2, 2), -CMatrix::Identity(2, 2)), SpecError);
    CHECK_THROWS_AS(parametric_amplifier_lindblad(0.1, -1.0), SpecError);
}

TEST_CASE("steady states") {
    const double chi = 0.25, gamma = 1.0;
    const DriftSolution pa = drift_matrices(lindblad_to_qme(parametric_amplifier_lindblad(chi, gamma)));
    CMatrix s0(2, 2);
    s0 << gamma * gamma - 2 * chi * chi, chi * gamma, chi * gamma, gamma * gamma - 2 * chi * chi;
    s0 /= gamma * gamma - 4 * chi * chi;
    REQUIRE(pa.has_sigma0);
    CHECK(pa.sigma0_unique);
    CHECK(err(pa.sigma0, s0) < 1e-12);
    CHECK(std::abs(pa.sigma0(0, 0) - 1.0 - 1.0 / 6.0) < 1e-12);
    CHECK(std::abs(pa.sigma0(0, 1) - 1.0 / 3.0) < 1e-12);

    const DriftSolution lt =
        drift_matrices(lindblad_to_qme(lossy_trap_lindblad(random_hermitian(2), random_psd(2, 0.6) + 0.2 * CMatrix::Identity(2, 2))));
    CHECK(lt.alpha0.norm() < 1e-14);
    CHECK(err(lt.sigma0, CMatrix::Identity(4, 4)) < 1e-12);

    const DriftSolution bg = drift_matrices(lindblad_to_qme(bogoliubov_lindblad(CMatrix::Constant(1, 1, 0.7))));
    REQUIRE(bg.has_sigma0);
    CHECK_FALSE(bg.sigma0_unique);
    CHECK(err(bg.sigma0, 0.5 * CMatrix::Identity(2, 2)) < 1e-12);
    CHECK(err(bg.E * bg.sigma0 + bg.sigma0 * bg.E_dag, bg.E) < 1e-12);
}

TEST_CASE("bogoliubov amplification of the vacuum") {
    const double chi = 0.8;
    const QuadraticME q = lindblad_to_qme(bogoliubov_lindblad(CMatrix::Constant(1, 1, chi)));
    CHECK(err(sigma_of(propagate_closed_form(q, vacuum(1), 0.0)), CMatrix::Identity(2, 2)) == 0.0);
    for (double t : {0.5 / chi, 1.0 / chi, 1.25 / chi}) {
        const Moments m = moments(propagate_closed_form(q, vacuum(1), t));
        CHECK(std::abs(m.second.normal_a_adag(0, 0) - (0.5 * std::cosh(2 * chi * t) - 0.5)) < 1e-10);
        CHECK(std::abs(m.second.aa(0, 0) - 0.5 * std::sinh(2 * chi * t)) < 1e-10);
        CHECK(m.first.a.norm() == 0.0);
    }

    // complex symmetric chi: <a a^T> = chi sinh(2|chi|t)/(2|chi|) with |chi| = sqrt(chi chi^*)
    const CMatrix c = random_symmetric(2, 0.5);
    const QuadraticME q2 = lindblad_to_qme(bogoliubov_lindblad(c));
    const double t = 0.9;
    const auto [mu, nu] = matrix_cosh_sinh(2.0 * t * c.conjugate());
    const Moments m2 = moments(propagate_closed_form(q2, vacuum(2), t));
    // cosh(2|chi|t) via the series of (chi chi^*)
    const auto [mu2, nu2] = matrix_cosh_sinh(2.0 * t * c);
    CHECK(err(m2.second.normal_a_adag, 0.5 * mu2 - 0.5 * CMatrix::Identity(2, 2)) < 1e-10);
    CHECK(err(m2.second.aa, 0.5 * nu2) < 1e-10);
    CHECK(err(m2.second.adag_adag, 0.5 * nu) < 1e-10);
}

TEST_CASE("parametric amplifier approaches its steady state") {
    const QuadraticME q = lindblad_to_qme(parametric_amplifier_lindblad(0.25, 1.0));
    const GaussianParams g = propagate_closed_form(q, vacuum(1), 200.0);
    CHECK(std::abs(g.n()(0, 0) - 1.0 / 6.0) < 1e-10);
    CHECK(std::abs(g.m()(0, 0) - 1.0 / 3.0) < 1e-10);

    // envelope decays toward sigma0 at the slowest rate
    const DriftSolution d = drift_matrices(q);
    const double rate = -d.spectrum.real().maxCoeff();
    const GaussianParams start = random_physical(1);
    double prev = err(sigma_of(start), d.sigma0);
    for (double t : {5.0 / rate, 10.0 / rate, 20.0 / rate}) {
        const double e = err(sigma_of(propagate_closed_form(d, start, t)), d.sigma0);
        CHECK(e < prev);
        prev = e;
    }
    CHECK(prev < 1e-7);
}

TEST_CASE("lossy trap scalar solution") {
    const double w = 1.3, gamma = 0.4;
    const QuadraticME q = lindblad_to_qme(lossy_trap_lindblad(CMatrix::Constant(1, 1, w), CMatrix::Constant(1, 1, gamma)));
    const GaussianParams g0 = thermal(1.0, ThermalSpec::from_nbar(CMatrix::Constant(1, 1, 0.8)));
    const CVector a0 = CVector::Constant(1, cplx(0.6, -0.3));
    const GaussianParams c0 = coherent_projector(1.0, a0, a0.conjugate());
    const cplx wt(w, -gamma / 2);
    for (double t : {0.5, 2.0, 7.0}) {
        const GaussianParams g = propagate_ode(q, g0, t);
        CHECK(std::abs(g.n()(0, 0) - 0.8 * std::exp(-gamma * t)) < 1e-9);
        const GaussianParams c = propagate_ode(q, c0, t);
        CHECK(std::abs(c.alpha()(0) - std::exp(cplx(0.0, -1.0) * wt * t) * a0(0)) < 1e-9);
    }

    // omega = 0: <a>(t) = a0 e^{-gamma t / 2}
    const QuadraticME q0 = lindblad_to_qme(lossy_trap_lindblad(CMatrix::Zero(1, 1), CMatrix::Constant(1, 1, gamma)));
    const auto rows = moment_trajectory(q0, c0, {0.0, 1.0, 3.0});
    for (const auto& r : rows) CHECK(std::abs(r.moments.first.a(0) - a0(0) * std::exp(-gamma * r.t / 2)) < 1e-12);
    const auto vac = moment_trajectory(q0, vacuum(1), {0.0, 1.0, 3.0}, Engine::ode);
    for (const auto& r : vac) {
        CHECK(r.moments.first.a.norm() == 0.0);
        CHECK(std::abs(r.moments.second.normal_a_adag(0, 0)) < 1e-15);
    }
}

TEST_CASE("lossy trap block solution, commuting two-mode") {
    // omega and gamma share eigenvectors
    const CMatrix v = matrix_exp(cplx(0.0, 1.0) * random_hermitian(2));
    Eigen::Vector2d we(0.7, 1.9), ge(0.3, 0.8);
    const CMatrix omega = v * we.cast<cplx>().asDiagonal() * v.adjoint();
    const CMatrix gamma = v * ge.cast<cplx>().asDiagonal() * v.adjoint();
    const QuadraticME q = lindblad_to_qme(lossy_trap_lindblad(omega, gamma));
    const GaussianParams g0 = random_physical(2);
    const CMatrix wt = omega - cplx(0.0, 0.5) * gamma.transpose();
    const cplx i(0.0, 1.0);
    for (double t : {0.3, 1.0, 4.0}) {
        const CMatrix l = matrix_exp(-i * wt * t);
        const CMatrix r = matrix_exp(i * wt.adjoint() * t);
        const GaussianParams g = propagate_closed_form(q, g0, t);
        CHECK(err(g.alpha(), l * g0.alpha()) < 1e-10);
        CHECK(err(CMatrix(g.alpha_plus().transpose()), CMatrix(g0.alpha_plus().transpose() * r)) < 1e-10);
        CHECK(err(g.n(), l * g0.n() * r) < 1e-10);
        CHECK(err(g.m(), l * g0.m() * matrix_exp(-i * wt.transpose() * t)) < 1e-10);
        CHECK(err(g.m_plus(), matrix_exp(i * wt.adjoint().transpose() * t) * g0.m_plus() * r) < 1e-10);
    }
}

TEST_CASE("closed form and ODE agree") {
    std::vector<std::pair<QuadraticME, GaussianParams>> cases;
    cases.emplace_back(lindblad_to_qme(parametric_amplifier_lindblad(0.25, 1.0)), random_physical(1));
    cases.emplace_back(lindblad_to_qme(bogoliubov_lindblad(random_symmetric(2, 0.3))), random_physical(2));
    cases.emplace_back(lindblad_to_qme(lossy_trap_lindblad(random_hermitian(2), random_psd(2, 0.5))), random_physical(2));
    cases.emplace_back(lindblad_to_qme(random_spec(2, 2)), random_physical(2));
    for (const auto& [q, g0] : cases) {
        for (double t : {0.5, 3.0, 10.0}) {
            const GaussianParams a = propagate_closed_form(q, g0, t);
            const GaussianParams b = propagate_ode(q, g0, t);
            const double scale = std::max(1.0, max_abs(sigma_of(a)));
            CHECK(err(sigma_of(a), sigma_of(b)) < 1e-8 * scale);
            CHECK(err(a.displacement(), b.displacement()) < 1e-8 * scale);
        }
    }
    const GaussianParams g = random_physical(2);
    const GaussianParams same = propagate_ode(QuadraticME::zero(2), g, 5.0);
    CHECK(err(sigma_of(same), sigma_of(g)) < 1e-14);
}

TEST_CASE("trajectories keep symmetry, weight and physicality") {
    for (int trial = 0; trial < 6; ++trial) {
        const Index modes = 1 + trial % 2;
        const QuadraticME q = lindblad_to_qme(random_spec(modes, 2));
        const GaussianParams g0 = random_physical(modes).with_omega(cplx(1.5, 0.5));
        for (double t : {0.1, 1.0, 5.0}) {
            const GaussianParams g = propagate(q, g0, t);
            const CMatrix s = sigma_of(g);
            CHECK(err(s, generalized_dagger(s)) < 1e-10 * std::max(1.0, max_abs(s)));
            CHECK(g.omega() == g0.omega());
            CHECK(check_physical(g, 1e-9).physical());
        }
    }
}

TEST_CASE("linear driving without a steady state falls back to the ODE") {
    QuadraticME q = QuadraticME::zero(1);
    q.A1 << cplx(0.3, 0.1), cplx(0.3, -0.1);
    q.B1 = -q.A1;
    const DriftSolution d = drift_matrices(q);
    CHECK_FALSE(d.has_alpha0);
    CHECK_THROWS_AS(propagate_closed_form(d, vacuum(1), 1.0), SteadyStateUnavailable);
    const GaussianParams g = propagate(q, vacuum(1), 2.0);
    CHECK(std::abs(g.alpha()(0) - cplx(0.6, 0.2)) < 1e-10);
    CHECK(std::abs(g.alpha_plus()(0) - cplx(0.6, -0.2)) < 1e-10);
}

TEST_CASE("imaginary time") {
    Eigen::VectorXd w1(1);
    w1 << 1.0;
    const auto ln2 = propagate_imaginary_time(w1, 1e-3, {std::log(2.0)});
    CHECK(std::abs(ln2[0].n()(0, 0) - 1.0) < 1e-12);
    const auto one = propagate_imaginary_time(w1, 1e-3, {1.0});
    CHECK(std::abs(one[0].omega() - 1.5819767068693265) < 1e-12);
    CHECK(std::abs(trace(one[0]).value - 1.0 / (1.0 - std::exp(-1.0))) < 1e-12);

    // characteristics from tau0 = 0.01
    const auto ode = propagate_imaginary_time(w1, 0.01, {2.0}, std::nullopt, ImaginaryTimeMethod::characteristics_ode);
    CHECK(std::abs(ode[0].n()(0, 0) - 1.0 / std::expm1(2.0)) < 1e-8);

    Eigen::VectorXd w3(3);
    w3 << 0.5, 1.0, 2.5;
    std::vector<double> taus;
    for (int k = 0; k < 20; ++k) taus.push_back(0.01 + (5.0 - 0.01) * k / 19.0);
    const auto an = propagate_imaginary_time(w3, 1e-3, taus);
    const auto ch = propagate_imaginary_time(w3, 1e-3, taus, std::nullopt, ImaginaryTimeMethod::characteristics_ode);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        double z = 1.0;
        for (Index k = 0; k < 3; ++k) {
            const double nk = 1.0 / std::expm1(w3(k) * taus[i]);
            CHECK(std::abs(an[i].n()(k, k) - nk) < 1e-10 * std::max(1.0, nk));
            CHECK(std::abs(ch[i].n()(k, k) - nk) < 1e-8 * std::max(1.0, nk));
            z /= -std::expm1(-w3(k) * taus[i]);
        }
        CHECK(std::abs(an[i].omega() - z) < 1e-10 * z);
        CHECK(std::abs(ch[i].omega() - z) < 1e-8 * z);
    }

    // start from a thermal kernel: analytic and ODE characteristics agree
    CMatrix n0 = CMatrix::Zero(3, 3);
    n0.diagonal() << 0.4, 2.0, cplx(0.3, 0.2);
    const GaussianParams g0 = thermal(cplx(2.0, 0.0), ThermalSpec::from_nbar(n0));
    const auto a2 = propagate_imaginary_time(w3, 0.1, {0.1, 0.6, 3.0}, g0);
    const auto c2 = propagate_imaginary_time(w3, 0.1, {0.1, 0.6, 3.0}, g0, ImaginaryTimeMethod::characteristics_ode);
    CHECK(err(a2[0].n(), n0) < 1e-15);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(err(a2[i].n(), c2[i].n()) < 1e-8);
        CHECK(std::abs(a2[i].omega() - c2[i].omega()) < 1e-8 * std::abs(a2[i].omega()));
    }

    // the anticommutator flow is nonlinear in n, so the linear real-time propagators refuse it
    const QuadraticME q = imaginary_time_qme(CMatrix(w3.cast<cplx>().asDiagonal()));
    CHECK_THROWS_AS(propagate_ode(q, g0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(propagate(q, g0, 0.5), std::invalid_argument);

    CHECK_THROWS_AS(propagate_imaginary_time(w1, 0.1, {0.05}), std::invalid_argument);
    Eigen::VectorXd bad(1);
    bad << -1.0;
    CHECK_THROWS_AS(propagate_imaginary_time(bad, 0.1, {1.0}), std::invalid_argument);
}
