#pragma once

#include "gaussop/gaussian_state.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gaussop {

// coefficients of a general quadratic master equation on the stacked operator vector (a, a^dagger^T)
struct QuadraticME {
    cplx A0 = 0.0;
    CVector A1, B1;
    CMatrix A, B, C;

    static QuadraticME zero(Index modes);
    Index modes() const { return A.rows() / 2; }
    void check_shapes() const;
};

struct LossOperator {
    CVector o1, o2;  // O_K = conj(o1) . a + conj(o2) . a^dagger
};

struct LindbladSpec {
    CMatrix H1;  // Hermitian, coefficients of a^dagger a (H = 2 a^dagger H1 a + ...)
    CMatrix H2;  // symmetric, coefficients of a^dagger a^dagger
    std::vector<LossOperator> loss_ops;

    Index modes() const { return H1.rows(); }
    // throws with a field path naming the offending entry
    void validate() const;
};

class SpecError : public std::invalid_argument {
public:
    SpecError(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

QuadraticME lindblad_to_qme(const LindbladSpec& spec);

// H = a^dagger omega a, loss 1/2 gamma_ij (2 a_i rho a_j^dagger - ...)
LindbladSpec lossy_trap_lindblad(const CMatrix& omega, const CMatrix& gamma);
// H = i/2 (chi a^dagger a^dagger - chi^* a a), one-photon loss gamma
LindbladSpec parametric_amplifier_lindblad(cplx chi, double gamma);
LindbladSpec bogoliubov_lindblad(const CMatrix& chi);

// anti-commutator flow d rho / d tau = -1/2 [H, rho]_+, H = a^dagger omega a
QuadraticME imaginary_time_qme(const CMatrix& omega);

struct QmeCheck {
    std::string name;
    bool passed;
    double residual;
};

struct QmeReport {
    std::vector<QmeCheck> checks;
    bool passed() const;
    std::string describe() const;
};

QmeReport validate_trace_preserving(const QuadraticME& q, double tol = 1e-10);
// generalized-dagger and Hermitian-density symmetries of A, B, C
QmeReport validate_symmetries(const QuadraticME& q, double tol = 1e-10);

struct DriftSolution {
    CMatrix E;
    CMatrix E_dag;
    CVector alpha0;
    CMatrix sigma0;
    bool has_alpha0 = false;
    bool alpha0_unique = false;
    bool has_sigma0 = false;
    bool sigma0_unique = false;
    CVector spectrum;  // eigenvalues of E
};

DriftSolution drift_matrices(const QuadraticME& q);

class SteadyStateUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StepSizeUnderflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

GaussianParams propagate_closed_form(const QuadraticME& q, const GaussianParams& g, double t);
GaussianParams propagate_closed_form(const DriftSolution& d, const GaussianParams& g, double t);

struct OdeControl {
    double rtol = 1e-10;
    double atol = 1e-12;
    double dt0 = 1e-3;
};

GaussianParams propagate_ode(const QuadraticME& q, const GaussianParams& g, double t, const OdeControl& ctl = {});

// closed form when a steady state exists, otherwise the ODE path
GaussianParams propagate(const QuadraticME& q, const GaussianParams& g, double t);

enum class ImaginaryTimeMethod { analytic, characteristics_ode };

// diagonal oscillator energies omega_k; returns one point per requested tau (each tau > tau0)
std::vector<GaussianParams> propagate_imaginary_time(const Eigen::VectorXd& omega, double tau0,
                                                     const std::vector<double>& taus,
                                                     const std::optional<GaussianParams>& g0 = std::nullopt,
                                                     ImaginaryTimeMethod method = ImaginaryTimeMethod::analytic,
                                                     const OdeControl& ctl = {});

enum class Engine { closed_form, ode };

struct MomentRow {
    double t;
    Moments moments;
};

std::vector<MomentRow> moment_trajectory(const QuadraticME& q, const GaussianParams& g0,
                                         const std::vector<double>& times, Engine engine = Engine::closed_form);

}  // namespace gaussop
