#pragma once

#include "gaussop/linalg.hpp"

#include <string>
#include <vector>

namespace gaussop {

// phase-space point (omega, alpha, alpha+, n, m, m+) of an M-mode Gaussian kernel
class GaussianParams {
public:
    GaussianParams(cplx omega, CVector alpha, CVector alpha_plus, CMatrix n, CMatrix m, CMatrix m_plus);

    static GaussianParams from_covariance(cplx omega, CVector alpha, CVector alpha_plus, const CMatrix& sigma);
    static Index parameter_count(Index modes) { return modes * (2 + 3 * modes); }

    Index modes() const { return alpha_.size(); }
    cplx omega() const { return omega_; }
    const CVector& alpha() const { return alpha_; }
    const CVector& alpha_plus() const { return alpha_plus_; }
    const CMatrix& n() const { return n_; }
    const CMatrix& m() const { return m_; }
    const CMatrix& m_plus() const { return m_plus_; }

    // stacked displacement (alpha, alpha+)
    CVector displacement() const;
    GaussianParams with_omega(cplx omega) const;

private:
    cplx omega_;
    CVector alpha_, alpha_plus_;
    CMatrix n_, m_, m_plus_;
};

struct Covariance {
    CMatrix sigma;

    Index modes() const { return sigma.rows() / 2; }
    CMatrix normal() const { return sigma - CMatrix::Identity(sigma.rows(), sigma.cols()); }
};

Covariance assemble_covariance(const GaussianParams& g);

// det(I+n) sqrt(det(I - (I+n^T)^-1 m+ (I+n)^-1 m)), continuous through the physical region
cplx sqrt_det_sigma(const GaussianParams& g);

struct TraceResult {
    cplx value;
    bool validity_ok;  // all eigenvalues of sigma have positive real part
};

TraceResult trace(const GaussianParams& g);

struct FirstMoments {
    CVector a, adag;
};

struct SecondMoments {
    CMatrix aa;             // <a_i a_j>
    CMatrix normal_a_adag;  // <:a_i a_j^dagger:> = <a_j^dagger a_i>
    CMatrix adag_adag;      // <a_i^dagger a_j^dagger>
};

struct Moments {
    FirstMoments first;
    SecondMoments second;
};

FirstMoments moments_first(const GaussianParams& g);
SecondMoments moments_second(const GaussianParams& g);
Moments moments(const GaussianParams& g);

class ZeroWeightError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct WeightedEnsemble {
    std::vector<GaussianParams> members;

    explicit WeightedEnsemble(std::vector<GaussianParams> m);
    cplx total_weight() const;
};

Moments ensemble_moments(const WeightedEnsemble& e);

struct PhysicalCheck {
    std::string name;
    bool passed;
    double margin;  // worst violation (<= 0 when passed) in the check's own units
};

struct PhysicalityReport {
    std::vector<PhysicalCheck> checks;

    bool physical() const;
    bool passed(const std::string& name) const;
    std::string describe() const;
};

PhysicalityReport check_physical(const GaussianParams& g, double tol = 1e-10);

}  // namespace gaussop
