#pragma once

// Dissipative dynamics: steady first moments of the driven magnon, the
// reduced 2x2 drift matrix for the mechanical fluctuations, its spectrum and
// characteristic time, and the stationary covariance (analytic form plus an
// independent Lyapunov-equation solver).

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "smm/errors.hpp"
#include "smm/mat2.hpp"
#include "smm/model.hpp"

namespace smm {

// Formula variant switch. Corrected carries the squeezed-frame enhancement
// e^{2r} inside the effective frequency; StrictPaper drops it. Everything
// downstream (gap, covariance, near-critical QFI) follows the chosen variant.
enum class Mode { Corrected, StrictPaper };

inline const char* to_string(Mode m) {
    return m == Mode::Corrected ? "corrected" : "strict_paper";
}

// Steady-state expectation values. The mechanical and spin transverse
// moments vanish; cov is the stationary covariance of the mechanical
// quadrature fluctuations in the vacuum = diag(1/2,1/2) convention
// (defaulted to vacuum until steady_covariance fills it).
struct SteadyState {
    double mean_Xa = 0.0;
    double mean_Pa = 0.0;
    double mean_sigma_z = -0.5;
    double mean_Xb = 0.0;
    double mean_Pb = 0.0;
    double mean_sigma_x = 0.0;
    double mean_sigma_y = 0.0;
    SymMat2 cov{0.5, 0.0, 0.5};

    double purity() const { return 1.0 / (2.0 * std::sqrt(cov.det())); }
};

struct DriftModel {
    Mat2 V;                       // [[-kappa_b, omega_m], [omega_eff, -kappa_b]]
    double omega_eff = 0.0;       // effective mechanical frequency
    std::complex<double> eig_plus;
    std::complex<double> eig_minus;
    double tau = 0.0;             // characteristic time, -1/max Re eig
    double Delta = 0.0;           // gap kappa_b^2 - omega_eff*omega_m
    bool stable = false;
    Mode mode = Mode::Corrected;
    std::vector<std::string> warnings;  // hierarchy diagnostics
};

// <X_a> = F omega_K/(kappa_a^2 + omega_K^2), <P_a> = F kappa_a/(...),
// <sigma_z> = -1/2, every other first moment zero.
inline SteadyState steady_means(const SystemParameters& p) {
    if (!(p.kappa_a > 0.0)) throw DomainError("steady_means: kappa_a must be positive");
    SteadyState s;
    const double denom = p.kappa_a * p.kappa_a + p.omega_K * p.omega_K;
    s.mean_Xa = p.F * p.omega_K / denom;
    s.mean_Pa = p.F * p.kappa_a / denom;
    return s;
}

// Drift model from the raw triple (omega_eff, omega_m, kappa_b); used by the
// full pipeline below and directly by randomized covariance tests.
inline DriftModel make_drift(double omega_eff, double omega_m, double kappa_b,
                             Mode mode = Mode::Corrected) {
    DriftModel d;
    d.mode = mode;
    d.omega_eff = omega_eff;
    d.V = {-kappa_b, omega_m, omega_eff, -kappa_b};
    d.Delta = kappa_b * kappa_b - omega_eff * omega_m;
    const double prod = omega_m * omega_eff;
    if (prod >= 0.0) {
        const double root = std::sqrt(prod);
        d.eig_plus = {-kappa_b + root, 0.0};
        d.eig_minus = {-kappa_b - root, 0.0};
    } else {
        const double root = std::sqrt(-prod);
        d.eig_plus = {-kappa_b, root};
        d.eig_minus = {-kappa_b, -root};
    }
    const double max_re = std::max(d.eig_plus.real(), d.eig_minus.real());
    d.stable = max_re < 0.0;
    d.tau = d.stable ? -1.0 / max_re : kInf;
    return d;
}

// Effective frequency omega_eff = 2 lambda^2 e^{2r} <X_a>^2 / omega_NV - omega_m
// (StrictPaper: without the e^{2r}).
inline double effective_frequency(const SystemParameters& p, const SqueezedFrame& frame,
                                  const SteadyState& means, Mode mode) {
    const double enh = mode == Mode::Corrected ? std::exp(2.0 * frame.r) : 1.0;
    return 2.0 * p.lambda * p.lambda * enh * means.mean_Xa * means.mean_Xa / p.omega_NV -
           p.omega_m;
}

// d omega_eff / d lambda under the same variant.
inline double effective_frequency_slope(const SystemParameters& p,
                                        const SqueezedFrame& frame,
                                        const SteadyState& means, Mode mode) {
    const double enh = mode == Mode::Corrected ? std::exp(2.0 * frame.r) : 1.0;
    return 4.0 * p.lambda * enh * means.mean_Xa * means.mean_Xa / p.omega_NV;
}

inline DriftModel drift_model(const SystemParameters& p, const SqueezedFrame& frame,
                              const SteadyState& means, Mode mode = Mode::Corrected) {
    DriftModel d = make_drift(effective_frequency(p, frame, means, mode), p.omega_m,
                              p.kappa_b, mode);
    d.warnings = hierarchy_warnings(p);
    return d;
}

// Stationary covariance of the mechanical fluctuations,
//   C11 = s (2 kb^2 - w wm + wm^2)/(2 Delta),
//   C22 = s (2 kb^2 - w wm + w^2 )/(2 Delta),
//   C12 = s kb (w + wm)/(2 Delta),
// with the single rescaling s = 1/2 fixed by the lambda = 0 limit being
// exactly vacuum diag(1/2, 1/2).
inline SymMat2 steady_covariance_from(double omega_eff, double omega_m, double kappa_b) {
    const DriftModel d = make_drift(omega_eff, omega_m, kappa_b);
    if (!d.stable)
        throw StabilityError("steady_covariance: drift matrix is not stable");
    const double s = 0.5;
    const double kb2 = kappa_b * kappa_b;
    const double common = 2.0 * kb2 - omega_eff * omega_m;
    const double twoD = 2.0 * d.Delta;
    SymMat2 c;
    c.m11 = s * (common + omega_m * omega_m) / twoD;
    c.m22 = s * (common + omega_eff * omega_eff) / twoD;
    c.m12 = s * kappa_b * (omega_eff + omega_m) / twoD;
    return c;
}

inline SymMat2 steady_covariance(const DriftModel& dm, const SystemParameters& p) {
    if (!dm.stable)
        throw StabilityError("steady_covariance: drift matrix is not stable");
    return steady_covariance_from(dm.omega_eff, p.omega_m, p.kappa_b);
}

// Zero-temperature diffusion matrix in the vacuum = (1/2) I convention.
inline SymMat2 diffusion_matrix(const SystemParameters& p) {
    return {p.kappa_b, 0.0, p.kappa_b};
}

// Solve V C + C V^T + D = 0 for symmetric C (3x3 linear system, Cramer).
// Residual is verified relative to the scale of the terms involved.
inline SymMat2 lyapunov_oracle(const DriftModel& dm, const SymMat2& diffusion) {
    if (!dm.stable)
        throw StabilityError("lyapunov_oracle: drift matrix is not stable");
    const Mat2& V = dm.V;
    // unknowns (c11, c12, c22):
    //  2 V11 c11 + 2 V12 c12                        = -D11
    //  V21 c11 + (V11 + V22) c12 + V12 c22          = -D12
    //            2 V21 c12       + 2 V22 c22        = -D22
    const double a11 = 2.0 * V.a11, a12 = 2.0 * V.a12, a13 = 0.0;
    const double a21 = V.a21, a22 = V.a11 + V.a22, a23 = V.a12;
    const double a31 = 0.0, a32 = 2.0 * V.a21, a33 = 2.0 * V.a22;
    const double b1 = -diffusion.m11, b2 = -diffusion.m12, b3 = -diffusion.m22;

    const double det = a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) +
                       a13 * (a21 * a32 - a22 * a31);
    if (det == 0.0)
        throw StabilityError("lyapunov_oracle: singular Lyapunov system");
    const double c11 = (b1 * (a22 * a33 - a23 * a32) - a12 * (b2 * a33 - a23 * b3) +
                        a13 * (b2 * a32 - a22 * b3)) / det;
    const double c12 = (a11 * (b2 * a33 - a23 * b3) - b1 * (a21 * a33 - a23 * a31) +
                        a13 * (a21 * b3 - b2 * a31)) / det;
    const double c22 = (a11 * (a22 * b3 - b2 * a32) - a12 * (a21 * b3 - b2 * a31) +
                        b1 * (a21 * a32 - a22 * a31)) / det;
    SymMat2 c{c11, c12, c22};

    // residual check, scaled
    const double r11 = 2.0 * (V.a11 * c.m11 + V.a12 * c.m12) + diffusion.m11;
    const double r12 = V.a21 * c.m11 + (V.a11 + V.a22) * c.m12 + V.a12 * c.m22 +
                       diffusion.m12;
    const double r22 = 2.0 * (V.a21 * c.m12 + V.a22 * c.m22) + diffusion.m22;
    const double scale = frobenius(diffusion) +
                         (std::fabs(V.a11) + std::fabs(V.a12) + std::fabs(V.a21) +
                          std::fabs(V.a22)) * frobenius(c);
    const double res = std::sqrt(r11 * r11 + 2.0 * r12 * r12 + r22 * r22);
    if (res > 1e-12 * scale)
        throw StabilityError("lyapunov_oracle: residual " + std::to_string(res / scale) +
                             " above tolerance");
    return c;
}

// Full pipeline: means, drift, covariance for one parameter point.
inline SteadyState solve_steady_state(const SystemParameters& p, Mode mode = Mode::Corrected) {
    const SqueezedFrame frame = squeezed_frame(p);
    SteadyState s = steady_means(p);
    const DriftModel dm = drift_model(p, frame, s, mode);
    s.cov = steady_covariance(dm, p);
    return s;
}

// The coupling that places the dissipative gap at Delta_target (exact
// inversion of the quadratic lambda-dependence of omega_eff). Useful for
// constructing near-critical ladders.
inline double lambda_at_gap(const SystemParameters& p, double Delta_target,
                            Mode mode = Mode::Corrected) {
    const SqueezedFrame frame = squeezed_frame(p);
    const SteadyState means = steady_means(p);
    const double enh = mode == Mode::Corrected ? std::exp(2.0 * frame.r) : 1.0;
    const double X2 = means.mean_Xa * means.mean_Xa;
    if (!(X2 > 0.0))
        throw DomainError("lambda_at_gap: steady magnon amplitude vanishes");
    const double num = p.omega_NV * (p.omega_m * p.omega_m + p.kappa_b * p.kappa_b -
                                     Delta_target);
    if (num < 0.0)
        throw DomainError("lambda_at_gap: requested gap not reachable");
    return std::sqrt(num / (2.0 * enh * X2 * p.omega_m));
}

} // namespace smm
