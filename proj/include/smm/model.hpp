#pragma once

// Physical model of the driven spin-magnon-mechanical hybrid system:
// bare parameters, squeezed-frame quantities, the effective coupling and
// the normal/superradiant phase boundary.
//
// Convention: every frequency, rate, coupling and drive strength in this
// library is an angular frequency in rad/s. Hz enters only at the CLI
// boundary (see sweep.hpp).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "smm/errors.hpp"

namespace smm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Boundary tolerance for the critical-phase classification:
// |1 - 4*Lambda^2/(omega_NV*omega_K)| below this counts as critical.
inline constexpr double kCriticalTol = 1e-10;

struct SystemParameters {
    double omega_K = 0.0;      // Kittel magnon mode
    double omega_m = 0.0;      // mechanical mode
    double omega_NV = 0.0;     // NV spin
    double lambda = 0.0;       // tripartite coupling (estimation target)
    double g0 = 0.0;           // pairwise spin-magnon coupling
    double Omega_p = 0.0;      // parametric drive
    double kappa_a = 0.0;      // magnon decay
    double kappa_b = 0.0;      // mechanical decay
    double kappa_sigma = 0.0;  // spin decay
    double F = 0.0;            // coherent drive
    double x_b = 0.0;          // dimensionless displacement set-point

    // Throws DomainError on a non-positive frequency or decay rate.
    // lambda, g0, F, x_b, Omega_p may be any real (Omega_p is range-checked
    // by squeezed_frame where arctanh demands it).
    void validate() const {
        auto pos = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError(std::string("SystemParameters: ") + name +
                                  " must be strictly positive");
        };
        pos(omega_K, "omega_K");
        pos(omega_m, "omega_m");
        pos(omega_NV, "omega_NV");
        pos(kappa_a, "kappa_a");
        pos(kappa_b, "kappa_b");
        pos(kappa_sigma, "kappa_sigma");
    }
};

// Geometry of the NV-micromagnet setup, SI units.
struct GeometryParameters {
    double g_e = 0.0;         // Lande factor
    double mu_B = 0.0;        // Bohr magneton [J/T]
    double mu_0 = 0.0;        // vacuum permeability [T m/A]
    double gamma_gyro = 0.0;  // gyromagnetic ratio [rad/(s T)]
    double M_s = 0.0;         // saturation magnetization [A/m]
    double R = 0.0;           // micromagnet radius [m]
    double r0 = 0.0;          // equilibrium NV-magnet distance [m]
    double M_eff = 0.0;       // effective phonon mass [kg]
    double omega_m = 0.0;     // mechanical frequency [rad/s]

    void validate() const {
        auto pos = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError(std::string("GeometryParameters: ") + name +
                                  " must be strictly positive");
        };
        pos(g_e, "g_e");
        pos(mu_B, "mu_B");
        pos(mu_0, "mu_0");
        pos(gamma_gyro, "gamma_gyro");
        pos(M_s, "M_s");
        pos(R, "R");
        pos(r0, "r0");
        pos(M_eff, "M_eff");
        pos(omega_m, "omega_m");
        if (r0 <= R)
            throw DomainError("GeometryParameters: r0 must exceed R "
                              "(NV center outside the micromagnet)");
    }
};

// Quantities induced by the parametric drive in the squeezed frame.
struct SqueezedFrame {
    double r = 0.0;         // mechanical squeezing parameter
    double lambda_e = 0.0;  // enhanced coupling lambda*e^r
    double Delta_m = 0.0;   // squeezed-frame mechanical detuning
};

enum class Phase { Normal, Superradiant, Critical };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::Normal: return "normal";
        case Phase::Superradiant: return "superradiant";
        case Phase::Critical: return "critical";
    }
    return "?";
}

struct PhasePoint {
    double Lambda = 0.0;   // effective coupling lambda_e*x_b + g0
    double xi = 0.0;       // magnon squeezing of the eigenstate (+inf at/past boundary)
    double x_minus = 0.0;  // lower critical position
    double x_plus = 0.0;   // upper critical position
    Phase phase = Phase::Normal;
};

// r from tanh(2r) = Omega_p/(omega_m - Omega_p); the argument must lie in
// (-1, 1) or the squeezing parameter is undefined.
inline SqueezedFrame squeezed_frame(const SystemParameters& p) {
    const double arg = p.Omega_p / (p.omega_m - p.Omega_p);
    if (!(std::fabs(arg) < 1.0))
        throw DomainError("squeezed_frame: Omega_p/(omega_m - Omega_p) outside (-1,1), "
                          "squeezing parameter undefined");
    SqueezedFrame f;
    f.r = 0.5 * std::atanh(arg);
    f.lambda_e = p.lambda * std::exp(f.r);
    f.Delta_m = (p.omega_m - p.Omega_p) / std::cosh(2.0 * f.r);
    return f;
}

// Mechanical zero-point fluctuation, hbar = 1.
inline double zero_point_fluctuation(double M_eff, double omega_m) {
    if (!(M_eff > 0.0) || !(omega_m > 0.0))
        throw DomainError("zero_point_fluctuation: M_eff and omega_m must be positive");
    return std::sqrt(1.0 / (2.0 * M_eff * omega_m));
}

// Tripartite coupling from the device geometry,
// lambda = 3 g_e mu_0 mu_B / (8 pi r0^4) * sqrt(4 pi |gamma| M_s R^3 / (3 M omega_m)).
inline double lambda_from_geometry(const GeometryParameters& g) {
    g.validate();
    const double pi = 4.0 * std::atan(1.0);
    const double prefactor = 3.0 * g.g_e * g.mu_0 * g.mu_B / (8.0 * pi * std::pow(g.r0, 4));
    const double radicand =
        4.0 * pi * std::fabs(g.gamma_gyro) * g.M_s * std::pow(g.R, 3) /
        (3.0 * g.M_eff * g.omega_m);
    return prefactor * std::sqrt(radicand);
}

// g0 = lambda * r0 / (3 z_zpf)
inline double pairwise_g0(double lambda, double r0, double z_zpf) {
    if (!(r0 > 0.0) || !(z_zpf > 0.0))
        throw DomainError("pairwise_g0: r0 and z_zpf must be positive");
    return lambda * r0 / (3.0 * z_zpf);
}

// Effective coupling, eigenstate squeezing and phase classification.
// xi = -(1/4) ln(1 - 4 Lambda^2/(omega_NV omega_K)), finite only in the
// normal phase; reported as +inf at and past the boundary.
//
// The critical positions are x_pm = (+-sqrt(omega_NV omega_K)/2 - g0)/lambda_e,
// the unique choice with Lambda(x_pm)^2 = omega_NV omega_K / 4.
inline PhasePoint phase_point(const SystemParameters& p, const SqueezedFrame& frame,
                              double eps_crit = kCriticalTol) {
    PhasePoint pt;
    pt.Lambda = frame.lambda_e * p.x_b + p.g0;

    const double half_root = 0.5 * std::sqrt(p.omega_NV * p.omega_K);
    if (frame.lambda_e != 0.0) {
        const double xa = (half_root - p.g0) / frame.lambda_e;
        const double xb = (-half_root - p.g0) / frame.lambda_e;
        pt.x_minus = std::min(xa, xb);
        pt.x_plus = std::max(xa, xb);
    } else {
        pt.x_minus = -kInf;
        pt.x_plus = kInf;
    }

    const double u = 4.0 * pt.Lambda * pt.Lambda / (p.omega_NV * p.omega_K);
    if (std::fabs(1.0 - u) < eps_crit) {
        pt.phase = Phase::Critical;
        pt.xi = kInf;
    } else if (u < 1.0) {
        pt.phase = Phase::Normal;
        pt.xi = -0.25 * std::log1p(-u);
    } else {
        pt.phase = Phase::Superradiant;
        pt.xi = kInf;
    }
    return pt;
}

// Time-scale hierarchy diagnostics. Each "much greater than" link is taken
// to require at least `factor`; violations come back as warning strings,
// never as errors.
inline std::vector<std::string> hierarchy_warnings(const SystemParameters& p,
                                                   double factor = 10.0) {
    std::vector<std::string> w;
    auto check = [&](double hi, double lo, const char* hi_name, const char* lo_name) {
        // rounding slack so that a ratio of exactly `factor` passes
        if (!(hi >= factor * lo * (1.0 - 1e-9))) {
            w.push_back(std::string(hi_name) + " / " + lo_name + " = " +
                        std::to_string(hi / lo) + " < " + std::to_string(factor));
        }
    };
    check(p.omega_NV, p.omega_K, "omega_NV", "omega_K");
    check(p.omega_K, p.omega_m, "omega_K", "omega_m");
    check(p.kappa_a, p.kappa_b, "kappa_a", "kappa_b");
    check(p.kappa_sigma, p.kappa_b, "kappa_sigma", "kappa_b");
    return w;
}

} // namespace smm
