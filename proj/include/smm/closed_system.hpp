#pragma once

// Closed-system estimation theory: QFI of the squeezed-magnon eigenstate,
// the adiabatic preparation-time estimate, the time-rescaled QFI, and an
// independent truncated-Fock fidelity-susceptibility oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "smm/errors.hpp"
#include "smm/model.hpp"
#include "smm/numerics.hpp"

namespace smm {

struct EigenstateSpec {
    int n = 0;             // magnon Fock label
    PhasePoint phase_point;
    SqueezedFrame frame;
};

struct AdiabaticSchedule {
    double gamma_ad = 1e-2;  // adiabaticity parameter, << 1
    double T = 0.0;          // sweep time [s]
};

// QFI of the n-th eigenstate with respect to the tripartite coupling:
//   F = Lambda^2 e^{2r} x_b^2 (n^2+n+1) / (2 (omega_NV omega_K/4 - Lambda^2)^2).
// The coupling enters only through Lambda = lambda e^r x_b + g0 with g0
// held as an independent parameter.
//
// Returns +inf at the critical point; throws PhaseError in the
// superradiant phase where the eigenstate does not exist.
inline double eigenstate_qfi(const EigenstateSpec& spec, const SystemParameters& p) {
    if (spec.n < 0) throw DomainError("eigenstate_qfi: n must be non-negative");
    switch (spec.phase_point.phase) {
        case Phase::Critical: return kInf;
        case Phase::Superradiant:
            throw PhaseError("eigenstate_qfi: no normal-phase eigenstate beyond "
                             "the critical position");
        case Phase::Normal: break;
    }
    const double L = spec.phase_point.Lambda;
    const double gap = p.omega_NV * p.omega_K / 4.0 - L * L;
    const double n = static_cast<double>(spec.n);
    const double e2r = std::exp(2.0 * spec.frame.r);
    return L * L * e2r * p.x_b * p.x_b * (n * n + n + 1.0) / (2.0 * gap * gap);
}

// Adiabatic sweep time T = [2 gamma omega_K sqrt(1 - 4 Lambda^2/(omega_NV omega_K))]^-1.
// +inf when Lambda_final sits on the boundary (within kCriticalTol);
// PhaseError past it.
inline double adiabatic_time(const SystemParameters& p, double Lambda_final,
                             double gamma_ad) {
    if (!(gamma_ad > 0.0) || !(gamma_ad < 1.0))
        throw DomainError("adiabatic_time: gamma_ad must lie in (0,1)");
    const double u = 4.0 * Lambda_final * Lambda_final / (p.omega_NV * p.omega_K);
    if (std::fabs(1.0 - u) < kCriticalTol) return kInf;
    if (u > 1.0)
        throw PhaseError("adiabatic_time: Lambda_final beyond the critical coupling");
    return 1.0 / (2.0 * gamma_ad * p.omega_K * std::sqrt(1.0 - u));
}

// Two readings of the time-rescaled QFI
//   F = 8 (gamma omega_K T)^4 Lambda^2 e^{2r} x_b^2 n^2 / Lambda_c^4 :
// either Lambda is an independent input (read from the parameters) and T is
// free, or Lambda is implied by T through the adiabatic-time relation.
enum class TimeScaling { FixedCoupling, CouplingFromTime };

inline double qfi_vs_time(const SystemParameters& p, const SqueezedFrame& frame,
                          const AdiabaticSchedule& sched, int n,
                          TimeScaling mode = TimeScaling::FixedCoupling) {
    if (n < 0) throw DomainError("qfi_vs_time: n must be non-negative");
    if (!(sched.T > 0.0)) throw DomainError("qfi_vs_time: T must be positive");
    const double Lc2 = p.omega_NV * p.omega_K / 4.0;
    double L2;
    if (mode == TimeScaling::FixedCoupling) {
        const double L = frame.lambda_e * p.x_b + p.g0;
        L2 = L * L;
    } else {
        const double s = 2.0 * sched.gamma_ad * p.omega_K * sched.T;
        const double u = 1.0 - 1.0 / (s * s);
        if (u < 0.0)
            throw DomainError("qfi_vs_time: sweep time too short, the implied "
                              "coupling is imaginary");
        L2 = u * Lc2;
    }
    const double gwt = sched.gamma_ad * p.omega_K * sched.T;
    const double e2r = std::exp(2.0 * frame.r);
    const double nn = static_cast<double>(n);
    return 8.0 * gwt * gwt * gwt * gwt * L2 * e2r * p.x_b * p.x_b * nn * nn / (Lc2 * Lc2);
}

// ---------------------------------------------------------------------------
// Truncated-Fock oracle
// ---------------------------------------------------------------------------

// S(xi)|n> with S = exp[(xi/2)(a+^2 - a^2)], computed by exponentiating the
// banded antisymmetric generator onto the Fock vector in substeps. The
// truncated generator stays antisymmetric, so each substep is orthogonal and
// the norm is preserved to rounding.
inline std::vector<double> squeezed_number_state(double xi, int n, int dim) {
    if (n < 0 || n >= dim)
        throw DomainError("squeezed_number_state: need 0 <= n < dim");
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(n)] = 1.0;
    if (xi == 0.0) return v;

    std::vector<double> up(static_cast<std::size_t>(dim), 0.0);
    for (int m = 0; m + 2 < dim; ++m)
        up[static_cast<std::size_t>(m)] =
            0.5 * std::sqrt(double(m + 1) * double(m + 2));

    const double norm_bound = std::fabs(xi) * (dim + 2);
    const int nsub = std::max(1, static_cast<int>(std::ceil(norm_bound / 0.5)));
    const double c = xi / nsub;

    std::vector<double> term(v.size()), next(v.size());
    for (int s = 0; s < nsub; ++s) {
        term = v;
        std::vector<double> out = v;
        for (int k = 1; k < 64; ++k) {
            double tn = 0.0, on = 0.0;
            for (int m = 0; m < dim; ++m) {
                double t = 0.0;
                if (m >= 2) t += c * up[static_cast<std::size_t>(m - 2)] * term[static_cast<std::size_t>(m - 2)];
                if (m + 2 < dim) t -= c * up[static_cast<std::size_t>(m)] * term[static_cast<std::size_t>(m + 2)];
                next[static_cast<std::size_t>(m)] = t / k;
            }
            term.swap(next);
            for (int m = 0; m < dim; ++m) {
                out[static_cast<std::size_t>(m)] += term[static_cast<std::size_t>(m)];
                tn += term[static_cast<std::size_t>(m)] * term[static_cast<std::size_t>(m)];
                on += out[static_cast<std::size_t>(m)] * out[static_cast<std::size_t>(m)];
            }
            if (tn < 1e-36 * on) break;
        }
        v = out;
    }
    return v;
}

struct FockOracleOptions {
    int dim = 0;                  // 0: auto, max(64, ceil(16 e^{2 xi}))
    double step = 0.0;            // 0: auto, 1e-5*|lambda| inflated to keep the
                                  //    fidelity deficit above the rounding floor
    double tail_tol = 1e-12;      // max probability in the top 8 Fock slots
    double richardson_tol = 1e-2; // max relative spread of the two step estimates
};

namespace detail {

inline double fock_xi_at(double lambda, const SystemParameters& p,
                         const SqueezedFrame& frame) {
    const double L = lambda * std::exp(frame.r) * p.x_b + p.g0;
    const double u = 4.0 * L * L / (p.omega_NV * p.omega_K);
    if (!(u < 1.0))
        throw StepError("fock_oracle_qfi: stencil point left the normal phase");
    return -0.25 * std::log1p(-u);
}

inline void check_tail(const std::vector<double>& v, double tol) {
    double tail = 0.0;
    const std::size_t dim = v.size();
    for (std::size_t m = dim - std::min<std::size_t>(8, dim); m < dim; ++m)
        tail += v[m] * v[m];
    if (tail > tol)
        throw TruncationError("fock_oracle_qfi: Fock tail mass " + std::to_string(tail) +
                              " exceeds tolerance");
}

} // namespace detail

// Independent QFI estimate from the fidelity susceptibility of the squeezed
// number state: F = 8 (1 - |<psi(l-h/2)|psi(l+h/2)>|) / h^2, Richardson-refined
// with the half step. Shares nothing with eigenstate_qfi beyond xi(lambda).
inline double fock_oracle_qfi(const EigenstateSpec& spec, const SystemParameters& p,
                              FockOracleOptions opt = {}) {
    if (spec.phase_point.phase != Phase::Normal)
        throw PhaseError("fock_oracle_qfi: oracle defined in the normal phase only");

    const double lambda = p.lambda;
    double h = opt.step > 0.0 ? opt.step : 1e-5 * std::max(std::fabs(lambda), 1e-30);

    const double xi0 = detail::fock_xi_at(lambda, p, spec.frame);
    int dim = opt.dim;
    if (dim <= 0)
        dim = std::max(64, static_cast<int>(std::ceil(16.0 * std::exp(2.0 * xi0))) + spec.n);

    auto fidelity = [&](double step) {
        const double xp = detail::fock_xi_at(lambda + step / 2, p, spec.frame);
        const double xm = detail::fock_xi_at(lambda - step / 2, p, spec.frame);
        const std::vector<double> vp = squeezed_number_state(xp, spec.n, dim);
        const std::vector<double> vm = squeezed_number_state(xm, spec.n, dim);
        detail::check_tail(vp, opt.tail_tol);
        detail::check_tail(vm, opt.tail_tol);
        double dot = 0.0;
        for (std::size_t m = 0; m < vp.size(); ++m) dot += vp[m] * vm[m];
        return std::fabs(dot);
    };

    if (opt.step <= 0.0) {
        // keep the fidelity deficit well above double rounding
        const double d0 = 1.0 - fidelity(h);
        if (d0 <= 0.0)
            h = 2e-2 * std::max(std::fabs(lambda), 1e-30);
        else if (d0 < 1e-8)
            h = std::min(h * std::sqrt(1e-8 / d0), 2e-2 * std::fabs(lambda));
    }

    const double f1 = fidelity(h);
    const double f2 = fidelity(h / 2);
    const double F1 = 8.0 * (1.0 - f1) / (h * h);
    const double F2 = 8.0 * (1.0 - f2) / (h * h / 4.0);
    // rounding on the fidelities themselves maps to ~1e-13 * 32/h^2 on F
    const double noise_floor = 32.0 * 1e-13 / (h * h);
    const double scale = std::max(std::fabs(F2), noise_floor);
    if (std::fabs(F2 - F1) > opt.richardson_tol * scale)
        throw StepError("fock_oracle_qfi: step estimates disagree by more than " +
                        std::to_string(opt.richardson_tol));
    return (4.0 * F2 - F1) / 3.0;
}

} // namespace smm
