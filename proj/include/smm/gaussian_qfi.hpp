#pragma once

// Gaussian-state quantum Fisher information for the mechanical steady state,
// the near-critical closed forms, and the Cramer-Rao precision bound.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "smm/errors.hpp"
#include "smm/mat2.hpp"
#include "smm/numerics.hpp"
#include "smm/open_system.hpp"

namespace smm {

// Single-mode Gaussian state; vacuum covariance is diag(1/2, 1/2) and the
// purity is P = 1/(2 sqrt(det C)).
struct GaussianState {
    Vec2 mean;
    SymMat2 cov{0.5, 0.0, 0.5};

    double purity() const { return 1.0 / (2.0 * std::sqrt(cov.det())); }

    void validate() const {
        const double d = cov.det();
        if (!(cov.m11 > 0.0) || !(d > 0.0))
            throw DomainError("GaussianState: covariance must be positive definite");
        if (d < 0.25 * (1.0 - 1e-9))
            throw DomainError("GaussianState: det(C) < 1/4 violates the "
                              "uncertainty relation");
    }
};

using StateFn = std::function<GaussianState(double)>;

struct QfiOptions {
    double step = 0.0;          // 0: 1e-6 * |lambda|
    double onesided_tol = 1e-2; // gate on central vs one-sided disagreement
    int max_step_doublings = 3; // widen the stencil before giving up
};

struct QfiResult {
    double value = 0.0;
    double step_used = 0.0;
    double onesided_gap = 0.0;  // relative disagreement at the accepted step
    bool pure_state_guard = false;
};

namespace detail {

struct StateDerivs {
    SymMat2 dcov;
    double dP = 0.0;
    Vec2 dmean;
};

// QFI assembled from a state and its lambda-derivatives:
//   F = tr[(C^-1 C')^2]/(2(1+P^2)) + 2 P'^2/(1-P^4) + dmean^T C^-1 dmean.
// Near P = 1 the purity term is the 0/0 limit P'^2/(2(1-P)), guarded.
inline double assemble_qfi(const GaussianState& st, const StateDerivs& d,
                           bool* guard_used) {
    const double P = st.purity();
    double f = trace_inv_sq(st.cov, d.dcov) / (2.0 * (1.0 + P * P));
    if (P > 1.0 - 1e-9) {
        if (guard_used) *guard_used = true;
        const double denom = std::max(1.0 - P, 1e-15);
        if (std::fabs(d.dP) > 1e-12)
            f += d.dP * d.dP / (2.0 * denom);
    } else {
        f += 2.0 * d.dP * d.dP / (1.0 - P * P * P * P);
    }
    f += quad_form_inv(st.cov, d.dmean);
    return f;
}

} // namespace detail

// Exact Gaussian QFI with numerical lambda-derivatives (Richardson-refined
// central differences on a snapped stencil). Throws StepError when central
// and matched-order one-sided estimates keep disagreeing beyond tolerance
// after widening the stencil; StabilityError propagates from state_fn.
inline QfiResult gaussian_qfi_detailed(const StateFn& state_fn, double lambda,
                                       QfiOptions opt = {}) {
    const GaussianState st0 = state_fn(lambda);
    st0.validate();
    double h = opt.step > 0.0 ? opt.step : 1e-6 * std::max(std::fabs(lambda), 1e-300);

    QfiResult res;
    for (int attempt = 0;; ++attempt) {
        h = snap_step(lambda, h);
        const GaussianState sp = state_fn(lambda + h);
        const GaussianState sm = state_fn(lambda - h);
        const GaussianState sp2 = state_fn(lambda + h / 2);
        const GaussianState sm2 = state_fn(lambda - h / 2);

        auto central = [&](double fp, double fm, double fp2, double fm2) {
            const double d1 = (fp - fm) / (2.0 * h);
            const double d2 = (fp2 - fm2) / h;
            return (4.0 * d2 - d1) / 3.0;
        };
        auto onesided = [&](double f0, double fp, double fp2) {
            const double o1 = (fp - f0) / h;
            const double o2 = (fp2 - f0) / (h / 2);
            return 2.0 * o2 - o1;
        };

        detail::StateDerivs dc, doo;
        dc.dcov.m11 = central(sp.cov.m11, sm.cov.m11, sp2.cov.m11, sm2.cov.m11);
        dc.dcov.m12 = central(sp.cov.m12, sm.cov.m12, sp2.cov.m12, sm2.cov.m12);
        dc.dcov.m22 = central(sp.cov.m22, sm.cov.m22, sp2.cov.m22, sm2.cov.m22);
        dc.dP = central(sp.purity(), sm.purity(), sp2.purity(), sm2.purity());
        dc.dmean.x = central(sp.mean.x, sm.mean.x, sp2.mean.x, sm2.mean.x);
        dc.dmean.y = central(sp.mean.y, sm.mean.y, sp2.mean.y, sm2.mean.y);

        doo.dcov.m11 = onesided(st0.cov.m11, sp.cov.m11, sp2.cov.m11);
        doo.dcov.m12 = onesided(st0.cov.m12, sp.cov.m12, sp2.cov.m12);
        doo.dcov.m22 = onesided(st0.cov.m22, sp.cov.m22, sp2.cov.m22);
        doo.dP = onesided(st0.purity(), sp.purity(), sp2.purity());
        doo.dmean.x = onesided(st0.mean.x, sp.mean.x, sp2.mean.x);
        doo.dmean.y = onesided(st0.mean.y, sp.mean.y, sp2.mean.y);

        bool guard = false;
        const double f_c = detail::assemble_qfi(st0, dc, &guard);
        const double f_o = detail::assemble_qfi(st0, doo, nullptr);

        // noise floor: both estimates consistent with zero sensitivity
        const double floor = 1e3 * 2.2e-16 * (frobenius(st0.cov) / h) *
                             (frobenius(st0.cov) / h) / (st0.cov.det());
        const double gap = std::fabs(f_c - f_o) / std::max(std::fabs(f_c), floor);
        if (gap <= opt.onesided_tol || attempt >= opt.max_step_doublings) {
            if (gap > opt.onesided_tol)
                throw StepError("gaussian_qfi: central and one-sided estimates "
                                "disagree by " + std::to_string(gap));
            res.value = f_c;
            res.step_used = h;
            res.onesided_gap = gap;
            res.pure_state_guard = guard;
            return res;
        }
        h *= 2.0;
    }
}

inline double gaussian_qfi(const StateFn& state_fn, double lambda, QfiOptions opt = {}) {
    return gaussian_qfi_detailed(state_fn, lambda, opt).value;
}

// Near-critical closed forms. Both are the Delta -> 0 limit of the exact
// Gaussian QFI above, written against the gap and against the characteristic
// time; they coincide when sqrt(omega_m omega_eff) ~ kappa_b.
//
//   delta_form = (omega_m domega/dlambda)^2 / (2 Delta^2)
//   tau_form   = omega_m (domega/dlambda)^2 tau^2 / (8 omega_eff)
struct NearCriticalQfi {
    double delta_form = 0.0;
    double tau_form = 0.0;
    bool near_critical = false;  // Delta/kappa_b^2 <= 1e-2
};

inline NearCriticalQfi near_critical_qfi(const SystemParameters& p,
                                         const SqueezedFrame& frame,
                                         const DriftModel& dm) {
    if (!dm.stable)
        throw StabilityError("near_critical_qfi: drift matrix is not stable");
    if (!(dm.omega_eff > 0.0))
        throw DomainError("near_critical_qfi: omega_eff <= 0, tau form undefined");
    const SteadyState means = steady_means(p);
    const double slope = effective_frequency_slope(p, frame, means, dm.mode);
    const double dDelta = p.omega_m * slope;
    NearCriticalQfi r;
    r.delta_form = dDelta * dDelta / (2.0 * dm.Delta * dm.Delta);
    r.tau_form = p.omega_m * slope * slope * dm.tau * dm.tau / (8.0 * dm.omega_eff);
    r.near_critical = dm.Delta <= 1e-2 * p.kappa_b * p.kappa_b;
    return r;
}

// Quantum Cramer-Rao bound.
inline double precision_bound(double qfi) {
    if (!(qfi > 0.0))
        throw DomainError("precision_bound: QFI must be positive");
    return 1.0 / std::sqrt(qfi);
}

// lambda |-> mechanical steady Gaussian state (zero mean, stationary
// covariance). The closure is pure and safe for concurrent evaluation.
inline StateFn mechanical_state_fn(SystemParameters p, Mode mode = Mode::Corrected) {
    return [p, mode](double lambda) {
        SystemParameters q = p;
        q.lambda = lambda;
        GaussianState st;
        st.mean = {0.0, 0.0};
        st.cov = solve_steady_state(q, mode).cov;
        return st;
    };
}

// Gap-aware finite-difference step: move a fixed fraction of the distance to
// the dissipative critical point. Near the transition the covariance scales
// as 1/Delta and rounding noise in Delta forces steps well above ulp scale.
inline double critical_safe_step(const SystemParameters& p, const DriftModel& dm,
                                 double rel = 0.02) {
    const SqueezedFrame frame = squeezed_frame(p);
    const SteadyState means = steady_means(p);
    const double dDelta =
        std::fabs(p.omega_m * effective_frequency_slope(p, frame, means, dm.mode));
    double h = rel * std::fabs(dm.Delta) / std::max(dDelta, 1e-300);
    h = std::min(h, 0.05 * std::fabs(p.lambda));
    return snap_step(p.lambda, h);
}

} // namespace smm
