#pragma once

// Measurement-specific estimation: exact Gaussian moment engine for ladder
// operator polynomials (Isserlis/Wick with first moments), the error
// propagation formula, the printed intensity closed form, the measurement
// noise susceptibility, and the approximate decoupling relations.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "smm/errors.hpp"
#include "smm/gaussian_qfi.hpp"
#include "smm/numerics.hpp"

namespace smm {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Normal-ordered ladder polynomials
// ---------------------------------------------------------------------------

// sum_{j,k} c_{jk} b+^j b^k, keyed by (j, k).
class LadderPoly {
  public:
    using Key = std::pair<int, int>;

    LadderPoly() = default;

    static LadderPoly monomial(int j, int k, cplx c = 1.0) {
        LadderPoly p;
        p.terms_[{j, k}] = c;
        return p;
    }

    const std::map<Key, cplx>& terms() const { return terms_; }

    int max_degree() const {
        int d = 0;
        for (const auto& [key, c] : terms_) d = std::max(d, key.first + key.second);
        return d;
    }

    LadderPoly& operator+=(const LadderPoly& o) {
        for (const auto& [key, c] : o.terms_) add_term(key.first, key.second, c);
        return *this;
    }
    friend LadderPoly operator+(LadderPoly a, const LadderPoly& b) { return a += b; }

    LadderPoly& operator*=(cplx s) {
        for (auto& [key, c] : terms_) c *= s;
        return *this;
    }
    friend LadderPoly operator*(cplx s, LadderPoly p) { return p *= s; }

    // product with re-normal-ordering via
    //   b^k b+^j = sum_i i! C(k,i) C(j,i) b+^{j-i} b^{k-i}
    friend LadderPoly operator*(const LadderPoly& a, const LadderPoly& b) {
        LadderPoly out;
        for (const auto& [ka, ca] : a.terms_) {
            for (const auto& [kb, cb] : b.terms_) {
                const int j1 = ka.first, k1 = ka.second;
                const int j2 = kb.first, k2 = kb.second;
                const int imax = std::min(k1, j2);
                for (int i = 0; i <= imax; ++i) {
                    const double w = factorial(i) * binom(k1, i) * binom(j2, i);
                    out.add_term(j1 + j2 - i, k1 + k2 - i, ca * cb * w);
                }
            }
        }
        return out;
    }

    friend bool operator==(const LadderPoly& a, const LadderPoly& b) {
        return a.terms_ == b.terms_;
    }

    static double factorial(int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    }
    static double binom(int n, int k) {
        if (k < 0 || k > n) return 0.0;
        double b = 1.0;
        for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
        return b;
    }

  private:
    void add_term(int j, int k, cplx c) {
        auto it = terms_.find({j, k});
        if (it == terms_.end()) {
            if (c != cplx{0.0, 0.0}) terms_[{j, k}] = c;
        } else {
            it->second += c;
            if (it->second == cplx{0.0, 0.0}) terms_.erase(it);
        }
    }
    std::map<Key, cplx> terms_;
};

inline LadderPoly number_poly() { return LadderPoly::monomial(1, 1); }

// e^{i theta} b + e^{-i theta} b+
inline LadderPoly quadrature_poly(double theta) {
    LadderPoly p = LadderPoly::monomial(0, 1, std::polar(1.0, theta));
    p += LadderPoly::monomial(1, 0, std::polar(1.0, -theta));
    return p;
}

// b+^j + b^j
inline LadderPoly coherent_drive_poly(int j) {
    LadderPoly p = LadderPoly::monomial(j, 0);
    p += LadderPoly::monomial(0, j);
    return p;
}

// zeta (b+ b)^2 = zeta (b+^2 b^2 + b+ b)
inline LadderPoly anharmonic_poly(double zeta) {
    LadderPoly p = LadderPoly::monomial(2, 2, zeta);
    p += LadderPoly::monomial(1, 1, zeta);
    return p;
}

// ---------------------------------------------------------------------------
// Measurement operators
// ---------------------------------------------------------------------------

struct MeasurementOp {
    enum class Kind { Intensity, Quadrature, CoherentDrive, Anharmonic, Mixture };

    Kind kind = Kind::Intensity;
    double theta = 0.0;  // Quadrature
    int j = 1;           // CoherentDrive
    double zeta = 0.0;   // Anharmonic
    double eps = 0.0;    // Mixture weight of the noise operator
    std::shared_ptr<const MeasurementOp> base;   // Mixture
    std::shared_ptr<const MeasurementOp> noise;  // Mixture

    static MeasurementOp intensity() { return {}; }
    static MeasurementOp quadrature(double theta) {
        MeasurementOp m;
        m.kind = Kind::Quadrature;
        m.theta = theta;
        return m;
    }
    static MeasurementOp coherent_drive(int j) {
        if (j < 1) throw DomainError("MeasurementOp: coherent drive needs j >= 1");
        MeasurementOp m;
        m.kind = Kind::CoherentDrive;
        m.j = j;
        return m;
    }
    static MeasurementOp anharmonic(double zeta) {
        MeasurementOp m;
        m.kind = Kind::Anharmonic;
        m.zeta = zeta;
        return m;
    }
    static MeasurementOp mixture(MeasurementOp base, MeasurementOp noise, double eps) {
        if (!(eps >= 0.0) || !(eps < 1.0))
            throw DomainError("MeasurementOp: mixture weight must lie in [0,1)");
        MeasurementOp m;
        m.kind = Kind::Mixture;
        m.eps = eps;
        m.base = std::make_shared<MeasurementOp>(std::move(base));
        m.noise = std::make_shared<MeasurementOp>(std::move(noise));
        return m;
    }

    LadderPoly to_poly() const {
        switch (kind) {
            case Kind::Intensity: return number_poly();
            case Kind::Quadrature: return quadrature_poly(theta);
            case Kind::CoherentDrive: return coherent_drive_poly(j);
            case Kind::Anharmonic: return anharmonic_poly(zeta);
            case Kind::Mixture: {
                LadderPoly p = (1.0 - eps) * base->to_poly();
                p += eps * noise->to_poly();
                return p;
            }
        }
        throw DomainError("MeasurementOp: unknown kind");
    }
};

// ---------------------------------------------------------------------------
// Exact Gaussian moment engine
// ---------------------------------------------------------------------------

// Moments of a single-mode Gaussian state from (mean, cov) alone. With
// beta = <b>, nbar = <db+ db>, msq = <db db>, the normal-ordered moment is
//
//   <b+^j b^k> = sum_{p,q} C(j,p) C(k,q) conj(beta)^{j-p} beta^{k-q} M0(p,q)
//   M0(p,q)    = sum_r p! q! / (2^t t! 2^s s! r!) conj(msq)^t msq^s nbar^r
//
// over pairings with r mixed contractions, 2t = p - r, 2s = q - r. Normal
// ordering makes every mixed contraction equal nbar; ordering corrections
// enter only through the polynomial algebra in LadderPoly.
class MomentEngine {
  public:
    explicit MomentEngine(const GaussianState& st, int max_order = 16) : max_order_(max_order) {
        if (max_order_ < 8 || max_order_ % 2 != 0)
            throw DomainError("MomentEngine: max_order must be even and >= 8");
        st.validate();
        beta_ = cplx(st.mean.x, st.mean.y) / std::sqrt(2.0);
        nbar_ = 0.5 * (st.cov.m11 + st.cov.m22 - 1.0);
        msq_ = cplx(0.5 * (st.cov.m11 - st.cov.m22), st.cov.m12);
    }

    cplx moment(int j, int k) const {
        if (j + k > max_order_)
            throw OrderError("MomentEngine: moment order " + std::to_string(j + k) +
                             " exceeds max_order " + std::to_string(max_order_));
        const auto key = std::make_pair(j, k);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        cplx total = 0.0;
        for (int p = 0; p <= j; ++p) {
            for (int q = 0; q <= k; ++q) {
                cplx mean_part = LadderPoly::binom(j, p) * LadderPoly::binom(k, q) *
                                 ipow(std::conj(beta_), j - p) * ipow(beta_, k - q);
                if (mean_part == cplx{0.0, 0.0}) continue;
                total += mean_part * central_moment(p, q);
            }
        }
        cache_[key] = total;
        return total;
    }

    cplx expectation_c(const LadderPoly& poly) const {
        cplx e = 0.0;
        for (const auto& [key, c] : poly.terms()) e += c * moment(key.first, key.second);
        return e;
    }

    double expectation(const LadderPoly& poly) const { return expectation_c(poly).real(); }

    double variance(const LadderPoly& poly) const {
        const double e = expectation(poly);
        const double e2 = expectation(poly * poly);
        return e2 - e * e;
    }

    double nbar() const { return nbar_; }
    cplx msq() const { return msq_; }
    cplx beta() const { return beta_; }

  private:
    static cplx ipow(cplx b, int n) {
        cplx r = 1.0;
        for (int i = 0; i < n; ++i) r *= b;
        return r;
    }

    cplx central_moment(int p, int q) const {
        cplx tot = 0.0;
        const int rmax = std::min(p, q);
        for (int r = rmax; r >= 0; --r) {
            if ((p - r) % 2 || (q - r) % 2) continue;
            const int t = (p - r) / 2, s = (q - r) / 2;
            const double count = LadderPoly::factorial(p) * LadderPoly::factorial(q) /
                                 (std::exp2(t) * LadderPoly::factorial(t) * std::exp2(s) *
                                  LadderPoly::factorial(s) * LadderPoly::factorial(r));
            tot += count * ipow(std::conj(msq_), t) * ipow(msq_, s) * ipow(cplx(nbar_), r);
        }
        return tot;
    }

    int max_order_;
    cplx beta_;
    double nbar_ = 0.0;
    cplx msq_;
    mutable std::map<std::pair<int, int>, cplx> cache_;
};

inline double expectation(const MeasurementOp& op, const GaussianState& st,
                          int max_order = 16) {
    return MomentEngine(st, max_order).expectation(op.to_poly());
}

// ---------------------------------------------------------------------------
// Error propagation
// ---------------------------------------------------------------------------

struct PrecisionResult {
    double value = 0.0;        // delta lambda (+inf when null_sensitivity)
    double noise = 0.0;        // Delta O
    double slope = 0.0;        // d<O>/d lambda
    bool null_sensitivity = false;
};

// delta lambda |_O = Delta O / |d<O>/d lambda|, moments exact, derivative by
// Richardson-refined central difference. A slope below slope_tol is reported
// as the +inf sentinel, not an exception.
inline PrecisionResult error_propagation(const MeasurementOp& op, const StateFn& state_fn,
                                         double lambda, double step = 0.0,
                                         double slope_tol = 1e-12, int max_order = 16) {
    const LadderPoly poly = op.to_poly();
    const double h =
        snap_step(lambda, step > 0.0 ? step : 1e-6 * std::max(std::fabs(lambda), 1e-300));

    const MomentEngine e0(state_fn(lambda), max_order);
    PrecisionResult r;
    r.noise = std::sqrt(std::max(e0.variance(poly), 0.0));

    auto mean_at = [&](double l) { return MomentEngine(state_fn(l), max_order).expectation(poly); };
    const double d1 = (mean_at(lambda + h) - mean_at(lambda - h)) / (2.0 * h);
    const double d2 = (mean_at(lambda + h / 2) - mean_at(lambda - h / 2)) / h;
    r.slope = (4.0 * d2 - d1) / 3.0;

    if (std::fabs(r.slope) < slope_tol) {
        r.null_sensitivity = true;
        r.value = kInf;
        return r;
    }
    r.value = r.noise / std::fabs(r.slope);
    return r;
}

// ---------------------------------------------------------------------------
// Intensity measurement closed form
// ---------------------------------------------------------------------------

// The printed closed form sqrt((C11+C22)^2 - 1)/|d(C11+C22)/dlambda| lives in
// the normalization where vacuum is the identity; both it and the exact
// Isserlis route are evaluated with analytic lambda-derivatives and returned
// side by side. The two disagree: near criticality the printed form comes
// out a factor sqrt(2) below the exact error propagation (and hence below
// the Cramer-Rao bound), so relative_gap is genuinely nonzero there.
struct IntensityPrecision {
    double closed_form = 0.0;
    double exact = 0.0;
    double relative_gap = 0.0;
    bool agrees = false;  // gap within 1e-8
};

inline IntensityPrecision intensity_precision_closed_form(const DriftModel& dm,
                                                          const SymMat2& cov,
                                                          const SystemParameters& p,
                                                          const SqueezedFrame& frame) {
    if (!dm.stable)
        throw StabilityError("intensity_precision_closed_form: unstable drift");
    const SteadyState means = steady_means(p);
    const double slope_w = effective_frequency_slope(p, frame, means, dm.mode);
    const double u = dm.omega_eff + p.omega_m;
    const double D = dm.Delta;

    // T_p = 2 (C11 + C22); dT_p/dlambda from the analytic covariance.
    const double Tp = 2.0 * (cov.m11 + cov.m22);
    const double dTp = slope_w * u * (2.0 * D + u * p.omega_m) / (2.0 * D * D);

    IntensityPrecision out;
    const double nbar = 0.5 * (cov.m11 + cov.m22 - 1.0);
    const double m2 = 0.25 * (cov.m11 - cov.m22) * (cov.m11 - cov.m22) +
                      cov.m12 * cov.m12;
    const double var_exact = nbar * nbar + nbar + m2;
    const double dnbar = dTp / 4.0;

    if (dTp == 0.0) {
        out.closed_form = kInf;
        out.exact = kInf;
        out.relative_gap = 0.0;
        out.agrees = true;
        return out;
    }
    out.closed_form = std::sqrt(std::max(Tp * Tp - 1.0, 0.0)) / std::fabs(dTp);
    out.exact = std::sqrt(std::max(var_exact, 0.0)) / std::fabs(dnbar);
    out.relative_gap = std::fabs(out.closed_form - out.exact) / out.exact;
    out.agrees = out.relative_gap <= 1e-8;
    return out;
}

// ---------------------------------------------------------------------------
// Measurement noise susceptibility
// ---------------------------------------------------------------------------

struct SusceptibilityOptions {
    std::array<double, 3> eps_ladder{1e-3, 1e-4, 1e-5};
    double step = 0.0;        // lambda-derivative step (0: 1e-6 |lambda|)
    double spread_tol = 0.05; // relative spread of the Richardson extrapolants
    int max_order = 16;
};

struct SusceptibilityResult {
    double chi = 0.0;
    double spread = 0.0;               // |difference of the two extrapolants|
    std::array<double, 3> ladder{};    // g(eps) on the ladder
};

// chi = lim_{eps->0} (1/eps) [1 - d2l|_P / d2l|_{(1-eps)P + eps N}], evaluated
// on a decreasing-eps ladder with Richardson extrapolation. Mixture moments
// (including P-N cross covariances) come exactly from the Isserlis engine.
inline SusceptibilityResult noise_susceptibility(const MeasurementOp& perfect,
                                                 const MeasurementOp& noise,
                                                 const StateFn& state_fn, double lambda,
                                                 SusceptibilityOptions opt = {}) {
    const LadderPoly pP = perfect.to_poly();
    const LadderPoly pN = noise.to_poly();
    if (pP == pN) return {0.0, 0.0, {0.0, 0.0, 0.0}};

    const double h = snap_step(
        lambda, opt.step > 0.0 ? opt.step : 1e-6 * std::max(std::fabs(lambda), 1e-300));

    // shared stencil
    const MomentEngine e0(state_fn(lambda), opt.max_order);
    const MomentEngine ep(state_fn(lambda + h), opt.max_order);
    const MomentEngine em(state_fn(lambda - h), opt.max_order);
    const MomentEngine ep2(state_fn(lambda + h / 2), opt.max_order);
    const MomentEngine em2(state_fn(lambda - h / 2), opt.max_order);

    auto sq_precision = [&](const LadderPoly& poly) {
        const double var = e0.variance(poly);
        const double d1 = (ep.expectation(poly) - em.expectation(poly)) / (2.0 * h);
        const double d2 = (ep2.expectation(poly) - em2.expectation(poly)) / h;
        const double slope = (4.0 * d2 - d1) / 3.0;
        if (!(std::fabs(slope) > 0.0))
            throw DomainError("noise_susceptibility: measurement carries no "
                              "lambda sensitivity");
        return var / (slope * slope);
    };

    const double d2P = sq_precision(pP);
    SusceptibilityResult res;
    for (std::size_t i = 0; i < opt.eps_ladder.size(); ++i) {
        const double eps = opt.eps_ladder[i];
        LadderPoly mix = (1.0 - eps) * pP;
        mix += eps * pN;
        res.ladder[i] = (1.0 - d2P / sq_precision(mix)) / eps;
    }

    // eps ratio is 10; two Richardson levels over the three rungs
    const double x12 = (10.0 * res.ladder[1] - res.ladder[0]) / 9.0;
    const double x23 = (10.0 * res.ladder[2] - res.ladder[1]) / 9.0;
    res.chi = x23;
    res.spread = std::fabs(x12 - x23);

    const double gmax = std::max({std::fabs(res.ladder[0]), std::fabs(res.ladder[1]),
                                  std::fabs(res.ladder[2])});
    const double scale = std::max({std::fabs(res.chi), 0.1 * gmax, 1e-6});
    if (res.spread > opt.spread_tol * scale) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3e", res.spread);
        throw ConvergenceError(std::string("noise_susceptibility: ladder spread ") +
                               buf + " above tolerance");
    }
    return res;
}

// chi = zeta (2 + 8<n> - (2<n>^3 + 2<n>^2)/(d<n>/dlambda)), as printed; the
// decoupled-moment counterpart of the exact ladder above.
inline double anharmonic_susceptibility_closed_form(double zeta, const GaussianState& st,
                                                    double dn_dlambda) {
    if (dn_dlambda == 0.0)
        throw DomainError("anharmonic_susceptibility_closed_form: zero derivative");
    const double n = MomentEngine(st).nbar();
    return zeta * (2.0 + 8.0 * n - (2.0 * n * n * n + 2.0 * n * n) / dn_dlambda);
}

// ---------------------------------------------------------------------------
// Decoupling relations
// ---------------------------------------------------------------------------

// A linear form c_b b + c_bd b+.
struct LinearMode {
    cplx c_b;
    cplx c_bd;

    LadderPoly to_poly() const {
        LadderPoly p = LadderPoly::monomial(0, 1, c_b);
        p += LadderPoly::monomial(1, 0, c_bd);
        return p;
    }
};

inline double exact_ordered_moment(std::span<const LinearMode> ops,
                                   const GaussianState& st) {
    LadderPoly prod = LadderPoly::monomial(0, 0);
    for (const auto& op : ops) prod = prod * op.to_poly();
    return MomentEngine(st).expectation(prod);
}

// Third order:  <ABC>  ~ <AB><C> + <A><BC> + <AC><B> - 2<A><B><C>
// Fourth order: <ABCD> ~ <AB><CD> + <AD><BC> + <AC><BD> - 2<A><B><C><D>
inline double decoupled_moment(std::span<const LinearMode> ops, const GaussianState& st) {
    if (ops.size() != 3 && ops.size() != 4)
        throw ArityError("decoupled_moment: supported for 3 or 4 operators only");
    MomentEngine eng(st);
    auto one = [&](const LinearMode& a) { return eng.expectation_c(a.to_poly()); };
    auto two = [&](const LinearMode& a, const LinearMode& b) {
        return eng.expectation_c(a.to_poly() * b.to_poly());
    };
    if (ops.size() == 3) {
        const cplx r = two(ops[0], ops[1]) * one(ops[2]) + one(ops[0]) * two(ops[1], ops[2]) +
                       two(ops[0], ops[2]) * one(ops[1]) -
                       2.0 * one(ops[0]) * one(ops[1]) * one(ops[2]);
        return r.real();
    }
    const cplx r = two(ops[0], ops[1]) * two(ops[2], ops[3]) +
                   two(ops[0], ops[3]) * two(ops[1], ops[2]) +
                   two(ops[0], ops[2]) * two(ops[1], ops[3]) -
                   2.0 * one(ops[0]) * one(ops[1]) * one(ops[2]) * one(ops[3]);
    return r.real();
}

} // namespace smm
