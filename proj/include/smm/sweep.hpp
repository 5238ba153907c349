#pragma once

// Sweep harness: presets, flat key=value configuration with Hz at the
// boundary, deterministic parallel grid evaluation, CSV output with reason
// codes, and the corrected vs strict-paper column diff.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "smm/closed_system.hpp"
#include "smm/errors.hpp"
#include "smm/gaussian_qfi.hpp"
#include "smm/measurement.hpp"
#include "smm/model.hpp"
#include "smm/open_system.hpp"

namespace smm {

inline constexpr const char* kToolVersion = "smm 1.0.0";
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Keys accepted in config files and --set overrides. Frequency-like keys are
// ordinary frequencies in Hz and are multiplied by 2 pi at this boundary;
// everything internal is rad/s.
inline const std::vector<std::string>& frequency_keys() {
    static const std::vector<std::string> keys{
        "omega_K", "omega_m", "omega_NV", "lambda", "g0",
        "Omega_p", "kappa_a", "kappa_b", "kappa_sigma", "F"};
    return keys;
}

inline const std::vector<std::string>& plain_keys() {
    static const std::vector<std::string> keys{
        "x_b", "fock_n", "gamma_ad", "zeta", "noise_j", "hierarchy_factor"};
    return keys;
}

inline bool is_frequency_key(const std::string& k) {
    const auto& v = frequency_keys();
    return std::find(v.begin(), v.end(), k) != v.end();
}

inline bool is_known_key(const std::string& k) {
    if (is_frequency_key(k)) return true;
    const auto& v = plain_keys();
    return std::find(v.begin(), v.end(), k) != v.end();
}

// Harness-level knobs carried next to the physical parameters.
struct HarnessParams {
    int fock_n = 1;                  // Fock label for qfi_closed
    double gamma_ad = 1e-2;          // adiabaticity parameter
    double zeta = 1.0;               // anharmonic noise strength
    int noise_j = 2;                 // coherent-drive noise order
    double hierarchy_factor = 10.0;  // ">>" threshold for validate
};

struct AxisSpec {
    std::string param;
    double lo = 0.0;   // CLI units (Hz for frequency-like params)
    double hi = 0.0;
    int count = 0;
    bool log = false;
};

inline const std::vector<std::string>& known_quantities() {
    static const std::vector<std::string> q{
        "xi", "qfi_closed", "qfi_gaussian", "qfi_near_critical", "tau", "delta",
        "precision_crb", "precision_intensity", "chi_coherent", "chi_anharmonic"};
    return q;
}

struct SweepConfig {
    std::string preset = "feasibility";
    std::map<std::string, double> overrides;  // CLI units
    AxisSpec axis;
    std::vector<std::string> outputs = known_quantities();
    Mode mode = Mode::Corrected;
    int jobs = 1;

    void validate() const {
        if (axis.param.empty()) throw ConfigError("sweep: no axis given");
        if (!is_known_key(axis.param))
            throw ConfigError("sweep: unknown axis parameter '" + axis.param + "'");
        if (axis.count < 2) throw ConfigError("sweep: axis needs at least 2 points");
        if (!(axis.lo < axis.hi))
            throw ConfigError("sweep: axis range must satisfy lo < hi");
        if (axis.log && !(axis.lo > 0.0))
            throw ConfigError("sweep: log axis needs a positive lower end");
        for (const auto& [k, v] : overrides) {
            if (!is_known_key(k)) throw ConfigError("sweep: unknown key '" + k + "'");
        }
        static const std::vector<std::string> strictly_positive{
            "omega_K", "omega_m", "omega_NV", "kappa_a", "kappa_b", "kappa_sigma"};
        if (std::find(strictly_positive.begin(), strictly_positive.end(), axis.param) !=
                strictly_positive.end() &&
            !(axis.lo > 0.0))
            throw ConfigError("sweep: axis '" + axis.param + "' must stay positive");
        if (outputs.empty()) throw ConfigError("sweep: no output quantities selected");
        for (const auto& o : outputs) {
            const auto& q = known_quantities();
            if (std::find(q.begin(), q.end(), o) == q.end())
                throw ConfigError("sweep: unknown quantity '" + o + "'");
        }
        if (jobs < 1) throw ConfigError("sweep: jobs must be >= 1");
    }
};

// Named presets in CLI units (Hz). "feasibility" carries the published decay
// and frequency scales of the NV / magnon / mechanical stack.
inline std::map<std::string, double> preset_values(const std::string& name) {
    if (name == "feasibility") {
        return {
            {"kappa_a", 1e7},  {"kappa_b", 1.0},   {"kappa_sigma", 1e3},
            {"omega_m", 1e4},  {"omega_NV", 1e10}, {"omega_K", 1e9},
            {"lambda", 1e3},   {"g0", 0.0},        {"Omega_p", 0.0},
            {"F", 1e12},       {"x_b", 1.0},
        };
    }
    throw ConfigError("unknown preset '" + name + "'");
}

// Effective CLI-unit key/value map: preset, then overrides.
inline std::map<std::string, double> effective_values(const SweepConfig& cfg) {
    std::map<std::string, double> v = preset_values(cfg.preset);
    for (const auto& [k, val] : cfg.overrides) v[k] = val;
    return v;
}

inline void assign_key(SystemParameters& p, HarnessParams& hp, const std::string& key,
                       double cli_value) {
    const double v = is_frequency_key(key) ? kTwoPi * cli_value : cli_value;
    if (key == "omega_K") p.omega_K = v;
    else if (key == "omega_m") p.omega_m = v;
    else if (key == "omega_NV") p.omega_NV = v;
    else if (key == "lambda") p.lambda = v;
    else if (key == "g0") p.g0 = v;
    else if (key == "Omega_p") p.Omega_p = v;
    else if (key == "kappa_a") p.kappa_a = v;
    else if (key == "kappa_b") p.kappa_b = v;
    else if (key == "kappa_sigma") p.kappa_sigma = v;
    else if (key == "F") p.F = v;
    else if (key == "x_b") p.x_b = v;
    else if (key == "fock_n") hp.fock_n = static_cast<int>(v);
    else if (key == "gamma_ad") hp.gamma_ad = v;
    else if (key == "zeta") hp.zeta = v;
    else if (key == "noise_j") hp.noise_j = static_cast<int>(v);
    else if (key == "hierarchy_factor") hp.hierarchy_factor = v;
    else throw ConfigError("unknown key '" + key + "'");
}

inline std::pair<SystemParameters, HarnessParams> materialize(const SweepConfig& cfg) {
    SystemParameters p;
    HarnessParams hp;
    for (const auto& [k, v] : effective_values(cfg)) assign_key(p, hp, k, v);
    p.validate();
    return {p, hp};
}

// ---------------------------------------------------------------------------
// Config file / serialization
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::map<std::string, double> parse_config_stream(std::istream& in) {
    std::map<std::string, double> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto notspace = [](unsigned char c) { return !std::isspace(c); };
        line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
        line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
        val.erase(val.begin(), std::find_if(val.begin(), val.end(), notspace));
        if (!is_known_key(key))
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": unknown key '" + key + "'");
        try {
            std::size_t pos = 0;
            const double d = std::stod(val, &pos);
            if (pos != val.size()) throw std::invalid_argument(val);
            out[key] = d;
        } catch (const std::exception&) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": bad numeric value '" + val + "'");
        }
    }
    return out;
}

inline std::string serialize_config(const SweepConfig& cfg) {
    std::ostringstream os;
    os << "# effective sweep configuration (" << kToolVersion << ")\n";
    os << "# preset=" << cfg.preset << " mode=" << to_string(cfg.mode) << "\n";
    for (const auto& [k, v] : effective_values(cfg)) os << k << " = " << format_double(v) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Sweep execution
// ---------------------------------------------------------------------------

// One-point summary of the estimation pipeline: the exact Gaussian QFI, the
// bound it implies, the intensity-measurement precision, and the two noise
// susceptibilities. Throws (StabilityError etc.) instead of sentinel-filling;
// sweeps use the per-quantity fallible path below instead.
struct PrecisionReport {
    double qfi = 0.0;
    double crb = 0.0;
    double precision_intensity = 0.0;
    double chi_coherent = 0.0;
    double chi_anharmonic = 0.0;
};

inline PrecisionReport precision_report(const SystemParameters& p, const HarnessParams& hp,
                                        Mode mode = Mode::Corrected) {
    const SqueezedFrame frame = squeezed_frame(p);
    const DriftModel dm = drift_model(p, frame, steady_means(p), mode);
    const StateFn fn = mechanical_state_fn(p, mode);
    const double generic = 1e-6 * std::max(std::fabs(p.lambda), 1e-300);
    const double step = dm.stable ? std::min(generic, critical_safe_step(p, dm)) : generic;

    PrecisionReport r;
    QfiOptions qopt;
    qopt.step = step;
    r.qfi = gaussian_qfi(fn, p.lambda, qopt);
    r.crb = precision_bound(r.qfi);
    r.precision_intensity =
        error_propagation(MeasurementOp::intensity(), fn, p.lambda, step).value;
    SusceptibilityOptions sopt;
    sopt.step = step;
    r.chi_coherent = noise_susceptibility(MeasurementOp::intensity(),
                                          MeasurementOp::coherent_drive(hp.noise_j), fn,
                                          p.lambda, sopt)
                         .chi;
    const SteadyState means = steady_means(p);
    const double slope_w = effective_frequency_slope(p, frame, means, mode);
    const double u = dm.omega_eff + p.omega_m;
    const double dn = slope_w * u * (2.0 * dm.Delta + u * p.omega_m) /
                      (8.0 * dm.Delta * dm.Delta);
    GaussianState st;
    st.cov = steady_covariance(dm, p);
    r.chi_anharmonic = anharmonic_susceptibility_closed_form(hp.zeta, st, dn);
    return r;
}

struct SweepRow {
    double axis_value = 0.0;              // CLI units
    std::vector<double> values;
    std::string reason;                   // "quantity:code" joined with ';'
};

struct SweepResult {
    std::vector<std::string> meta;        // '#'-prefixed header lines
    std::string axis_name;
    std::vector<std::string> columns;
    std::vector<SweepRow> rows;

    bool has_failures() const {
        for (const auto& r : rows)
            if (!r.reason.empty()) return true;
        return false;
    }
};

namespace detail {

struct RowContext {
    SystemParameters p;
    HarnessParams hp;
    Mode mode = Mode::Corrected;
};

inline double nbar_slope(const SystemParameters& p, const SqueezedFrame& frame,
                         const DriftModel& dm) {
    const SteadyState means = steady_means(p);
    const double slope_w = effective_frequency_slope(p, frame, means, dm.mode);
    const double u = dm.omega_eff + p.omega_m;
    return slope_w * u * (2.0 * dm.Delta + u * p.omega_m) / (8.0 * dm.Delta * dm.Delta);
}

inline double sweep_fd_step(const SystemParameters& p, const DriftModel& dm) {
    const double generic = 1e-6 * std::max(std::fabs(p.lambda), 1e-300);
    if (!dm.stable) return generic;
    return std::min(generic, critical_safe_step(p, dm));
}

inline void compute_row(const RowContext& ctx, const std::vector<std::string>& outputs,
                        SweepRow& row) {
    std::vector<std::string> reasons;
    auto fail = [&](const std::string& qty, const std::string& code) {
        reasons.push_back(qty + ":" + code);
        return std::numeric_limits<double>::quiet_NaN();
    };

    const SystemParameters& p = ctx.p;
    std::optional<SqueezedFrame> frame;
    std::optional<PhasePoint> phase;
    std::optional<DriftModel> dm;
    std::optional<SymMat2> cov;
    std::string frame_error;

    try {
        frame = squeezed_frame(p);
        phase = phase_point(p, *frame);
        dm = drift_model(p, *frame, steady_means(p), ctx.mode);
        if (dm->stable) cov = steady_covariance(*dm, p);
    } catch (const DomainError& e) {
        frame_error = e.what();
    }

    StateFn state_fn = mechanical_state_fn(p, ctx.mode);

    for (const auto& qty : outputs) {
        double v = std::numeric_limits<double>::quiet_NaN();
        if (!frame) {
            v = fail(qty, "domain");
            row.values.push_back(v);
            continue;
        }
        try {
            if (qty == "xi") {
                v = phase->xi;
                if (std::isinf(v)) reasons.push_back("xi:" + std::string(to_string(phase->phase)));
            } else if (qty == "qfi_closed") {
                v = eigenstate_qfi({ctx.hp.fock_n, *phase, *frame}, p);
                if (std::isinf(v)) reasons.push_back("qfi_closed:critical");
            } else if (qty == "tau") {
                v = dm->tau;
                if (std::isinf(v)) reasons.push_back("tau:unstable");
            } else if (qty == "delta") {
                v = dm->Delta;
            } else if (qty == "qfi_gaussian") {
                QfiOptions opt;
                opt.step = sweep_fd_step(p, *dm);
                v = gaussian_qfi(state_fn, p.lambda, opt);
            } else if (qty == "qfi_near_critical") {
                v = near_critical_qfi(p, *frame, *dm).delta_form;
            } else if (qty == "precision_crb") {
                QfiOptions opt;
                opt.step = sweep_fd_step(p, *dm);
                v = precision_bound(gaussian_qfi(state_fn, p.lambda, opt));
            } else if (qty == "precision_intensity") {
                const PrecisionResult pr = error_propagation(
                    MeasurementOp::intensity(), state_fn, p.lambda, sweep_fd_step(p, *dm));
                v = pr.value;
                if (pr.null_sensitivity) reasons.push_back("precision_intensity:null_sensitivity");
            } else if (qty == "chi_coherent") {
                SusceptibilityOptions opt;
                opt.step = sweep_fd_step(p, *dm);
                v = noise_susceptibility(MeasurementOp::intensity(),
                                         MeasurementOp::coherent_drive(ctx.hp.noise_j),
                                         state_fn, p.lambda, opt)
                        .chi;
            } else if (qty == "chi_anharmonic") {
                if (!cov) throw StabilityError("unstable");
                GaussianState st;
                st.cov = *cov;
                v = anharmonic_susceptibility_closed_form(ctx.hp.zeta, st,
                                                          nbar_slope(p, *frame, *dm));
            }
        } catch (const PhaseError&) {
            v = fail(qty, std::string(to_string(phase->phase)));
        } catch (const StabilityError&) {
            v = fail(qty, "unstable");
        } catch (const StepError&) {
            v = fail(qty, "step");
        } catch (const ConvergenceError&) {
            v = fail(qty, "no_convergence");
        } catch (const DomainError&) {
            v = fail(qty, "domain");
        }
        row.values.push_back(v);
    }

    std::string joined;
    for (std::size_t i = 0; i < reasons.size(); ++i) {
        if (i) joined += ';';
        joined += reasons[i];
    }
    row.reason = joined;
}

} // namespace detail

inline std::vector<double> axis_grid(const AxisSpec& axis) {
    std::vector<double> g(static_cast<std::size_t>(axis.count));
    for (int i = 0; i < axis.count; ++i) {
        const double t = static_cast<double>(i) / (axis.count - 1);
        g[static_cast<std::size_t>(i)] =
            axis.log ? axis.lo * std::pow(axis.hi / axis.lo, t)
                     : axis.lo + (axis.hi - axis.lo) * t;
    }
    return g;
}

// Rows are computed by a small worker pool but stored at their grid index,
// so the output order and content never depend on scheduling.
inline SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    auto [base_p, base_hp] = materialize(cfg);

    SweepResult res;
    res.axis_name = cfg.axis.param;
    res.columns = cfg.outputs;

    res.meta.push_back(std::string("# ") + kToolVersion + " sweep");
    res.meta.push_back("# preset=" + cfg.preset + " mode=" + to_string(cfg.mode));
    {
        std::ostringstream ax;
        ax << "# axis=" << cfg.axis.param << ":" << format_double(cfg.axis.lo) << ":"
           << format_double(cfg.axis.hi) << ":" << cfg.axis.count
           << (cfg.axis.log ? ":log" : "");
        res.meta.push_back(ax.str());
    }
    res.meta.push_back("# eps_crit=" + format_double(kCriticalTol) +
                       " hierarchy_factor=" + format_double(base_hp.hierarchy_factor));
    {
        std::ostringstream cf;
        cf << "# config:";
        for (const auto& [k, v] : effective_values(cfg)) cf << ' ' << k << '=' << format_double(v);
        res.meta.push_back(cf.str());
    }

    const std::vector<double> grid = axis_grid(cfg.axis);
    res.rows.resize(grid.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            detail::RowContext ctx{base_p, base_hp, cfg.mode};
            SystemParameters p = base_p;
            HarnessParams hp = base_hp;
            assign_key(p, hp, cfg.axis.param, grid[i]);
            ctx.p = p;
            ctx.hp = hp;
            SweepRow& row = res.rows[i];
            row.axis_value = grid[i];
            detail::compute_row(ctx, cfg.outputs, row);
        }
    };

    const int nthreads = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(grid.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return res;
}

inline void write_csv(const SweepResult& res, std::ostream& os) {
    for (const auto& m : res.meta) os << m << "\n";
    os << res.axis_name;
    for (const auto& c : res.columns) os << ',' << c;
    os << ",reason\n";
    for (const auto& row : res.rows) {
        os << format_double(row.axis_value);
        for (double v : row.values) os << ',' << format_double(v);
        os << ',' << row.reason << "\n";
    }
}

// Column-level diff between the corrected and strict-paper variants of the
// same sweep. A column is flagged when any row differs bit-for-bit; the
// maximum relative deviation over the grid is reported alongside.
struct ColumnDiff {
    std::string column;
    double max_rel = 0.0;
};

inline std::vector<ColumnDiff> mode_diff(SweepConfig cfg) {
    cfg.mode = Mode::Corrected;
    const SweepResult a = run_sweep(cfg);
    cfg.mode = Mode::StrictPaper;
    const SweepResult b = run_sweep(cfg);

    std::vector<ColumnDiff> out;
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
        double max_rel = 0.0;
        bool changed = false;
        for (std::size_t r = 0; r < a.rows.size(); ++r) {
            const double va = a.rows[r].values[c];
            const double vb = b.rows[r].values[c];
            const bool both_nan = std::isnan(va) && std::isnan(vb);
            if (both_nan) continue;
            if (va != vb) {
                changed = true;
                const double denom = std::max(std::fabs(va), std::fabs(vb));
                if (denom > 0.0 && std::isfinite(va) && std::isfinite(vb))
                    max_rel = std::max(max_rel, std::fabs(va - vb) / denom);
                else
                    max_rel = kInf;
            }
        }
        if (changed) out.push_back({a.columns[c], max_rel});
    }
    return out;
}

} // namespace smm
