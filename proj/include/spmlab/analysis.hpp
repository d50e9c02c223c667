#pragma once

#include "cell_model.hpp"
#include "discretizers.hpp"
#include "parallel.hpp"
#include "simulator.hpp"
#include "steppers.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spmlab {

// ------------------------------------------------------------ metrics

inline void check_pair(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("metric: sequence lengths differ");
    if (a.empty()) throw std::invalid_argument("metric: empty sequences");
}

/// Mean absolute error in mV between two voltage sequences given in V.
inline double mae(const std::vector<double>& ref, const std::vector<double>& cand) {
    check_pair(ref, cand);
    double s = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) s += std::abs(ref[i] - cand[i]);
    return 1000.0 * s / static_cast<double>(ref.size());
}

inline double rmse(const std::vector<double>& ref, const std::vector<double>& cand) {
    check_pair(ref, cand);
    double s = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) s += (ref[i] - cand[i]) * (ref[i] - cand[i]);
    return 1000.0 * std::sqrt(s / static_cast<double>(ref.size()));
}

// --------------------------------------------------- frequency domain

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> w(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(10.0, a + (b - a) * i / (n - 1.0));
    return w;
}

inline std::vector<double> default_bode_grid() { return log_grid(1e-5, 1e1, 200); }

struct channel_gain {
    std::vector<std::complex<double>> ss;
    std::vector<std::complex<double>> avg;
};

/// G(i w) = C (i w I - A)^{-1} B + D for both output channels.
inline channel_gain frequency_response(const state_space& m, const std::vector<double>& omega) {
    const Eigen::MatrixXcd A = m.A.cast<std::complex<double>>();
    const Eigen::VectorXcd B = m.B.cast<std::complex<double>>();
    const Eigen::MatrixXcd C = m.C.cast<std::complex<double>>();
    channel_gain g;
    g.ss.reserve(omega.size());
    g.avg.reserve(omega.size());
    for (double w : omega) {
        if (!(w > 0.0)) throw std::invalid_argument("frequency_response: omega must be positive");
        Eigen::MatrixXcd M = -A;
        M.diagonal().array() += std::complex<double>(0.0, w);
        const Eigen::VectorXcd x = M.partialPivLu().solve(B);
        g.ss.push_back((C.row(0) * x)(0) + m.D(0));
        g.avg.push_back((C.row(1) * x)(0) + m.D(1));
    }
    return g;
}

inline channel_gain transcendental_response(const electrode_params& el, const std::vector<double>& omega) {
    channel_gain g;
    for (double w : omega) {
        const std::complex<double> s(0.0, w);
        g.ss.push_back(transcendental_tf(el, s));
        g.avg.push_back(-3.0 / (el.R * s));
    }
    return g;
}

inline double magnitude_db(std::complex<double> z) { return 20.0 * std::log10(std::abs(z)); }

/// Phase in degrees, unwrapped along the sequence.
inline std::vector<double> phase_deg(const std::vector<std::complex<double>>& g) {
    std::vector<double> ph(g.size());
    double offset = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double p = std::arg(g[i]) * 180.0 / M_PI;
        if (i > 0) {
            while (p + offset - prev > 180.0) offset -= 360.0;
            while (p + offset - prev < -180.0) offset += 360.0;
        }
        ph[i] = p + offset;
        prev = ph[i];
    }
    return ph;
}

struct bode_series {
    std::string name;
    channel_gain gain;
};

struct bode_data {
    std::vector<double> omega;
    std::vector<bode_series> series;
};

// ---------------------------------------------------------------- FFT

struct spectrum_data {
    std::vector<double> omega;      // bin frequencies 2 pi k / (N dt) [rad/s]
    std::vector<double> amplitude;  // one-sided amplitude of the sinusoid in each bin [A]
    std::vector<double> magnitude;  // |X_k| of the unnormalized DFT
    std::string source;
    std::size_t samples = 0;
    double dt = 1.0;

    double nyquist() const { return M_PI / dt; }

    /// (1/N) sum over all two-sided bins of |X_k|^2, rebuilt from the one-sided half.
    double energy() const {
        const std::size_t N = samples;
        double e = 0.0;
        for (std::size_t k = 0; k < magnitude.size(); ++k) {
            const bool self_paired = (k == 0) || (N % 2 == 0 && k == N / 2);
            e += (self_paired ? 1.0 : 2.0) * magnitude[k] * magnitude[k];
        }
        return e / static_cast<double>(N);
    }
};

inline spectrum_data fft_spectrum(const current_profile& profile) {
    profile.validate();
    const std::size_t N = profile.size();
    if (N < 2) throw std::invalid_argument("fft_spectrum: need at least 2 samples");
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> X;
    fft.fwd(X, profile.current);
    spectrum_data s;
    s.samples = N;
    s.dt = profile.dt;
    s.source = profile.name;
    const std::size_t bins = N / 2 + 1;
    for (std::size_t k = 0; k < bins; ++k) {
        const double mag = std::abs(X[k]);
        const bool self_paired = (k == 0) || (N % 2 == 0 && k == N / 2);
        s.omega.push_back(2.0 * M_PI * k / (N * profile.dt));
        s.magnitude.push_back(mag);
        s.amplitude.push_back((self_paired ? 1.0 : 2.0) * mag / N);
    }
    return s;
}

// -------------------------------------------------- convergence sweep

using baseline_fn = std::function<simulation_trace(const model_spec&, const current_profile&)>;

struct sweep_config {
    std::vector<model_spec> candidates;
    std::vector<double> crates;
    model_spec baseline{method::fdm, 200, scheme::implicit_euler};
    double dt = 1.0;
    double max_duration_s = 0.0;  // 0: 1.25 h / crate
    voltage_window window{};
    unsigned jobs = default_jobs();
};

struct sweep_cell {
    model_spec spec;
    double crate = 0.0;
    std::optional<double> mae_mv;
    std::string status;  // ok | unstable | diverged
};

struct sweep_baseline {
    double crate = 0.0;
    std::size_t samples = 0;
    bool cut_off = false;
};

struct sweep_result {
    std::vector<sweep_baseline> baselines;
    std::vector<sweep_cell> cells;

    /// Mean over conditions; empty if any condition is absent.
    std::optional<double> average(const std::string& label) const {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& c : cells) {
            if (c.spec.label() != label) continue;
            if (!c.mae_mv) return std::nullopt;
            s += *c.mae_mv;
            ++n;
        }
        if (n == 0) return std::nullopt;
        return s / static_cast<double>(n);
    }

    std::optional<double> at(const std::string& label, double crate) const {
        for (const auto& c : cells)
            if (c.spec.label() == label && std::abs(c.crate - crate) < 1e-9) return c.mae_mv;
        return std::nullopt;
    }
};

inline bool cell_stable(const model_spec& s, const cell_params& p, double dt) {
    return stability_predicate(build_model(s.m, p.p, s.size), s.sch, dt) &&
           stability_predicate(build_model(s.m, p.n, s.size), s.sch, dt);
}

/// Voltage MAE of each candidate against the baseline, per constant-current condition.
/// The baseline runs until the voltage window is left; candidates run for the same samples.
inline sweep_result convergence_sweep(const sweep_config& cfg, const cell_params& params, const ocp_curve& ocp_p,
                                      const ocp_curve& ocp_n, baseline_fn baseline = {}) {
    if (!baseline) {
        baseline = [&](const model_spec& s, const current_profile& prof) {
            return run_simulation(s, prof, params, ocp_p, ocp_n, cfg.window);
        };
    }
    sweep_result res;
    std::vector<std::vector<double>> ref(cfg.crates.size());
    std::vector<current_profile> profiles(cfg.crates.size());
    for (std::size_t i = 0; i < cfg.crates.size(); ++i) {
        const double crate = cfg.crates[i];
        if (!(crate > 0.0)) throw std::invalid_argument("convergence_sweep: C-rates must be positive");
        const double dur = cfg.max_duration_s > 0.0 ? cfg.max_duration_s : 1.25 * 3600.0 / crate;
        const auto n = static_cast<std::size_t>(std::ceil(dur / cfg.dt));
        auto prof = current_profile::constant(crate_to_current(crate, params.Q_nom), n, cfg.dt);
        const simulation_trace tr = baseline(cfg.baseline, prof);
        std::vector<double> v;
        for (double x : tr.voltage) {
            if (!std::isfinite(x)) break;
            v.push_back(x);
        }
        if (v.empty()) throw std::runtime_error("convergence_sweep: empty baseline");
        res.baselines.push_back({crate, v.size(), tr.cut_off()});
        profiles[i] = prof.truncated(v.size());
        ref[i] = std::move(v);
    }

    const std::size_t nc = cfg.crates.size();
    res.cells.resize(cfg.candidates.size() * nc);
    std::vector<char> stable(cfg.candidates.size());
    for (std::size_t c = 0; c < cfg.candidates.size(); ++c) stable[c] = cell_stable(cfg.candidates[c], params, cfg.dt);

    voltage_window fixed = cfg.window;
    fixed.enforce = false;
    parallel_for(
        res.cells.size(),
        [&](std::size_t idx) {
            const std::size_t c = idx / nc, k = idx % nc;
            sweep_cell& cell = res.cells[idx];
            cell.spec = cfg.candidates[c];
            cell.crate = cfg.crates[k];
            if (!stable[c]) {
                cell.status = "unstable";
                return;
            }
            const auto tr = run_simulation(cell.spec, profiles[k], params, ocp_p, ocp_n, fixed);
            if (tr.diverged() || tr.size() != ref[k].size()) {
                cell.status = "diverged";
                return;
            }
            cell.mae_mv = mae(ref[k], tr.voltage);
            cell.status = "ok";
        },
        cfg.jobs);
    return res;
}

// ----------------------------------------------------- stability scan

/// Steps the homogeneous model from a perturbed uniform state; bounded if the state stays finite
/// and within 1e3 times its initial magnitude.
inline bool simulated_bounded(const state_space& m, scheme s, double dt, double c0, std::size_t steps = 3600) {
    stepper st(m, s, dt);
    Eigen::VectorXd x = init_state(m, c0);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) += 1e-3 * c0 * (std::sin(1.7 * i + 0.3) + ((i % 2) ? -0.5 : 0.5));
    const double x0 = x.cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < steps; ++k) {
        st.advance(x, 0.0, 0.0);
        if (!x.allFinite()) return false;
        if (x.cwiseAbs().maxCoeff() > 1e3 * x0) return false;
    }
    return true;
}

struct stability_row {
    int n = 0;
    electrode el = electrode::positive;
    double radius = 0.0;
    bool predicate_stable = true;
    bool simulated_stable = true;
};

struct stability_report {
    method m = method::fdm;
    scheme sch = scheme::explicit_euler;
    double dt = 1.0;
    std::vector<stability_row> rows;

    /// Least n for which either electrode is predicted unstable.
    std::optional<int> threshold() const {
        std::optional<int> t;
        for (const auto& r : rows)
            if (!r.predicate_stable && (!t || r.n < *t)) t = r.n;
        return t;
    }

    std::size_t mismatches() const {
        std::size_t k = 0;
        for (const auto& r : rows) k += (r.predicate_stable != r.simulated_stable);
        return k;
    }
};

inline stability_report stability_scan(method m, scheme s, double dt, const std::vector<int>& nodes,
                                       const cell_params& params, bool simulate = true) {
    stability_report rep{m, s, dt, {}};
    for (int n : nodes) {
        for (electrode e : {electrode::positive, electrode::negative}) {
            const auto model = build_model(m, params[e], n);
            stability_row r;
            r.n = n;
            r.el = e;
            r.radius = amplification_radius(model.A, s, dt);
            r.predicate_stable = r.radius <= 1.0 + 1e-12;
            r.simulated_stable = simulate ? simulated_bounded(model, s, dt, params[e].c0) : r.predicate_stable;
            rep.rows.push_back(r);
        }
    }
    return rep;
}

}  // namespace spmlab
