#pragma once

#include "cell_model.hpp"
#include "discretizers.hpp"
#include "steppers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spmlab {

/// Uniformly sampled applied current; sample k applies over [k dt, (k+1) dt).
struct current_profile {
    double dt = 1.0;
    std::vector<double> current;
    std::string name;
    std::string source;

    std::size_t size() const { return current.size(); }

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("profile: dt must be positive");
        for (double I : current)
            if (!std::isfinite(I)) throw std::invalid_argument("profile: non-finite current sample");
    }

    static current_profile constant(double I, std::size_t samples, double dt = 1.0, std::string name = {}) {
        current_profile p;
        p.dt = dt;
        p.current.assign(samples, I);
        p.name = std::move(name);
        p.source = "constant";
        return p;
    }

    current_profile truncated(std::size_t n) const {
        current_profile p = *this;
        if (p.current.size() > n) p.current.resize(n);
        return p;
    }
};

enum class sample_flag { ok, clamped, cutoff, diverged };

inline const char* to_string(sample_flag f) {
    switch (f) {
        case sample_flag::ok: return "ok";
        case sample_flag::clamped: return "clamped";
        case sample_flag::cutoff: return "cutoff";
        case sample_flag::diverged: return "diverged";
    }
    return "?";
}

inline sample_flag flag_from_string(const std::string& s) {
    if (s == "ok") return sample_flag::ok;
    if (s == "clamped") return sample_flag::clamped;
    if (s == "cutoff") return sample_flag::cutoff;
    if (s == "diverged") return sample_flag::diverged;
    throw std::invalid_argument("unknown flag '" + s + "'");
}

struct simulation_trace {
    std::vector<double> time;
    std::vector<double> voltage;
    std::vector<double> css_p, cavg_p, css_n, cavg_n;
    std::vector<sample_flag> flag;
    std::size_t steps = 0;  // samples processed, recorded or not

    std::size_t size() const { return time.size(); }
    bool diverged() const { return !flag.empty() && flag.back() == sample_flag::diverged; }
    bool cut_off() const { return !flag.empty() && flag.back() == sample_flag::cutoff; }

    void reserve(std::size_t n) {
        for (auto* v : {&time, &voltage, &css_p, &cavg_p, &css_n, &cavg_n}) v->reserve(n);
        flag.reserve(n);
    }
};

struct voltage_window {
    double v_min = 2.5;
    double v_max = 4.2;
    bool enforce = true;  // false: fixed-duration run, the window is not checked
};

inline constexpr double theta_clamp_lo = 1e-6;
inline constexpr double theta_clamp_hi = 1.0 - 1e-6;

/// Uniform-concentration fixed point whose outputs both equal c0.
inline Eigen::VectorXd init_state(const state_space& m, double c0) {
    const int n = m.states();
    Eigen::VectorXd x;
    if (m.tag == method::fdm) {
        x = Eigen::VectorXd::Constant(n, c0);
    } else if (m.tag == method::parabolic) {
        x = Eigen::Vector2d{c0, 0.0};
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(m.A);
        lu.setThreshold(1e-12);
        const Eigen::MatrixXd K = lu.kernel();
        if (K.cols() != 1) throw std::runtime_error("init_state: integrator subspace is not one-dimensional");
        Eigen::VectorXd v = K.col(0);
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        v /= v(imax);
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (std::abs(v(i)) < 1e-14) v(i) = 0.0;
        const double avg = m.C.row(1).dot(v);
        if (avg == 0.0) throw std::runtime_error("init_state: integrator mode is unobservable in c_avg");
        x = (c0 / avg) * v;
    }
    const Eigen::Vector2d y = m.C * x;
    const double tol = 1e-9 * std::max(1.0, std::abs(c0));
    if (std::abs(y(0) - c0) > tol || std::abs(y(1) - c0) > tol || (m.A * x).norm() > 1e-9 * x.norm() * m.A.norm())
        throw std::runtime_error("init_state: no uniform fixed point with outputs equal to c0");
    return x;
}

struct run_options {
    bool rk3_literal_inputs = false;
    bool record = true;
};

/// Both electrode particles advanced in lockstep from one current profile.
class simulator {
public:
    simulator(state_space model_p, state_space model_n, scheme sch, double dt, cell_params params,
              ocp_curve ocp_p, ocp_curve ocp_n, voltage_window window = {}, run_options opts = {})
        : mp_(std::move(model_p)),
          mn_(std::move(model_n)),
          sch_(sch),
          dt_(dt),
          params_(std::move(params)),
          ocp_p_(std::move(ocp_p)),
          ocp_n_(std::move(ocp_n)),
          window_(window),
          opts_(opts),
          sp_(mp_, sch, dt, opts.rk3_literal_inputs),
          sn_(mn_, sch, dt, opts.rk3_literal_inputs) {
        validate(params_);
        x0p_ = init_state(mp_, params_.p.c0);
        x0n_ = init_state(mn_, params_.n.c0);
    }

    const state_space& model(electrode e) const { return e == electrode::positive ? mp_ : mn_; }
    scheme kind() const { return sch_; }
    double dt() const { return dt_; }
    const cell_params& params() const { return params_; }
    run_options& options() { return opts_; }

    simulation_trace run(const current_profile& profile) {
        profile.validate();
        if (std::abs(profile.dt - dt_) > 1e-12 * dt_) throw std::invalid_argument("simulator: profile dt differs from stepper dt");
        simulation_trace tr;
        const std::size_t N = profile.size();
        if (opts_.record) tr.reserve(N);
        Eigen::VectorXd xp = x0p_, xn = x0n_;
        const double cmax_p = params_.p.c_max, cmax_n = params_.n.c_max;

        for (std::size_t k = 0; k < N; ++k) {
            const double I = profile.current[k];
            const double jp = molar_flux(I, electrode::positive, params_);
            const double jn = molar_flux(I, electrode::negative, params_);
            const Eigen::Vector2d yp = mp_.C * xp + mp_.D * jp;
            const Eigen::Vector2d yn = mn_.C * xn + mn_.D * jn;
            const double t = static_cast<double>(k) * dt_;
            ++tr.steps;

            if (!(yp.allFinite() && yn.allFinite() && xp.allFinite() && xn.allFinite())) {
                push(tr, t, std::numeric_limits<double>::quiet_NaN(), yp, yn, sample_flag::diverged, true);
                break;
            }
            sample_flag f = sample_flag::ok;
            double th_p = stoichiometry(yp(0), cmax_p);
            double th_n = stoichiometry(yn(0), cmax_n);
            if (th_p < theta_clamp_lo || th_p > theta_clamp_hi || th_n < theta_clamp_lo || th_n > theta_clamp_hi) {
                f = sample_flag::clamped;
                th_p = std::clamp(th_p, theta_clamp_lo, theta_clamp_hi);
                th_n = std::clamp(th_n, theta_clamp_lo, theta_clamp_hi);
            }
            if (!ocp_p_.contains(th_p) || !ocp_n_.contains(th_n)) {
                push(tr, t, std::numeric_limits<double>::quiet_NaN(), yp, yn, sample_flag::cutoff, true);
                break;
            }
            const double V = terminal_voltage(th_p, th_n, I, params_, ocp_p_, ocp_n_);
            if (window_.enforce && (V < window_.v_min || V > window_.v_max)) {
                push(tr, t, V, yp, yn, sample_flag::cutoff, true);
                break;
            }
            push(tr, t, V, yp, yn, f, opts_.record);

            const double I_next = (k + 1 < N) ? profile.current[k + 1] : I;
            sp_.advance(xp, jp, molar_flux(I_next, electrode::positive, params_));
            sn_.advance(xn, jn, molar_flux(I_next, electrode::negative, params_));
        }
        return tr;
    }

private:
    static void push(simulation_trace& tr, double t, double V, const Eigen::Vector2d& yp, const Eigen::Vector2d& yn,
                     sample_flag f, bool record) {
        if (!record) {
            if (f == sample_flag::cutoff || f == sample_flag::diverged) tr.flag.push_back(f);
            return;
        }
        tr.time.push_back(t);
        tr.voltage.push_back(V);
        tr.css_p.push_back(yp(0));
        tr.cavg_p.push_back(yp(1));
        tr.css_n.push_back(yn(0));
        tr.cavg_n.push_back(yn(1));
        tr.flag.push_back(f);
    }

    state_space mp_, mn_;
    scheme sch_;
    double dt_;
    cell_params params_;
    ocp_curve ocp_p_, ocp_n_;
    voltage_window window_;
    run_options opts_;
    stepper sp_, sn_;
    Eigen::VectorXd x0p_, x0n_;
};

/// Method, size and time scheme of one simulated configuration.
struct model_spec {
    method m = method::fdm;
    int size = 10;
    scheme sch = scheme::implicit_euler;

    std::string label() const {
        std::string s = to_string(m);
        if (m == method::fdm) s += std::string("-") + to_string(sch);
        if (m != method::parabolic) s += ":" + std::to_string(size);
        return s;
    }
};

inline simulator make_simulator(const model_spec& spec, double dt, const cell_params& params, const ocp_curve& ocp_p,
                                const ocp_curve& ocp_n, voltage_window window = {}, run_options opts = {}) {
    return simulator(build_model(spec.m, params.p, spec.size), build_model(spec.m, params.n, spec.size), spec.sch, dt,
                     params, ocp_p, ocp_n, window, opts);
}

inline simulation_trace run_simulation(const model_spec& spec, const current_profile& profile,
                                       const cell_params& params, const ocp_curve& ocp_p, const ocp_curve& ocp_n,
                                       voltage_window window = {}, run_options opts = {}) {
    auto sim = make_simulator(spec, profile.dt, params, ocp_p, ocp_n, window, opts);
    return sim.run(profile);
}

}  // namespace spmlab
