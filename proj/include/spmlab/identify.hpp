#pragma once

#include "analysis.hpp"
#include "cell_model.hpp"
#include "parallel.hpp"
#include "simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace spmlab {

/// Mutable access to a searchable quantity by name ("R0", "area", "n.D", "p.r_eef", ...).
inline double& param_ref(cell_params& c, const std::string& name) {
    if (name == "R0") return c.R0;
    if (name == "area" || name == "A") return c.area;
    if (name == "c_e") return c.c_e;
    if (name == "T") return c.T;
    if (name == "Q_nom") return c.Q_nom;
    if (name == "F") return c.F;
    if (name == "R_gas") return c.R_gas;
    if (name.size() > 2 && name[1] == '.' && (name[0] == 'p' || name[0] == 'n')) {
        electrode_params& e = name[0] == 'p' ? c.p : c.n;
        const std::string f = name.substr(2);
        if (f == "c0") return e.c0;
        if (f == "c_max") return e.c_max;
        if (f == "D") return e.D;
        if (f == "R") return e.R;
        if (f == "eps") return e.eps;
        if (f == "L") return e.L;
        if (f == "r_eef") return e.r_eef;
    }
    throw std::invalid_argument("unknown parameter '" + name + "'");
}

inline double param_value(const cell_params& c, const std::string& name) {
    cell_params copy = c;
    return param_ref(copy, name);
}

struct param_bound {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
    bool log_scale = false;
};

/// Default bound for a preset quantity; log scale when the range spans more than two decades.
inline param_bound table1_bound(const std::string& name) {
    const table1_ranges r;
    auto make = [&](param_range pr) {
        return param_bound{name, pr.lo, pr.hi, pr.lo > 0.0 && pr.hi / pr.lo > 100.0};
    };
    if (name == "R0") return make(r.R0);
    if (name == "area" || name == "A") return make(r.area);
    if (name == "n.c0") return make(r.c0_n);
    if (name == "p.c0") return make(r.c0_p);
    if (name.size() > 2 && name[1] == '.') {
        const std::string f = name.substr(2);
        if (f == "r_eef") return make(r.r_eef);
        if (f == "eps") return make(r.eps);
        if (f == "D") return make(r.D);
        if (f == "c_max") return make(r.c_max);
        if (f == "L") return make(r.L);
        if (f == "R") return make(r.R_s);
    }
    throw std::invalid_argument("no preset range for parameter '" + name + "'");
}

struct search_space {
    std::vector<param_bound> params;
    cell_params base;  // values of every quantity not searched

    void validate() const {
        if (params.empty()) throw std::invalid_argument("search space is empty");
        cell_params probe = base;
        for (const auto& p : params) {
            if (!(p.lo < p.hi)) throw std::invalid_argument("bound for '" + p.name + "' needs lo < hi");
            if (p.log_scale && !(p.lo > 0.0)) throw std::invalid_argument("log bound for '" + p.name + "' needs lo > 0");
            (void)param_ref(probe, p.name);
        }
    }

    cell_params apply(const std::vector<double>& v) const {
        cell_params c = base;
        for (std::size_t i = 0; i < params.size(); ++i) param_ref(c, params[i].name) = v[i];
        return c;
    }
};

struct dataset {
    current_profile profile;
    std::vector<double> voltage;  // measured [V], one per profile sample
    std::string name;
};

struct objective_config {
    model_spec model{method::fdm, 200, scheme::implicit_euler};
    voltage_window window{0.0, 10.0, true};
    double penalty_mv = 1e6;
    ocp_curve ocp_p;
    ocp_curve ocp_n;
};

/// Mean over datasets of the voltage RMSE in mV; invalid, diverged or truncated runs cost the penalty.
inline double objective(const cell_params& candidate, const std::vector<dataset>& data, const objective_config& cfg) {
    if (data.empty()) throw std::invalid_argument("objective: no datasets");
    double sum = 0.0;
    try {
        validate(candidate);
        for (const auto& d : data) {
            const auto tr = run_simulation(cfg.model, d.profile, candidate, cfg.ocp_p, cfg.ocp_n, cfg.window);
            if (tr.diverged() || tr.size() < d.voltage.size()) return cfg.penalty_mv;
            std::vector<double> v(tr.voltage.begin(), tr.voltage.begin() + static_cast<long>(d.voltage.size()));
            for (double x : v)
                if (!std::isfinite(x)) return cfg.penalty_mv;
            sum += rmse(d.voltage, v);
        }
    } catch (const std::exception&) {
        return cfg.penalty_mv;
    }
    const double r = sum / static_cast<double>(data.size());
    return std::isfinite(r) ? r : cfg.penalty_mv;
}

/// Synthetic measurement: the simulated voltage of `truth` up to the first cutoff.
inline dataset synthesize_dataset(const cell_params& truth, double crate, std::size_t samples,
                                  const objective_config& cfg, double dt = 1.0) {
    dataset d;
    d.profile = current_profile::constant(crate_to_current(crate, truth.Q_nom), samples, dt,
                                          "synthetic-" + std::to_string(crate) + "C");
    const auto tr = run_simulation(cfg.model, d.profile, truth, cfg.ocp_p, cfg.ocp_n, voltage_window{});
    for (std::size_t i = 0; i < tr.size() && tr.flag[i] != sample_flag::cutoff; ++i) d.voltage.push_back(tr.voltage[i]);
    d.profile = d.profile.truncated(d.voltage.size());
    d.name = d.profile.name;
    return d;
}

struct pso_config {
    std::size_t swarm = 40;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    double vmax_fraction = 0.2;
    int iterations = 100;
    std::uint64_t seed = 1;
    unsigned jobs = default_jobs();
};

struct fit_result {
    std::vector<std::string> names;
    std::vector<double> best;      // natural units
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<double> history;   // best objective after initialization and after each iteration
    std::uint64_t seed = 0;
    std::size_t evaluations = 0;
};

namespace detail {
/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}  // namespace detail

/// Global-best particle swarm with constriction coefficients, positions clamped to bounds.
/// `on_positions`, when set, sees every evaluated swarm (in natural units).
inline fit_result pso_minimize(const std::vector<param_bound>& bounds,
                               const std::function<double(const std::vector<double>&)>& f, const pso_config& cfg,
                               const std::function<void(const std::vector<std::vector<double>>&)>& on_positions = {}) {
    if (bounds.empty()) throw std::invalid_argument("pso: empty search space");
    if (cfg.iterations < 1) throw std::invalid_argument("pso: budget must be >= 1");
    if (cfg.swarm < 1) throw std::invalid_argument("pso: swarm must be non-empty");
    const std::size_t d = bounds.size(), S = cfg.swarm;
    std::vector<double> lo(d), hi(d), vmax(d);
    for (std::size_t k = 0; k < d; ++k) {
        const auto& b = bounds[k];
        if (!(b.lo < b.hi)) throw std::invalid_argument("pso: bound lo must be < hi for " + b.name);
        lo[k] = b.log_scale ? std::log10(b.lo) : b.lo;
        hi[k] = b.log_scale ? std::log10(b.hi) : b.hi;
        vmax[k] = cfg.vmax_fraction * (hi[k] - lo[k]);
    }
    auto natural = [&](const std::vector<double>& u) {
        std::vector<double> v(d);
        for (std::size_t k = 0; k < d; ++k)
            v[k] = bounds[k].log_scale ? std::clamp(std::pow(10.0, u[k]), bounds[k].lo, bounds[k].hi) : u[k];
        return v;
    };

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::vector<double>> x(S, std::vector<double>(d)), v = x, pbest;
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            x[i][k] = lo[k] + detail::unit(rng) * (hi[k] - lo[k]);
            v[i][k] = (2.0 * detail::unit(rng) - 1.0) * vmax[k];
        }
    pbest = x;
    std::vector<double> pval(S, std::numeric_limits<double>::infinity()), val(S);
    std::vector<double> gbest = x[0];
    double gval = std::numeric_limits<double>::infinity();

    fit_result res;
    res.seed = cfg.seed;
    for (const auto& b : bounds) res.names.push_back(b.name);

    auto evaluate = [&] {
        std::vector<std::vector<double>> nat(S);
        for (std::size_t i = 0; i < S; ++i) nat[i] = natural(x[i]);
        if (on_positions) on_positions(nat);
        parallel_for(S, [&](std::size_t i) { val[i] = f(nat[i]); }, cfg.jobs);
        res.evaluations += S;
        for (std::size_t i = 0; i < S; ++i) {
            if (val[i] < pval[i]) {
                pval[i] = val[i];
                pbest[i] = x[i];
            }
            if (val[i] < gval) {
                gval = val[i];
                gbest = x[i];
            }
        }
        res.history.push_back(gval);
    };

    evaluate();
    for (int it = 0; it < cfg.iterations; ++it) {
        for (std::size_t i = 0; i < S; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                const double r1 = detail::unit(rng), r2 = detail::unit(rng);
                double vk = cfg.inertia * v[i][k] + cfg.cognitive * r1 * (pbest[i][k] - x[i][k]) +
                            cfg.social * r2 * (gbest[k] - x[i][k]);
                vk = std::clamp(vk, -vmax[k], vmax[k]);
                v[i][k] = vk;
                x[i][k] = std::clamp(x[i][k] + vk, lo[k], hi[k]);
            }
        evaluate();
    }
    res.best = natural(gbest);
    res.best_objective = gval;
    return res;
}

inline fit_result pso_fit(const search_space& space, const std::vector<dataset>& data, const pso_config& cfg,
                          const objective_config& obj) {
    space.validate();
    if (data.empty()) throw std::invalid_argument("pso_fit: at least one dataset required");
    return pso_minimize(
        space.params, [&](const std::vector<double>& v) { return objective(space.apply(v), data, obj); }, cfg);
}

}  // namespace spmlab
