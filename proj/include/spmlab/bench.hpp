#pragma once

#include "analysis.hpp"
#include "simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <vector>

namespace spmlab {

struct bench_record {
    model_spec spec;
    std::size_t steps = 0;
    int repetitions = 0;
    std::vector<double> rep_seconds;  // total loop time per repetition
    double mean_ms = 0.0;             // per step, mean over repetitions
    double median_ms = 0.0;
    double stdev_ms = 0.0;
    bool valid = true;

    double total_s() const {
        return rep_seconds.empty() ? 0.0
                                   : std::accumulate(rep_seconds.begin(), rep_seconds.end(), 0.0) / rep_seconds.size();
    }
};

struct bench_config {
    double crate = 1.0;
    std::size_t steps = 3600;
    int repetitions = 10;
    double dt = 1.0;
    bool record_trace = false;
};

inline double per_step_ms(double total_s, std::size_t steps) {
    return steps == 0 ? 0.0 : 1000.0 * total_s / static_cast<double>(steps);
}

/// Times the simulation loop for a constant-current profile. Model construction, profile
/// generation and one warm-up run happen before the timed repetitions.
inline bench_record bench_method(const model_spec& spec, const cell_params& params, const ocp_curve& ocp_p,
                                 const ocp_curve& ocp_n, const bench_config& cfg = {}) {
    using clock = std::chrono::steady_clock;
    bench_record rec;
    rec.spec = spec;
    rec.repetitions = cfg.repetitions;
    const auto profile =
        current_profile::constant(crate_to_current(cfg.crate, params.Q_nom), cfg.steps, cfg.dt, "bench");
    voltage_window fixed;
    fixed.enforce = false;
    run_options opts;
    opts.record = cfg.record_trace;
    auto sim = make_simulator(spec, cfg.dt, params, ocp_p, ocp_n, fixed, opts);

    simulation_trace warm = sim.run(profile);
    rec.steps = warm.steps;
    rec.valid = !warm.diverged() && cell_stable(spec, params, cfg.dt);

    std::vector<double> per_step;
    for (int r = 0; r < cfg.repetitions; ++r) {
        const auto t0 = clock::now();
        const simulation_trace tr = sim.run(profile);
        const auto t1 = clock::now();
        const double s = std::chrono::duration<double>(t1 - t0).count();
        rec.rep_seconds.push_back(s);
        per_step.push_back(per_step_ms(s, tr.steps));
    }
    if (!per_step.empty()) {
        const double n = static_cast<double>(per_step.size());
        rec.mean_ms = std::accumulate(per_step.begin(), per_step.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : per_step) ss += (v - rec.mean_ms) * (v - rec.mean_ms);
        rec.stdev_ms = per_step.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        std::vector<double> sorted = per_step;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        rec.median_ms = (m % 2) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    }
    return rec;
}

/// Runs every configuration in order on the calling thread.
inline std::vector<bench_record> bench_matrix(const std::vector<model_spec>& specs, const cell_params& params,
                                              const ocp_curve& ocp_p, const ocp_curve& ocp_n,
                                              const bench_config& cfg = {}) {
    std::vector<bench_record> out;
    out.reserve(specs.size());
    for (const auto& s : specs) out.push_back(bench_method(s, params, ocp_p, ocp_n, cfg));
    return out;
}

}  // namespace spmlab
