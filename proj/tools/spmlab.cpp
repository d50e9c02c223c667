// spmlab command-line front end.

#include <spmlab/spmlab.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

using namespace spmlab;
namespace fs = std::filesystem;

namespace {

struct common_opts {
    std::string params = "table1";
    std::string ocp_p;
    std::string ocp_n;
    double dt = 1.0;
    double vmin = 2.5;
    double vmax = 4.2;
    std::string out;
};

void add_common(CLI::App* app, common_opts& c, const std::string& default_out) {
    c.out = default_out;
    app->add_option("--params", c.params, "Parameter preset name or key-value file")->capture_default_str();
    app->add_option("--ocp-p", c.ocp_p, "Positive electrode OCP CSV (default: shipped reference)");
    app->add_option("--ocp-n", c.ocp_n, "Negative electrode OCP CSV (default: shipped reference)");
    app->add_option("--dt", c.dt, "Time step [s]")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--vmin", c.vmin, "Lower cutoff voltage [V]")->capture_default_str();
    app->add_option("--vmax", c.vmax, "Upper cutoff voltage [V]")->capture_default_str();
    app->add_option("--out", c.out, "Output file (relative paths go under SPMLAB_OUTPUT_DIR)")->capture_default_str();
}

struct loaded {
    cell_params params;
    ocp_curve ocp_p;
    ocp_curve ocp_n;
};

loaded load(const common_opts& c) {
    return {load_params(c.params), c.ocp_p.empty() ? reference_ocp(electrode::positive) : load_ocp(c.ocp_p),
            c.ocp_n.empty() ? reference_ocp(electrode::negative) : load_ocp(c.ocp_n)};
}

std::string out_path(const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? p : (fs::path(output_dir()) / q).string();
}

void announce(const std::string& path) { std::cerr << "wrote " << path << '\n'; }

/// Expands "fdm-implicit,spectral" over the node range; entries with an explicit size stay as given.
std::vector<model_spec> expand_methods(const std::string& methods, const std::vector<int>& nodes) {
    std::vector<model_spec> out;
    for (const auto& tok : split(methods, ',')) {
        const std::string t = trim(tok);
        if (t.empty()) continue;
        if (t.find(':') != std::string::npos) {
            out.push_back(parse_model_spec(t));
            continue;
        }
        const model_spec probe = parse_model_spec(t, 2);
        if (probe.m == method::parabolic) {
            out.push_back(probe);
            continue;
        }
        for (int n : nodes) {
            if (probe.m == method::pade && (n < 2 || n > 5)) continue;
            if (n < 2) continue;
            model_spec s = probe;
            s.size = n;
            out.push_back(s);
        }
    }
    if (out.empty()) throw parse_error("no models selected by '" + methods + "'");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single particle model solver lab"};
    app.require_subcommand(1);

    // simulate
    common_opts sim_c;
    std::string sim_method = "fdm", sim_scheme, sim_profile;
    int sim_size = 10;
    double sim_crate = 1.0, sim_duration = 3600.0;
    bool sim_no_cutoff = false, sim_rk3_literal = false;
    auto* sim = app.add_subcommand("simulate", "Run one model on a constant current or a profile");
    sim->add_option("--method", sim_method, "fdm | spectral | pade | parabolic")->capture_default_str();
    sim->add_option("--size", sim_size, "Node count or Pade order")->capture_default_str();
    sim->add_option("--scheme", sim_scheme, "explicit | implicit | rk3 | zoh (default: implicit for fdm, zoh otherwise)");
    sim->add_option("--crate", sim_crate, "Constant current as a C-rate (positive = discharge)")->capture_default_str();
    sim->add_option("--duration", sim_duration, "Constant-current duration [s]")->capture_default_str();
    sim->add_option("--profile", sim_profile, "Current profile CSV (time_s,current_A); overrides --crate");
    sim->add_flag("--no-cutoff", sim_no_cutoff, "Run the full duration regardless of the voltage window");
    sim->add_flag("--rk3-literal-inputs", sim_rk3_literal, "RK3 evaluates the stage inputs at their own times");
    add_common(sim, sim_c, "trace.csv");

    // sweep
    common_opts sw_c;
    std::string sw_methods = "fdm-implicit,spectral,pade,parabolic", sw_nodes = "2..20", sw_crates = "0.2..2.0:0.2",
                sw_baseline = "fdm-implicit:200", sw_cache, sw_long;
    double sw_max_duration = 0.0;
    auto* sw = app.add_subcommand("sweep", "Constant-current MAE of each model against the baseline");
    sw->add_option("--methods", sw_methods, "Comma list of method families or explicit models")->capture_default_str();
    sw->add_option("--nodes", sw_nodes, "Size range, e.g. 2..20 or 2..20:2 or 3,5")->capture_default_str();
    sw->add_option("--crates", sw_crates, "C-rate range, e.g. 0.2..2.0:0.2")->capture_default_str();
    sw->add_option("--baseline", sw_baseline, "Reference model")->capture_default_str();
    sw->add_option("--max-duration", sw_max_duration, "Duration cap per condition [s] (0: 1.25 h / C-rate)");
    sw->add_option("--cache", sw_cache, "Directory for cached baseline traces");
    sw->add_option("--long", sw_long, "Also write the per-condition table to this file");
    add_common(sw, sw_c, "sweep.csv");

    // bode
    common_opts bd_c;
    std::string bd_methods = "fdm-implicit:10,fdm-implicit:15,fdm-implicit:200,pade:2,pade:5,spectral:2,spectral:5,parabolic,pde";
    std::string bd_electrode = "negative";
    double bd_wmin = 1e-5, bd_wmax = 10.0;
    std::size_t bd_points = 200;
    auto* bd = app.add_subcommand("bode", "Frequency response of the surface and average channels");
    bd->add_option("--methods", bd_methods, "Comma list of models; 'pde' is the transcendental reference")
        ->capture_default_str();
    bd->add_option("--electrode", bd_electrode, "positive | negative")->capture_default_str();
    bd->add_option("--wmin", bd_wmin, "Lowest frequency [rad/s]")->capture_default_str();
    bd->add_option("--wmax", bd_wmax, "Highest frequency [rad/s]")->capture_default_str();
    bd->add_option("--points", bd_points, "Logarithmic grid points")->capture_default_str();
    add_common(bd, bd_c, "bode.csv");

    // fft
    common_opts ff_c;
    std::string ff_profile;
    auto* ff = app.add_subcommand("fft", "One-sided amplitude spectrum of a current profile");
    ff->add_option("--profile", ff_profile, "Current profile CSV")->required();
    add_common(ff, ff_c, "spectrum.csv");

    // bench
    common_opts bn_c;
    std::string bn_methods = "parabolic,pade,spectral,fdm-implicit", bn_nodes = "2..20";
    bench_config bn_cfg;
    auto* bn = app.add_subcommand("bench", "Per-step wall time of the simulation loop");
    bn->add_option("--methods", bn_methods, "Comma list of method families or explicit models")->capture_default_str();
    bn->add_option("--nodes", bn_nodes, "Size range")->capture_default_str();
    bn->add_option("--crate", bn_cfg.crate, "C-rate")->capture_default_str();
    bn->add_option("--steps", bn_cfg.steps, "Steps per repetition")->capture_default_str();
    bn->add_option("--repetitions", bn_cfg.repetitions, "Timed repetitions")->capture_default_str()->check(
        CLI::PositiveNumber);
    bn->add_flag("--record", bn_cfg.record_trace, "Record the full trace while timing");
    add_common(bn, bn_c, "bench.csv");

    // stability
    common_opts st_c;
    std::string st_method = "fdm", st_scheme = "explicit", st_nodes = "2..30";
    bool st_no_sim = false;
    auto* st = app.add_subcommand("stability", "Stability predicate and simulated boundedness over sizes");
    st->add_option("--method", st_method, "Method family")->capture_default_str();
    st->add_option("--scheme", st_scheme, "Time scheme")->capture_default_str();
    st->add_option("--nodes", st_nodes, "Size range")->capture_default_str();
    st->add_flag("--no-simulate", st_no_sim, "Skip the simulated boundedness check");
    add_common(st, st_c, "stability.csv");

    // fit
    std::string fit_spec_path, fit_out = "fit.json";
    std::optional<std::uint64_t> fit_seed;
    std::optional<int> fit_iterations;
    auto* ft = app.add_subcommand("fit", "Particle swarm parameter identification");
    ft->add_option("spec", fit_spec_path, "Fit description (key-value file)")->required();
    ft->add_option("--seed", fit_seed, "Override the seed");
    ft->add_option("--iterations", fit_iterations, "Override the iteration budget");
    ft->add_option("--out", fit_out, "Result JSON")->capture_default_str();

    // export-model
    std::string ex_method = "spectral", ex_electrode = "negative", ex_params = "table1", ex_out = "model.json";
    int ex_size = 5;
    auto* ex = app.add_subcommand("export-model", "Write the continuous state-space matrices as JSON");
    ex->add_option("--method", ex_method, "Method family")->capture_default_str();
    ex->add_option("--size", ex_size, "Node count or Pade order")->capture_default_str();
    ex->add_option("--electrode", ex_electrode, "positive | negative")->capture_default_str();
    ex->add_option("--params", ex_params, "Parameter preset or file")->capture_default_str();
    ex->add_option("--out", ex_out, "Output file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*sim) {
            const auto L = load(sim_c);
            model_spec spec = parse_model_spec(sim_method, sim_size);
            if (!sim_scheme.empty()) {
                try {
                    spec.sch = scheme_from_string(sim_scheme);
                } catch (const std::invalid_argument& e) {
                    throw parse_error(e.what());
                }
            }
            current_profile prof;
            if (!sim_profile.empty()) {
                prof = load_profile(sim_profile);
            } else {
                if (!(sim_duration > 0.0)) throw parse_error("--duration must be positive");
                const auto n = static_cast<std::size_t>(std::llround(sim_duration / sim_c.dt));
                prof = current_profile::constant(crate_to_current(sim_crate, L.params.Q_nom), n, sim_c.dt);
            }
            voltage_window w{sim_c.vmin, sim_c.vmax, !sim_no_cutoff};
            run_options opts;
            opts.rk3_literal_inputs = sim_rk3_literal;
            const auto tr = run_simulation(spec, prof, L.params, L.ocp_p, L.ocp_n, w, opts);
            const auto path = out_path(sim_c.out);
            auto f = open_output(path);
            write_trace(f, tr);
            announce(path);
            std::cerr << spec.label() << ": " << tr.size() << " rows"
                      << (tr.diverged() ? ", diverged" : tr.cut_off() ? ", cutoff" : "") << '\n';
        } else if (*sw) {
            const auto L = load(sw_c);
            sweep_config cfg;
            cfg.candidates = expand_methods(sw_methods, parse_int_range(sw_nodes));
            cfg.crates = parse_real_range(sw_crates);
            cfg.baseline = parse_model_spec(sw_baseline);
            cfg.dt = sw_c.dt;
            cfg.max_duration_s = sw_max_duration;
            cfg.window = {sw_c.vmin, sw_c.vmax, true};
            baseline_fn base;
            std::optional<baseline_cache> cache;
            if (!sw_cache.empty()) {
                cache.emplace(sw_cache);
                fs::create_directories(sw_cache);
                base = cache->provider(L.params, L.ocp_p, L.ocp_n, cfg.window);
            }
            const auto r = convergence_sweep(cfg, L.params, L.ocp_p, L.ocp_n, base);
            const auto path = out_path(sw_c.out);
            {
                auto f = open_output(path);
                write_sweep_table(f, r);
            }
            announce(path);
            if (!sw_long.empty()) {
                const auto lp = out_path(sw_long);
                auto f = open_output(lp);
                write_sweep_long(f, r);
                announce(lp);
            }
        } else if (*bd) {
            const auto L = load(bd_c);
            const electrode e = electrode_from_string(bd_electrode);
            bode_data b;
            b.omega = log_grid(bd_wmin, bd_wmax, bd_points);
            for (const auto& tok : split(bd_methods, ',')) {
                const std::string t = trim(tok);
                if (t.empty()) continue;
                if (t == "pde") {
                    b.series.push_back({"pde", transcendental_response(L.params[e], b.omega)});
                    continue;
                }
                const auto spec = parse_model_spec(t);
                b.series.push_back({t, frequency_response(build_model(spec.m, L.params[e], spec.size), b.omega)});
            }
            const auto path = out_path(bd_c.out);
            auto f = open_output(path);
            write_bode(f, b);
            announce(path);
        } else if (*ff) {
            const auto s = fft_spectrum(load_profile(ff_profile));
            const auto path = out_path(ff_c.out);
            auto f = open_output(path);
            write_spectrum(f, s);
            announce(path);
            std::cerr << s.samples << " samples, Nyquist " << s.nyquist() << " rad/s\n";
        } else if (*bn) {
            const auto L = load(bn_c);
            bn_cfg.dt = bn_c.dt;
            const auto recs = bench_matrix(expand_methods(bn_methods, parse_int_range(bn_nodes)), L.params, L.ocp_p,
                                           L.ocp_n, bn_cfg);
            const auto path = out_path(bn_c.out);
            auto f = open_output(path);
            write_bench(f, recs);
            announce(path);
        } else if (*st) {
            const auto L = load(st_c);
            method m;
            scheme s;
            try {
                m = method_from_string(st_method);
                s = scheme_from_string(st_scheme);
            } catch (const std::invalid_argument& e) {
                throw parse_error(e.what());
            }
            const auto rep = stability_scan(m, s, st_c.dt, parse_int_range(st_nodes), L.params, !st_no_sim);
            const auto path = out_path(st_c.out);
            auto f = open_output(path);
            write_stability(f, rep);
            announce(path);
            const auto t = rep.threshold();
            std::cerr << "threshold: " << (t ? std::to_string(*t) : std::string("none")) << ", mismatches "
                      << rep.mismatches() << '\n';
        } else if (*ft) {
            auto spec = load_fit_spec(fit_spec_path);
            if (fit_seed) spec.pso.seed = *fit_seed;
            if (fit_iterations) spec.pso.iterations = *fit_iterations;
            const auto r = pso_fit(spec.space, spec.data, spec.pso, spec.objective);
            const auto path = out_path(fit_out);
            auto f = open_output(path);
            f << fit_to_json(r).dump(2) << '\n';
            announce(path);
            for (std::size_t k = 0; k < r.names.size(); ++k) std::cerr << r.names[k] << " = " << r.best[k] << '\n';
            std::cerr << "objective " << r.best_objective << " mV\n";
        } else if (*ex) {
            method m;
            electrode e;
            try {
                m = method_from_string(ex_method);
                e = electrode_from_string(ex_electrode);
            } catch (const std::invalid_argument& err) {
                throw parse_error(err.what());
            }
            const auto params = load_params(ex_params);
            const auto model = build_model(m, params[e], ex_size);
            const auto path = out_path(ex_out);
            auto f = open_output(path);
            f << model_to_json(model).dump(2) << '\n';
            announce(path);
        }
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
