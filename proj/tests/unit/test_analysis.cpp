#include <catch_amalgamated.hpp>

#include <spmlab/spmlab.hpp>

#include <cmath>
#include <complex>
#include <random>

using namespace spmlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("error metrics by hand", "[metrics]") {
    const std::vector<double> a = {3.0, 3.5, 4.0}, b = {3.001, 3.497, 4.0};
    CHECK_THAT(mae(a, b), WithinRel((1.0 + 3.0 + 0.0) / 3.0, 1e-9));
    CHECK_THAT(rmse(a, b), WithinRel(std::sqrt((1.0 + 9.0) / 3.0), 1e-9));
    CHECK(mae(a, a) == 0.0);
    CHECK_THROWS(mae(a, {1.0}));
    CHECK_THROWS(rmse({}, {}));
}

TEST_CASE("log grid", "[bode]") {
    const auto g = log_grid(1e-3, 1e2, 6);
    REQUIRE(g.size() == 6);
    for (int k = 0; k < 6; ++k) CHECK_THAT(g[k], WithinRel(std::pow(10.0, k - 3), 1e-12));
    const auto d = default_bode_grid();
    CHECK(d.size() == 200);
    CHECK_THAT(d.front(), WithinRel(1e-5, 1e-12));
    CHECK_THAT(d.back(), WithinRel(10.0, 1e-12));
}

TEST_CASE("frequency response of a first-order system", "[bode]") {
    state_space m;
    m.A = Eigen::MatrixXd::Constant(1, 1, -2.0);
    m.B = Eigen::VectorXd::Constant(1, 4.0);
    m.C = Eigen::MatrixXd::Ones(2, 1);
    m.D = {0.5, 0.0};
    const std::vector<double> w = {0.1, 1.0, 30.0};
    const auto g = frequency_response(m, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::complex<double> s(0.0, w[i]);
        const auto ref = 4.0 / (s + 2.0) + 0.5;
        CHECK(std::abs(g.ss[i] - ref) < 1e-14);
        CHECK(std::abs(g.avg[i] - 4.0 / (s + 2.0)) < 1e-14);
    }
}

TEST_CASE("reference response and converged models agree at low frequency", "[bode]") {
    const auto c = table1();
    const auto w = log_grid(1e-5, 1e-3, 20);
    const auto ref = transcendental_response(c.n, w);
    const auto sp = frequency_response(build_spectral(c.n, 10), w);
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(std::abs(ref.avg[i] - (-3.0 / (c.n.R * std::complex<double>(0.0, w[i])))) < 1e-12 * std::abs(ref.avg[i]));
        CHECK(std::abs(sp.ss[i] / ref.ss[i] - 1.0) < 1e-6);
        CHECK(std::abs(sp.avg[i] / ref.avg[i] - 1.0) < 1e-10);
    }
}

TEST_CASE("phase is unwrapped", "[bode]") {
    std::vector<std::complex<double>> g;
    for (int k = 0; k < 50; ++k) g.push_back(std::polar(1.0, -0.2 * k));
    const auto ph = phase_deg(g);
    for (int k = 0; k < 50; ++k) CHECK_THAT(ph[k], WithinAbs(-0.2 * k * 180.0 / M_PI, 1e-9));
    CHECK_THAT(magnitude_db({10.0, 0.0}), WithinAbs(20.0, 1e-12));
}

TEST_CASE("fft matches a direct transform", "[fft][oracle]") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (std::size_t N : {64u, 101u, 360u}) {
        current_profile p;
        p.dt = 0.5;
        for (std::size_t k = 0; k < N; ++k) p.current.push_back(nd(rng));
        const auto s = fft_spectrum(p);
        REQUIRE(s.magnitude.size() == N / 2 + 1);
        for (std::size_t k = 0; k < s.magnitude.size(); ++k) {
            std::complex<double> X = 0.0;
            for (std::size_t n = 0; n < N; ++n) X += p.current[n] * std::polar(1.0, -2.0 * M_PI * k * n / N);
            CHECK_THAT(s.magnitude[k], WithinAbs(std::abs(X), 1e-9));
            CHECK_THAT(s.omega[k], WithinRel(2.0 * M_PI * k / (N * 0.5), 1e-14));
        }
        double e = 0.0;
        for (double v : p.current) e += v * v;
        CHECK_THAT(s.energy(), WithinRel(e, 1e-12));
        CHECK_THAT(s.nyquist(), WithinRel(2.0 * M_PI, 1e-15));
    }
    current_profile dc = current_profile::constant(2.0, 16);
    const auto sd = fft_spectrum(dc);
    CHECK_THAT(sd.amplitude[0], WithinRel(2.0, 1e-14));
    CHECK_THROWS(fft_spectrum(current_profile::constant(1.0, 1)));
}

TEST_CASE("convergence sweep on a small grid", "[sweep]") {
    const auto c = table1();
    const auto up = reference_ocp(electrode::positive), un = reference_ocp(electrode::negative);
    sweep_config cfg;
    cfg.baseline = {method::fdm, 60, scheme::implicit_euler};
    cfg.candidates = {{method::fdm, 60, scheme::implicit_euler},
                      {method::fdm, 5, scheme::implicit_euler},
                      {method::fdm, 30, scheme::explicit_euler},
                      {method::spectral, 5, scheme::zoh}};
    cfg.crates = {0.5, 1.0};
    const auto r = convergence_sweep(cfg, c, up, un);
    REQUIRE(r.baselines.size() == 2);
    CHECK(r.cells.size() == 8);
    for (const auto& b : r.baselines) CHECK(b.cut_off);
    CHECK(r.average("fdm-implicit:60").value() == 0.0);
    CHECK(r.average("fdm-implicit:5").value() > 0.0);
    CHECK_FALSE(r.average("fdm-explicit:30").has_value());
    for (const auto& cell : r.cells)
        if (cell.spec.sch == scheme::explicit_euler) CHECK(cell.status == "unstable");
    // an injected baseline provider is used verbatim
    int calls = 0;
    baseline_fn counting = [&](const model_spec& s, const current_profile& p) {
        ++calls;
        return run_simulation(s, p, c, up, un, cfg.window);
    };
    cfg.candidates = {{method::parabolic, 2, scheme::zoh}};
    const auto r2 = convergence_sweep(cfg, c, up, un, counting);
    CHECK(calls == 2);
    CHECK(r2.at("parabolic", 1.0).has_value());
}

TEST_CASE("stability scan agrees with simulation", "[stability]") {
    const auto c = table1();
    std::vector<int> nodes = {5, 20, 23, 24, 25, 30};
    const auto ex = stability_scan(method::fdm, scheme::explicit_euler, 1.0, nodes, c);
    CHECK(ex.mismatches() == 0);
    REQUIRE(ex.threshold().has_value());
    CHECK(*ex.threshold() == 24);
    const auto rk = stability_scan(method::fdm, scheme::rk3, 1.0, {26, 27}, c);
    CHECK(rk.mismatches() == 0);
    CHECK(*rk.threshold() == 27);
    CHECK(simulated_bounded(build_fdm(c.n, 30), scheme::explicit_euler, 1.0, c.n.c0));
    CHECK_FALSE(simulated_bounded(build_fdm(c.p, 30), scheme::explicit_euler, 1.0, c.p.c0));
}
