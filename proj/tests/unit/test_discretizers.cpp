#include <catch_amalgamated.hpp>

#include <spmlab/spmlab.hpp>

#include <cmath>
#include <complex>

using namespace spmlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Positive roots of tan(x) = x, one per interval (k pi, k pi + pi/2).
std::vector<double> tan_roots(int count) {
    std::vector<double> r;
    for (int k = 1; k <= count; ++k) {
        double lo = k * M_PI + 1e-12, hi = k * M_PI + M_PI / 2 - 1e-12;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (std::tan(mid) - mid < 0.0 ? lo : hi) = mid;
        }
        r.push_back(0.5 * (lo + hi));
    }
    return r;
}

/// Surface concentration of a sphere under constant outward flux j, classical eigenfunction series.
double sphere_surface(double c0, double j, double R, double D, double t) {
    static const auto lam = tan_roots(4000);
    const double tau = D * t / (R * R);
    double s = 0.0;
    for (double l : lam) s += std::exp(-l * l * tau) / (l * l);
    return c0 - j * R / D * (3.0 * tau + 0.2 - 2.0 * s);
}

/// c_ss at time t from a continuous model, via the exact ZOH map for one step of length t.
Eigen::Vector2d respond(const state_space& m, double c0, double j, double t) {
    const auto z = discretize_zoh(m, t);
    const Eigen::VectorXd x = z.Ad * init_state(m, c0) + z.Bd * j;
    return m.C * x + m.D * j;
}

const electrode_params& neg() {
    static const auto c = table1();
    return c.n;
}

}  // namespace

TEST_CASE("fdm closed form for three nodes", "[fdm]") {
    const auto& el = neg();
    const auto m = build_fdm(el, 3);
    const double dr = el.R / 3, s = el.D / (dr * dr);
    CHECK_THAT(m.A(0, 0), WithinRel(-2 * s, 1e-14));
    CHECK_THAT(m.A(0, 1), WithinRel(2 * s, 1e-14));
    CHECK_THAT(m.A(1, 0), WithinRel(0.5 * s, 1e-14));
    CHECK_THAT(m.A(1, 1), WithinRel(-0.5 * s, 1e-14));
    CHECK(m.B(0) == 0.0);
    CHECK_THAT(m.B(1), WithinRel(-1.5 / dr, 1e-14));
    CHECK_THAT(m.D(0), WithinRel(-dr / el.D, 1e-14));
    CHECK(m.tag == method::fdm);
    CHECK(m.size == 3);
}

TEST_CASE("fdm structural identities for every size", "[fdm]") {
    const auto& el = neg();
    for (int n = 2; n <= 200; ++n) {
        const auto m = build_fdm(el, n);
        REQUIRE(m.states() == n - 1);
        const double scale = el.D * n * n / (el.R * el.R);
        CHECK(m.A.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * scale);
        CHECK_THAT(m.C.row(1).sum(), WithinAbs(1.0, 1e-13));
        CHECK(m.C(0, n - 2) == 1.0);
        CHECK(m.C.row(0).sum() == 1.0);
        CHECK(m.B.head(n - 2).isZero());
    }
    CHECK(build_fdm(el, 2).A(0, 0) == 0.0);
    CHECK_THROWS_AS(build_fdm(el, 1), std::invalid_argument);
}

TEST_CASE("every model has one integrator and otherwise decaying modes", "[models]") {
    const auto c = table1();
    for (electrode e : {electrode::positive, electrode::negative}) {
        std::vector<state_space> models = {build_parabolic(c[e])};
        for (int n : {2, 3, 5, 10, 20, 50}) models.push_back(build_fdm(c[e], n));
        for (int n : {2, 3, 5, 10, 20}) models.push_back(build_spectral(c[e], n));
        for (int m = 2; m <= 5; ++m) models.push_back(build_pade(c[e], m));
        for (const auto& m : models) {
            const auto ev = eigenvalues(m.A);
            const double big = max_abs(ev);
            int zeros = 0;
            for (auto l : ev) {
                if (is_integrator(l, big)) ++zeros;
                else CHECK(l.real() < 0.0);
            }
            CHECK(zeros == 1);
            // uniform initial state reproduces c0 on both outputs
            const Eigen::Vector2d y = m.C * init_state(m, c[e].c0);
            CHECK_THAT(y(0), WithinRel(c[e].c0, 1e-10));
            CHECK_THAT(y(1), WithinRel(c[e].c0, 1e-10));
        }
    }
}

TEST_CASE("pade denominators have real negative roots", "[pade]") {
    for (int m = 2; m <= 5; ++m) {
        const auto ev = eigenvalues(build_pade(neg(), m).A);
        for (auto l : ev) CHECK(std::abs(l.imag()) <= 1e-12 * std::abs(l));
    }
}

TEST_CASE("chebyshev differentiation is exact on polynomials", "[spectral]") {
    const int N = 12;
    const auto [x, Dm] = cheb(N);
    Eigen::VectorXd f(N + 1), df(N + 1);
    for (int i = 0; i <= N; ++i) {
        f(i) = std::pow(x(i), 7) - 2 * x(i) * x(i) + 1;
        df(i) = 7 * std::pow(x(i), 6) - 4 * x(i);
    }
    CHECK((Dm * f - df).cwiseAbs().maxCoeff() < 1e-11);
    CHECK_THAT(x(0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(x(N), WithinAbs(-1.0, 1e-15));
}

TEST_CASE("spectral model, two nodes, printed values", "[spectral]") {
    const auto& el = neg();
    const auto m = build_spectral(el, 2);
    const double s = el.D / (el.R * el.R);
    CHECK_THAT(m.A(1, 1) / s, WithinRel(-20.0, 1e-12));
    CHECK_THAT(m.B(0), WithinRel(-3.0, 1e-12));
    CHECK_THAT(m.B(1), WithinAbs(2.18, 0.005));
    CHECK_THAT(m.C(0, 1) * el.R, WithinAbs(-0.98, 0.005));
    CHECK_THAT(m.D(0) * el.D / el.R, WithinAbs(-0.094, 0.0005));
    CHECK_THROWS_AS(build_spectral(el, 1), std::invalid_argument);
}

TEST_CASE("surface transient against the eigenfunction series", "[models][oracle]") {
    const auto& el = neg();
    const double j = 1e-4, tau0 = el.R * el.R / el.D;
    const double range = j * el.R / el.D;  // scale of c_ss - c0
    auto worst = [&](const state_space& m) {
        double w = 0.0;
        for (double tau : {0.02, 0.05, 0.1, 0.3, 1.0, 3.0}) {
            const double t = tau * tau0;
            const double ref = sphere_surface(el.c0, j, el.R, el.D, t);
            w = std::max(w, std::abs(respond(m, el.c0, j, t)(0) - ref) / range);
        }
        return w;
    };
    CHECK(worst(build_spectral(el, 20)) < 1e-6);
    CHECK(worst(build_spectral(el, 10)) < 1e-3);
    CHECK(worst(build_spectral(el, 5)) < worst(build_spectral(el, 3)));
    // the average output is an exact coulomb count for every reduction
    for (const auto& m : {build_spectral(el, 5), build_pade(el, 3), build_parabolic(el)}) {
        const double t = 0.7 * tau0;
        CHECK_THAT(respond(m, el.c0, j, t)(1), WithinRel(el.c0 - 3.0 * j * t / el.R, 1e-10));
    }
    // fdm converges toward the series with refinement
    const double e20 = worst(build_fdm(el, 20)), e80 = worst(build_fdm(el, 80));
    CHECK(e80 < e20);
}

TEST_CASE("transcendental series coefficients match a contour integral", "[pade][oracle]") {
    const auto g = transcendental_series(10);
    CHECK(g[0] == 1);
    // oracle: trapezoidal Cauchy integral of -z tanh b / (3 (tanh b - b)) on |z| = 10, inside the first pole near z = -20.19
    const int P = 256;
    const double r = 10.0;
    for (int k = 0; k <= 10; ++k) {
        std::complex<double> acc = 0.0;
        for (int p = 0; p < P; ++p) {
            const auto z = std::polar(r, 2 * M_PI * (p + 0.5) / P);
            const auto b = std::sqrt(z);
            const auto t = std::tanh(b);
            acc += -z * t / (3.0 * (t - b)) * std::pow(z, -k);
        }
        const double ref = (acc / static_cast<double>(P)).real();
        CHECK_THAT(static_cast<double>(g[k]), WithinRel(ref, 1e-9));
    }
}

TEST_CASE("pade coefficients are exact rationals", "[pade]") {
    const auto& p2 = pade_table(2);
    CHECK(p2.q[0] == 35);
    CHECK(p2.q[1] == 1);
    CHECK(p2.p[0] == 35);
    CHECK(p2.p[1] == rational(10, 3));
    // moment condition: Q g - P vanishes through z^(2m-2)
    for (int m = 2; m <= 5; ++m) {
        const auto& pc = pade_table(m);
        const auto g = transcendental_series(2 * m);
        for (int i = 0; i <= 2 * m - 2; ++i) {
            rational acc = 0;
            for (int k = 0; k <= i && k < m; ++k) acc += pc.q[k] * g[i - k];
            if (i < m) acc -= pc.p[i];
            CHECK(acc == 0);
        }
    }
    CHECK_THROWS_AS(build_pade(neg(), 6), std::invalid_argument);
    CHECK_THROWS_AS(build_pade(neg(), 1), std::invalid_argument);
}

TEST_CASE("pade average channel residue is -3/R", "[pade]") {
    const auto& el = neg();
    for (int m = 2; m <= 5; ++m) {
        const auto mdl = build_pade(el, m);
        // s G_avg(s) as s -> 0
        const double s = 1e-9 * el.D / (el.R * el.R);
        Eigen::MatrixXcd M = -mdl.A.cast<std::complex<double>>();
        M.diagonal().array() += std::complex<double>(s, 0.0);
        const Eigen::VectorXcd x = M.partialPivLu().solve(mdl.B.cast<std::complex<double>>());
        const auto g = (mdl.C.row(1).cast<std::complex<double>>() * x)(0);
        CHECK_THAT((s * g).real(), WithinRel(-3.0 / el.R, 1e-6));
    }
}

TEST_CASE("parabolic model entries", "[parabolic]") {
    const auto& el = neg();
    const auto m = build_parabolic(el);
    const double R = el.R, D = el.D;
    CHECK(m.A(0, 0) == 0.0);
    CHECK_THAT(m.A(1, 1), WithinRel(-30 * D / (R * R), 1e-15));
    CHECK_THAT(m.B(0), WithinRel(-3 / R, 1e-15));
    CHECK_THAT(m.B(1), WithinRel(-45 / (2 * R * R), 1e-15));
    CHECK_THAT(m.C(0, 1), WithinRel(8 * R / 35, 1e-15));
    CHECK(m.C(1, 1) == 0.0);
    CHECK_THAT(m.D(0), WithinRel(-R / (35 * D), 1e-15));
    CHECK(m.D(1) == 0.0);
}

TEST_CASE("transcendental transfer function", "[pde]") {
    const auto& el = neg();
    const double sig = el.D / (el.R * el.R);
    // the series branch and the closed form agree across the switch radius
    for (double arg : {0.0, 1.0, 2.5}) {
        const auto z_in = std::polar(0.0999, arg), z_out = std::polar(0.1001, arg);
        auto closed = [&](std::complex<double> z) {
            const auto b = std::sqrt(z);
            const auto t = std::tanh(b);
            return (el.R / el.D) * t / (t - b);
        };
        CHECK(std::abs(transcendental_tf(el, z_in * sig) - closed(z_in)) <= 1e-9 * std::abs(closed(z_in)));
        CHECK(std::abs(transcendental_tf(el, z_out * sig) - closed(z_out)) <= 1e-12 * std::abs(closed(z_out)));
    }
    // integrator pole with residue -3/R, and 1/sqrt(s) decay at high frequency
    const std::complex<double> s0(1e-8 * sig, 0.0);
    CHECK_THAT((s0 * transcendental_tf(el, s0)).real(), WithinRel(-3.0 / el.R, 1e-6));
    const std::complex<double> s1(0.0, 1e6 * sig);
    const auto z1 = s1 / sig;
    CHECK(std::abs(transcendental_tf(el, s1) * std::sqrt(z1) + el.R / el.D) < 2e-3 * el.R / el.D);
    CHECK_THROWS(transcendental_tf(el, 0.0));
}

TEST_CASE("method names round trip", "[models]") {
    for (method m : {method::fdm, method::spectral, method::pade, method::parabolic})
        CHECK(method_from_string(to_string(m)) == m);
    CHECK_THROWS(method_from_string("chebyshev"));
    CHECK(build_model(method::pade, neg(), 3).states() == 3);
    CHECK(build_model(method::parabolic, neg(), 7).states() == 2);
}
