#include <catch_amalgamated.hpp>

#include <spmlab/spmlab.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace spmlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

state_space scalar_model(double a, double b) {
    state_space m;
    m.A = Eigen::MatrixXd::Constant(1, 1, a);
    m.B = Eigen::VectorXd::Constant(1, b);
    m.C = Eigen::MatrixXd::Ones(2, 1);
    m.D.setZero();
    return m;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("expm against closed forms", "[expm]") {
    Eigen::MatrixXd D = Eigen::Vector3d(-2.0, 0.5, -40.0).asDiagonal();
    const auto E = expm(D);
    CHECK_THAT(E(0, 0), WithinRel(std::exp(-2.0), 1e-13));
    CHECK_THAT(E(1, 1), WithinRel(std::exp(0.5), 1e-13));
    CHECK_THAT(E(2, 2), WithinRel(std::exp(-40.0), 1e-8));
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(3, 3);
    N(0, 1) = 1.0;
    N(1, 2) = 1.0;
    const auto En = expm(N);
    CHECK_THAT(En(0, 2), WithinAbs(0.5, 1e-15));
    CHECK_THAT(En(0, 1), WithinAbs(1.0, 1e-15));
    Eigen::MatrixXd Rot(2, 2);
    Rot << 0, -1.3, 1.3, 0;
    const auto Er = expm(Rot);
    CHECK_THAT(Er(0, 0), WithinAbs(std::cos(1.3), 1e-14));
    CHECK_THAT(Er(1, 0), WithinAbs(std::sin(1.3), 1e-14));
}

TEST_CASE("zoh pair matches an independent matrix exponential", "[zoh][oracle]") {
    const auto c = table1();
    std::vector<state_space> models = {build_spectral(c.n, 5), build_spectral(c.p, 12), build_pade(c.n, 5),
                                       build_parabolic(c.p), build_fdm(c.n, 20)};
    for (const auto& m : models)
        for (double dt : {0.1, 1.0, 10.0}) {
            const auto z = discretize_zoh(m, dt);
            const Eigen::Index n = m.A.rows();
            // oracle: Eigen's Pade-based exponential of the augmented matrix with B scaled to unit size
            const double b = m.B.cwiseAbs().maxCoeff();
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
            M.topLeftCorner(n, n) = m.A * dt;
            M.topRightCorner(n, 1) = m.B * dt / b;
            const Eigen::MatrixXd E = M.exp();
            CHECK(rel_err(z.Ad, E.topLeftCorner(n, n)) < 1e-12);
            CHECK(rel_err(z.Bd, b * E.topRightCorner(n, 1)) < 1e-11);
        }
}

TEST_CASE("zoh is exact for a scalar system under held input", "[zoh]") {
    const double a = -0.37, b = 2.0, dt = 0.8, j = 1.5;
    const auto m = scalar_model(a, b);
    stepper s(m, scheme::zoh, dt);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 3.0);
    for (int k = 0; k < 25; ++k) s.advance(x, j, j);
    const double t = 25 * dt, xs = -b * j / a;
    CHECK_THAT(x(0), WithinRel(xs + (3.0 - xs) * std::exp(a * t), 1e-12));
}

TEST_CASE("single steps follow their update rules", "[steppers]") {
    const auto m = build_fdm(table1().n, 6);
    const double dt = 0.5, j = 2e-4, jn = 3e-4;
    Eigen::VectorXd x0(5);
    x0 << 30000, 30100, 30200, 30300, 30400;

    stepper ex(m, scheme::explicit_euler, dt);
    Eigen::VectorXd x = x0;
    ex.advance(x, j, jn);
    CHECK(rel_err(x, x0 + dt * (m.A * x0 + m.B * j)) < 1e-15);
    CHECK(rel_err(ex.step_explicit(x0, j), x) < 1e-15);

    stepper im(m, scheme::implicit_euler, dt);
    x = x0;
    im.advance(x, j, jn);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(5, 5);
    CHECK(((I - dt * m.A) * x - (x0 + dt * m.B * jn)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(rel_err(im.step_implicit(x0, jn), x) < 1e-15);
    CHECK_THROWS_AS(ex.step_implicit(x0, jn), std::logic_error);

    stepper rk(m, scheme::rk3, dt);
    x = x0;
    rk.advance(x, j, jn);
    const Eigen::VectorXd k1 = m.A * x0 + m.B * j;
    const Eigen::VectorXd k2 = m.A * (x0 + 0.5 * dt * k1) + m.B * j;
    const Eigen::VectorXd k3 = m.A * (x0 - dt * k1 + 2 * dt * k2) + m.B * j;
    CHECK(rel_err(x, x0 + dt / 6 * (k1 + 4 * k2 + k3)) < 1e-14);
}

TEST_CASE("rk3 reproduces its stability polynomial", "[steppers]") {
    const double a = -0.9, dt = 1.0;
    const auto m = scalar_model(a, 0.0);
    stepper rk(m, scheme::rk3, dt);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
    rk.advance(x, 0.0, 0.0);
    const double z = a * dt;
    CHECK_THAT(x(0), WithinRel(1 + z + z * z / 2 + z * z * z / 6, 1e-15));
    CHECK_THAT(amplification(scheme::rk3, z).real(), WithinRel(x(0), 1e-15));
    CHECK_THAT(amplification(scheme::explicit_euler, z).real(), WithinRel(1 + z, 1e-15));
    CHECK_THAT(amplification(scheme::implicit_euler, z).real(), WithinRel(1 / (1 - z), 1e-15));
    CHECK_THAT(amplification(scheme::zoh, z).real(), WithinRel(std::exp(z), 1e-15));
}

TEST_CASE("rk3 input convention", "[steppers]") {
    const auto m = scalar_model(-0.2, 1.0);
    stepper held(m, scheme::rk3, 1.0), literal(m, scheme::rk3, 1.0, true);
    Eigen::VectorXd a = Eigen::VectorXd::Ones(1), b = a;
    held.advance(a, 2.0, 2.0);
    literal.advance(b, 2.0, 2.0);
    // held input: exact for the affine ODE through third order
    const double z = -0.2, xs = 10.0;
    CHECK_THAT(a(0), WithinRel(xs + (1.0 - xs) * (1 + z + z * z / 2 + z * z * z / 6), 1e-14));
    CHECK(a(0) != b(0));
}

TEST_CASE("stability predicate", "[stability]") {
    CHECK_FALSE(stability_predicate(scalar_model(-3.0, 1.0), scheme::explicit_euler, 1.0));
    CHECK(stability_predicate(scalar_model(-1.5, 1.0), scheme::explicit_euler, 1.0));
    CHECK(stability_predicate(scalar_model(-300.0, 1.0), scheme::implicit_euler, 1.0));
    CHECK(stability_predicate(scalar_model(-300.0, 1.0), scheme::zoh, 1.0));
    // rk3 real-axis boundary is near -2.5127
    CHECK(stability_predicate(scalar_model(-2.5, 1.0), scheme::rk3, 1.0));
    CHECK_FALSE(stability_predicate(scalar_model(-2.52, 1.0), scheme::rk3, 1.0));
    state_space integ = scalar_model(0.0, 1.0);
    integ.A = Eigen::Vector2d(0.0, -1.0).asDiagonal();
    integ.B = Eigen::Vector2d(1.0, 1.0);
    integ.C = Eigen::MatrixXd::Ones(2, 2);
    CHECK(stability_predicate(integ, scheme::explicit_euler, 1.0));
    CHECK(stability_predicate(integ, scheme::rk3, 1.0));

    // explicit euler on fdm: boundary where 4 D / dr^2 crosses 2, i.e. n^2 = R^2 / (2 D dt) asymptotically
    const auto c = table1();
    CHECK(stability_predicate(build_fdm(c.p, 23), scheme::explicit_euler, 1.0));
    CHECK_FALSE(stability_predicate(build_fdm(c.p, 24), scheme::explicit_euler, 1.0));
    CHECK(stability_predicate(build_fdm(c.p, 200), scheme::implicit_euler, 1.0));
}

TEST_CASE("stepper rejects bad steps", "[steppers]") {
    CHECK_THROWS(stepper(scalar_model(-1, 1), scheme::zoh, 0.0));
    CHECK_THROWS(discretize_zoh(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), -1.0));
    for (scheme s : {scheme::explicit_euler, scheme::implicit_euler, scheme::rk3, scheme::zoh})
        CHECK(scheme_from_string(to_string(s)) == s);
    CHECK_THROWS(scheme_from_string("crank"));
}
