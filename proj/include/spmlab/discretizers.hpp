#pragma once

#include "cell_model.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <array>
#include <complex>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace spmlab {

enum class method { fdm, spectral, pade, parabolic };

inline const char* to_string(method m) {
    switch (m) {
        case method::fdm: return "fdm";
        case method::spectral: return "spectral";
        case method::pade: return "pade";
        case method::parabolic: return "parabolic";
    }
    return "?";
}

inline method method_from_string(const std::string& s) {
    if (s == "fdm") return method::fdm;
    if (s == "spectral") return method::spectral;
    if (s == "pade") return method::pade;
    if (s == "parabolic") return method::parabolic;
    throw std::invalid_argument("unknown method '" + s + "'");
}

/// Continuous-time particle model. Output rows are always (c_ss, c_avg).
struct state_space {
    method tag = method::fdm;
    int size = 0;
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::MatrixXd C;  // 2 x nx
    Eigen::Vector2d D = Eigen::Vector2d::Zero();
    std::string params_hash;

    int states() const { return static_cast<int>(B.size()); }
};

/// Eigenvalues of A, sorted by descending real part.
inline std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + A.rows());
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return a.real() > b.real(); });
    return ev;
}

/// True if |lambda| falls below the integrator tolerance relative to the spectrum.
inline bool is_integrator(std::complex<double> lambda, double max_abs) {
    return std::abs(lambda) < 1e-12 * max_abs || max_abs == 0.0;
}

inline double max_abs(const std::vector<std::complex<double>>& ev) {
    double m = 0.0;
    for (auto z : ev) m = std::max(m, std::abs(z));
    return m;
}

// ---------------------------------------------------------------- FDM

inline state_space build_fdm(const electrode_params& el, int n) {
    if (n < 2) throw std::invalid_argument("build_fdm: node count must be >= 2");
    const int m = n - 1;
    const double dr = el.R / n;
    const double s = el.D / (dr * dr);
    state_space ss;
    ss.tag = method::fdm;
    ss.size = n;
    ss.A = Eigen::MatrixXd::Zero(m, m);
    if (m > 1) {
        ss.A(0, 0) = -2.0;
        ss.A(0, 1) = 2.0;
        for (int i = 1; i < m - 1; ++i) {
            const double k = i + 1;
            ss.A(i, i - 1) = (k - 1.0) / k;
            ss.A(i, i) = -2.0;
            ss.A(i, i + 1) = (k + 1.0) / k;
        }
        const double w = (n - 2.0) / (n - 1.0);
        ss.A(m - 1, m - 2) = w;
        ss.A(m - 1, m - 1) = -w;
        ss.A *= s;
    }
    ss.B = Eigen::VectorXd::Zero(m);
    ss.B(m - 1) = -static_cast<double>(n) / ((n - 1.0) * dr);

    ss.C = Eigen::MatrixXd::Zero(2, m);
    ss.C(0, m - 1) = 1.0;
    const double R3 = el.R * el.R * el.R;
    auto shell = [&](int k) { return (std::pow(k * dr, 3) - std::pow((k - 1) * dr, 3)) / R3; };
    for (int k = 1; k <= m; ++k) ss.C(1, k - 1) = shell(k);
    ss.C(1, m - 1) += shell(n);  // outermost shell folded onto the last interior node

    ss.D = {-dr / el.D, 0.0};
    ss.params_hash = params_hash(el);
    return ss;
}

// ----------------------------------------------------------- spectral

/// Chebyshev–Gauss–Lobatto nodes x_j = cos(pi j / N) and differentiation matrix.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> cheb(int N) {
    Eigen::VectorXd x(N + 1);
    for (int j = 0; j <= N; ++j) x(j) = std::cos(M_PI * j / N);
    Eigen::VectorXd c(N + 1);
    for (int j = 0; j <= N; ++j) c(j) = ((j == 0 || j == N) ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0);
    Eigen::MatrixXd Dm(N + 1, N + 1);
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            Dm(i, j) = (i == j) ? 0.0 : (c(i) / c(j)) / (x(i) - x(j));
    for (int i = 0; i <= N; ++i) Dm(i, i) = -Dm.row(i).sum();
    return {x, Dm};
}

/// Dimensionless collocation model for u = r c on the full diameter with odd symmetry.
/// Returns (A, B, c_ss row, c_ss feedthrough) with R = D = 1 and flux scaled by R/D.
struct spectral_nodal {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd Css;
    double Dss = 0.0;
};

inline spectral_nodal spectral_nodal_model(int n) {
    const int N = 2 * n + 2;
    auto [x, Dm] = cheb(N);
    const Eigen::MatrixXd D2 = Dm * Dm;
    // reduced unknowns: positive nodes j = 0..n (j = 0 is the surface), mirrored with sign flip
    const int np = n + 1;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N + 1, np);
    for (int k = 0; k < np; ++k) {
        P(k, k) = 1.0;
        P(N - k, k) = -1.0;
    }
    const Eigen::MatrixXd D1r = Dm * P;
    const Eigen::MatrixXd D2r = D2 * P;
    // surface row: u_r - u = -J  =>  u_s = Pb . u_int + Pj J
    const double a = D1r(0, 0) - 1.0;
    const Eigen::RowVectorXd bint = D1r.block(0, 1, 1, n);
    spectral_nodal out;
    out.Css = -bint / a;
    out.Dss = -1.0 / a;
    const Eigen::MatrixXd D2ii = D2r.block(1, 1, n, n);
    const Eigen::VectorXd D2is = D2r.block(1, 0, n, 1);
    out.A = D2ii + D2is * out.Css;
    out.B = D2is * out.Dss;
    return out;
}

inline state_space build_spectral(const electrode_params& el, int n) {
    if (n < 2) throw std::invalid_argument("build_spectral: node count must be >= 2");
    const spectral_nodal nod = spectral_nodal_model(n);

    Eigen::EigenSolver<Eigen::MatrixXd> es(nod.A);
    if (es.info() != Eigen::Success) throw std::runtime_error("build_spectral: eigendecomposition failed");
    const Eigen::VectorXcd lam = es.eigenvalues();
    const Eigen::MatrixXcd vec = es.eigenvectors();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return lam(a).real() > lam(b).real(); });
    const double scale = lam.cwiseAbs().maxCoeff();
    Eigen::VectorXd ev(n);
    Eigen::MatrixXd V(n, n);
    for (int k = 0; k < n; ++k) {
        const int i = order[k];
        if (std::abs(lam(i).imag()) > 1e-8 * scale)
            throw std::runtime_error("build_spectral: complex eigenvalue in collocation operator");
        ev(k) = lam(i).real();
        V.col(k) = vec.col(i).real().normalized();
    }
    ev(0) = 0.0;

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(V);
    Eigen::VectorXd Bm = lu.solve(nod.B);
    Eigen::RowVectorXd Cm = nod.Css * V;
    // mode 0 carries R*c_avg (input gain -3); other modes get B_k > 0
    const double s0 = -3.0 / Bm(0);
    Bm(0) *= s0;
    Cm(0) /= s0;
    for (int k = 1; k < n; ++k) {
        if (Bm(k) < 0.0) {
            Bm(k) = -Bm(k);
            Cm(k) = -Cm(k);
        }
    }

    state_space ss;
    ss.tag = method::spectral;
    ss.size = n;
    ss.A = (el.D / (el.R * el.R)) * ev.asDiagonal().toDenseMatrix();
    ss.B = Bm;
    ss.C = Eigen::MatrixXd::Zero(2, n);
    ss.C.row(0) = Cm / el.R;
    ss.C(1, 0) = 1.0 / el.R;
    ss.D = {nod.Dss * el.R / el.D, 0.0};
    ss.params_hash = params_hash(el);
    return ss;
}

// --------------------------------------------------------------- Pade

using rational = boost::multiprecision::cpp_rational;

/// Exact coefficients g_k of -z tanh b / (3 (tanh b - b)), z = b^2, i.e. H = (R/D)(-3/z) g(z).
inline std::vector<rational> transcendental_series(int K) {
    const int nb = 2 * K + 4;
    std::vector<rational> bern(nb + 1);
    bern[0] = 1;
    for (int m = 1; m <= nb; ++m) {
        rational acc = 0;
        boost::multiprecision::cpp_int binom = 1;  // C(m+1, k)
        for (int k = 0; k < m; ++k) {
            acc += rational(binom) * bern[k];
            binom = binom * (m + 1 - k) / (k + 1);
        }
        bern[m] = -acc / (m + 1);
    }
    // b coth b = sum_k c_k b^{2k},  c_k = 2^{2k} B_{2k} / (2k)!
    std::vector<rational> c(K + 2);
    boost::multiprecision::cpp_int fact = 1;
    boost::multiprecision::cpp_int pow4 = 1;
    for (int k = 0; k < K + 2; ++k) {
        if (k > 0) {
            fact *= (2 * k - 1) * (2 * k);
            pow4 *= 4;
        }
        c[k] = rational(pow4) * bern[2 * k] / rational(fact);
    }
    std::vector<rational> S(K + 1), g(K + 1);
    for (int j = 0; j <= K; ++j) S[j] = 3 * c[j + 1];
    g[0] = 1 / S[0];
    for (int k = 1; k <= K; ++k) {
        rational acc = 0;
        for (int i = 1; i <= k; ++i) acc += S[i] * g[k - i];
        g[k] = -acc / S[0];
    }
    return g;
}

/// Dimensionless [m-1/m-1] Pade approximant P(z)/Q(z) of g(z), Q monic.
struct pade_coefficients {
    int order = 0;
    std::vector<rational> p;  // p_0 .. p_{m-1}
    std::vector<rational> q;  // q_1 .. q_{m-1}, then the leading 1
};

inline pade_coefficients compute_pade_coefficients(int m) {
    if (m < 2 || m > 5) throw std::invalid_argument("pade: supported orders are 2..5");
    const auto g = transcendental_series(2 * m);
    const int n = m - 1;
    // Q g - P vanishes through z^{2m-2}: rows i = m..2m-2 fix Q_0..Q_{n-1}
    std::vector<std::vector<rational>> M(n, std::vector<rational>(n + 1));
    for (int r = 0; r < n; ++r) {
        const int i = m + r;
        for (int k = 0; k < n; ++k) M[r][k] = (i - k >= 0) ? g[i - k] : rational(0);
        M[r][n] = -g[i - n];
    }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        while (piv < n && M[piv][col] == 0) ++piv;
        if (piv == n) throw std::runtime_error("pade: singular moment system");
        std::swap(M[col], M[piv]);
        for (int r = 0; r < n; ++r) {
            if (r == col || M[r][col] == 0) continue;
            const rational f = M[r][col] / M[col][col];
            for (int k = col; k <= n; ++k) M[r][k] -= f * M[col][k];
        }
    }
    pade_coefficients pc;
    pc.order = m;
    pc.q.resize(m);
    for (int k = 0; k < n; ++k) pc.q[k] = M[k][n] / M[k][k];
    pc.q[n] = 1;
    pc.p.resize(m);
    for (int i = 0; i < m; ++i) {
        rational acc = 0;
        for (int k = 0; k <= i && k < m; ++k) acc += pc.q[k] * g[i - k];
        pc.p[i] = acc;
    }
    return pc;
}

inline const pade_coefficients& pade_table(int m) {
    if (m < 2 || m > 5) throw std::invalid_argument("pade: supported orders are 2..5");
    static std::array<pade_coefficients, 4> table;
    static std::once_flag once;
    std::call_once(once, [] {
        for (int k = 2; k <= 5; ++k) table[k - 2] = compute_pade_coefficients(k);
    });
    return table[m - 2];
}

inline state_space build_pade(const electrode_params& el, int m) {
    const auto& pc = pade_table(m);
    const double sigma = el.D / (el.R * el.R);
    std::vector<double> p(m), q(m);
    for (int k = 0; k < m; ++k) {
        const double sc = std::pow(sigma, m - 1 - k);
        p[k] = static_cast<double>(pc.p[k]) * sc;
        q[k] = static_cast<double>(pc.q[k]) * sc;
    }
    state_space ss;
    ss.tag = method::pade;
    ss.size = m;
    ss.A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) ss.A(i, i + 1) = 1.0;
    for (int k = 1; k < m; ++k) ss.A(m - 1, k) = -q[k - 1];
    ss.B = Eigen::VectorXd::Zero(m);
    ss.B(m - 1) = -3.0 / el.R;
    ss.C = Eigen::MatrixXd::Zero(2, m);
    for (int k = 0; k < m; ++k) {
        ss.C(0, k) = p[k];
        ss.C(1, k) = q[k];
    }
    ss.D.setZero();
    ss.params_hash = params_hash(el);
    return ss;
}

// ---------------------------------------------------------- parabolic

inline state_space build_parabolic(const electrode_params& el) {
    const double R = el.R, D = el.D;
    state_space ss;
    ss.tag = method::parabolic;
    ss.size = 2;
    ss.A = Eigen::Matrix2d{{0.0, 0.0}, {0.0, -30.0 * D / (R * R)}};
    ss.B = Eigen::Vector2d{-3.0 / R, -45.0 / (2.0 * R * R)};
    ss.C = Eigen::Matrix2d{{1.0, 8.0 * R / 35.0}, {1.0, 0.0}};
    ss.D = {-R / (35.0 * D), 0.0};
    ss.params_hash = params_hash(el);
    return ss;
}

inline state_space build_model(method m, const electrode_params& el, int size) {
    switch (m) {
        case method::fdm: return build_fdm(el, size);
        case method::spectral: return build_spectral(el, size);
        case method::pade: return build_pade(el, size);
        case method::parabolic: return build_parabolic(el);
    }
    throw std::invalid_argument("build_model: bad method");
}

// ------------------------------------------------------- transcendental

/// Exact surface-concentration response to pore-wall flux, H(s) = (R/D) tanh b / (tanh b - b).
inline std::complex<double> transcendental_tf(const electrode_params& el, std::complex<double> s) {
    using cd = std::complex<double>;
    if (s == cd(0.0)) throw std::domain_error("transcendental_tf: s = 0 is the integrator pole");
    const double R = el.R, D = el.D;
    const cd z = s * (R * R / D);
    if (std::abs(z) < 0.1) {
        static const std::vector<double> g = [] {
            const auto ex = transcendental_series(14);
            std::vector<double> v;
            for (const auto& r : ex) v.push_back(static_cast<double>(r));
            return v;
        }();
        cd acc = 0.0;
        for (auto it = g.rbegin(); it != g.rend(); ++it) acc = acc * z + *it;
        return (R / D) * (-3.0 / z) * acc;
    }
    const cd b = std::sqrt(z);
    const cd t = std::tanh(b);
    return (R / D) * t / (t - b);
}

}  // namespace spmlab
