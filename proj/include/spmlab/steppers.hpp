#pragma once

#include "discretizers.hpp"
#include "matrix_exp.hpp"

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace spmlab {

enum class scheme { explicit_euler, implicit_euler, rk3, zoh };

inline const char* to_string(scheme s) {
    switch (s) {
        case scheme::explicit_euler: return "explicit";
        case scheme::implicit_euler: return "implicit";
        case scheme::rk3: return "rk3";
        case scheme::zoh: return "zoh";
    }
    return "?";
}

inline scheme scheme_from_string(const std::string& s) {
    if (s == "explicit") return scheme::explicit_euler;
    if (s == "implicit") return scheme::implicit_euler;
    if (s == "rk3") return scheme::rk3;
    if (s == "zoh") return scheme::zoh;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

struct zoh_pair {
    Eigen::MatrixXd Ad;
    Eigen::VectorXd Bd;
};

/// Exact sampled system for piecewise-constant input, via exp(dt [[A, B], [0, 0]]).
inline zoh_pair discretize_zoh(const Eigen::MatrixXd& A, const Eigen::VectorXd& B, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("discretize_zoh: dt must be positive");
    const Eigen::Index n = A.rows();
    // Bd is linear in B, so the input column is normalized first; otherwise a large |B|
    // (1/R^2 scale) would set the squaring depth and amplify roundoff.
    const double bscale = B.cwiseAbs().maxCoeff();
    const double b = bscale > 0.0 ? bscale : 1.0;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
    M.topLeftCorner(n, n) = A;
    M.topRightCorner(n, 1) = B / b;
    const Eigen::MatrixXd E = expm(dt * M);
    return {E.topLeftCorner(n, n), b * E.topRightCorner(n, 1)};
}

inline zoh_pair discretize_zoh(const state_space& m, double dt) { return discretize_zoh(m.A, m.B, dt); }

/// Time-advance rule bound to one model and one step size.
class stepper {
public:
    stepper(const state_space& model, scheme sch, double dt, bool rk3_literal_inputs = false)
        : sch_(sch), dt_(dt), literal_(rk3_literal_inputs), A_(model.A), B_(model.B) {
        if (!(dt > 0.0)) throw std::invalid_argument("stepper: dt must be positive");
        const Eigen::Index n = A_.rows();
        k1_.resize(n);
        k2_.resize(n);
        k3_.resize(n);
        tmp_.resize(n);
        if (sch_ == scheme::implicit_euler) {
            lu_.compute(Eigen::MatrixXd::Identity(n, n) - dt_ * A_);
            if (!(lu_.matrixLU().diagonal().cwiseAbs().minCoeff() > 0.0))
                throw std::runtime_error("stepper: singular implicit system");
        } else if (sch_ == scheme::zoh) {
            zoh_ = discretize_zoh(A_, B_, dt_);
        }
    }

    scheme kind() const { return sch_; }
    double dt() const { return dt_; }
    const Eigen::PartialPivLU<Eigen::MatrixXd>& factorization() const { return lu_; }
    const zoh_pair& zoh() const { return zoh_; }

    /// Advance x in place. j is the input at t, j_next the input at t + dt.
    void advance(Eigen::VectorXd& x, double j, double j_next) {
        switch (sch_) {
            case scheme::explicit_euler:
                tmp_.noalias() = A_ * x;
                x += dt_ * (tmp_ + B_ * j);
                break;
            case scheme::implicit_euler:
                tmp_ = x + (dt_ * j_next) * B_;
                x = lu_.solve(tmp_);
                break;
            case scheme::rk3: rk3(x, j); break;
            case scheme::zoh:
                tmp_.noalias() = zoh_.Ad * x;
                x = tmp_ + zoh_.Bd * j;
                break;
        }
    }

    Eigen::VectorXd step_explicit(const Eigen::VectorXd& x, double j) const {
        return x + dt_ * (A_ * x + B_ * j);
    }

    Eigen::VectorXd step_implicit(const Eigen::VectorXd& x, double j_next) const {
        if (sch_ != scheme::implicit_euler) throw std::logic_error("stepper: no implicit factorization");
        return lu_.solve(x + dt_ * B_ * j_next);
    }

    Eigen::VectorXd step_rk3(const Eigen::VectorXd& x, double j) {
        Eigen::VectorXd y = x;
        rk3(y, j);
        return y;
    }

    Eigen::VectorXd step_zoh(const Eigen::VectorXd& x, double j) const {
        if (sch_ != scheme::zoh) throw std::logic_error("stepper: no ZOH pair");
        return zoh_.Ad * x + zoh_.Bd * j;
    }

private:
    void rk3(Eigen::VectorXd& x, double j) {
        // Kutta's third-order scheme; the literal variant scales the input by time increments
        const double j2 = literal_ ? j + 0.5 * dt_ * j : j;
        const double j3 = literal_ ? j - dt_ * j + 2.0 * dt_ * j : j;
        k1_.noalias() = A_ * x;
        k1_ += B_ * j;
        tmp_ = x + (0.5 * dt_) * k1_;
        k2_.noalias() = A_ * tmp_;
        k2_ += B_ * j2;
        tmp_ = x - dt_ * k1_ + (2.0 * dt_) * k2_;
        k3_.noalias() = A_ * tmp_;
        k3_ += B_ * j3;
        x += (dt_ / 6.0) * (k1_ + 4.0 * k2_ + k3_);
    }

    scheme sch_;
    double dt_;
    bool literal_;
    Eigen::MatrixXd A_;
    Eigen::VectorXd B_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    zoh_pair zoh_;
    Eigen::VectorXd k1_, k2_, k3_, tmp_;
};

/// Scalar amplification factor of a scheme for the mode z = dt * lambda.
inline std::complex<double> amplification(scheme s, std::complex<double> z) {
    switch (s) {
        case scheme::explicit_euler: return 1.0 + z;
        case scheme::rk3: return 1.0 + z + z * z / 2.0 + z * z * z / 6.0;
        case scheme::implicit_euler: return 1.0 / (1.0 - z);
        case scheme::zoh: return std::exp(z);
    }
    return 0.0;
}

/// Largest amplification over the non-integrator eigenvalues of A.
inline double amplification_radius(const Eigen::MatrixXd& A, scheme s, double dt) {
    const auto ev = eigenvalues(A);
    const double scale = max_abs(ev);
    double rho = 0.0;
    for (auto lam : ev) {
        if (is_integrator(lam, scale)) continue;
        rho = std::max(rho, std::abs(amplification(s, dt * lam)));
    }
    return rho;
}

inline bool stability_predicate(const state_space& m, scheme s, double dt) {
    return amplification_radius(m.A, s, dt) <= 1.0 + 1e-12;
}

}  // namespace spmlab
