#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace spmlab {

/// exp(M) by scaling and squaring of a truncated Taylor series.
/// Terms are added until their norm drops below tol times the partial sum.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& M, double tol = 1e-13) {
    const Eigen::Index n = M.rows();
    const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd X = M / std::ldexp(1.0, s);

    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k < 64; ++k) {
        term = term * X / static_cast<double>(k);
        E += term;
        const double tn = term.cwiseAbs().colwise().sum().maxCoeff();
        const double en = E.cwiseAbs().colwise().sum().maxCoeff();
        if (tn <= tol * en) break;
    }
    for (int i = 0; i < s; ++i) E = E * E;
    return E;
}

}  // namespace spmlab
