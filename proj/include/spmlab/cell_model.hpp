#pragma once

// pchip.hpp in Boost 1.74 relies on an unqualified isnan found in boost::math
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spmlab {

enum class electrode { positive, negative };

inline const char* to_string(electrode e) { return e == electrode::positive ? "p" : "n"; }

/// Accepts "p", "positive", "n", "negative".
inline electrode electrode_from_string(const std::string& s) {
    if (s == "p" || s == "positive") return electrode::positive;
    if (s == "n" || s == "negative") return electrode::negative;
    throw std::invalid_argument("unknown electrode '" + s + "'");
}

/// Particle and electrode quantities for one electrode.
struct electrode_params {
    double c0 = 0.0;      // initial concentration [mol/m^3]
    double c_max = 0.0;   // [mol/m^3]
    double D = 0.0;       // solid diffusivity [m^2/s]
    double R = 0.0;       // particle radius [m]
    double eps = 0.0;     // active volume fraction [-]
    double L = 0.0;       // electrode thickness [m]
    double r_eef = 0.0;   // reaction rate coefficient
};

struct cell_params {
    electrode_params p;
    electrode_params n;
    double R0 = 0.0;        // [Ohm]
    double area = 0.0;      // [m^2]
    double c_e = 1000.0;    // [mol/m^3]
    double T = 298.15;      // [K]
    double Q_nom = 2.9;     // [Ah]
    double F = 96485.0;     // [C/mol]
    double R_gas = 8.314;   // [J/mol/K]

    const electrode_params& operator[](electrode e) const { return e == electrode::positive ? p : n; }
    electrode_params& operator[](electrode e) { return e == electrode::positive ? p : n; }
};

struct param_range {
    double lo;
    double hi;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Identification bounds for the preset quantities.
struct table1_ranges {
    param_range c0_n{30000.0, 50000.0};
    param_range c0_p{0.0, 1000.0};
    param_range r_eef{1e-8, 1e-5};
    param_range eps{0.35, 0.7};
    param_range D{1e-15, 1e-10};
    param_range R0{0.001, 0.1};
    param_range c_max{35000.0, 50000.0};
    param_range L{1e-5, 1e-4};
    param_range R_s{1e-6, 1e-5};
    param_range area{0.006, 0.012};
};

inline void validate(const electrode_params& e, const char* tag) {
    auto fail = [&](const char* what) {
        throw std::invalid_argument(std::string("electrode ") + tag + ": " + what);
    };
    auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!finite_pos(e.c_max) || !finite_pos(e.D) || !finite_pos(e.R) || !finite_pos(e.L) ||
        !finite_pos(e.r_eef))
        fail("physical quantities must be positive");
    if (!(e.c0 > 0.0 && e.c0 < e.c_max)) fail("initial concentration must lie in (0, c_max)");
    if (!(e.eps > 0.0 && e.eps < 1.0)) fail("volume fraction must lie in (0, 1)");
}

inline void validate(const cell_params& c) {
    validate(c.p, "p");
    validate(c.n, "n");
    for (double v : {c.R0, c.area, c.c_e, c.T, c.Q_nom, c.F, c.R_gas})
        if (!(std::isfinite(v) && v > 0.0)) throw std::invalid_argument("cell constants must be positive");
}

/// Estimated parameter set of the 2.9 Ah 18650 reference cell.
inline cell_params table1() {
    cell_params c;
    c.n = {34947.74, 39139.31, 1.34e-14, 6e-6, 0.5, 7.6e-5, 3.12e-7};
    c.p = {331.33, 46248.5, 1.48e-14, 4e-6, 0.43, 6.94e-5, 4.28e-6};
    c.R0 = 0.016;
    c.area = 0.008;
    return c;
}

inline bool within_ranges(const cell_params& c, const table1_ranges& r = {}) {
    auto ok_el = [&](const electrode_params& e) {
        return r.r_eef.contains(e.r_eef) && r.eps.contains(e.eps) && r.D.contains(e.D) &&
               r.c_max.contains(e.c_max) && r.L.contains(e.L) && r.R_s.contains(e.R);
    };
    return ok_el(c.p) && ok_el(c.n) && r.c0_n.contains(c.n.c0) && r.c0_p.contains(c.p.c0) &&
           r.R0.contains(c.R0) && r.area.contains(c.area);
}

/// FNV-1a over the bit patterns of the given doubles.
inline std::uint64_t fnv1a(const double* v, std::size_t count, std::uint64_t h = 1469598103934665603ull) {
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v[i], sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ull;
        }
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string params_hash(const electrode_params& e) {
    const double v[] = {e.c0, e.c_max, e.D, e.R, e.eps, e.L, e.r_eef};
    return hex64(fnv1a(v, 7));
}

inline std::string params_hash(const cell_params& c) {
    const double v[] = {c.p.c0, c.p.c_max, c.p.D, c.p.R, c.p.eps, c.p.L, c.p.r_eef,
                        c.n.c0, c.n.c_max, c.n.D, c.n.R, c.n.eps, c.n.L, c.n.r_eef,
                        c.R0,   c.area,    c.c_e, c.T, c.Q_nom, c.F, c.R_gas};
    return hex64(fnv1a(v, sizeof v / sizeof v[0]));
}

inline double specific_surface_area(double eps, double R_s) {
    if (!(eps > 0.0 && eps < 1.0) || !(R_s > 0.0))
        throw std::invalid_argument("specific_surface_area: need eps in (0,1) and R_s > 0");
    return 3.0 * eps / R_s;
}

inline double electrode_sign(electrode e) { return e == electrode::negative ? 1.0 : -1.0; }

/// Pore-wall molar flux; I > 0 is discharge, positive flux leaves the particle.
inline double molar_flux(double I, electrode e, const cell_params& c) {
    const auto& el = c[e];
    return electrode_sign(e) * I / (c.F * specific_surface_area(el.eps, el.R) * c.area * el.L);
}

inline double exchange_current_density(double theta, electrode e, const cell_params& c) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw std::domain_error("exchange_current_density: theta outside [0, 1]");
    const auto& el = c[e];
    return el.r_eef * el.c_max * std::sqrt(c.c_e * theta * (1.0 - theta));
}

inline double overpotential(double theta, double I, electrode e, const cell_params& c) {
    const double j0 = exchange_current_density(theta, e, c);
    if (!(j0 > 0.0)) throw std::domain_error("overpotential: exchange current vanishes at theta = 0 or 1");
    const auto& el = c[e];
    const double a = specific_surface_area(el.eps, el.R);
    return 2.0 * c.R_gas * c.T / c.F * std::asinh(electrode_sign(e) * I / (2.0 * a * el.L * j0));
}

inline double stoichiometry(double c_ss, double c_max) {
    if (!(c_max > 0.0)) throw std::invalid_argument("stoichiometry: c_max must be positive");
    return c_ss / c_max;
}

/// Open-circuit potential table with monotone cubic (PCHIP) interpolation.
class ocp_curve {
public:
    ocp_curve() = default;

    ocp_curve(std::vector<double> theta, std::vector<double> volts, std::string label = {})
        : theta_(std::move(theta)), volts_(std::move(volts)), label_(std::move(label)) {
        if (theta_.size() != volts_.size()) throw std::invalid_argument("ocp_curve: column length mismatch");
        if (theta_.size() < 4) throw std::invalid_argument("ocp_curve: at least 4 knots required");
        for (std::size_t i = 0; i < theta_.size(); ++i) {
            if (!std::isfinite(theta_[i]) || !std::isfinite(volts_[i]))
                throw std::invalid_argument("ocp_curve: non-finite knot");
            if (theta_[i] < 0.0 || theta_[i] > 1.0) throw std::invalid_argument("ocp_curve: theta outside [0, 1]");
            if (i > 0 && !(theta_[i] > theta_[i - 1]))
                throw std::invalid_argument("ocp_curve: theta must be strictly increasing");
        }
        interp_.emplace_back(std::vector<double>(theta_), std::vector<double>(volts_));
    }

    double operator()(double theta) const {
        if (interp_.empty()) throw std::logic_error("ocp_curve: empty curve");
        if (!(theta >= theta_.front() && theta <= theta_.back()))
            throw std::out_of_range("ocp_curve: theta " + std::to_string(theta) + " outside knot range");
        return interp_.front()(theta);
    }

    double theta_lo() const { return theta_.front(); }
    double theta_hi() const { return theta_.back(); }
    bool contains(double theta) const { return theta >= theta_lo() && theta <= theta_hi(); }
    const std::vector<double>& theta() const { return theta_; }
    const std::vector<double>& volts() const { return volts_; }
    const std::string& label() const { return label_; }

private:
    using pchip = boost::math::interpolators::pchip<std::vector<double>>;
    std::vector<double> theta_;
    std::vector<double> volts_;
    std::string label_;
    std::vector<pchip> interp_;  // zero or one element; pchip has no default state
};

inline double terminal_voltage(double theta_p, double theta_n, double I, const cell_params& c,
                               const ocp_curve& ocp_p, const ocp_curve& ocp_n) {
    return ocp_p(theta_p) - ocp_n(theta_n) + overpotential(theta_p, I, electrode::positive, c) -
           overpotential(theta_n, I, electrode::negative, c) - c.R0 * I;
}

inline double crate_to_current(double crate, double Q_nom) {
    if (!(Q_nom > 0.0)) throw std::invalid_argument("crate_to_current: Q_nom must be positive");
    return crate * Q_nom;
}

}  // namespace spmlab
