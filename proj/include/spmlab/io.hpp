#pragma once

#include "analysis.hpp"
#include "bench.hpp"
#include "cell_model.hpp"
#include "discretizers.hpp"
#include "identify.hpp"
#include "simulator.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#ifndef SPMLAB_DATA_DIR
#define SPMLAB_DATA_DIR "data"
#endif

namespace spmlab {

/// Malformed input file or argument; the CLI maps it to exit code 1.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw parse_error(where + ": cannot parse number '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw parse_error(where + ": cannot parse integer '" + s + "'");
    }
}

// ---------------------------------------------------------------- CSV

struct csv_table {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line;  // 1-based source line of each row

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw parse_error(source + ": missing column '" + name + "'");
    }
    std::string where(std::size_t r) const { return source + ":" + std::to_string(line[r]); }
};

/// Comma-separated table with a required header; blank lines and '#' comment lines are skipped.
inline csv_table read_csv(std::istream& in, const std::string& source) {
    csv_table t;
    t.source = source;
    std::string raw;
    std::size_t ln = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
        ++ln;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        auto cells = split(s, ',');
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw parse_error(source + ":" + std::to_string(ln) + ": expected " + std::to_string(t.header.size()) +
                              " fields, found " + std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.line.push_back(ln);
    }
    if (!have_header) throw parse_error(source + ": missing header row");
    return t;
}

inline csv_table read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw parse_error("cannot open '" + path + "'");
    return read_csv(f, path);
}

inline std::ofstream open_output(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << std::setprecision(17);
    return f;
}

// ------------------------------------------------------------ profile

inline current_profile profile_from_csv(const csv_table& t) {
    const std::size_t ct = t.column("time_s"), ci = t.column("current_A");
    if (t.rows.empty()) throw parse_error(t.source + ": profile has no samples");
    std::vector<double> time;
    current_profile p;
    p.name = fs::path(t.source).stem().string();
    p.source = t.source;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        time.push_back(parse_double(t.rows[r][ct], t.where(r)));
        p.current.push_back(parse_double(t.rows[r][ci], t.where(r)));
        if (!std::isfinite(time.back()) || !std::isfinite(p.current.back()))
            throw parse_error(t.where(r) + ": non-finite value");
    }
    p.dt = time.size() > 1 ? time[1] - time[0] : 1.0;
    if (!(p.dt > 0.0)) throw parse_error(t.where(1) + ": time must increase");
    for (std::size_t k = 1; k < time.size(); ++k) {
        const double expect = time[0] + static_cast<double>(k) * p.dt;
        if (std::abs(time[k] - expect) > 1e-6 * p.dt)
            throw parse_error(t.where(k) + ": non-uniform time step (expected t = " + std::to_string(expect) + ")");
    }
    return p;
}

inline current_profile load_profile(const std::string& path) { return profile_from_csv(read_csv_file(path)); }

inline void write_profile(std::ostream& out, const current_profile& p) {
    out << "time_s,current_A\n";
    for (std::size_t k = 0; k < p.size(); ++k) out << static_cast<double>(k) * p.dt << ',' << p.current[k] << '\n';
}

// ---------------------------------------------------------------- OCP

inline ocp_curve ocp_from_csv(const csv_table& t) {
    const std::size_t ct = t.column("theta"), cv = t.column("voltage_V");
    std::vector<double> th, v;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        th.push_back(parse_double(t.rows[r][ct], t.where(r)));
        v.push_back(parse_double(t.rows[r][cv], t.where(r)));
        if (th.back() < 0.0 || th.back() > 1.0) throw parse_error(t.where(r) + ": theta outside [0, 1]");
        if (r > 0 && !(th[r] > th[r - 1])) throw parse_error(t.where(r) + ": theta must be strictly ascending");
    }
    try {
        return ocp_curve(std::move(th), std::move(v), t.source);
    } catch (const std::invalid_argument& e) {
        throw parse_error(t.source + ": " + e.what());
    }
}

inline ocp_curve load_ocp(const std::string& path) { return ocp_from_csv(read_csv_file(path)); }

inline std::string data_dir() {
    if (const char* env = std::getenv("SPMLAB_DATA_DIR")) return env;
    return SPMLAB_DATA_DIR;
}

/// Shipped substitute curves: graphite for the negative, NMC for the positive electrode.
inline ocp_curve reference_ocp(electrode e) {
    const std::string f = e == electrode::positive ? "ocp_nmc_reference.csv" : "ocp_graphite_reference.csv";
    return load_ocp((fs::path(data_dir()) / f).string());
}

inline std::string output_dir() {
    if (const char* env = std::getenv("SPMLAB_OUTPUT_DIR")) return env;
    return ".";
}

// -------------------------------------------------------------- trace

inline void write_trace(std::ostream& out, const simulation_trace& tr) {
    out << "time_s,voltage_V,css_p,cavg_p,css_n,cavg_n,flag\n";
    for (std::size_t k = 0; k < tr.size(); ++k)
        out << tr.time[k] << ',' << tr.voltage[k] << ',' << tr.css_p[k] << ',' << tr.cavg_p[k] << ',' << tr.css_n[k]
            << ',' << tr.cavg_n[k] << ',' << to_string(tr.flag[k]) << '\n';
}

inline simulation_trace trace_from_csv(const csv_table& t) {
    const std::size_t c[] = {t.column("time_s"), t.column("voltage_V"), t.column("css_p"), t.column("cavg_p"),
                             t.column("css_n"),  t.column("cavg_n")};
    const std::size_t cf = t.column("flag");
    simulation_trace tr;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::vector<double>* dst[] = {&tr.time, &tr.voltage, &tr.css_p, &tr.cavg_p, &tr.css_n, &tr.cavg_n};
        for (int i = 0; i < 6; ++i) {
            const std::string& s = t.rows[r][c[i]];
            dst[i]->push_back(s == "nan" || s == "-nan" ? std::nan("") : parse_double(s, t.where(r)));
        }
        try {
            tr.flag.push_back(flag_from_string(t.rows[r][cf]));
        } catch (const std::invalid_argument& e) {
            throw parse_error(t.where(r) + ": " + e.what());
        }
    }
    tr.steps = tr.size();
    return tr;
}

inline simulation_trace load_trace(const std::string& path) { return trace_from_csv(read_csv_file(path)); }

// ----------------------------------------------------- key-value files

/// Plain-text configuration: `key = value` per line, `#` starts a comment, `[section]` prefixes
/// following keys with `section.`. Keys may repeat; order is preserved.
struct kv_document {
    struct entry {
        std::string key;
        std::string value;
        std::size_t line;
    };
    std::string source;
    std::vector<entry> entries;

    const entry* find(const std::string& key) const {
        const entry* hit = nullptr;
        for (const auto& e : entries)
            if (e.key == key) hit = &e;
        return hit;
    }
    std::string get(const std::string& key, const std::string& fallback) const {
        const auto* e = find(key);
        return e ? e->value : fallback;
    }
    std::vector<entry> all(const std::string& key) const {
        std::vector<entry> out;
        for (const auto& e : entries)
            if (e.key == key) out.push_back(e);
        return out;
    }
    std::string where(const entry& e) const { return source + ":" + std::to_string(e.line); }
};

inline kv_document parse_kv(std::istream& in, const std::string& source) {
    kv_document doc;
    doc.source = source;
    std::string raw, section;
    std::size_t ln = 0;
    while (std::getline(in, raw)) {
        ++ln;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw parse_error(source + ":" + std::to_string(ln) + ": unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw parse_error(source + ":" + std::to_string(ln) + ": expected 'key = value'");
        std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw parse_error(source + ":" + std::to_string(ln) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        doc.entries.push_back({key, trim(s.substr(eq + 1)), ln});
    }
    return doc;
}

inline kv_document load_kv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw parse_error("cannot open '" + path + "'");
    return parse_kv(f, path);
}

// ---------------------------------------------------------- parameters

/// `table1` or a key-value file. A file may start from `preset = table1` and override
/// any quantity by name (R0, area, c_e, T, Q_nom, F, R_gas, p.c0, n.D, ...).
inline cell_params load_params(const std::string& path_or_preset) {
    if (path_or_preset == "table1") return table1();
    const kv_document doc = load_kv(path_or_preset);
    cell_params c = table1();
    const std::string preset = doc.get("preset", "table1");
    if (preset != "table1") throw parse_error(doc.source + ": unknown preset '" + preset + "'");
    for (const auto& e : doc.entries) {
        if (e.key == "preset") continue;
        try {
            param_ref(c, e.key) = parse_double(e.value, doc.where(e));
        } catch (const std::invalid_argument&) {
            throw parse_error(doc.where(e) + ": unknown parameter '" + e.key + "'");
        }
    }
    try {
        validate(c);
    } catch (const std::invalid_argument& ex) {
        throw parse_error(doc.source + ": " + ex.what());
    }
    return c;
}

inline void write_params(std::ostream& out, const cell_params& c) {
    out << std::setprecision(17);
    out << "R0 = " << c.R0 << "\narea = " << c.area << "\nc_e = " << c.c_e << "\nT = " << c.T
        << "\nQ_nom = " << c.Q_nom << "\nF = " << c.F << "\nR_gas = " << c.R_gas << '\n';
    for (const char* tag : {"p", "n"}) {
        const auto& e = tag[0] == 'p' ? c.p : c.n;
        out << "[" << tag << "]\nc0 = " << e.c0 << "\nc_max = " << e.c_max << "\nD = " << e.D << "\nR = " << e.R
            << "\neps = " << e.eps << "\nL = " << e.L << "\nr_eef = " << e.r_eef << '\n';
    }
}

// --------------------------------------------------------- spec strings

/// "fdm-implicit:10", "fdm:10" (implicit), "spectral:5", "pade:2", "parabolic".
inline model_spec parse_model_spec(const std::string& text, int default_size = 10) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    model_spec s;
    s.size = default_size;
    if (colon != std::string::npos) s.size = parse_int(text.substr(colon + 1), "model '" + text + "'");
    const auto dash = head.find('-');
    const std::string mname = head.substr(0, dash);
    try {
        s.m = method_from_string(mname);
        if (dash != std::string::npos) {
            if (s.m != method::fdm) throw std::invalid_argument("only fdm takes a time scheme suffix");
            s.sch = scheme_from_string(head.substr(dash + 1));
        } else {
            s.sch = s.m == method::fdm ? scheme::implicit_euler : scheme::zoh;
        }
    } catch (const std::invalid_argument& e) {
        throw parse_error("model '" + text + "': " + e.what());
    }
    if (s.m == method::parabolic) s.size = 2;
    if (s.m == method::pade && (s.size < 2 || s.size > 5)) throw parse_error("model '" + text + "': Pade order must be 2..5");
    if (s.size < 2) throw parse_error("model '" + text + "': size must be >= 2");
    return s;
}

/// "2..20" or "2..20:2" or "3,5,8" or "7".
inline std::vector<int> parse_int_range(const std::string& text) {
    std::vector<int> out;
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        for (const auto& p : split(text, ',')) out.push_back(parse_int(p, "range '" + text + "'"));
        return out;
    }
    const std::string rest = text.substr(dots + 2);
    const auto colon = rest.find(':');
    const int a = parse_int(text.substr(0, dots), "range '" + text + "'");
    const int b = parse_int(rest.substr(0, colon), "range '" + text + "'");
    const int step = colon == std::string::npos ? 1 : parse_int(rest.substr(colon + 1), "range '" + text + "'");
    if (step <= 0 || b < a) throw parse_error("range '" + text + "': empty or bad step");
    for (int v = a; v <= b; v += step) out.push_back(v);
    return out;
}

/// "0.2..2.0:0.2" or "0.5,1,2".
inline std::vector<double> parse_real_range(const std::string& text) {
    std::vector<double> out;
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        for (const auto& p : split(text, ',')) out.push_back(parse_double(p, "range '" + text + "'"));
        return out;
    }
    const std::string rest = text.substr(dots + 2);
    const auto colon = rest.find(':');
    const double a = parse_double(text.substr(0, dots), "range '" + text + "'");
    const double b = parse_double(rest.substr(0, colon), "range '" + text + "'");
    const double step = colon == std::string::npos ? 1.0 : parse_double(rest.substr(colon + 1), "range '" + text + "'");
    if (!(step > 0.0) || b < a) throw parse_error("range '" + text + "': empty or bad step");
    const auto n = static_cast<int>(std::floor((b - a) / step + 1e-9));
    for (int k = 0; k <= n; ++k) out.push_back(std::round((a + k * step) * 1e12) / 1e12);
    return out;
}

// --------------------------------------------------------- model JSON

inline nlohmann::json model_to_json(const state_space& m) {
    auto mat = [](const Eigen::MatrixXd& M) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            nlohmann::json r = nlohmann::json::array();
            for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
            rows.push_back(r);
        }
        return rows;
    };
    nlohmann::json j;
    j["method"] = to_string(m.tag);
    j["n"] = m.size;
    j["A"] = mat(m.A);
    j["B"] = mat(m.B);
    j["C"] = mat(m.C);
    j["D"] = mat(m.D);
    j["params_hash"] = m.params_hash;
    return j;
}

inline state_space model_from_json(const nlohmann::json& j) {
    auto mat = [](const nlohmann::json& rows) {
        const auto r = static_cast<Eigen::Index>(rows.size());
        const auto c = r ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
        Eigen::MatrixXd M(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            if (static_cast<Eigen::Index>(rows.at(i).size()) != c) throw parse_error("model JSON: ragged matrix");
            for (Eigen::Index k = 0; k < c; ++k) M(i, k) = rows.at(i).at(k).get<double>();
        }
        return M;
    };
    try {
        state_space m;
        m.tag = method_from_string(j.at("method").get<std::string>());
        m.size = j.at("n").get<int>();
        m.A = mat(j.at("A"));
        const Eigen::MatrixXd B = mat(j.at("B"));
        m.B = B.col(0);
        m.C = mat(j.at("C"));
        const Eigen::MatrixXd D = mat(j.at("D"));
        m.D = D.col(0);
        m.params_hash = j.value("params_hash", "");
        const auto n = m.A.rows();
        if (m.A.cols() != n || B.rows() != n || B.cols() != 1 || m.C.rows() != 2 || m.C.cols() != n ||
            D.rows() != 2 || D.cols() != 1)
            throw parse_error("model JSON: inconsistent matrix dimensions");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("model JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw parse_error(std::string("model JSON: ") + e.what());
    }
}

// ------------------------------------------------------ baseline cache

/// Content-addressed store of baseline traces under `dir`.
class baseline_cache {
public:
    explicit baseline_cache(std::string dir) : dir_(std::move(dir)) {}

    static std::string key(const model_spec& s, const current_profile& prof, const cell_params& params,
                           const ocp_curve& ocp_p, const ocp_curve& ocp_n, const voltage_window& w) {
        std::uint64_t h = 1469598103934665603ull;
        const std::string lbl = s.label() + "|" + params_hash(params);
        for (unsigned char ch : lbl) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        const double meta[] = {prof.dt, static_cast<double>(prof.size()), w.v_min, w.v_max, w.enforce ? 1.0 : 0.0};
        h = fnv1a(meta, 5, h);
        h = fnv1a(prof.current.data(), prof.current.size(), h);
        for (const auto* c : {&ocp_p, &ocp_n}) {
            h = fnv1a(c->theta().data(), c->theta().size(), h);
            h = fnv1a(c->volts().data(), c->volts().size(), h);
        }
        return hex64(h);
    }

    std::string path_for(const std::string& key) const { return (fs::path(dir_) / ("baseline-" + key + ".csv")).string(); }

    std::optional<simulation_trace> get(const std::string& key) const {
        const auto p = path_for(key);
        if (!fs::exists(p)) return std::nullopt;
        try {
            return load_trace(p);
        } catch (const parse_error&) {
            return std::nullopt;
        }
    }

    void put(const std::string& key, const simulation_trace& tr) const {
        const auto final_path = path_for(key);
        const auto tmp = final_path + ".tmp";
        {
            auto f = open_output(tmp);
            write_trace(f, tr);
        }
        fs::rename(tmp, final_path);
    }

    baseline_fn provider(const cell_params& params, const ocp_curve& ocp_p, const ocp_curve& ocp_n,
                         voltage_window w) const {
        return [this, params, ocp_p, ocp_n, w](const model_spec& s, const current_profile& prof) {
            const auto k = key(s, prof, params, ocp_p, ocp_n, w);
            if (auto hit = get(k)) return *hit;
            auto tr = run_simulation(s, prof, params, ocp_p, ocp_n, w);
            put(k, tr);
            return tr;
        };
    }

private:
    std::string dir_;
};

// ------------------------------------------------------------ writers

inline void write_sweep_long(std::ostream& out, const sweep_result& r) {
    out << "method,size,scheme,crate,baseline_samples,mae_mV,status\n";
    for (const auto& c : r.cells) {
        std::size_t ns = 0;
        for (const auto& b : r.baselines)
            if (std::abs(b.crate - c.crate) < 1e-9) ns = b.samples;
        out << to_string(c.spec.m) << ',' << c.spec.size << ',' << to_string(c.spec.sch) << ',' << c.crate << ','
            << ns << ',';
        if (c.mae_mv) out << *c.mae_mv;
        out << ',' << c.status << '\n';
    }
}

/// Rows are sizes, columns are method families, cells are MAE averaged over conditions (blank if absent).
inline void write_sweep_table(std::ostream& out, const sweep_result& r) {
    std::vector<std::string> families;
    std::vector<int> sizes;
    auto family = [](const model_spec& s) {
        return s.m == method::fdm ? std::string("fdm-") + to_string(s.sch) : std::string(to_string(s.m));
    };
    for (const auto& c : r.cells) {
        const auto f = family(c.spec);
        if (std::find(families.begin(), families.end(), f) == families.end()) families.push_back(f);
        if (std::find(sizes.begin(), sizes.end(), c.spec.size) == sizes.end()) sizes.push_back(c.spec.size);
    }
    std::sort(sizes.begin(), sizes.end());
    out << "size";
    for (const auto& f : families) out << ',' << f;
    out << '\n';
    for (int n : sizes) {
        out << n;
        for (const auto& f : families) {
            out << ',';
            for (const auto& c : r.cells) {
                if (c.spec.size != n || family(c.spec) != f) continue;
                if (auto a = r.average(c.spec.label())) out << *a;
                break;
            }
        }
        out << '\n';
    }
}

inline void write_bode(std::ostream& out, const bode_data& b) {
    out << "omega_rad_s";
    for (const auto& s : b.series)
        out << ',' << s.name << "_mag_db," << s.name << "_phase_deg," << s.name << "_avg_mag_db";
    out << '\n';
    std::vector<std::vector<double>> ph;
    for (const auto& s : b.series) ph.push_back(phase_deg(s.gain.ss));
    for (std::size_t i = 0; i < b.omega.size(); ++i) {
        out << b.omega[i];
        for (std::size_t k = 0; k < b.series.size(); ++k)
            out << ',' << magnitude_db(b.series[k].gain.ss[i]) << ',' << ph[k][i] << ','
                << magnitude_db(b.series[k].gain.avg[i]);
        out << '\n';
    }
}

inline void write_spectrum(std::ostream& out, const spectrum_data& s) {
    out << "bin,omega_rad_s,amplitude_A,magnitude\n";
    for (std::size_t k = 0; k < s.omega.size(); ++k)
        out << k << ',' << s.omega[k] << ',' << s.amplitude[k] << ',' << s.magnitude[k] << '\n';
}

inline void write_bench(std::ostream& out, const std::vector<bench_record>& recs) {
    out << "method,size,scheme,steps,mean_ms_per_step,median_ms_per_step,stdev_ms,valid\n";
    for (const auto& r : recs)
        out << to_string(r.spec.m) << ',' << r.spec.size << ',' << to_string(r.spec.sch) << ',' << r.steps << ','
            << r.mean_ms << ',' << r.median_ms << ',' << r.stdev_ms << ',' << (r.valid ? "true" : "false") << '\n';
}

inline void write_stability(std::ostream& out, const stability_report& rep) {
    out << "method,scheme,dt,n,electrode,amplification,predicate,simulated\n";
    for (const auto& r : rep.rows)
        out << to_string(rep.m) << ',' << to_string(rep.sch) << ',' << rep.dt << ',' << r.n << ',' << to_string(r.el)
            << ',' << r.radius << ',' << (r.predicate_stable ? "stable" : "unstable") << ','
            << (r.simulated_stable ? "bounded" : "unbounded") << '\n';
}

inline nlohmann::json fit_to_json(const fit_result& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["best_objective_mV"] = r.best_objective;
    j["evaluations"] = r.evaluations;
    nlohmann::json best = nlohmann::json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) best[r.names[i]] = r.best[i];
    j["best"] = best;
    j["history"] = r.history;
    return j;
}

// ------------------------------------------------------------ fit spec

struct fit_spec {
    search_space space;
    std::vector<dataset> data;
    pso_config pso;
    objective_config objective;
};

/// Key-value fit description:
///   params = table1 | <file>        base values for everything not searched
///   model = fdm-implicit:200
///   iterations = 100, seed = 7, swarm = 40
///   search = <name> [lo hi] [log|linear]   (repeatable; preset range when bounds omitted)
///   dataset = <profile.csv> <trace.csv>     (repeatable; measured voltage from the trace)
///   synthetic = <crate> <samples>           (repeatable; generated from the base values)
///   ocp_p = <file>, ocp_n = <file>
inline fit_spec load_fit_spec(const std::string& path) {
    const kv_document doc = load_kv(path);
    const fs::path base_dir = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const fs::path q(p);
        return (q.is_absolute() || p == "table1") ? p : (base_dir / q).string();
    };
    fit_spec fs_;
    fs_.space.base = load_params(resolve(doc.get("params", "table1")));
    fs_.objective.model = parse_model_spec(doc.get("model", "fdm-implicit:200"));
    fs_.objective.ocp_p = doc.find("ocp_p") ? load_ocp(resolve(doc.get("ocp_p", ""))) : reference_ocp(electrode::positive);
    fs_.objective.ocp_n = doc.find("ocp_n") ? load_ocp(resolve(doc.get("ocp_n", ""))) : reference_ocp(electrode::negative);
    if (const auto* e = doc.find("iterations")) fs_.pso.iterations = parse_int(e->value, doc.where(*e));
    if (const auto* e = doc.find("swarm")) fs_.pso.swarm = static_cast<std::size_t>(parse_int(e->value, doc.where(*e)));
    if (const auto* e = doc.find("seed")) {
        try {
            fs_.pso.seed = static_cast<std::uint64_t>(std::stoull(e->value));
        } catch (const std::exception&) {
            throw parse_error(doc.where(*e) + ": cannot parse seed '" + e->value + "'");
        }
    }

    for (const auto& e : doc.all("search")) {
        std::istringstream is(e.value);
        std::vector<std::string> tok;
        for (std::string t; is >> t;) tok.push_back(t);
        if (tok.empty()) throw parse_error(doc.where(e) + ": search needs a parameter name");
        param_bound b;
        try {
            b = (tok.size() >= 3) ? param_bound{tok[0], 0, 0, false} : table1_bound(tok[0]);
        } catch (const std::invalid_argument& ex) {
            throw parse_error(doc.where(e) + ": " + ex.what());
        }
        if (tok.size() >= 3) {
            b.lo = parse_double(tok[1], doc.where(e));
            b.hi = parse_double(tok[2], doc.where(e));
            b.log_scale = b.lo > 0.0 && b.hi / b.lo > 100.0;
        }
        const std::size_t mode_at = tok.size() >= 3 ? 3 : 1;
        if (tok.size() > mode_at) {
            if (tok[mode_at] == "log") b.log_scale = true;
            else if (tok[mode_at] == "linear") b.log_scale = false;
            else throw parse_error(doc.where(e) + ": scale must be 'log' or 'linear'");
        }
        fs_.space.params.push_back(b);
    }
    try {
        fs_.space.validate();
    } catch (const std::invalid_argument& ex) {
        throw parse_error(doc.source + ": " + ex.what());
    }

    for (const auto& e : doc.all("dataset")) {
        std::istringstream is(e.value);
        std::string prof, trace;
        if (!(is >> prof >> trace)) throw parse_error(doc.where(e) + ": dataset needs '<profile.csv> <trace.csv>'");
        dataset d;
        d.profile = load_profile(resolve(prof));
        const auto tr = load_trace(resolve(trace));
        d.voltage = tr.voltage;
        if (d.voltage.size() > d.profile.size()) throw parse_error(doc.where(e) + ": trace longer than profile");
        d.profile = d.profile.truncated(d.voltage.size());
        d.name = prof;
        fs_.data.push_back(std::move(d));
    }
    for (const auto& e : doc.all("synthetic")) {
        std::istringstream is(e.value);
        double crate = 0;
        std::size_t n = 0;
        if (!(is >> crate >> n)) throw parse_error(doc.where(e) + ": synthetic needs '<crate> <samples>'");
        fs_.data.push_back(synthesize_dataset(fs_.space.base, crate, n, fs_.objective));
    }
    if (fs_.data.empty()) throw parse_error(doc.source + ": no dataset or synthetic entries");
    return fs_;
}

}  // namespace spmlab
