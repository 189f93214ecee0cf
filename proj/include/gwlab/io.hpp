#ifndef GWLAB_IO_HPP
#define GWLAB_IO_HPP

// Run configuration (INI-style text), track and matrix files, checksummed
// manifests.

#include "core.hpp"
#include "frequency.hpp"
#include "model.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace gwlab {

// ---- number formatting --------------------------------------------------------

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
}

// ---- run configuration ------------------------------------------------------------

struct OracleBlock {
    bool enabled = true;
    std::optional<int> n; // defaults to model.n_elec
    std::size_t basis_cap = 2000000;
    bool operator==(const OracleBlock&) const = default;
};

struct GridBlock {
    int k = 128;
    std::optional<double> scale; // empty: the mean-field gap
    bool operator==(const GridBlock&) const = default;
};

struct SolverBlock {
    bool enabled = true;
    std::vector<double> lambdas{0.0};
    double tol = 1e-8;
    int max_iter = 200;
    double mixing = 1.0;
    bool operator==(const SolverBlock&) const = default;
};

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> s{"mean-field", "oracle", "kernel", "hilbert", "rpa", "self-energy", "solver"};
    return s;
}

struct ChecksBlock {
    std::vector<std::string> suites = suite_names();
    std::uint64_t seed = 0;
    bool operator==(const ChecksBlock&) const = default;
};

struct RunConfig {
    ModelSpec model;
    OracleBlock oracle;
    GridBlock grid;
    SolverBlock solver;
    ChecksBlock checks;
    std::string output_dir = "out";
    bool operator==(const RunConfig&) const = default;

    int oracle_n() const { return oracle.n.value_or(model.n_elec); }
    bool suite(const std::string& s) const {
        return std::find(checks.suites.begin(), checks.suites.end(), s) != checks.suites.end();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string v) {
    v = trim(v);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw std::invalid_argument("unterminated list");
        v = v.substr(1, v.size() - 2);
    }
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw std::invalid_argument(v);
}

inline int parse_int(const std::string& v) {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(x);
}

inline std::uint64_t parse_u64(const std::string& v) {
    std::uint64_t x = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw std::invalid_argument(v);
    return x;
}

inline std::string list_text(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
}

inline std::string list_text(const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s + "]";
}

} // namespace detail

inline void validate(const RunConfig& c) {
    auto bad = [](const std::string& field, const std::string& why) { throw input_error("invalid " + field + ": " + why); };
    if (c.model.sites_per_axis < 2) bad("model.sites", "need at least 2 sites per axis");
    if (c.model.n_elec < 1) bad("model.n_elec", "must be at least 1");
    if (c.grid.k < 8 || c.grid.k % 2) bad("grid.K", "must be even and >= 8");
    if (c.grid.scale && !(*c.grid.scale > 0.0)) bad("grid.L", "must be positive");
    if (c.solver.enabled && c.solver.lambdas.empty()) bad("solver.lambda", "list is empty");
    for (double l : c.solver.lambdas)
        if (l < 0.0) bad("solver.lambda", "entries must be non-negative");
    if (!(c.solver.tol > 0.0)) bad("solver.tol", "must be positive");
    if (!(c.solver.mixing > 0.0 && c.solver.mixing <= 1.0)) bad("solver.mixing", "must lie in (0, 1]");
    if (c.solver.max_iter < 1) bad("solver.max_iter", "must be positive");
    for (const auto& s : c.checks.suites)
        if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end()) bad("checks.suites", "unknown suite '" + s + "'");
}

inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    bool have_model = false, have_n = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw parse_error(cat("parse error at line ", lineno, ": malformed section header"));
            section = detail::trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> known{"model", "oracle", "grid", "solver", "checks", "output"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                throw parse_error(cat("unknown section [", section, "] at line ", lineno));
            if (section == "model") have_model = true;
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw parse_error(cat("parse error at line ", lineno, ": expected key = value"));
        if (section.empty()) throw parse_error(cat("parse error at line ", lineno, ": key outside a section"));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        auto unknown = [&] { throw parse_error(cat("unknown key '", key, "' in [", section, "] at line ", lineno)); };
        try {
            if (section == "model") {
                auto& m = c.model;
                if (key == "dim") m.dim = detail::parse_int(val);
                else if (key == "sites") m.sites_per_axis = detail::parse_int(val);
                else if (key == "spacing") m.spacing = parse_double(val);
                else if (key == "v_ext") m.v_ext = val;
                else if (key == "well_depth") m.well_depth = parse_double(val);
                else if (key == "well_width") m.well_width = parse_double(val);
                else if (key == "separation") m.separation = parse_double(val);
                else if (key == "eps_reg") m.eps_reg = parse_double(val);
                else if (key == "coulomb_scale") m.coulomb_scale = parse_double(val);
                else if (key == "h1") m.h1 = val;
                else if (key == "hartree_density") {
                    m.hartree_density.clear();
                    for (auto& x : detail::split_list(val)) m.hartree_density.push_back(parse_double(x));
                } else if (key == "n_elec") {
                    m.n_elec = detail::parse_int(val);
                    have_n = true;
                } else unknown();
            } else if (section == "oracle") {
                if (key == "enabled") c.oracle.enabled = detail::parse_bool(val);
                else if (key == "n") c.oracle.n = detail::parse_int(val);
                else if (key == "basis_cap") c.oracle.basis_cap = detail::parse_u64(val);
                else unknown();
            } else if (section == "grid") {
                if (key == "K") c.grid.k = detail::parse_int(val);
                else if (key == "L") {
                    if (val == "gap") c.grid.scale.reset();
                    else c.grid.scale = parse_double(val);
                } else unknown();
            } else if (section == "solver") {
                if (key == "enabled") c.solver.enabled = detail::parse_bool(val);
                else if (key == "lambda") {
                    c.solver.lambdas.clear();
                    for (auto& x : detail::split_list(val)) c.solver.lambdas.push_back(parse_double(x));
                } else if (key == "tol") c.solver.tol = parse_double(val);
                else if (key == "max_iter") c.solver.max_iter = detail::parse_int(val);
                else if (key == "mixing") c.solver.mixing = parse_double(val);
                else unknown();
            } else if (section == "checks") {
                if (key == "suites") {
                    auto items = detail::split_list(val);
                    c.checks.suites = (items.size() == 1 && items[0] == "all") ? suite_names() : items;
                } else if (key == "seed") c.checks.seed = detail::parse_u64(val);
                else unknown();
            } else if (section == "output") {
                if (key == "dir") c.output_dir = val;
                else unknown();
            }
        } catch (const std::invalid_argument&) {
            throw parse_error(cat("invalid value '", val, "' for ", section, ".", key, " at line ", lineno));
        } catch (const std::out_of_range&) {
            throw parse_error(cat("value '", val, "' out of range for ", section, ".", key, " at line ", lineno));
        }
    }
    if (!have_model) throw parse_error("missing [model] section");
    if (!have_n) throw parse_error("missing model.n_elec");
    validate(c);
    return c;
}

inline std::string render_config(const RunConfig& c) {
    std::ostringstream o;
    const auto& m = c.model;
    o << "[model]\n"
      << "dim = " << m.dim << "\n"
      << "sites = " << m.sites_per_axis << "\n"
      << "spacing = " << fmt(m.spacing) << "\n"
      << "v_ext = " << m.v_ext << "\n"
      << "well_depth = " << fmt(m.well_depth) << "\n"
      << "well_width = " << fmt(m.well_width) << "\n"
      << "separation = " << fmt(m.separation) << "\n"
      << "eps_reg = " << fmt(m.eps_reg) << "\n"
      << "coulomb_scale = " << fmt(m.coulomb_scale) << "\n"
      << "h1 = " << m.h1 << "\n";
    if (!m.hartree_density.empty()) o << "hartree_density = " << detail::list_text(m.hartree_density) << "\n";
    o << "n_elec = " << m.n_elec << "\n\n[oracle]\n"
      << "enabled = " << (c.oracle.enabled ? "true" : "false") << "\n";
    if (c.oracle.n) o << "n = " << *c.oracle.n << "\n";
    o << "basis_cap = " << c.oracle.basis_cap << "\n\n[grid]\n"
      << "K = " << c.grid.k << "\n"
      << "L = " << (c.grid.scale ? fmt(*c.grid.scale) : std::string("gap")) << "\n\n[solver]\n"
      << "enabled = " << (c.solver.enabled ? "true" : "false") << "\n"
      << "lambda = " << detail::list_text(c.solver.lambdas) << "\n"
      << "tol = " << fmt(c.solver.tol) << "\n"
      << "max_iter = " << c.solver.max_iter << "\n"
      << "mixing = " << fmt(c.solver.mixing) << "\n\n[checks]\n"
      << "suites = " << detail::list_text(c.checks.suites) << "\n"
      << "seed = " << c.checks.seed << "\n\n[output]\n"
      << "dir = " << c.output_dir << "\n";
    return o.str();
}

// ---- checksums ---------------------------------------------------------------

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

// ---- tracks and matrices -------------------------------------------------------

inline void write_track(std::ostream& o, const MatrixTrack& t) {
    check_track(t);
    const Eigen::Index m = t.dim();
    o << "# track M=" << m << " K=" << t.values.size() << " axis_offset=" << fmt(t.axis_offset)
      << " grid_K=" << t.grid->size() << " grid_L=" << fmt(t.grid->scale) << "\n";
    for (std::size_t j = 0; j < t.values.size(); ++j) {
        o << fmt(t.grid->nodes[j]);
        for (Eigen::Index r = 0; r < m; ++r)
            for (Eigen::Index c = 0; c < m; ++c) o << ' ' << fmt(t.values[j](r, c).real()) << ' ' << fmt(t.values[j](r, c).imag());
        o << "\n";
    }
}

inline std::string track_text(const MatrixTrack& t) {
    std::ostringstream o;
    write_track(o, t);
    return o.str();
}

inline MatrixTrack read_track(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header.rfind("# track", 0) != 0) throw io_error("missing track header");
    std::map<std::string, std::string> kv;
    std::istringstream hs(header.substr(7));
    std::string tok;
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    for (const char* k : {"M", "K", "axis_offset", "grid_K", "grid_L"})
        if (!kv.count(k)) throw io_error(cat("track header lacks ", k));
    const int m = std::stoi(kv["M"]);
    const int k = std::stoi(kv["K"]);
    MatrixTrack t;
    t.grid = make_grid(std::stoi(kv["grid_K"]), parse_double(kv["grid_L"]));
    t.axis_offset = parse_double(kv["axis_offset"]);
    std::string line;
    for (int j = 0; j < k; ++j) {
        if (!std::getline(in, line)) throw io_error(cat("track truncated at row ", j));
        std::istringstream ls(line);
        std::string s;
        ls >> s;
        if (parse_double(s) != t.grid->nodes[j]) throw io_error(cat("row ", j, " frequency does not match the grid"));
        CMat v(m, m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                std::string re, im;
                if (!(ls >> re >> im)) throw io_error(cat("row ", j, " has too few entries"));
                v(r, c) = cplx(parse_double(re), parse_double(im));
            }
        t.values.push_back(v);
    }
    return t;
}

inline std::string matrix_text(const RMat& a, const std::string& name) {
    std::ostringstream o;
    o << "# matrix " << name << " rows=" << a.rows() << " cols=" << a.cols() << "\n";
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) o << (c ? " " : "") << fmt(a(r, c));
        o << "\n";
    }
    return o.str();
}

// ---- artifacts -----------------------------------------------------------------

// name (relative path) -> file content, written in name order
using ArtifactSet = std::map<std::string, std::string>;

inline std::string manifest_text(const ArtifactSet& a) {
    std::ostringstream o;
    for (const auto& [name, content] : a) o << sha256_hex(content) << "  " << content.size() << "  " << name << "\n";
    return o.str();
}

inline std::vector<std::string> export_tracks(const ArtifactSet& a, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error(cat("cannot create ", dir.string(), ": ", ec.message()));
    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& content) {
        fs::path p = dir / name;
        if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
        std::ofstream f(p, std::ios::binary);
        if (!f) throw io_error("cannot open " + p.string());
        f << content;
        if (!f) throw io_error("write failed for " + p.string());
        written.push_back(p.string());
    };
    for (const auto& [name, content] : a) put(name, content);
    put("manifest.txt", manifest_text(a));
    return written;
}

// re-hash every file listed in the manifest; returns the names that fail
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.txt");
    if (!mf) throw io_error("no manifest in " + dir.string());
    std::vector<std::string> bad;
    std::string sum, size, name;
    while (mf >> sum >> size >> name) {
        std::ifstream f(dir / name, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        if (!f || sha256_hex(ss.str()) != sum) bad.push_back(name);
    }
    return bad;
}

} // namespace gwlab

#endif
