#pragma once

// Potential spec files, grid CSV files, and JSON/CSV/SVG renderings of the
// reports.  Potential specs are JSON objects {"kind": ..., "params": {...}};
// unknown kinds and parameters are rejected.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "conformal.hpp"
#include "estimates.hpp"
#include "named_examples.hpp"
#include "spectral.hpp"
#include "strip.hpp"
#include "tiling.hpp"

namespace negbound {

using json = nlohmann::json;

// ---------------------------------------------------------------- grid CSV

// First record: nx, ny, x_lo, x_hi, y_lo, y_hi.  Then nx * ny values in
// row-major order (x varies fastest), separated by commas or whitespace.
inline GridData read_grid_csv(std::istream& in) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (char& ch : text)
        if (ch == ',' || ch == ';') ch = ' ';
    std::istringstream ss(text);
    GridData g;
    double nx = 0, ny = 0;
    if (!(ss >> nx >> ny >> g.x_lo >> g.x_hi >> g.y_lo >> g.y_hi))
        throw Error(ErrorKind::Io, "grid CSV header must hold nx, ny, x_lo, x_hi, y_lo, y_hi");
    if (nx != std::floor(nx) || ny != std::floor(ny) || nx < 2 || ny < 2 || nx * ny > 1e8)
        throw Error(ErrorKind::Io, "grid CSV has invalid dimensions");
    g.nx = static_cast<int>(nx);
    g.ny = static_cast<int>(ny);
    g.values.reserve(static_cast<std::size_t>(g.nx) * g.ny);
    double v = 0.0;
    while (ss >> v) g.values.push_back(v);
    if (!ss.eof()) throw Error(ErrorKind::Io, "grid CSV contains a non-numeric value");
    if (g.values.size() != static_cast<std::size_t>(g.nx) * g.ny)
        throw Error(ErrorKind::Io, "grid CSV holds " + std::to_string(g.values.size()) + " values, expected " +
                                       std::to_string(g.nx * g.ny));
    g.validate();
    return g;
}

inline GridData read_grid_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open grid file " + path.string());
    return read_grid_csv(in);
}

inline void write_grid_csv(std::ostream& out, const GridData& g) {
    out << std::setprecision(17);
    out << g.nx << ',' << g.ny << ',' << g.x_lo << ',' << g.x_hi << ',' << g.y_lo << ',' << g.y_hi << '\n';
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) out << (i ? "," : "") << g.at(i, j);
        out << '\n';
    }
}

// ---------------------------------------------------------------- potential specs

namespace detail {

inline void expect_keys(const json& params, std::initializer_list<const char*> allowed, const std::string& kind) {
    if (!params.is_object()) throw Error(ErrorKind::InvalidArgument, kind + ": params must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : params.items())
        if (!ok.count(k)) throw Error(ErrorKind::InvalidArgument, kind + ": unknown parameter '" + k + "'");
}

inline double num(const json& params, const char* key, double def) {
    if (!params.contains(key)) return def;
    if (!params.at(key).is_number()) throw Error(ErrorKind::InvalidArgument, std::string("parameter '") + key + "' must be a number");
    return params.at(key).get<double>();
}

inline const json& need(const json& params, const char* key, const std::string& kind) {
    if (!params.contains(key)) throw Error(ErrorKind::InvalidArgument, kind + ": missing parameter '" + key + "'");
    return params.at(key);
}

inline std::array<double, 4> four(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4) throw Error(ErrorKind::InvalidArgument, what + " must be an array of 4 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

} // namespace detail

inline Potential potential_from_json(const json& spec, const std::filesystem::path& base_dir = ".") {
    if (!spec.is_object() || !spec.contains("kind")) throw Error(ErrorKind::InvalidArgument, "potential spec needs a 'kind'");
    for (const auto& [k, v] : spec.items())
        if (k != "kind" && k != "params") throw Error(ErrorKind::InvalidArgument, "unknown spec field '" + k + "'");
    const std::string kind = spec.at("kind").get<std::string>();
    const json params = spec.value("params", json::object());
    using detail::expect_keys;
    using detail::num;
    static const std::set<std::string> named = {"inverse_square", "example2", "example4", "example6", "constant", "zero"};
    if (named.count(kind)) {
        ExampleParams ep;
        if (!params.is_object()) throw Error(ErrorKind::InvalidArgument, kind + ": params must be an object");
        for (const auto& [k, v] : params.items()) {
            if (!v.is_number()) throw Error(ErrorKind::InvalidArgument, kind + ": parameter '" + k + "' must be a number");
            ep[k] = v.get<double>();
        }
        return named_example(kind, ep);
    }
    if (kind == "gaussian_bumps") {
        expect_keys(params, {"bumps"}, kind);
        std::vector<Bump> bumps;
        for (const auto& b : detail::need(params, "bumps", kind)) {
            const auto a = detail::four(b, "bump [x, y, amplitude, sigma]");
            bumps.push_back({{a[0], a[1]}, a[2], a[3]});
        }
        return gaussian_bumps(std::move(bumps));
    }
    if (kind == "grid") {
        expect_keys(params, {"file"}, kind);
        const std::filesystem::path f = detail::need(params, "file", kind).get<std::string>();
        return grid(read_grid_csv(f.is_absolute() ? f : base_dir / f));
    }
    if (kind == "sample_grid") {
        expect_keys(params, {"inner", "n", "box"}, kind);
        const auto box = params.contains("box") ? detail::four(params.at("box"), "box") : std::array<double, 4>{0, 1, 0, 1};
        const double n = num(params, "n", 257);
        if (n < 2 || n != std::floor(n) || n > 10000) throw Error(ErrorKind::InvalidArgument, "sample_grid: n must be an integer in [2, 10000]");
        const int ni = static_cast<int>(n);
        return sample_to_grid(potential_from_json(detail::need(params, "inner", kind), base_dir), ni, ni, box[0], box[1],
                              box[2], box[3]);
    }
    if (kind == "scaled") {
        expect_keys(params, {"alpha", "inner"}, kind);
        return scaled(num(params, "alpha", 1.0), potential_from_json(detail::need(params, "inner", kind), base_dir));
    }
    if (kind == "sum") {
        expect_keys(params, {"terms"}, kind);
        std::vector<Potential> terms;
        for (const auto& t : detail::need(params, "terms", kind)) terms.push_back(potential_from_json(t, base_dir));
        return sum(std::move(terms));
    }
    if (kind == "restricted") {
        expect_keys(params, {"inner", "annulus", "rect", "disk"}, kind);
        const Potential inner = potential_from_json(detail::need(params, "inner", kind), base_dir);
        const int regions = params.contains("annulus") + params.contains("rect") + params.contains("disk");
        if (regions != 1) throw Error(ErrorKind::InvalidArgument, "restricted: give exactly one of annulus, rect, disk");
        if (params.contains("annulus")) {
            const auto& a = params.at("annulus");
            return restricted(inner, Annulus{a.at(0).get<double>(), a.at(1).get<double>()});
        }
        if (params.contains("rect")) {
            const auto r = detail::four(params.at("rect"), "rect");
            return restricted(inner, Rect{r[0], r[1], r[2], r[3]});
        }
        const auto& d = params.at("disk");
        return restricted(inner, Disk{{d.at(0).get<double>(), d.at(1).get<double>()}, d.at(2).get<double>()});
    }
    if (kind == "strip_constant") {
        expect_keys(params, {"v", "x1_lo", "x1_hi", "height"}, kind);
        const double v = num(params, "v", 1.0);
        if (!(v >= 0.0)) throw Error(ErrorKind::InvalidArgument, "strip_constant: v must be >= 0");
        return strip_profile([v](double) { return v; }, num(params, "height", kPi), num(params, "x1_lo", 0.0),
                             num(params, "x1_hi", 1.0), "strip_constant");
    }
    if (kind == "log_pushforward") {
        expect_keys(params, {"inner", "height"}, kind);
        return log_pushforward(potential_from_json(detail::need(params, "inner", kind), base_dir),
                               num(params, "height", kPi));
    }
    throw Error(ErrorKind::UnknownName, "unknown potential kind '" + kind + "'");
}

inline Potential load_potential(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open potential spec " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, "malformed potential spec: " + std::string(e.what()));
    }
    return potential_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

// "name:key=value,key=value"
inline Potential parse_example_arg(const std::string& arg) {
    const auto colon = arg.find(':');
    const std::string name = arg.substr(0, colon);
    ExampleParams ep;
    if (colon != std::string::npos) {
        std::stringstream ss(arg.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "example parameter '" + item + "' needs key=value");
            try {
                std::size_t used = 0;
                const std::string val = item.substr(eq + 1);
                ep[item.substr(0, eq)] = std::stod(val, &used);
                if (used != val.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw Error(ErrorKind::InvalidArgument, "example parameter '" + item + "' is not numeric");
            }
        }
    }
    return named_example(name, ep);
}

// ---------------------------------------------------------------- reports

namespace detail {

// JSON has no infinity; non-finite values become null.
inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace detail

inline json to_json(const TermSeries& s) {
    json terms = json::array();
    for (const auto& [n, v] : s.entries) terms.push_back({{"n", n}, {"value", detail::jnum(v)}});
    return {{"series", to_string(s.kind)}, {"n_min", s.n_min}, {"n_max", s.n_max}, {"terms", terms}};
}

inline json to_json(const BoundReport& r) {
    json j;
    j["estimate"] = r.estimate_name;
    j["constants"] = {{"c", r.constants.c}, {"C", r.constants.C}, {"p", r.constants.p}, {"provenance", r.constants.provenance}};
    j["value"] = detail::jnum(r.value);
    j["finite"] = r.finite;
    j["applicable"] = r.applicable;
    if (!r.note.empty()) j["note"] = r.note;
    json comps = json::object();
    for (const auto& [k, v] : r.components) comps[k] = detail::jnum(v);
    j["components"] = comps;
    json sq = json::array(), li = json::array(), tails = json::array();
    for (const auto& [n, v] : r.sqrt_sum_terms) sq.push_back({{"n", n}, {"sqrt_term", v}});
    for (const auto& [n, v] : r.linear_sum_terms) li.push_back({{"n", n}, {"term", v}});
    for (const auto& t : r.tails)
        tails.push_back({{"series", to_string(t.series)}, {"side", t.side}, {"from", detail::jnum(t.from)},
                         {"to", detail::jnum(t.to)}, {"count", detail::jnum(t.count)}, {"sum", detail::jnum(t.sum)}});
    j["sqrt_sum_terms"] = sq;
    j["linear_sum_terms"] = li;
    j["tails"] = tails;
    if (!r.A.entries.empty()) j["A"] = to_json(r.A);
    if (!r.B.entries.empty()) j["B"] = to_json(r.B);
    return j;
}

inline std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

// Columns: estimate, n, term, contributes, total.  The estimate column is
// "<name>:<series>"; aggregated tails use "<name>:<series>:tail+|tail-" with
// n the first contributing index and term the aggregated contribution.
inline void write_report_csv(std::ostream& out, const std::vector<BoundReport>& reports, bool header = true) {
    if (header) out << "estimate,n,term,contributes,total\n";
    for (const auto& r : reports) {
        const std::string total = fmt_num(r.value);
        auto series = [&](const TermSeries& s, double thr) {
            for (const auto& [n, v] : s.entries)
                out << r.estimate_name << ':' << to_string(s.kind) << ',' << n << ',' << fmt_num(v) << ','
                    << (v > thr ? 1 : 0) << ',' << total << '\n';
        };
        series(r.A, r.constants.c);
        series(r.B, r.constants.c);
        for (const auto& t : r.tails)
            out << r.estimate_name << ':' << to_string(t.series) << ':' << (t.side > 0 ? "tail+" : "tail-") << ','
                << fmt_num(t.side * t.from) << ',' << fmt_num(t.sum) << ',' << (t.count > 0 ? 1 : 0) << ',' << total
                << '\n';
        if (r.A.entries.empty() && r.B.entries.empty() && r.tails.empty())
            out << r.estimate_name << ",," << ",0," << total << '\n';
    }
}

inline json to_json(const StripBoundReport& s) {
    json j = to_json(s.bound);
    json blocks = json::array(), gaps = json::array();
    for (const auto& [a, b] : s.decomposition.blocks) blocks.push_back({a, b});
    for (const auto& [a, b] : s.decomposition.gaps) gaps.push_back({detail::jnum(a), detail::jnum(b)});
    j["decomposition"] = {{"dense", s.decomposition.dense},
                          {"blocks", blocks},
                          {"gaps", gaps},
                          {"gap_accounting_ok", s.decomposition.gap_accounting_ok}};
    return j;
}

inline json to_json(const SparseCover& c) {
    return {{"cuts", c.cuts}, {"masses", c.masses}, {"N", c.N()}, {"c", c.c}, {"last_rect_partial", c.last_rect_partial}};
}

inline json to_json(const NegCountResult& r) {
    json levels = json::array();
    for (const auto& l : r.trace) {
        json modes = json::array();
        for (const auto& m : l.modes) modes.push_back({{"m", m.m}, {"n_neg", m.n_neg}, {"n_zero", m.n_zero}});
        levels.push_back({{"h", l.h}, {"n_neg", l.n_neg}, {"n_zero", l.n_zero}, {"dim", l.dim},
                          {"method", to_string(l.method)}, {"modes", modes}});
    }
    return {{"count", r.count}, {"count_nonpositive", r.count_nonpositive}, {"converged", r.converged}, {"levels", levels}};
}

// ---------------------------------------------------------------- tilings

inline json to_json(const Tile& t) {
    json j{{"shape", t.is_step ? "step" : "square"},
           {"corner", {t.outer.corner.x1, t.outer.corner.x2}},
           {"side", t.outer.side},
           {"label", to_string(t.label)}};
    if (t.is_step) j["removed"] = {{"corner", {t.removed.corner.x1, t.removed.corner.x2}}, {"side", t.removed.side}};
    return j;
}

inline json to_json(const AuditReport& a) {
    return {{"pass", a.pass()},   {"violations", a.violations}, {"N", a.N},           {"L", a.L},
            {"M", a.M},           {"S", a.S},                   {"sum_l2_medium", a.sum_l2_medium},
            {"area", a.area},     {"lp_norm", a.lp_norm},       {"c_audit", a.c_audit}};
}

inline json to_json(const Partition& p, const AuditReport* audit = nullptr) {
    json tiles = json::array(), hist = json::array();
    for (const auto& t : p.tiles) tiles.push_back(to_json(t));
    for (const auto& k : p.counters_history) hist.push_back({k.L, k.M, k.S});
    json j{{"consts", {{"c", p.consts.c}, {"c_prime", p.consts.c_prime}, {"p", p.consts.p}}},
           {"counters_history", hist},
           {"tiles", tiles}};
    if (audit) j["audit"] = to_json(*audit);
    return j;
}

inline std::string partition_svg(const Partition& p, int size = 640) {
    std::ostringstream os;
    os << std::setprecision(8);
    const double s = size;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
       << size << ' ' << size << "\">\n";
    auto fill = [](TileLabel l) {
        switch (l) {
        case TileLabel::Medium: return "#f4a259";
        case TileLabel::Large: return "#bc4b51";
        case TileLabel::Small: return "#e8eef2";
        default: return "#cccccc";
        }
    };
    // y grows downward in SVG.
    auto X = [&](double x) { return x * s; };
    auto Y = [&](double y) { return (1.0 - y) * s; };
    for (const auto& t : p.tiles) {
        const Square& o = t.outer;
        if (!t.is_step) {
            os << "<rect x=\"" << X(o.corner.x1) << "\" y=\"" << Y(o.y_hi()) << "\" width=\"" << o.side * s
               << "\" height=\"" << o.side * s << "\" fill=\"" << fill(t.label) << "\" stroke=\"#333\" stroke-width=\"0.5\"/>\n";
            continue;
        }
        // Outer square with the notch cut out, as an even-odd path.
        const Square& r = t.removed;
        os << "<path fill-rule=\"evenodd\" d=\"M" << X(o.corner.x1) << ',' << Y(o.corner.x2) << " H" << X(o.x_hi())
           << " V" << Y(o.y_hi()) << " H" << X(o.corner.x1) << " Z M" << X(r.corner.x1) << ',' << Y(r.corner.x2)
           << " H" << X(r.x_hi()) << " V" << Y(r.y_hi()) << " H" << X(r.corner.x1) << " Z\" fill=\"" << fill(t.label)
           << "\" stroke=\"#333\" stroke-width=\"0.5\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// Log-log plot of bound values against alpha.
inline std::string scaling_svg(const ScalingStudy& st, int width = 640, int height = 420) {
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> curves;
    std::vector<std::pair<double, double>> main, refined, lower, measured;
    for (const auto& r : st.rows) {
        if (r.main.finite && r.main.value > 0) main.push_back({r.alpha, r.main.value});
        if (r.refined.finite && r.refined.value > 0 && !r.refined.estimate_name.empty()) refined.push_back({r.alpha, r.refined.value});
        if (std::isfinite(r.lower) && r.lower > 0) lower.push_back({r.alpha, r.lower});
        if (r.measured && *r.measured > 0) measured.push_back({r.alpha, static_cast<double>(*r.measured)});
    }
    curves = {{"main", main}, {"refined", refined}, {"lower", lower}, {"measured", measured}};
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    for (const auto& [name, pts] : curves)
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, std::log10(x));
            x1 = std::max(x1, std::log10(x));
            y0 = std::min(y0, std::log10(y));
            y1 = std::max(y1, std::log10(y));
        }
    if (!(x1 > x0)) x1 = x0 + 1;
    if (!(y1 > y0)) y1 = y0 + 1;
    const double m = 50.0;
    auto X = [&](double x) { return m + (std::log10(x) - x0) / (x1 - x0) * (width - 2 * m); };
    auto Y = [&](double y) { return height - m - (std::log10(y) - y0) / (y1 - y0) * (height - 2 * m); };
    const char* colors[] = {"#1b6ca8", "#f4a259", "#5b8e7d", "#bc4b51"};
    std::ostringstream os;
    os << std::setprecision(8);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << m << "\" y1=\"" << height - m << "\" x2=\"" << width - m << "\" y2=\"" << height - m
       << "\" stroke=\"black\"/>\n<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << height - m
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" font-size=\"12\" text-anchor=\"middle\">log10 alpha ["
       << fmt_num(x0) << ", " << fmt_num(x1) << "]</text>\n";
    os << "<text x=\"12\" y=\"" << m - 20 << "\" font-size=\"12\">log10 value [" << fmt_num(y0) << ", " << fmt_num(y1)
       << "]</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& [name, pts] = curves[c];
        if (pts.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << colors[c] << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts) os << X(x) << ',' << Y(y) << ' ';
        os << "\"/>\n<text x=\"" << width - m - 60 << "\" y=\"" << m + 14 * c << "\" font-size=\"12\" fill=\""
           << colors[c] << "\">" << name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace negbound
