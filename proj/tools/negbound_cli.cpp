// negbound: batch front-end for the bound estimates, tilings, strip reports,
// discrete spectra, scaling studies and the inequality batteries.
//
// Exit codes: 0 ok, 2 configuration error, 3 computation error,
// 4 property check failed.

#include <CLI11.hpp>

#include <negbound.hpp>
#include <negbound/batteries.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace nb = negbound;
using nb::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCompute = 3;
constexpr int kExitProperty = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string potential_path;
    std::string example;
    double p = 2.0;
    double c = 0.25;
    double C = 4.0;
    double c0 = 0.25;
    double c_low = 1.0;
    double c_prime = 0.01;
    std::string window;
    std::optional<double> grid_h;
    std::string domain;
    double alpha = 1.0;
    int levels = 3;
    std::string out;
    std::string svg;
    std::string format = "json";
    unsigned jobs = 1;
    bool all = false;
    std::string alphas = "0:10";
    long trials = 10000;
    long operator_trials = 1000;
    std::uint64_t seed = 1;
};

nb::Potential load(const RunConfig& cfg) {
    if (cfg.potential_path.empty() == cfg.example.empty())
        throw ConfigError("give exactly one of --potential or --example");
    return cfg.example.empty() ? nb::load_potential(cfg.potential_path) : nb::parse_example_arg(cfg.example);
}

nb::BoundConstants constants(const RunConfig& cfg) {
    nb::BoundConstants k;
    k.c = cfg.c;
    k.C = cfg.C;
    k.p = cfg.p;
    if (!(k.c > 0 && k.C > 0 && k.p >= 1)) throw ConfigError("need c > 0, C > 0 and p >= 1");
    if (cfg.c != 0.25 || cfg.C != 4.0) k.provenance = "user supplied";
    return k;
}

std::pair<double, double> parse_pair(const std::string& s, const char* what) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError(std::string(what) + " must look like a:b");
    try {
        return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ConfigError(std::string(what) + " must look like a:b with numbers");
    }
}

std::optional<nb::Window> window(const RunConfig& cfg) {
    if (cfg.window.empty()) return std::nullopt;
    const auto [lo, hi] = parse_pair(cfg.window, "--window");
    if (lo != std::floor(lo) || hi != std::floor(hi) || lo > hi) throw ConfigError("--window needs integers n_min <= n_max");
    return nb::Window{static_cast<long long>(lo), static_cast<long long>(hi)};
}

// square:side[:cx:cy], disk:R, logradial:t_min:t_max[:m_max]
nb::DiscretizationSpec discretization(const RunConfig& cfg) {
    if (cfg.domain.empty()) throw ConfigError("--domain is required for spectral counts");
    std::vector<std::string> parts;
    std::stringstream ss(cfg.domain);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    std::vector<double> v;
    try {
        for (std::size_t i = 1; i < parts.size(); ++i) v.push_back(std::stod(parts[i]));
    } catch (const std::exception&) {
        throw ConfigError("--domain has a non-numeric field");
    }
    nb::DiscretizationSpec spec;
    spec.h = cfg.grid_h.value_or(0.05);
    if (parts[0] == "square" && (v.size() == 1 || v.size() == 3))
        spec.domain = nb::SquareDomain{v[0], v.size() == 3 ? nb::Point2{v[1], v[2]} : nb::Point2{0.0, 0.0}};
    else if (parts[0] == "disk" && v.size() == 1)
        spec.domain = nb::DiskDomain{v[0]};
    else if (parts[0] == "logradial" && (v.size() == 2 || v.size() == 3))
        spec.domain = nb::LogRadialDomain{v[0], v[1], v.size() == 3 ? static_cast<int>(v[2]) : -1};
    else
        throw ConfigError("--domain must be square:side[:cx:cy], disk:R or logradial:t_min:t_max[:m_max]");
    spec.validate();
    return spec;
}

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw nb::Error(nb::ErrorKind::Io, "cannot write " + cfg.out);
    f << text;
}

void emit_svg(const RunConfig& cfg, const std::string& svg) {
    if (cfg.svg.empty()) return;
    std::ofstream f(cfg.svg, std::ios::binary);
    if (!f) throw nb::Error(nb::ErrorKind::Io, "cannot write " + cfg.svg);
    f << svg;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- subcommands

int run_bounds(const RunConfig& cfg) {
    const auto V = load(cfg);
    const auto k = constants(cfg);
    const auto w = window(cfg);
    std::vector<nb::BoundReport> reports{nb::main_bound(V, k, w)};
    if (cfg.all) {
        reports.push_back(nb::refined_main_bound(V, k, w));
        for (auto& r : nb::classical_bounds(V, k, w)) reports.push_back(std::move(r));
    }
    if (cfg.format == "csv") {
        std::ostringstream os;
        nb::write_report_csv(os, reports);
        emit(cfg, os.str());
    } else {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(nb::to_json(r));
        emit(cfg, dump({{"potential", V.describe()}, {"reports", arr}}));
    }
    return kExitOk;
}

int run_compare(const RunConfig& cfg) {
    const auto V = load(cfg);
    const auto k = constants(cfg);
    const auto w = window(cfg);
    struct Row {
        std::string name;
        double value;
        bool finite, applicable;
    };
    std::vector<Row> rows;
    auto add = [&](const nb::BoundReport& r) { rows.push_back({r.estimate_name, r.value, r.finite, r.applicable}); };
    add(nb::main_bound(V, k, w));
    add(nb::refined_main_bound(V, k, w));
    for (const auto& r : nb::classical_bounds(V, k, w)) add(r);
    const double lower = nb::lower_bound(V, cfg.c_low);
    rows.push_back({"lower", lower, std::isfinite(lower), true});
    std::optional<nb::NegCountResult> measured;
    if (cfg.grid_h) {
        nb::NegCountOptions o;
        o.levels = cfg.levels;
        measured = nb::neg_count(V, cfg.alpha, discretization(cfg), o);
        rows.push_back({"measured", static_cast<double>(measured->count), true, true});
    }
    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "estimate,value,finite,applicable\n";
        for (const auto& r : rows)
            os << r.name << ',' << nb::fmt_num(r.value) << ',' << r.finite << ',' << r.applicable << '\n';
        emit(cfg, os.str());
    } else {
        json table = json::array();
        for (const auto& r : rows)
            table.push_back({{"estimate", r.name}, {"value", nb::detail::jnum(r.value)}, {"finite", r.finite},
                             {"applicable", r.applicable}});
        json j{{"potential", V.describe()}, {"table", table}};
        if (measured) j["neg_count"] = nb::to_json(*measured);
        emit(cfg, dump(j));
    }
    return kExitOk;
}

int run_tile(const RunConfig& cfg) {
    const auto V = load(cfg);
    const nb::TilingConstants k{cfg.c, cfg.c_prime, cfg.p};
    const nb::MassOracle m(V, cfg.p);
    const auto part = nb::partition_square(m, k);
    const auto a = nb::audit(part, m);
    emit(cfg, dump(nb::to_json(part, &a)));
    emit_svg(cfg, nb::partition_svg(part));
    if (!a.pass()) {
        std::cerr << "tiling audit failed:";
        for (const auto& v : a.violations) std::cerr << ' ' << v;
        std::cerr << '\n';
        return kExitProperty;
    }
    return kExitOk;
}

int run_strip(const RunConfig& cfg) {
    const auto V = load(cfg);
    const auto k = constants(cfg);
    const auto w = window(cfg);
    const auto rep = nb::strip_bound(V, k, w);
    const auto crit = nb::one_eigenvalue_criterion(V, cfg.p, cfg.c0, w);
    if (cfg.format == "csv") {
        std::ostringstream os;
        nb::write_report_csv(os, {rep.bound});
        emit(cfg, os.str());
        return kExitOk;
    }
    json j = nb::to_json(rep);
    j["one_eigenvalue"] = {{"holds", crit.holds},
                           {"sup_a", crit.sup_a},
                           {"sup_b", crit.sup_b},
                           {"argsup_a", crit.argsup_a},
                           {"argsup_b", crit.argsup_b},
                           {"c0", cfg.c0}};
    emit(cfg, dump({{"potential", V.describe()}, {"strip", j}}));
    return kExitOk;
}

int run_spectrum(const RunConfig& cfg) {
    const auto V = load(cfg);
    nb::NegCountOptions o;
    o.levels = cfg.levels;
    const auto r = nb::neg_count(V, cfg.alpha, discretization(cfg), o);
    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "h,n_neg,n_zero,dim,method\n";
        for (const auto& l : r.trace)
            os << nb::fmt_num(l.h) << ',' << l.n_neg << ',' << l.n_zero << ',' << l.dim << ',' << nb::to_string(l.method)
               << '\n';
        emit(cfg, os.str());
    } else {
        emit(cfg, dump({{"potential", V.describe()}, {"alpha", cfg.alpha}, {"neg_count", nb::to_json(r)}}));
    }
    return kExitOk;
}

// --alphas lo:hi gives alpha = 2^lo, ..., 2^hi.
int run_scaling(const RunConfig& cfg) {
    const auto V = load(cfg);
    const auto k = constants(cfg);
    const auto w = window(cfg);
    const auto [lo, hi] = parse_pair(cfg.alphas, "--alphas");
    if (lo != std::floor(lo) || hi != std::floor(hi) || lo > hi || hi - lo > 200)
        throw ConfigError("--alphas needs integer exponents lo <= hi");
    std::vector<double> alphas;
    for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) alphas.push_back(std::ldexp(1.0, e));
    nb::ScalingOptions so;
    so.classical = cfg.all;
    so.c_low = cfg.c_low;
    std::vector<nb::ScalingRow> rows(alphas.size());
    std::vector<std::optional<nb::Error>> errs(alphas.size());
    nb::parallel_for(alphas.size(), cfg.jobs, [&](std::size_t i) {
        try {
            rows[i] = std::move(nb::scaling_study(V, {alphas[i]}, k, w, so).rows.front());
        } catch (const nb::Error& e) {
            errs[i] = e;
        }
    });
    for (const auto& e : errs)
        if (e) throw *e;
    nb::ScalingStudy st;
    std::vector<double> ym, yr;
    for (auto& r : rows) {
        ym.push_back(r.main.value);
        yr.push_back(r.refined.value);
        st.rows.push_back(std::move(r));
    }
    st.slope_main = nb::top_decade_slope(alphas, ym);
    st.slope_refined = nb::top_decade_slope(alphas, yr);
    const std::string sm = st.slope_main ? nb::fmt_num(*st.slope_main) : "nan";
    const std::string sr = st.slope_refined ? nb::fmt_num(*st.slope_refined) : "nan";
    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "alpha,main,refined,lower,slope_main,slope_refined\n";
        for (const auto& r : st.rows)
            os << nb::fmt_num(r.alpha) << ',' << nb::fmt_num(r.main.value) << ',' << nb::fmt_num(r.refined.value) << ','
               << nb::fmt_num(r.lower) << ',' << sm << ',' << sr << '\n';
        emit(cfg, os.str());
    } else {
        json arr = json::array();
        for (const auto& r : st.rows) {
            json row{{"alpha", r.alpha}, {"main", nb::detail::jnum(r.main.value)},
                     {"refined", nb::detail::jnum(r.refined.value)}, {"lower", nb::detail::jnum(r.lower)}};
            if (cfg.all) {
                json cl = json::object();
                for (const auto& c : r.classical) cl[c.estimate_name] = nb::detail::jnum(c.value);
                row["classical"] = cl;
            }
            arr.push_back(row);
        }
        json j{{"potential", V.describe()}, {"rows", arr}};
        j["slope_main"] = st.slope_main ? json(*st.slope_main) : json(nullptr);
        j["slope_refined"] = st.slope_refined ? json(*st.slope_refined) : json(nullptr);
        emit(cfg, dump(j));
    }
    emit_svg(cfg, nb::scaling_svg(st));
    return kExitOk;
}

int run_hardy(const RunConfig& cfg) {
    if (cfg.trials < 0 || cfg.operator_trials < 0) throw ConfigError("trial counts must be >= 0");
    const auto h = nb::hardy_battery(cfg.trials, cfg.seed, cfg.jobs);
    const auto t = nb::operator_battery(cfg.operator_trials, cfg.seed, cfg.jobs);
    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "battery,trials,failures,worst,constant\n";
        os << "hardy," << h.trials << ',' << h.failures << ',' << nb::fmt_num(h.worst) << ",16\n";
        os << "operator," << t.trials << ',' << t.failures << ',' << nb::fmt_num(t.worst) << ",64\n";
        emit(cfg, os.str());
    } else {
        auto row = [](const nb::BatteryResult& r, double constant) {
            return json{{"trials", r.trials},      {"failures", r.failures}, {"worst", r.worst},
                        {"constant", constant},    {"first_failure", r.first_failure}};
        };
        emit(cfg, dump({{"seed", cfg.seed}, {"hardy", row(h, 16)}, {"operator", row(t, 64)}}));
    }
    return h.pass() && t.pass() ? kExitOk : kExitProperty;
}

void add_potential_opts(CLI::App* s, RunConfig& cfg) {
    s->add_option("--potential", cfg.potential_path, "potential spec JSON file")->check(CLI::ExistingFile);
    s->add_option("--example", cfg.example, "named example, e.g. example6:alpha=10,m=3");
}

void add_bound_opts(CLI::App* s, RunConfig& cfg) {
    s->add_option("--p", cfg.p, "exponent p of the B terms");
    s->add_option("--c", cfg.c, "threshold c");
    s->add_option("--C", cfg.C, "multiplier C");
    s->add_option("--window", cfg.window, "index window n_min:n_max");
}

void add_output_opts(CLI::App* s, RunConfig& cfg) {
    s->add_option("--out", cfg.out, "output file (default stdout)");
    s->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

void add_grid_opts(CLI::App* s, RunConfig& cfg) {
    s->add_option("--grid", cfg.grid_h, "finest requested grid spacing h");
    s->add_option("--domain", cfg.domain, "square:side[:cx:cy] | disk:R | logradial:t_min:t_max[:m_max]");
    s->add_option("--alpha", cfg.alpha, "coupling multiplying the potential");
    s->add_option("--levels", cfg.levels, "refinement levels")->check(CLI::Range(1, 8));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bounds on the number of bound states of 2D Schrodinger operators"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig cfg;
    app.add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::Range(1u, 256u));

    auto* bounds = app.add_subcommand("bounds", "main bound report (--all adds refined and classical bounds)");
    add_potential_opts(bounds, cfg);
    add_bound_opts(bounds, cfg);
    add_output_opts(bounds, cfg);
    bounds->add_flag("--all", cfg.all, "include refined and classical bounds");

    auto* compare = app.add_subcommand("compare", "side-by-side table of every estimate");
    add_potential_opts(compare, cfg);
    add_bound_opts(compare, cfg);
    add_output_opts(compare, cfg);
    add_grid_opts(compare, cfg);
    compare->add_option("--c-low", cfg.c_low, "lower-bound constant");

    auto* tile = app.add_subcommand("tile", "partition the unit square and audit it");
    add_potential_opts(tile, cfg);
    add_output_opts(tile, cfg);
    tile->add_option("--p", cfg.p, "exponent p");
    tile->add_option("--c", cfg.c, "Large threshold c");
    tile->add_option("--c-prime", cfg.c_prime, "Medium threshold c'");
    tile->add_option("--svg", cfg.svg, "write the tiling as SVG");

    auto* strip = app.add_subcommand("strip", "strip bound and one-eigenvalue criterion");
    add_potential_opts(strip, cfg);
    add_bound_opts(strip, cfg);
    add_output_opts(strip, cfg);
    strip->add_option("--c0", cfg.c0, "sparseness threshold of the criterion");

    auto* spectrum = app.add_subcommand("spectrum", "count negative eigenvalues of a discretization");
    add_potential_opts(spectrum, cfg);
    add_output_opts(spectrum, cfg);
    add_grid_opts(spectrum, cfg);

    auto* scaling = app.add_subcommand("scaling", "bounds for alpha * V over alpha = 2^lo..2^hi");
    add_potential_opts(scaling, cfg);
    add_bound_opts(scaling, cfg);
    add_output_opts(scaling, cfg);
    scaling->add_option("--alphas", cfg.alphas, "exponent range lo:hi");
    scaling->add_option("--c-low", cfg.c_low, "lower-bound constant");
    scaling->add_flag("--all", cfg.all, "include classical bounds");
    scaling->add_option("--svg", cfg.svg, "write the scaling curves as SVG");

    auto* hardy = app.add_subcommand("hardy", "random batteries for the discrete inequalities");
    add_output_opts(hardy, cfg);
    hardy->add_option("--trials", cfg.trials, "Hardy trials");
    hardy->add_option("--operator-trials", cfg.operator_trials, "operator-norm trials");
    hardy->add_option("--seed", cfg.seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*bounds) return run_bounds(cfg);
        if (*compare) return run_compare(cfg);
        if (*tile) return run_tile(cfg);
        if (*strip) return run_strip(cfg);
        if (*spectrum) return run_spectrum(cfg);
        if (*scaling) return run_scaling(cfg);
        if (*hardy) return run_hardy(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nb::Error& e) {
        const bool config = e.kind() == nb::ErrorKind::InvalidArgument || e.kind() == nb::ErrorKind::UnknownName ||
                            e.kind() == nb::ErrorKind::Io;
        std::cerr << (config ? "config error: " : "computation error: ") << e.what() << '\n';
        if (!config && !cfg.out.empty()) {
            try {
                emit(cfg, dump({{"error", {{"kind", nb::to_string(e.kind())}, {"message", e.what()}}}}));
            } catch (const nb::Error&) {
            }
        }
        return config ? kExitConfig : kExitCompute;
    }
    return kExitConfig;
}
