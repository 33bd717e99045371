// Acceptance gate. `acceptance <id>` runs one criterion, no argument runs all.
// Each criterion prints a single PASS/FAIL line; the exit code is nonzero if any failed.

#include <negbound.hpp>
#include <negbound/batteries.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace negbound;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    std::string failed;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failed += " [failed: " + what + "]";
        }
    }
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

void hardy(Outcome& o) {
    Stopwatch sw;
    const auto r = hardy_battery(10000, 1, jobs());
    const double t = sw.seconds();
    o.detail << r.trials << " sequences, " << r.failures << " failures, worst constant " << r.worst << ", " << t << " s";
    o.require(r.pass(), "inequality violated");
    o.require(t < 5.0, "runtime");
}

void operator_norm(Outcome& o) {
    Stopwatch sw;
    const auto r = operator_battery(1000, 1, jobs());
    const double t = sw.seconds();
    o.detail << r.trials << " measures, " << r.failures << " failures, max ||T||/sup alpha = " << r.worst << ", " << t
             << " s";
    o.require(r.pass() && r.worst <= 64.0, "norm bound");
    o.require(t < 60.0, "runtime");
}

void tiling(Outcome& o) {
    Stopwatch sw;
    TilingConstants k;
    k.c = 0.25;
    k.c_prime = 0.01;
    k.p = 2.0;
    const auto r = tiling_battery(100, 1, k, jobs());
    const double t = sw.seconds();
    o.detail << r.trials << " partitions, " << r.failures << " audit failures, R^2 = " << r.r_squared
             << ", slope = " << r.slope << ", " << t << " s";
    if (!r.first_violations.empty()) o.detail << ", first violation: " << r.first_violations.front();
    o.require(r.failures == 0, "audit");
    o.require(r.r_squared >= 0.9, "linear fit");
    o.require(t < 120.0, "runtime");
}

void example2_constants(Outcome& o) {
    const double target = kTwoPi * std::log(2.0);
    const Potential V = example2();
    double worst_gap = 0.0;
    long long worst_n = 0;
    for (long long n = 10; n <= 20; ++n) {
        const double gap = std::abs(term_A(V, n) - target);
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_n = n;
        }
    }
    double bmin = kInf, bmax = 0.0;
    for (long long n = 2; n <= 20; ++n) {
        const double b = term_B(V, n, 2.0);
        bmin = std::min(bmin, b);
        bmax = std::max(bmax, b);
    }
    o.detail << "max |A_n - 2 pi ln 2| = " << worst_gap << " at n = " << worst_n << ", B_n max/min = " << bmax / bmin;
    o.require(worst_gap <= 1e-3, "A_n band");
    o.require(bmax / bmin <= 1.5, "B_n ratio");
}

void example4_scaling(Outcome& o) {
    Stopwatch sw;
    std::vector<double> alphas;
    for (int j = 0; j <= 12; ++j) alphas.push_back(std::ldexp(1.0, j));
    ScalingOptions opt;
    opt.classical = false;
    opt.refined = false;
    for (double q : {0.5, 1.0, 2.0}) {
        const auto st = scaling_study(example4(q), alphas, {}, std::nullopt, opt);
        const double expected = std::max(1.0, 1.0 / q);
        const double slope = st.slope_main.value_or(kNaN);
        o.detail << "q = " << q << ": slope " << slope << " (expected " << expected << "), ";
        o.require(std::abs(slope - expected) <= 0.1 * expected, "slope at q = " + std::to_string(q).substr(0, 3));
    }
    const double t = sw.seconds();
    o.detail << t << " s";
    o.require(t < 60.0, "runtime");
}

void example6_shape(Outcome& o) {
    double rmin = kInf, rmax = 0.0;
    for (int m : {3, 4, 5}) {
        for (double a : {8.0, 32.0, 128.0}) {
            const auto r1 = main_bound(example6(a, m));
            const auto r2 = main_bound(example6(2.0 * a, m));
            o.require(r1.finite && r2.finite, "finite");
            o.require(r1.sqrt_count() == m, "sqrt-term count at alpha = " + std::to_string(a));
            o.require(r1.linear_count() > 0, "linear part present");
            const double ratio = r2.value / r1.value;
            rmin = std::min(rmin, ratio);
            rmax = std::max(rmax, ratio);
            o.require(ratio > std::sqrt(2.0) && ratio < 2.0, "growth ratio");
        }
    }
    o.detail << "sqrt-term counts equal m, bound(2a)/bound(a) in [" << rmin << ", " << rmax << "]";
}

void sandwich(Outcome& o) {
    Stopwatch sw;
    const double alpha = 10.0, lnlnR = 3.0;
    const double t_max = std::exp(lnlnR);
    const Potential V = example6_range(alpha, t_max);
    const long rings = ring_count_loglog(alpha, lnlnR);
    const auto nc = neg_count(V, 1.0, DiscretizationSpec{LogRadialDomain{1.0, t_max}, 0.01});
    const auto& modes = nc.trace.back().modes;
    const long mode0 = modes.empty() ? 0 : modes.front().n_neg;
    const auto mb = main_bound(V);
    const double t = sw.seconds();
    o.detail << "ring_count = " << rings << ", mode-0 count = " << mode0 << ", neg_count = " << nc.count
             << (nc.converged ? "" : " (not converged)") << ", main_bound = " << mb.value << ", " << t << " s";
    o.require(rings == 1, "ring_count");
    o.require(mode0 == 3, "mode-0 count");
    o.require(nc.count >= rings, "neg_count >= ring_count");
    o.require(mb.value >= static_cast<double>(nc.count), "main_bound >= neg_count");
    o.require(t < 30.0, "runtime");
}

void inertia_oracle(Outcome& o) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int mismatches = 0;
    for (int t = 0; t < 50; ++t) {
        const int n = 1 + static_cast<int>(rng() % 60), w = static_cast<int>(rng() % 8);
        BandedSymMatrix M(n, w);
        for (int i = 0; i < n; ++i)
            for (int j = i; j <= std::min(n - 1, i + w); ++j) M.set(i, j, U(rng));
        const auto in = inertia(M);
        long neg = 0, zero = 0;
        for (double e : dense_oracle(M)) {
            if (e < -in.pivot_tolerance) ++neg;
            else if (e <= in.pivot_tolerance) ++zero;
        }
        if (in.n_neg != neg || in.n_zero != zero) ++mismatches;
    }
    std::ostringstream counts;
    bool two = true;
    for (double h : {0.01, 0.005, 0.0025}) {
        const long c = inertia(assemble_interval([](double) { return 5.0; }, 0.0, kPi, h)).n_neg;
        counts << c << " ";
        two = two && c == 2;
    }
    o.detail << mismatches << " mismatches in 50 matrices; -u'' - 5 on (0, pi) counts at h = .01/.005/.0025: "
             << counts.str();
    o.require(mismatches == 0, "oracle");
    o.require(two, "1D count");
}

void correspondence(Outcome& o) {
    Stopwatch sw;
    double worst = 0.0;
    for (const auto& V : {example2(), inverse_square(1.0), example4(2.0)}) {
        for (long long n = -4; n <= 8; ++n) {
            const auto c = check_correspondence(V, n);
            const double ea = c.dA / std::max(c.A, 1e-12), eb = c.dB / std::max(c.Bp, 1e-12);
            worst = std::max({worst, ea, eb});
        }
    }
    const double t = sw.seconds();
    o.detail << "worst relative mismatch " << worst << ", " << t << " s";
    o.require(worst <= 1e-6, "correspondence");
    o.require(t < 30.0, "runtime");
}

void divergence(Outcome& o) {
    const Potential V = example2();
    const auto cl = classical_bounds(V);
    auto find = [&](const std::string& name) -> const BoundReport* {
        for (const auto& r : cl)
            if (r.estimate_name == name) return &r;
        return nullptr;
    };
    const auto* zn = find("zn");
    const auto* kmw = find("kmw");
    const auto* sol = find("solomyak");
    const double weak = sol ? sol->component("weak_l1_norm_A").value_or(kNaN) : kNaN;
    const auto mb = main_bound(scaled(0.05, V));
    o.detail << "zn = " << (zn ? zn->value : kNaN) << ", kmw = " << (kmw ? kmw->value : kNaN) << ", ||A||_{1,inf} = " << weak
             << ", main_bound(0.05 V) = " << mb.value << " with " << mb.sqrt_count() << " + " << mb.linear_count()
             << " contributing terms";
    o.require(zn && !zn->finite, "zn finite");
    o.require(kmw && !kmw->finite, "kmw finite");
    o.require(!std::isfinite(weak), "weak norm finite");
    o.require(mb.value == 1.0, "main_bound at 0.05");
}

void calibration(Outcome& o) {
    struct Case {
        std::string name;
        Potential V;
        DiscretizationSpec spec;
    };
    std::vector<Case> cases;
    for (double a : {10.0, 30.0, 100.0})
        cases.push_back({"example6 alpha " + std::to_string(static_cast<int>(a)), example6_range(a, std::exp(3.0)),
                         DiscretizationSpec{LogRadialDomain{1.0, std::exp(3.0)}, 0.01}});
    const Potential bumps = gaussian_bumps({{{0.3, 0.0}, 150.0, 0.25}, {{-1.2, 0.4}, 80.0, 0.3}});
    cases.push_back({"two bumps", bumps, DiscretizationSpec{DiskDomain{2.5}, 0.05}});
    for (double a : {20.0, 200.0, 2000.0})
        cases.push_back({"example4 q=2 alpha " + std::to_string(static_cast<int>(a)), scaled(a, example4(2.0)),
                         DiscretizationSpec{LogRadialDomain{2.0, 12.0}, 0.01}});
    cases.push_back({"example2 alpha 50", scaled(50.0, example2()), DiscretizationSpec{DiskDomain{3.0}, 0.08}});
    for (std::uint64_t t = 0; t < 4; ++t) {
        auto rng = trial_rng(11, t);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::vector<Bump> b;
        for (int i = 0; i < 3; ++i) b.push_back({{0.2 + 0.6 * U(rng), 0.2 + 0.6 * U(rng)}, 300.0 + 2700.0 * U(rng), 0.1});
        cases.push_back({"bump mixture " + std::to_string(t), gaussian_bumps(std::move(b)),
                         DiscretizationSpec{SquareDomain{1.0, {0.5, 0.5}}, 1.0 / 32.0}});
    }
    NegCountOptions opt;
    opt.levels = 2;
    int violations = 0;
    double tightest = kInf;
    for (const auto& c : cases) {
        const long n = neg_count(c.V, 1.0, c.spec, opt).count;
        const double b = main_bound(c.V).value;
        if (n > 0) tightest = std::min(tightest, b / static_cast<double>(n));
        if (b < static_cast<double>(n)) {
            ++violations;
            o.detail << c.name << ": bound " << b << " < count " << n << "; ";
        }
    }
    o.detail << cases.size() << " potentials, " << violations << " violations, smallest bound/count = " << tightest;
    o.require(violations == 0, "calibration");
}

const std::vector<std::pair<std::string, std::function<void(Outcome&)>>>& criteria() {
    static const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> all = {
        {"Hardy battery", hardy},
        {"operator-norm battery", operator_norm},
        {"tiling audit", tiling},
        {"example2 constants", example2_constants},
        {"example4 scaling", example4_scaling},
        {"example6 two-term shape", example6_shape},
        {"lower-bound sandwich", sandwich},
        {"inertia oracle", inertia_oracle},
        {"conformal correspondence", correspondence},
        {"divergence demonstrations", divergence},
        {"calibration gate", calibration},
    };
    return all;
}

bool run(std::size_t id) {
    const auto& [name, body] = criteria().at(id - 1);
    Outcome o;
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.failed += std::string(" [exception: ") + e.what() + "]";
    }
    std::printf("criterion %2zu %-26s %s  %s\n", id, name.c_str(), o.pass ? "PASS" : "FAIL",
                (o.detail.str() + o.failed).c_str());
    std::fflush(stdout);
    return o.pass;
}

} // namespace

int main(int argc, char** argv) {
    const std::size_t n = criteria().size();
    if (argc > 2) {
        std::fprintf(stderr, "usage: acceptance [1-%zu]\n", n);
        return 2;
    }
    if (argc == 2) {
        const long id = std::strtol(argv[1], nullptr, 10);
        if (id < 1 || static_cast<std::size_t>(id) > n) {
            std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
            return 2;
        }
        return run(static_cast<std::size_t>(id)) ? 0 : 1;
    }
    int failed = 0;
    for (std::size_t id = 1; id <= n; ++id) failed += run(id) ? 0 : 1;
    return failed == 0 ? 0 : 1;
}
