#pragma once

// Functionals on the strip S = R x (0, H), H = pi unless the potential says
// otherwise.
//
//   S_0 = (-1, 1),  S_n = (2^{n-1}, 2^n),  S_{-n} = -S_n      (x1 ranges)
//   Q_n = (n, n + 1)
//   a_n = int_{S_n} V (1 + |x1|) dx,   b_n = (int_{Q_n} V^p dx)^{1/p}

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "estimates.hpp"

namespace negbound {

inline std::pair<double, double> strip_S(long long n) {
    if (n == 0) return {-1.0, 1.0};
    const long long a = n > 0 ? n : -n;
    if (a > 1023) throw Error(ErrorKind::Overflow, "S_n abscissa exceeds the floating range");
    const double lo = std::ldexp(1.0, static_cast<int>(a - 1)), hi = std::ldexp(1.0, static_cast<int>(a));
    return n > 0 ? std::pair{lo, hi} : std::pair{-hi, -lo};
}

// Index of the S_n containing x1 (boundary points go inward).
inline long long strip_index(double x1) {
    const double a = std::abs(x1);
    if (a <= 1.0) return 0;
    const long long m = static_cast<long long>(std::ceil(std::log2(a)));
    return x1 > 0.0 ? m : -m;
}

// Height of the strip a potential lives on.
inline double strip_height(const Potential& V) {
    return std::visit(
        [](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, kinds::StripProfile>) {
                return k.height;
            } else if constexpr (std::is_same_v<T, kinds::Pushforward>) {
                return k.to_strip ? k.height : kPi;
            } else if constexpr (std::is_same_v<T, kinds::Scaled> || std::is_same_v<T, kinds::Restricted>) {
                return strip_height(k.inner);
            } else if constexpr (std::is_same_v<T, kinds::Sum>) {
                double h = kPi;
                for (const auto& t : k.terms) h = std::max(h, strip_height(t));
                return h;
            } else {
                return kPi;
            }
        },
        V.node().kind);
}

// For potentials that depend on x1 only, the column integral
// x1 -> int_0^H V(x1, x2)^p dx2.
using ColumnFn = std::function<double(double x1, double p)>;

inline std::optional<ColumnFn> column_view(const Potential& V) {
    const auto& kind = V.node().kind;
    if (const auto* sp = std::get_if<kinds::StripProfile>(&kind)) {
        return ColumnFn([h = sp->h, H = sp->height, lo = sp->x1_lo, hi = sp->x1_hi](double x1, double p) {
            if (!(x1 > lo && x1 < hi)) return 0.0;
            const double v = std::max(0.0, h(x1));
            return H * (p == 1.0 ? v : std::pow(v, p));
        });
    }
    if (const auto* pf = std::get_if<kinds::Pushforward>(&kind); pf && pf->to_strip) {
        auto rv = radial_view(pf->base);
        if (!rv) return std::nullopt;
        const double fold = kTwoPi / pf->height;
        return ColumnFn([prof = *rv, fold, H = pf->height](double x1, double p) {
            const double g = fold * prof.g_at(x1);
            return g > 0.0 ? H * (p == 1.0 ? g : std::pow(g, p)) : 0.0;
        });
    }
    if (const auto* sc = std::get_if<kinds::Scaled>(&kind)) {
        auto in = column_view(sc->inner);
        if (!in) return std::nullopt;
        return ColumnFn([f = *in, a = sc->alpha](double x1, double p) {
            return a == 0.0 ? 0.0 : std::pow(a, p) * f(x1, p);
        });
    }
    return std::nullopt;
}

namespace detail {

inline QuadOptions strip_quad() {
    QuadOptions q;
    q.rel_tol = 1e-11;
    return q;
}

// int_{lo < x1 < hi} V^p w(x1) dx over the strip.
inline double strip_integral(const Potential& V, double lo, double hi, double p, bool linear_weight) {
    if (!(hi > lo) || is_zero(V)) return 0.0;
    const Box sb = support_box(V);
    lo = std::max(lo, sb.x1_lo);
    hi = std::min(hi, sb.x1_hi);
    if (!(hi > lo)) return 0.0;
    if (auto col = column_view(V)) {
        auto f = [&](double x1) { return (*col)(x1, p) * (linear_weight ? 1.0 + std::abs(x1) : 1.0); };
        std::vector<double> br;
        if (lo < 0.0 && hi > 0.0) br.push_back(0.0);
        return quad(f, lo, hi, strip_quad(), br);
    }
    IntegrateOptions opt{strip_quad(), false};
    const Weight w = linear_weight ? Weight::strip_linear() : Weight::one();
    return integrate(V, StripRect{lo, hi, strip_height(V)}, p, w, opt);
}

} // namespace detail

inline double term_a(const Potential& V, long long n) {
    const auto [lo, hi] = strip_S(n);
    return detail::strip_integral(V, lo, hi, 1.0, true);
}

inline double term_b(const Potential& V, long long n, double p) {
    const double lo = static_cast<double>(n);
    return std::pow(detail::strip_integral(V, lo, lo + 1.0, p, false), 1.0 / p);
}

inline double strip_mass(const Potential& V, long long n) {
    const auto [lo, hi] = strip_S(n);
    return detail::strip_integral(V, lo, hi, 1.0, false);
}

// a-index window covering the x1-support, and the matching b-indices.
struct StripIndexRange {
    long long a_lo = 0, a_hi = 0;
    long long b_lo = 0, b_hi = 0;
};

inline constexpr long long kMaxStripColumns = 1'000'000;

inline StripIndexRange strip_index_range(const Potential& V, std::optional<Window> window = std::nullopt) {
    StripIndexRange r;
    double lo = 0.0, hi = 0.0;
    if (window) {
        if (window->n_min > window->n_max) throw Error(ErrorKind::InvalidArgument, "window is empty");
        r.a_lo = window->n_min;
        r.a_hi = window->n_max;
        lo = strip_S(r.a_lo).first;
        hi = strip_S(r.a_hi).second;
    } else {
        const Box sb = support_box(V);
        if (sb.empty()) return r;
        if (!std::isfinite(sb.x1_lo) || !std::isfinite(sb.x1_hi))
            throw Error(ErrorKind::InvalidArgument, "unbounded strip support needs an explicit window");
        lo = sb.x1_lo;
        hi = sb.x1_hi;
        r.a_lo = strip_index(lo);
        r.a_hi = strip_index(hi);
    }
    if (hi - lo > static_cast<double>(kMaxStripColumns))
        throw Error(ErrorKind::SizeExceeded, "too many unit columns in the strip window");
    r.b_lo = static_cast<long long>(std::floor(lo));
    r.b_hi = static_cast<long long>(std::ceil(hi)) - 1;
    if (r.b_hi < r.b_lo) r.b_hi = r.b_lo;
    return r;
}

inline TermSeries strip_series_a(const Potential& V, const StripIndexRange& r) {
    TermSeries s;
    s.kind = SeriesKind::a;
    s.n_min = r.a_lo;
    s.n_max = r.a_hi;
    for (long long n = r.a_lo; n <= r.a_hi; ++n) s.entries[n] = term_a(V, n);
    return s;
}

inline TermSeries strip_series_b(const Potential& V, double p, const StripIndexRange& r) {
    TermSeries s;
    s.kind = SeriesKind::b;
    s.n_min = r.b_lo;
    s.n_max = r.b_hi;
    for (long long n = r.b_lo; n <= r.b_hi; ++n) s.entries[n] = term_b(V, n, p);
    return s;
}

// ---------------------------------------------------------------- one eigenvalue

struct OneEigenvalueResult {
    bool holds = true; // sup a_n <= c and sup b_n <= c
    double sup_a = 0.0, sup_b = 0.0;
    long long argsup_a = 0, argsup_b = 0;
};

inline OneEigenvalueResult one_eigenvalue_criterion(const Potential& V, double p = 2.0, double c_crit = 0.25,
                                                    std::optional<Window> window = std::nullopt) {
    OneEigenvalueResult out;
    if (is_zero(V)) return out;
    const auto r = strip_index_range(V, window);
    for (long long n = r.a_lo; n <= r.a_hi; ++n) {
        const double a = term_a(V, n);
        if (a > out.sup_a) {
            out.sup_a = a;
            out.argsup_a = n;
        }
    }
    for (long long n = r.b_lo; n <= r.b_hi; ++n) {
        const double b = term_b(V, n, p);
        if (b > out.sup_b) {
            out.sup_b = b;
            out.argsup_b = n;
        }
    }
    out.holds = out.sup_a <= c_crit && out.sup_b <= c_crit;
    return out;
}

// ---------------------------------------------------------------- sparse cover

struct SparseCover {
    std::vector<double> cuts;   // r_0 < r_1 < ... < r_N
    std::vector<double> masses; // J_k over (r_{k-1}, min(r_k, beta))
    bool last_rect_partial = false;
    double c = 0.0;

    long long N() const { return static_cast<long long>(masses.size()); }
    double length(std::size_t k) const { return cuts[k + 1] - cuts[k]; }
};

struct SparseCoverOptions {
    int max_iters = 200;
    double rel_tol = 1e-9;
};

// Greedy left-to-right cuts with l_k J_k = c.  Outside the rectangle V is
// treated as zero, so the last cut may land beyond beta.
inline SparseCover sparse_cover(const Potential& V, const StripRect& rect, double c, const SparseCoverOptions& o = {}) {
    if (!(rect.beta - rect.alpha >= 1.0)) throw Error(ErrorKind::InvalidArgument, "sparse cover needs beta - alpha >= 1");
    if (!(c > 0.0)) throw Error(ErrorKind::InvalidArgument, "c must be positive");
    SparseCover cov;
    cov.c = c;
    cov.cuts.push_back(rect.alpha);
    auto J = [&](double a, double b) { return detail::strip_integral(V, a, std::min(b, rect.beta), 1.0, false); };
    long long guard = 0;
    while (cov.cuts.back() < rect.beta) {
        if (++guard > kMaxStripColumns) throw Error(ErrorKind::IterationBudgetExceeded, "sparse cover did not terminate");
        const double r0 = cov.cuts.back();
        const double tail = J(r0, rect.beta);
        if (!(tail > 0.0)) {
            cov.cuts.push_back(rect.beta + 1.0);
            cov.masses.push_back(0.0);
            break;
        }
        auto F = [&](double r) { return (r - r0) * J(r0, r); };
        // Land exactly on beta when it solves the equation within tolerance, so
        // rounding in earlier cuts cannot leave a sliver before beta.
        if (std::abs(F(rect.beta) - c) <= 1e-6 * c && rect.beta - r0 >= 1.0) {
            cov.cuts.push_back(rect.beta);
            cov.masses.push_back(J(r0, rect.beta));
            break;
        }
        double lo = r0, hi = r0 + 1.0;
        while (F(hi) < c) {
            lo = hi;
            hi = r0 + 2.0 * (hi - r0);
        }
        bool ok = false;
        for (int it = 0; it < o.max_iters; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = F(mid);
            if (std::abs(fm - c) <= o.rel_tol * c) {
                lo = hi = mid;
                ok = true;
                break;
            }
            (fm < c ? lo : hi) = mid;
            if (hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) {
                ok = std::abs(F(hi) - c) <= 1e-6 * c;
                lo = hi;
                break;
            }
        }
        if (!ok) throw Error(ErrorKind::NonConvergent, "cut equation l J = c did not converge");
        if (hi - r0 < 1.0)
            throw Error(ErrorKind::SparsenessViolated,
                        "cut length " + std::to_string(hi - r0) + " < 1: potential is not sparse for this c");
        cov.cuts.push_back(hi);
        cov.masses.push_back(J(r0, hi));
    }
    cov.last_rect_partial = cov.cuts.back() > rect.beta;
    return cov;
}

// ---------------------------------------------------------------- strip bound

struct StripDecomposition {
    std::vector<long long> dense;                    // n with b_n > c
    std::vector<std::pair<long long, long long>> blocks; // maximal runs of consecutive dense n
    std::vector<std::pair<double, double>> gaps;     // x1-intervals T_j (infinite ends allowed)
    bool gap_accounting_ok = true;                   // #T_j <= 1 + #blocks
};

inline StripDecomposition strip_decomposition(const TermSeries& b, double c) {
    StripDecomposition d;
    for (const auto& [n, v] : b.entries)
        if (v > c) d.dense.push_back(n);
    for (std::size_t i = 0; i < d.dense.size();) {
        std::size_t j = i;
        while (j + 1 < d.dense.size() && d.dense[j + 1] == d.dense[j] + 1) ++j;
        d.blocks.push_back({d.dense[i], d.dense[j]});
        i = j + 1;
    }
    double left = -kInf;
    for (const auto& [s, e] : d.blocks) {
        if (static_cast<double>(s) > left) d.gaps.push_back({left, static_cast<double>(s)});
        left = static_cast<double>(e + 1);
    }
    d.gaps.push_back({left, kInf});
    d.gap_accounting_ok = d.gaps.size() <= 1 + d.blocks.size();
    return d;
}

struct StripBoundReport {
    BoundReport bound;
    StripDecomposition decomposition;
    StripIndexRange range;
};

inline StripBoundReport strip_bound(const Potential& V, const BoundConstants& k = {},
                                    std::optional<Window> window = std::nullopt) {
    k.validate();
    StripBoundReport out;
    BoundReport& r = out.bound;
    r.estimate_name = "strip";
    r.constants = k;
    r.A.kind = SeriesKind::a;
    r.B.kind = SeriesKind::b;
    if (!is_zero(V)) {
        out.range = strip_index_range(V, window);
        r.A = strip_series_a(V, out.range);
        r.B = strip_series_b(V, k.p, out.range);
    }
    for (const auto& [n, v] : r.A.entries)
        if (v > k.c) r.sqrt_sum_terms.push_back({n, std::sqrt(v)});
    for (const auto& [n, v] : r.B.entries)
        if (v > k.c) r.linear_sum_terms.push_back({n, v});
    r.value = 1.0 + k.C * r.sqrt_part() + k.C * r.linear_part();
    r.components = {{"sqrt_sum", r.sqrt_part()}, {"linear_sum", r.linear_part()}};
    out.decomposition = strip_decomposition(r.B, k.c);
    r.note = std::to_string(out.decomposition.blocks.size()) + " dense block(s), " +
             std::to_string(out.decomposition.gaps.size()) + " gap rectangle(s)";
    return out;
}

} // namespace negbound
