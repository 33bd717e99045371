#pragma once

// Annulus functionals A_n, B_n and the eigenvalue-count estimates built on
// them.
//
//   U_0 = {e^-1 < |x| < e},  U_n = {e^{2^{n-1}} < |x| < e^{2^n}},  U_{-n} its inversion
//   W_n = {e^n < |x| < e^{n+1}}
//   A_n = int_{U_n} V (1 + |ln|x||) dx,   B_n = (int_{W_n} V^p |x|^{2(p-1)} dx)^{1/p}
//
// For radial potentials the index range is unbounded; terms beyond |n| = 64
// are aggregated by the tail engine in series.hpp.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "potential.hpp"
#include "series.hpp"

namespace negbound {

enum class SeriesKind { A, B, a, b };

inline const char* to_string(SeriesKind k) {
    switch (k) {
    case SeriesKind::A: return "A";
    case SeriesKind::B: return "B";
    case SeriesKind::a: return "a";
    case SeriesKind::b: return "b";
    }
    return "?";
}

struct TermSeries {
    SeriesKind kind = SeriesKind::A;
    std::map<long long, double> entries;
    long long n_min = 0;
    long long n_max = 0;
    bool tail_flag = true; // edge entries below kNegligible

    static constexpr double kNegligible = 1e-12;

    std::vector<double> values() const {
        std::vector<double> v;
        v.reserve(entries.size());
        for (const auto& [n, x] : entries) v.push_back(x);
        return v;
    }
    double at(long long n) const {
        auto it = entries.find(n);
        return it == entries.end() ? 0.0 : it->second;
    }
};

struct BoundConstants {
    double c = 0.25;
    double C = 4.0;
    double p = 2.0;
    std::string provenance = "default c = 0.25, C = 4 (calibrated against discrete counts)";

    void validate() const {
        if (!(c > 0.0 && std::isfinite(c))) throw Error(ErrorKind::InvalidArgument, "threshold c must be > 0");
        if (!(C > 0.0 && std::isfinite(C))) throw Error(ErrorKind::InvalidArgument, "prefactor C must be > 0");
        if (!(p > 1.0 && std::isfinite(p))) throw Error(ErrorKind::InvalidArgument, "p must be > 1");
    }
};

struct Window {
    long long n_min = -8;
    long long n_max = 8;
};

// Aggregated contribution of the indices beyond the explicit window.
struct TailContribution {
    SeriesKind series = SeriesKind::A;
    int side = +1;
    double from = 0.0; // first |n| above the threshold
    double to = 0.0;   // last |n| above the threshold
    double count = 0.0;
    double sum = 0.0; // contribution before the factor C
};

struct BoundReport {
    std::string estimate_name;
    BoundConstants constants;
    std::vector<std::pair<long long, double>> sqrt_sum_terms;   // (n, sqrt A_n) with A_n > c
    std::vector<std::pair<long long, double>> linear_sum_terms; // (n, B_n) with B_n > c
    std::vector<TailContribution> tails;
    std::vector<std::pair<std::string, double>> components;
    double value = 1.0;
    bool finite = true;
    bool applicable = true;
    std::string note;
    TermSeries A;
    TermSeries B;

    double sqrt_part() const {
        double s = 0.0;
        for (const auto& t : sqrt_sum_terms) s += t.second;
        for (const auto& t : tails)
            if (t.series == SeriesKind::A || t.series == SeriesKind::a) s += t.sum;
        return s;
    }
    double linear_part() const {
        double s = 0.0;
        for (const auto& t : linear_sum_terms) s += t.second;
        for (const auto& t : tails)
            if (t.series == SeriesKind::B || t.series == SeriesKind::b) s += t.sum;
        return s;
    }
    double sqrt_count() const {
        double n = static_cast<double>(sqrt_sum_terms.size());
        for (const auto& t : tails)
            if (t.series == SeriesKind::A || t.series == SeriesKind::a) n += t.count;
        return n;
    }
    double linear_count() const {
        double n = static_cast<double>(linear_sum_terms.size());
        for (const auto& t : tails)
            if (t.series == SeriesKind::B || t.series == SeriesKind::b) n += t.count;
        return n;
    }
    std::optional<double> component(const std::string& name) const {
        for (const auto& [k, v] : components)
            if (k == name) return v;
        return std::nullopt;
    }
};

// ---------------------------------------------------------------- annuli

// Log-radii (t_in, t_out) of U_n.
inline std::pair<double, double> annulus_U_log(long long n) {
    if (n == 0) return {-1.0, 1.0};
    const long long a = n > 0 ? n : -n;
    if (a > 1023) throw Error(ErrorKind::Overflow, "U_n log-radius exceeds the floating range");
    const double lo = std::ldexp(1.0, static_cast<int>(a - 1)), hi = std::ldexp(1.0, static_cast<int>(a));
    return n > 0 ? std::pair{lo, hi} : std::pair{-hi, -lo};
}

inline std::pair<double, double> annulus_U(long long n) {
    const auto [t0, t1] = annulus_U_log(n);
    const double r0 = std::exp(t0), r1 = std::exp(t1);
    if (!std::isfinite(r1) || r0 == 0.0)
        throw Error(ErrorKind::Overflow, "U_" + std::to_string(n) + " radii are not representable; use annulus_U_log");
    return {r0, r1};
}

inline std::pair<double, double> annulus_W(long long n) {
    const double r0 = std::exp(static_cast<double>(n)), r1 = std::exp(static_cast<double>(n + 1));
    if (!std::isfinite(r1) || r0 == 0.0) throw Error(ErrorKind::Overflow, "W_n radii are not representable");
    return {r0, r1};
}

namespace detail {

struct TInterval {
    double lo, hi;
};

// Index of the U_n containing log-radius t (t on a boundary goes inward).
inline long long u_index_of_t(double t) {
    const double a = std::abs(t);
    if (a <= 1.0) return 0;
    const long long k = static_cast<long long>(std::ceil(std::log2(a)));
    return t > 0 ? std::max(1LL, k) : -std::max(1LL, k);
}

// Complement of sorted, disjoint exclusions inside [a, b].
inline std::vector<TInterval> complement_in(double a, double b, const std::vector<TInterval>& excl) {
    std::vector<TInterval> out;
    double cur = a;
    for (const auto& e : excl) {
        if (e.hi <= cur) continue;
        if (e.lo >= b) break;
        if (e.lo > cur) out.push_back({cur, e.lo});
        cur = std::max(cur, e.hi);
    }
    if (b > cur) out.push_back({cur, b});
    return out;
}

inline std::vector<TInterval> merge_intervals(std::vector<TInterval> v) {
    std::sort(v.begin(), v.end(), [](auto& x, auto& y) { return x.lo < y.lo; });
    std::vector<TInterval> out;
    for (const auto& i : v) {
        if (!out.empty() && i.lo <= out.back().hi) out.back().hi = std::max(out.back().hi, i.hi);
        else out.push_back(i);
    }
    return out;
}

inline double far_A_density(const RadialProfile& prof, double s, int side) {
    const double kv = prof.k_at(s, side);
    if (kv <= 0.0) return 0.0;
    return kTwoPi * kv * (1.0 + std::exp(-s));
}

// A-term for U_{side*nu}, nu >= 1 (nu may be fractional), over the part of
// the annulus outside the excluded t-intervals.
inline double radial_A(const RadialProfile& prof, int side, double nu, const std::vector<TInterval>& excl = {}) {
    if (prof.empty()) return 0.0;
    constexpr double w = std::numbers::ln2;
    const double s0 = (nu - 1.0) * w;
    std::vector<double> ub;
    for (double t : prof.t_breaks())
        if (side * t > 0.0) {
            const double u = std::log(side * t) - s0;
            if (u > 0.0 && u < w) ub.push_back(u);
        }
    auto f = [&](double u) { return far_A_density(prof, s0 + u, side); };
    QuadOptions q;
    if (excl.empty()) return integrate_1d(f, 0.0, w, q, ub).value;
    std::vector<TInterval> ex;
    for (const auto& e : excl) {
        double lo = side > 0 ? e.lo : -e.hi, hi = side > 0 ? e.hi : -e.lo; // |t| range
        if (hi <= 0.0) continue;
        const double slo = lo > 0.0 ? std::log(lo) - s0 : -kInf, shi = std::log(hi) - s0;
        ex.push_back({slo, shi});
    }
    double total = 0.0;
    for (const auto& piece : complement_in(0.0, w, merge_intervals(ex)))
        total += integrate_1d(f, piece.lo, piece.hi, q, ub).value;
    return total;
}

inline double radial_A0(const RadialProfile& prof, const std::vector<TInterval>& excl = {}) {
    double total = 0.0;
    for (const auto& piece : complement_in(-1.0, 1.0, excl))
        total += radial_integral(prof, 1.0, Weight::log_abs(), piece.lo, piece.hi).value;
    return total;
}

inline double radial_A_signed(const RadialProfile& prof, double n, const std::vector<TInterval>& excl = {}) {
    if (n == 0.0) return radial_A0(prof, excl);
    return radial_A(prof, n > 0 ? 1 : -1, std::abs(n), excl);
}

// B_n^p over t in [nu, nu + 1].
inline double radial_Bp(const RadialProfile& prof, double p, double nu) {
    if (prof.empty()) return 0.0;
    if (nu + 1.0 <= prof.t_lo || nu >= prof.t_hi) return 0.0;
    std::vector<double> ub;
    for (double t : prof.t_breaks())
        if (t > nu && t < nu + 1.0) ub.push_back(t - nu);
    auto f = [&](double u) {
        const double gv = prof.g_at(nu + u);
        return gv > 0.0 ? kTwoPi * std::exp(p * std::log(gv)) : 0.0;
    };
    return integrate_1d(f, 0.0, 1.0, QuadOptions{}, ub).value;
}

inline double radial_B(const RadialProfile& prof, double p, double nu) {
    return std::pow(radial_Bp(prof, p, nu), 1.0 / p);
}

// A_n restricted away from excluded t-intervals for a general potential.
inline double generic_A(const Potential& V, long long n, const std::vector<TInterval>& excl = {}) {
    const auto [t0, t1] = annulus_U_log(n);
    const Box sb = support_box(V);
    if (sb.empty()) return 0.0;
    const auto [rmin, rmax] = radius_range(sb);
    const double lt = rmin > 0.0 ? std::log(rmin) : -kInf, ht = std::log(rmax);
    if (t1 <= lt || t0 >= ht) return 0.0;
    double total = 0.0;
    for (const auto& piece : complement_in(std::max(t0, lt), std::min(t1, ht), excl)) {
        const double r0 = std::exp(piece.lo), r1 = std::exp(piece.hi);
        if (!std::isfinite(r1)) throw Error(ErrorKind::Overflow, "annulus radius overflow");
        if (!(r1 > 0.0)) continue; // below the smallest double radius; no measurable area
        total += integrate(V, Annulus{r0, r1}, 1.0, Weight::log_abs());
    }
    return total;
}

inline double generic_B(const Potential& V, long long n, double p) {
    const Box sb = support_box(V);
    if (sb.empty()) return 0.0;
    const auto [rmin, rmax] = radius_range(sb);
    const double lt = rmin > 0.0 ? std::log(rmin) : -kInf, ht = std::log(rmax);
    if (static_cast<double>(n + 1) <= lt || static_cast<double>(n) >= ht) return 0.0;
    const auto [r0, r1] = annulus_W(n);
    return std::pow(integrate(V, Annulus{r0, r1}, p, Weight::power()), 1.0 / p);
}

} // namespace detail

inline double term_A(const Potential& V, long long n) {
    if (is_zero(V)) return 0.0;
    if (auto rv = radial_view(V)) return detail::radial_A_signed(*rv, static_cast<double>(n));
    return detail::generic_A(V, n);
}

inline double term_B(const Potential& V, long long n, double p) {
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be >= 1");
    if (is_zero(V)) return 0.0;
    if (auto rv = radial_view(V)) return detail::radial_B(*rv, p, static_cast<double>(n));
    return detail::generic_B(V, n, p);
}

// ---------------------------------------------------------------- windows

namespace detail {

// Explicit index plan for one series: [lo, hi] plus open tails beyond.
struct IndexPlan {
    long long lo = -8, hi = 8;
    bool tail_minus = false, tail_plus = false;
    bool user = false;
};

inline constexpr long long kExplicitLimit = 64;

inline IndexPlan plan_from_t_range(double tlo, double thi, bool for_A, bool radial) {
    IndexPlan pl;
    if (!(thi > tlo)) return pl;
    long long a, b;
    const double big = static_cast<double>(kExplicitLimit) + 1.0;
    if (for_A) {
        a = std::isfinite(tlo) && std::abs(tlo) < std::ldexp(1.0, 62) ? u_index_of_t(tlo) : -(kExplicitLimit + 1);
        b = std::isfinite(thi) && std::abs(thi) < std::ldexp(1.0, 62) ? u_index_of_t(thi) : kExplicitLimit + 1;
        if (tlo < -std::ldexp(1.0, 62)) a = -(kExplicitLimit + 1);
        if (thi > std::ldexp(1.0, 62)) b = kExplicitLimit + 1;
    } else {
        a = tlo < -big ? -(kExplicitLimit + 1) : static_cast<long long>(std::floor(tlo));
        b = thi > big ? kExplicitLimit + 1 : static_cast<long long>(std::ceil(thi)) - 1;
    }
    const long long cap = radial ? kExplicitLimit : (for_A ? 9 : 700);
    pl.lo = std::min(-8LL, std::max(a, -cap));
    pl.hi = std::max(8LL, std::min(b, cap));
    pl.tail_minus = radial && a < -cap;
    pl.tail_plus = radial && b > cap;
    return pl;
}

inline double support_t_lo(const Potential& V, const std::optional<RadialProfile>& rv) {
    if (rv) return rv->t_lo;
    const Box sb = support_box(V);
    const auto [rmin, rmax] = radius_range(sb);
    (void)rmax;
    return rmin > 0.0 ? std::log(rmin) : -kInf;
}

inline double support_t_hi(const Potential& V, const std::optional<RadialProfile>& rv) {
    if (rv) return rv->t_hi;
    const Box sb = support_box(V);
    return std::log(radius_range(sb).second);
}

struct SeriesSource {
    Potential V;
    std::optional<RadialProfile> rv;
    double p = 2.0;
    std::vector<TInterval> excl; // only for A

    double A(long long n) const {
        if (rv) return radial_A_signed(*rv, static_cast<double>(n), excl);
        return generic_A(V, n, excl);
    }
    double B(long long n) const {
        if (rv) return radial_B(*rv, p, static_cast<double>(n));
        return generic_B(V, n, p);
    }
    // Continuations in |n| for the tails (radial only).
    std::function<double(double)> A_tail(int side) const {
        return [prof = *rv, side, ex = excl](double nu) { return radial_A(prof, side, nu, ex); };
    }
    std::function<double(double)> B_tail(int side) const {
        return [prof = *rv, side, p = p](double nu) {
            return radial_B(prof, p, side > 0 ? nu : -nu);
        };
    }
};

inline TermSeries fill_series(SeriesKind kind, const IndexPlan& pl, const std::function<double(long long)>& term) {
    TermSeries ts;
    ts.kind = kind;
    ts.n_min = pl.lo;
    ts.n_max = pl.hi;
    for (long long n = pl.lo; n <= pl.hi; ++n) ts.entries[n] = term(n);
    ts.tail_flag = ts.at(pl.lo) <= TermSeries::kNegligible && ts.at(pl.hi) <= TermSeries::kNegligible;
    return ts;
}

// Extends a non-radial automatic window while edge entries are not negligible.
inline void extend_series(TermSeries& ts, IndexPlan& pl, const std::function<double(long long)>& term, long long cap) {
    while (ts.at(pl.hi) > TermSeries::kNegligible && pl.hi < cap) ts.entries[++pl.hi] = term(pl.hi);
    while (ts.at(pl.lo) > TermSeries::kNegligible && pl.lo > -cap) ts.entries[--pl.lo] = term(pl.lo);
    ts.n_min = pl.lo;
    ts.n_max = pl.hi;
    ts.tail_flag = ts.at(pl.lo) <= TermSeries::kNegligible && ts.at(pl.hi) <= TermSeries::kNegligible;
}

struct Plans {
    IndexPlan A, B;
};

inline Plans make_plans(const Potential& V, const std::optional<RadialProfile>& rv, const std::optional<Window>& w) {
    Plans out;
    if (w) {
        if (w->n_min > w->n_max) throw Error(ErrorKind::InvalidArgument, "window must satisfy n_min <= n_max");
        out.A = {w->n_min, w->n_max, false, false, true};
        out.B = out.A;
        return out;
    }
    const double tlo = support_t_lo(V, rv), thi = support_t_hi(V, rv);
    out.A = plan_from_t_range(tlo, thi, true, rv.has_value());
    out.B = plan_from_t_range(tlo, thi, false, rv.has_value());
    return out;
}

inline void check_window(const IndexPlan& pl, const std::function<double(long long)>& term, double c,
                         const char* what) {
    if (!pl.user) return;
    for (long long n : {pl.lo - 1, pl.hi + 1}) {
        double v = 0.0;
        try {
            v = term(n);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Overflow) throw;
            continue;
        }
        if (v > c)
            throw Error(ErrorKind::WindowTooSmall, std::string(what) + "_" + std::to_string(n) + " = " +
                                                       std::to_string(v) + " exceeds c just outside the window");
    }
}

struct SeriesEval {
    TermSeries A, B;
    std::vector<TailContribution> tails;
    bool finite = true;
};

inline double sqrt_fn(double x) { return std::sqrt(x); }
inline double id_fn(double x) { return x; }

// Evaluates one thresholded series (explicit entries plus radial tails).
inline void thresholded_tails(const SeriesSource& src, SeriesKind kind, const IndexPlan& pl, double c,
                              SeriesEval& ev) {
    for (int side : {-1, +1}) {
        const bool open = side > 0 ? pl.tail_plus : pl.tail_minus;
        if (!open || !src.rv) continue;
        const double start = static_cast<double>(side > 0 ? pl.hi + 1 : -(pl.lo - 1));
        auto term = kind == SeriesKind::A ? src.A_tail(side) : src.B_tail(side);
        auto f = kind == SeriesKind::A ? std::function<double(double)>(sqrt_fn) : std::function<double(double)>(id_fn);
        const TailSummary ts = summarize_tail(term, start, c, f);
        if (!ts.above_finite) ev.finite = false;
        if (ts.count_above > 0.0) ev.tails.push_back({kind, side, ts.first_above, ts.last_above, ts.count_above, ts.sum_above});
    }
}

// t-intervals of the W_k with B_k > c (explicit and tail ranges).
inline std::vector<TInterval> big_B_intervals(const SeriesEval& ev, double c) {
    std::vector<TInterval> out;
    for (const auto& [n, v] : ev.B.entries)
        if (v > c) out.push_back({static_cast<double>(n), static_cast<double>(n + 1)});
    for (const auto& t : ev.tails) {
        if (t.series != SeriesKind::B) continue;
        if (t.side > 0) out.push_back({t.from, t.to + 1.0});
        else out.push_back({-t.to, -t.from + 1.0});
    }
    return merge_intervals(out);
}

inline BoundReport assemble(const std::string& name, const BoundConstants& k, SeriesEval ev) {
    BoundReport r;
    r.estimate_name = name;
    r.constants = k;
    for (const auto& [n, v] : ev.A.entries)
        if (v > k.c) r.sqrt_sum_terms.push_back({n, std::sqrt(v)});
    for (const auto& [n, v] : ev.B.entries)
        if (v > k.c) r.linear_sum_terms.push_back({n, v});
    r.tails = std::move(ev.tails);
    r.A = std::move(ev.A);
    r.B = std::move(ev.B);
    r.finite = ev.finite;
    if (!r.finite) {
        r.value = kInf;
    } else {
        r.value = 1.0 + k.C * r.sqrt_part() + k.C * r.linear_part();
    }
    r.components = {{"sqrt_sum", r.sqrt_part()}, {"linear_sum", r.linear_part()}};
    return r;
}

} // namespace detail

inline TermSeries term_series_A(const Potential& V, std::optional<Window> w = std::nullopt) {
    const auto rv = radial_view(V);
    auto pl = detail::make_plans(V, rv, w).A;
    detail::SeriesSource src{V, rv, 2.0, {}};
    auto term = [&](long long n) { return src.A(n); };
    auto ts = detail::fill_series(SeriesKind::A, pl, term);
    if (!w && !rv) detail::extend_series(ts, pl, term, 9);
    return ts;
}

inline TermSeries term_series_B(const Potential& V, double p, std::optional<Window> w = std::nullopt) {
    const auto rv = radial_view(V);
    auto pl = detail::make_plans(V, rv, w).B;
    detail::SeriesSource src{V, rv, p, {}};
    auto term = [&](long long n) { return src.B(n); };
    auto ts = detail::fill_series(SeriesKind::B, pl, term);
    if (!w && !rv) detail::extend_series(ts, pl, term, 700);
    return ts;
}

namespace detail {

inline BoundReport main_bound_impl(const Potential& V, const BoundConstants& k, std::optional<Window> w,
                                   bool refined) {
    k.validate();
    const auto rv = radial_view(V);
    Plans plans = make_plans(V, rv, w);
    SeriesSource src{V, rv, k.p, {}};
    auto Bterm = [&](long long n) { return src.B(n); };

    SeriesEval ev;
    ev.B = fill_series(SeriesKind::B, plans.B, Bterm);
    if (!w && !rv) extend_series(ev.B, plans.B, Bterm, 700);
    check_window(plans.B, Bterm, k.c, "B");
    thresholded_tails(src, SeriesKind::B, plans.B, k.c, ev);

    if (refined) src.excl = big_B_intervals(ev, k.c);
    auto Aterm = [&](long long n) { return src.A(n); };
    ev.A = fill_series(SeriesKind::A, plans.A, Aterm);
    if (!w && !rv) extend_series(ev.A, plans.A, Aterm, 9);
    check_window(plans.A, Aterm, k.c, "A");
    thresholded_tails(src, SeriesKind::A, plans.A, k.c, ev);

    auto r = assemble(refined ? "refined_main" : "main", k, std::move(ev));
    if (refined) {
        r.note = src.excl.empty() ? "no annulus removed"
                                  : std::to_string(src.excl.size()) + " block(s) of W_k with B_k > c removed from A";
    }
    return r;
}

} // namespace detail

inline BoundReport main_bound(const Potential& V, const BoundConstants& k = {},
                              std::optional<Window> window = std::nullopt) {
    return detail::main_bound_impl(V, k, window, false);
}

// A-terms are taken from V with the annuli {B_n > c} removed.
inline BoundReport refined_main_bound(const Potential& V, const BoundConstants& k = {},
                                      std::optional<Window> window = std::nullopt) {
    return detail::main_bound_impl(V, k, window, true);
}

// ---------------------------------------------------------------- weak l^1

// sup_s s * #{n : a_n > s} = max_k k * a_(k) over the decreasing rearrangement.
inline double weak_l1_norm(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    double best = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (v[k] > 0.0) best = std::max(best, v[k] * static_cast<double>(k + 1));
    return best;
}

inline double weak_l1_norm(const TermSeries& s) { return weak_l1_norm(s.values()); }

// sup_s s^{1/2} sum_{a_n > s} sqrt(a_n); sits between the weak norm and four times it.
inline double lorentz_sqrt_sup(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    double best = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(v[k] > 0.0)) break;
        acc += std::sqrt(v[k]);
        best = std::max(best, std::sqrt(v[k]) * acc);
    }
    return best;
}

namespace detail {

// Weak norm of explicit entries plus radial tails.  Candidate levels are the
// explicit values and the tail values at nu = start * 2^{j/2}; the best
// candidate is refined by a local search in nu.  The supremum is declared
// infinite when a tail never drops below a level, or when s * N(s) keeps
// growing through the smallest sampled levels.
inline LineValue weak_norm_with_tails(const std::vector<double>& vals,
                                      const std::vector<std::pair<std::function<double(double)>, double>>& tails) {
    double vmax = 0.0;
    for (double v : vals) vmax = std::max(vmax, v);
    auto N = [&](double s) {
        double n = 0.0;
        for (double v : vals)
            if (v >= s) n += 1.0;
        for (const auto& [term, start] : tails)
            n += summarize_tail(term, start, s * (1.0 - 1e-12), {}).count_above;
        return n;
    };
    auto phi = [&](double s) { return s > 0.0 ? s * N(s) : 0.0; };

    double best = 0.0;
    for (double v : vals) best = std::max(best, phi(v));
    for (const auto& [term, start] : tails) {
        std::vector<double> nus, phis;
        int rising = 0;
        for (int j = 0; j < 2 * 120; ++j) {
            const double nu = std::floor(start * std::exp2(j / 2.0));
            const double v = term(nu);
            vmax = std::max(vmax, v);
            if (!(v > 0.0)) {
                if (j > 8) break;
                continue;
            }
            const double ph = phi(v);
            if (!std::isfinite(ph)) return {kInf, false};
            rising = (!phis.empty() && ph > phis.back() * (1.0 + 1e-9)) ? rising + 1 : 0;
            nus.push_back(nu);
            phis.push_back(ph);
            best = std::max(best, ph);
            if (rising >= 20 && ph > 1.5 * phis[phis.size() - 21]) return {kInf, false};
            if (j > 8 && v < 1e-12 * vmax) break;
        }
        if (phis.size() >= 3 && rising >= 2 && phis.back() >= best * (1.0 - 1e-9)) return {kInf, false};
        // Local refinement around the best sample.
        if (!phis.empty()) {
            const auto k = static_cast<std::size_t>(std::max_element(phis.begin(), phis.end()) - phis.begin());
            double lo = nus[k > 0 ? k - 1 : k], hi = nus[std::min(k + 1, nus.size() - 1)];
            for (int it = 0; it < 40 && hi - lo > 2.0; ++it) {
                const double m1 = std::floor(lo + (hi - lo) / 3.0), m2 = std::floor(hi - (hi - lo) / 3.0);
                const double f1 = phi(term(m1)), f2 = phi(term(m2));
                best = std::max({best, f1, f2});
                (f1 < f2 ? lo : hi) = f1 < f2 ? m1 : m2;
            }
        }
    }
    return {best, true};
}

// 2 pi int g(t) ln(2 + V <x>^2) dt, the second Molchanov-Vainberg integral.
inline LineValue mv_second_radial(const RadialProfile& prof) {
    auto logaddexp = [](double a, double b) {
        const double m = std::max(a, b);
        return m + std::log1p(std::exp(-std::abs(a - b)));
    };
    // ln(V <x>^2) = ln g - 2t + 2 ln(e + e^t)
    auto near = [&](double t) {
        const double gv = prof.g_at(t);
        if (gv <= 0.0) return 0.0;
        const double L = std::log(gv) - 2.0 * t + 2.0 * log_bracket_exp(t);
        return kTwoPi * gv * logaddexp(std::log(2.0), L);
    };
    auto far = [&](double s, int side) {
        const double kv = prof.k_at(s, side);
        if (kv <= 0.0) return 0.0;
        const double es = std::exp(s);
        // g = k e^{-2s}; -2t + 2 ln(e + e^t) = 2 ln(1 + e^{1-t}) for t > 0 and 2 + 2|t| + 2 ln(1 + e^{t-1}) for t < 0
        if (side > 0) {
            const double L = std::log(kv) - 2.0 * s + 2.0 * std::log1p(std::exp(1.0 - es));
            return kTwoPi * kv * std::exp(-s) * logaddexp(std::log(2.0), L);
        }
        // Inside the unit disk ln(V <x>^2) carries 2|t| = 2 e^s; split it off
        // so that e^{-s} * 2 e^s stays finite.
        const double rest = std::log(kv) - 2.0 * s + 2.0 + 2.0 * std::log1p(std::exp(-es - 1.0));
        const double L = rest + 2.0 * es;
        if (L < 40.0) return kTwoPi * kv * std::exp(-s) * logaddexp(std::log(2.0), L);
        return kTwoPi * kv * (2.0 + std::exp(-s) * (rest + std::log1p(2.0 * std::exp(-L))));
    };
    const auto br = prof.t_breaks();
    return line_integral(near, far, prof.t_lo, prof.t_hi, br);
}

inline double bounded_integral(const Potential& V, const std::function<double(Point2, double)>& dens) {
    const Box sb = support_box(V);
    if (sb.empty()) return 0.0;
    if (!sb.bounded()) return kInf;
    return quad_2d([&](double x, double y) {
        const double v = V({x, y});
        return v > 0.0 ? dens({x, y}, v) : 0.0;
    },
                   sb.x1_lo, sb.x1_hi, [&](double) { return sb.x2_lo; }, [&](double) { return sb.x2_hi; });
}

} // namespace detail

// Dini integral of a radial weight; non-finite when it diverges numerically.
inline LineValue dini_integral(const Weight& W, double p) {
    if (!(p > 1.0)) throw Error(ErrorKind::InvalidArgument, "the Dini condition needs p > 1");
    auto near = [&](double t) { return t == 0.0 ? 0.0 : std::exp(W.log_dini_near(t, p)); };
    auto far = [&](double s, int side) { return std::exp(W.log_dini_far(s, side, p)); };
    const std::vector<double> br{0.0};
    try {
        return line_integral(near, far, -kInf, kInf, br);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Overflow || e.kind() == ErrorKind::NonConvergent) return {kInf, false};
        throw;
    }
}

struct ClassicalOptions {
    std::optional<Weight> weight; // for the single-integral bound; default psi(0.5)
    double eps = 0.5;
};

inline std::vector<BoundReport> classical_bounds(const Potential& V, const BoundConstants& k = {},
                                                 std::optional<Window> window = std::nullopt,
                                                 const ClassicalOptions& opt = {}) {
    k.validate();
    const auto rv = radial_view(V);
    const double sc = 1.0 / std::sqrt(k.c);

    // Shared ingredients: I = int V (1 + |ln|x||), sum B_n, the A series.
    LineValue I;
    LineValue sumB;
    LineValue weak;
    const auto plans = detail::make_plans(V, rv, window);
    detail::SeriesSource src{V, rv, k.p, {}};
    TermSeries As = term_series_A(V, window), Bs = term_series_B(V, k.p, window);
    if (rv && !window) {
        I = radial_integral(*rv, 1.0, Weight::log_abs(), -kInf, kInf);
        sumB.value = 0.0;
        for (const auto& [n, v] : Bs.entries) sumB.value += v;
        std::vector<std::pair<std::function<double(double)>, double>> a_tails;
        for (int side : {-1, +1}) {
            const auto& pa = plans.A;
            const auto& pb = plans.B;
            if (side > 0 ? pb.tail_plus : pb.tail_minus) {
                TailOptions to;
                to.want_total = true;
                const double start = static_cast<double>(side > 0 ? pb.hi + 1 : -(pb.lo - 1));
                const auto ts = summarize_tail(src.B_tail(side), start, kInf, detail::id_fn, to);
                if (!ts.total_finite) sumB.finite = false;
                else sumB.value += ts.total;
            }
            if (side > 0 ? pa.tail_plus : pa.tail_minus)
                a_tails.emplace_back(src.A_tail(side), static_cast<double>(side > 0 ? pa.hi + 1 : -(pa.lo - 1)));
        }
        if (!sumB.finite) sumB.value = kInf;
        weak = detail::weak_norm_with_tails(As.values(), a_tails);
    } else {
        I.value = 0.0;
        for (const auto& [n, v] : As.entries) I.value += v;
        sumB.value = 0.0;
        for (const auto& [n, v] : Bs.entries) sumB.value += v;
        weak.value = weak_l1_norm(As);
    }

    auto finish = [&](BoundReport& r, double v) {
        r.constants = k;
        r.finite = std::isfinite(v);
        r.value = r.finite ? v : kInf;
        r.A = As;
        r.B = Bs;
    };
    std::vector<BoundReport> out;

    {
        BoundReport r;
        r.estimate_name = "zn";
        r.components = {{"log_weighted_integral", I.finite ? I.value : kInf}, {"sum_B", sumB.value}};
        const double v = (I.finite && sumB.finite) ? 1.0 + k.C * sc * I.value + k.C * sumB.value : kInf;
        finish(r, v);
        out.push_back(std::move(r));
    }
    {
        BoundReport r;
        r.estimate_name = "solomyak";
        r.components = {{"weak_l1_norm_A", weak.finite ? weak.value : kInf}, {"sum_B", sumB.value}};
        const double v = (weak.finite && sumB.finite) ? 1.0 + 4.0 * k.C * sc * weak.value + k.C * sumB.value : kInf;
        finish(r, v);
        out.push_back(std::move(r));
    }
    {
        BoundReport r;
        r.estimate_name = "kmw";
        if (!rv) {
            r.applicable = false;
            r.note = "radial potentials only";
            finish(r, kInf);
        } else {
            r.components = {{"log_weighted_integral", I.finite ? I.value : kInf}};
            finish(r, I.finite ? 1.0 + I.value : kInf);
        }
        out.push_back(std::move(r));
    }
    {
        BoundReport r;
        r.estimate_name = "mv";
        double first, second;
        if (rv) {
            const auto a = radial_integral(*rv, 1.0, Weight::mv_log(), -kInf, kInf);
            const auto b = detail::mv_second_radial(*rv);
            first = a.finite ? a.value : kInf;
            second = b.finite ? b.value : kInf;
        } else {
            first = detail::bounded_integral(V, [](Point2 x, double v) { return v * std::log(std::numbers::e + norm(x)); });
            second = detail::bounded_integral(V, [](Point2 x, double v) {
                const double br = std::numbers::e + norm(x);
                return v * std::log(2.0 + v * br * br);
            });
        }
        r.components = {{"log_integral", first}, {"nonlinear_integral", second}};
        finish(r, 1.0 + k.C * first + k.C * second);
        out.push_back(std::move(r));
    }
    {
        BoundReport r;
        r.estimate_name = "weighted_lp";
        const Weight W = opt.weight.value_or(Weight::psi(opt.eps));
        const auto d = dini_integral(W, k.p);
        if (!d.finite) throw Error(ErrorKind::DiniViolated, "Dini integral diverges for weight " + W.name());
        double J;
        if (rv) {
            const auto lv = radial_integral(*rv, k.p, W, -kInf, kInf);
            J = lv.finite ? lv.value : kInf;
        } else {
            J = detail::bounded_integral(V, [&](Point2 x, double v) { return std::pow(v, k.p) * W.value(x, k.p); });
        }
        r.components = {{"weighted_integral", J}, {"dini_integral", d.value}};
        finish(r, 1.0 + k.C * std::pow(J, 1.0 / k.p));
        r.note = "weight " + W.name();
        out.push_back(std::move(r));
    }
    return out;
}

// c_low * int V dx.
inline double lower_bound(const Potential& V, double c_low) {
    if (!(c_low > 0.0)) throw Error(ErrorKind::InvalidArgument, "c_low must be > 0");
    if (is_zero(V)) return 0.0;
    if (auto rv = radial_view(V)) {
        const auto lv = radial_integral(*rv, 1.0, Weight::one(), -kInf, kInf);
        return lv.finite ? c_low * lv.value : kInf;
    }
    const Box sb = support_box(V);
    if (!sb.bounded()) throw Error(ErrorKind::InvalidArgument, "lower bound needs a bounded support");
    return c_low * integrate(V, Rect{sb.x1_lo, sb.x1_hi, sb.x2_lo, sb.x2_hi}, 1.0);
}

// ---------------------------------------------------------------- scaling

struct ScalingRow {
    double alpha = 0.0;
    BoundReport main;
    BoundReport refined;
    std::vector<BoundReport> classical;
    double lower = 0.0;
    std::optional<long long> measured;
};

struct ScalingOptions {
    bool classical = true;
    bool refined = true;
    double c_low = 1.0;
    std::function<long long(const Potential&, double)> measure; // optional count for (V, alpha)
};

struct ScalingStudy {
    std::vector<ScalingRow> rows;
    std::optional<double> slope_main;    // log-log slope of main over the top decade
    std::optional<double> slope_refined;
};

// Least-squares slope of ln y against ln x over x >= x_max / 10.
inline std::optional<double> top_decade_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty()) return std::nullopt;
    const double xmax = *std::max_element(x.begin(), x.end());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < xmax / 10.0 * (1.0 - 1e-12) || !(y[i] > 0.0) || !std::isfinite(y[i])) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::nullopt;
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / den;
}

inline ScalingStudy scaling_study(const Potential& V, const std::vector<double>& alphas, const BoundConstants& k = {},
                                  std::optional<Window> window = std::nullopt, const ScalingOptions& opt = {}) {
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "alphas must be positive");
        if (i > 0 && !(alphas[i] > alphas[i - 1])) throw Error(ErrorKind::InvalidArgument, "alphas must increase");
    }
    ScalingStudy st;
    std::vector<double> xs, ym, yr;
    for (double a : alphas) {
        ScalingRow row;
        row.alpha = a;
        const Potential Va = scaled(a, V);
        row.main = main_bound(Va, k, window);
        if (opt.refined) row.refined = refined_main_bound(Va, k, window);
        if (opt.classical) row.classical = classical_bounds(Va, k, window);
        row.lower = is_zero(V) ? 0.0 : lower_bound(Va, opt.c_low);
        if (opt.measure) row.measured = opt.measure(V, a);
        xs.push_back(a);
        ym.push_back(row.main.value);
        yr.push_back(opt.refined ? row.refined.value : 0.0);
        st.rows.push_back(std::move(row));
    }
    st.slope_main = top_decade_slope(xs, ym);
    if (opt.refined) st.slope_refined = top_decade_slope(xs, yr);
    return st;
}

} // namespace negbound
