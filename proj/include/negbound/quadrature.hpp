#pragma once

// Adaptive Gauss-Kronrod (G7/K15) integration with a global panel queue.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "error.hpp"

namespace negbound {

struct QuadOptions {
    double rel_tol = 1e-8;
    double abs_tol = 0.0;
    int max_panels = 4000;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::array<double, 15> fv{};
    fv[7] = f(c);
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    double k = kWgk[7] * fv[7];
    double g = kWg[3] * fv[7];
    double absk = kWgk[7] * std::abs(fv[7]);
    for (int j = 0; j < 7; ++j) {
        const double s = fv[j] + fv[14 - j];
        k += kWgk[j] * s;
        absk += kWgk[j] * (std::abs(fv[j]) + std::abs(fv[14 - j]));
        if (j % 2 == 1) g += kWg[j / 2] * s;
    }
    const double mean = 0.5 * k;
    double asc = kWgk[7] * std::abs(fv[7] - mean);
    for (int j = 0; j < 7; ++j)
        asc += kWgk[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));

    const double ah = std::abs(h);
    double err = std::abs((k - g) * h);
    asc *= ah;
    absk *= ah;
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (absk > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * absk, err);
    if (!std::isfinite(k)) err = std::numeric_limits<double>::infinity();
    return {a, b, k * h, err};
}

} // namespace detail

// Integrates f over [a, b]; optional interior breakpoints seed the panel set.
template <class F>
QuadResult integrate_1d(F&& f, double a, double b, const QuadOptions& opt = {},
                        std::span<const double> breaks = {}) {
    QuadResult res;
    if (!(b > a)) return res;
    std::vector<double> cuts{a};
    for (double x : breaks)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<detail::Panel> queue;
    double total = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto p = detail::gk15(f, cuts[i], cuts[i + 1]);
        total += p.value;
        err += p.error;
        queue.push(p);
    }
    int panels = static_cast<int>(queue.size());
    // Panels too narrow to split further are retired with their error.
    double retired_err = 0.0;
    while (!queue.empty()) {
        const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
        if (err <= target) break;
        if (panels >= opt.max_panels)
            throw Error(ErrorKind::NonConvergent,
                        "adaptive quadrature exceeded " + std::to_string(opt.max_panels) + " panels");
        auto p = queue.top();
        queue.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b) ||
            (p.b - p.a) < 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(p.a), std::abs(p.b))) {
            retired_err += p.error;
            if (queue.empty()) break;
            continue;
        }
        auto l = detail::gk15(f, p.a, mid);
        auto r = detail::gk15(f, mid, p.b);
        total += l.value + r.value - p.value;
        err += l.error + r.error - p.error;
        queue.push(l);
        queue.push(r);
        ++panels;
    }
    // Recompute the sum from the panels to shed accumulated cancellation.
    double sum = 0.0, esum = retired_err;
    while (!queue.empty()) {
        sum += queue.top().value;
        esum += queue.top().error;
        queue.pop();
    }
    if (!std::isfinite(sum) && std::isfinite(total)) sum = total;
    res.value = sum;
    res.error = esum;
    res.panels = panels;
    if (!std::isfinite(res.value)) throw Error(ErrorKind::Overflow, "integrand produced a non-finite value");
    return res;
}

template <class F>
double quad(F&& f, double a, double b, const QuadOptions& opt = {}, std::span<const double> breaks = {}) {
    return integrate_1d(std::forward<F>(f), a, b, opt, breaks).value;
}

// Integral of f(t0 + u) for u in [0, w]; keeps the width exact when t0 is huge.
template <class F>
double quad_offset(F&& f, double t0, double w, const QuadOptions& opt = {}) {
    return integrate_1d([&](double u) { return f(t0 + u); }, 0.0, w, opt).value;
}

// Nested adaptive integration of f(x, y) over x in [a, b], y in [lo(x), hi(x)].
template <class F, class Lo, class Hi>
double quad_2d(F&& f, double a, double b, Lo&& lo, Hi&& hi, const QuadOptions& opt = {},
               std::span<const double> xbreaks = {}, std::span<const double> ybreaks = {}) {
    QuadOptions inner = opt;
    inner.rel_tol = opt.rel_tol * 0.05;
    auto outer = [&](double x) {
        const double y0 = lo(x), y1 = hi(x);
        if (!(y1 > y0)) return 0.0;
        return integrate_1d([&](double y) { return f(x, y); }, y0, y1, inner, ybreaks).value;
    };
    return integrate_1d(outer, a, b, opt, xbreaks).value;
}

// Three-point Gauss-Legendre on [0, 1]; exact for polynomials of degree 5.
inline constexpr std::array<double, 3> kGl3x = {0.1127016653792583114820734, 0.5, 0.8872983346207416885179266};
inline constexpr std::array<double, 3> kGl3w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

} // namespace negbound
