#pragma once

// Discrete inequalities behind the one-eigenvalue criterion:
//   weighted Hardy   sum_n 2^{-n} (sum_{k<=n} 2^k w_k)^2 <= 16 sum_n 2^n w_n^2
//   Bennett schema   a premise on (u, v) implying a Hardy-type bound for all w
//   operator bound   ||T|| <= 64 sup_n 2^{|n|} mu(I_n),  T f(x) = int (1 + |x| ^ |y|) f(y) dmu(y)

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace negbound {

struct HardyResult {
    double lhs = 0.0, rhs = 0.0;
    bool holds = true;
};

inline HardyResult hardy_check(const std::vector<double>& w) {
    for (double x : w)
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "weights must be finite and >= 0");
    long double lhs = 0.0L, rhs = 0.0L, inner = 0.0L;
    for (std::size_t n = 0; n < w.size(); ++n) {
        const long double pw = std::ldexp(1.0L, static_cast<int>(n));
        inner += pw * w[n];
        lhs += inner * inner / pw;
        rhs += pw * w[n] * w[n];
    }
    rhs *= 16.0L;
    return {static_cast<double>(lhs), static_cast<double>(rhs), lhs <= rhs};
}

struct BennettResult {
    std::vector<bool> premise; // per prefix m
    bool premise_holds = true;
    long first_violation = -1;
    double lhs = 0.0, rhs = 0.0;
    double factor = 0.0; // (r / (r - s))^r
    bool holds = true;
};

// Premise: sum_{n<=m} u_n (sum_{k<=n} v_k)^r <= (sum_{k<=m} v_k)^s for every m.
// Conclusion: sum_n u_n (sum_{k<=n} v_k w_k)^r <= (r/(r-s))^r (sum_k v_k w_k^{r/s})^s.
inline BennettResult bennett_check(const std::vector<double>& u, const std::vector<double>& v,
                                   const std::vector<double>& w, double r, double s, bool throw_on_premise = true) {
    if (!(r > s && s >= 1.0)) throw Error(ErrorKind::InvalidArgument, "need r > s >= 1");
    if (u.size() != v.size() || v.size() != w.size())
        throw Error(ErrorKind::InvalidArgument, "u, v and w must have equal length");
    for (const auto* seq : {&u, &v, &w})
        for (double x : *seq)
            if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "sequences must be >= 0");
    BennettResult out;
    out.factor = std::pow(r / (r - s), r);
    long double acc = 0.0L, vsum = 0.0L;
    for (std::size_t m = 0; m < u.size(); ++m) {
        vsum += v[m];
        acc += u[m] * std::pow(vsum, static_cast<long double>(r));
        const long double bound = std::pow(vsum, static_cast<long double>(s));
        const bool ok = acc <= bound * (1.0L + 1e-15L);
        out.premise.push_back(ok);
        if (!ok && out.premise_holds) {
            out.premise_holds = false;
            out.first_violation = static_cast<long>(m);
        }
    }
    if (!out.premise_holds) {
        if (throw_on_premise)
            throw Error(ErrorKind::PremiseFailed, "premise fails first at m = " + std::to_string(out.first_violation));
        out.holds = false;
        return out;
    }
    long double lhs = 0.0L, inner = 0.0L, right = 0.0L;
    for (std::size_t n = 0; n < u.size(); ++n) {
        inner += static_cast<long double>(v[n]) * w[n];
        lhs += u[n] * std::pow(inner, static_cast<long double>(r));
        right += v[n] * std::pow(static_cast<long double>(w[n]), static_cast<long double>(r / s));
    }
    out.lhs = static_cast<double>(lhs);
    out.rhs = static_cast<double>(static_cast<long double>(out.factor) * std::pow(right, static_cast<long double>(s)));
    out.holds = lhs <= static_cast<long double>(out.rhs) * (1.0L + 1e-12L);
    return out;
}

// The instantiation u_n = 2^{-n-2}, v_n = 2^n, r = 2, s = 1.
inline std::pair<std::vector<double>, std::vector<double>> hardy_bennett_weights(std::size_t len) {
    std::vector<double> u(len), v(len);
    for (std::size_t n = 0; n < len; ++n) {
        u[n] = std::ldexp(1.0, -static_cast<int>(n) - 2);
        v[n] = std::ldexp(1.0, static_cast<int>(n));
    }
    return {u, v};
}

// ---------------------------------------------------------------- operator T

struct Atom {
    double x = 0.0;
    double mass = 0.0;
};

using AtomicMeasure = std::vector<Atom>;

struct OperatorNormResult {
    double norm = 0.0;    // largest eigenvalue of the mass-weighted kernel matrix
    double sup_alpha = 0.0;
    long long argsup = 0;
    double bound_64 = 0.0; // 64 sup alpha_n
    bool holds = true;
    int iterations = 0;
    double ratio() const { return sup_alpha > 0.0 ? norm / sup_alpha : 0.0; }
};

// Indices n with x in the closed interval I_n (two on shared endpoints).
inline std::vector<long long> dyadic_line_indices(double x) {
    const double a = std::abs(x);
    if (a <= 1.0) {
        std::vector<long long> out{0};
        if (a == 1.0) out.push_back(x > 0 ? 1 : -1);
        return out;
    }
    int e = 0;
    const double frac = std::frexp(a, &e); // a = frac * 2^e, frac in [0.5, 1)
    const long long sign = x > 0 ? 1 : -1;
    if (frac == 0.5) return {sign * (e - 1), sign * e}; // a = 2^{e-1}
    return {sign * e};
}

inline OperatorNormResult operator_T_norm(const AtomicMeasure& mu, double rel_tol = 1e-8, int max_iter = 100000) {
    OperatorNormResult out;
    for (const auto& a : mu)
        if (!(a.mass > 0.0) || !std::isfinite(a.x) || !std::isfinite(a.mass))
            throw Error(ErrorKind::InvalidArgument, "atoms need finite positions and positive masses");
    if (mu.empty()) return out;
    std::vector<std::pair<long long, double>> alpha;
    for (const auto& a : mu)
        for (long long n : dyadic_line_indices(a.x)) alpha.push_back({n, a.mass});
    std::sort(alpha.begin(), alpha.end());
    for (std::size_t i = 0; i < alpha.size();) {
        double m = 0.0;
        std::size_t j = i;
        for (; j < alpha.size() && alpha[j].first == alpha[i].first; ++j) m += alpha[j].second;
        const long long n = alpha[i].first;
        const double val = std::ldexp(m, static_cast<int>(n < 0 ? -n : n));
        if (val > out.sup_alpha) {
            out.sup_alpha = val;
            out.argsup = n;
        }
        i = j;
    }
    const std::size_t N = mu.size();
    std::vector<double> K(N * N), sq(N);
    for (std::size_t i = 0; i < N; ++i) sq[i] = std::sqrt(mu[i].mass);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            K[i * N + j] = (1.0 + std::min(std::abs(mu[i].x), std::abs(mu[j].x))) * sq[i] * sq[j];
    // The kernel is positive semidefinite with positive entries, so power
    // iteration from a positive vector converges to the top eigenvalue.
    std::vector<double> x(N, 1.0 / std::sqrt(static_cast<double>(N))), y(N);
    double lambda = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j) s += K[i * N + j] * x[j];
            y[i] = s;
        }
        double nrm = 0.0, rq = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            nrm += y[i] * y[i];
            rq += x[i] * y[i];
        }
        nrm = std::sqrt(nrm);
        out.iterations = it;
        if (nrm == 0.0) {
            lambda = 0.0;
            break;
        }
        for (std::size_t i = 0; i < N; ++i) x[i] = y[i] / nrm;
        const bool done = std::abs(nrm - lambda) <= rel_tol * nrm && std::abs(nrm - rq) <= rel_tol * nrm;
        lambda = nrm;
        if (done) break;
    }
    out.norm = lambda;
    out.bound_64 = 64.0 * out.sup_alpha;
    out.holds = out.norm <= out.bound_64 * (1.0 + 1e-12);
    return out;
}

// Projection of a strip-supported atomic measure onto the x1 axis.
inline AtomicMeasure project_to_line(const std::vector<std::pair<Point2, double>>& atoms) {
    AtomicMeasure out;
    out.reserve(atoms.size());
    for (const auto& [p, m] : atoms) out.push_back({p.x1, m});
    return out;
}

// C (1 + |x1| ^ |y1|) + C ln_+(1 / |x - y|); +inf on the diagonal.
inline double gamma_kernel_bound(Point2 x, Point2 y, double C) {
    const double d = std::hypot(x.x1 - y.x1, x.x2 - y.x2);
    if (d == 0.0) return std::numeric_limits<double>::infinity();
    const double lnp = d < 1.0 ? -std::log(d) : 0.0;
    return C * (1.0 + std::min(std::abs(x.x1), std::abs(y.x1))) + C * lnp;
}

} // namespace negbound
