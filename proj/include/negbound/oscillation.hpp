#pragma once

// Explicit test functions that certify negative eigenvalues from below.
//
// For V = alpha / (|x|^2 ln^2|x|) on e < |x| < R and beta = sqrt(alpha - 1/4),
// f(x) = sqrt(ln|x|) sin(beta ln ln|x|) solves Delta f + V f = 0.  It vanishes
// where beta ln ln r = pi k, so each ring between consecutive zeros carries a
// test function of zero energy.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "potential.hpp"

namespace negbound {

struct Ring {
    long k = 1;
    double r_lo = 0.0, r_hi = 0.0;
    // The same ring in log-log radius s = ln ln r (r itself overflows quickly).
    double s_lo = 0.0, s_hi = 0.0;
};

struct RingFamily {
    double alpha = 0.0;
    double R = 0.0;
    std::vector<Ring> rings;
};

namespace detail {

inline double ring_beta(double alpha) {
    if (!(alpha > 0.25)) throw Error(ErrorKind::InvalidArgument, "ring construction needs alpha > 1/4");
    return std::sqrt(alpha - 0.25);
}

// sqrt(alpha - 1/4) * ln ln R / pi
inline double ring_phase(double alpha, double lnlnR) { return ring_beta(alpha) * lnlnR / kPi; }

} // namespace detail

// Number of k >= 1 with (pi k, pi (k + 1)) inside (0, beta ln ln R), given ln ln R.
inline long ring_count_loglog(double alpha, double lnlnR) {
    if (!(lnlnR > 0.0)) throw Error(ErrorKind::InvalidArgument, "ring construction needs R > e");
    const double x = detail::ring_phase(alpha, lnlnR);
    // Endpoint equality counts as inclusion; absorb rounding of the product.
    return std::max(0L, static_cast<long>(std::floor(x * (1.0 + 1e-12))) - 1);
}

inline long ring_count(double alpha, double R) {
    if (!(R > std::numbers::e)) throw Error(ErrorKind::InvalidArgument, "ring construction needs R > e");
    return ring_count_loglog(alpha, std::log(std::log(R)));
}

inline RingFamily ring_family_loglog(double alpha, double lnlnR) {
    RingFamily fam;
    fam.alpha = alpha;
    fam.R = std::exp(std::exp(lnlnR));
    const double beta = detail::ring_beta(alpha);
    const long n = ring_count_loglog(alpha, lnlnR);
    for (long k = 1; k <= n; ++k) {
        Ring r;
        r.k = k;
        r.s_lo = kPi * k / beta;
        r.s_hi = kPi * (k + 1) / beta;
        r.r_lo = std::exp(std::exp(r.s_lo));
        r.r_hi = std::exp(std::exp(r.s_hi));
        fam.rings.push_back(r);
    }
    return fam;
}

inline RingFamily ring_family(double alpha, double R) {
    if (!(R > std::numbers::e)) throw Error(ErrorKind::InvalidArgument, "ring construction needs R > e");
    return ring_family_loglog(alpha, std::log(std::log(R)));
}

// (int |grad f|^2 - int V f^2) / int |grad f|^2 over the ring, where f uses
// alpha and V uses alpha_V.  Evaluated in t = ln r:
//   int |grad f|^2 = 2 pi int f'(t)^2 dt,  int V f^2 = 2 pi int alpha_V f(t)^2 / t^2 dt.
inline double rayleigh_zero_check(double alpha, const Ring& ring, double alpha_V) {
    const double beta = detail::ring_beta(alpha);
    const double t0 = std::exp(ring.s_lo), t1 = std::exp(ring.s_hi);
    if (!(t1 > t0)) return 0.0;
    auto f = [&](double t) { return std::sqrt(t) * std::sin(beta * std::log(t)); };
    auto df = [&](double t) {
        const double u = beta * std::log(t);
        return (0.5 * std::sin(u) + beta * std::cos(u)) / std::sqrt(t);
    };
    QuadOptions q;
    q.rel_tol = 1e-12;
    q.abs_tol = 0.0;
    const double grad = kTwoPi * quad([&](double t) { return df(t) * df(t); }, t0, t1, q);
    const double pot = kTwoPi * quad([&](double t) { const double v = f(t); return alpha_V * v * v / (t * t); }, t0, t1, q);
    if (!(grad > 0.0)) return 0.0;
    return (grad - pot) / grad;
}

inline double rayleigh_zero_check(double alpha, const Ring& ring) { return rayleigh_zero_check(alpha, ring, alpha); }

// Energy of the logarithmic cutoff: 1 on |x| < a, ln(b/|x|) / ln(b/a) between, 0 outside.
inline double log_cutoff_energy(double a, double b) {
    if (!(a > 0.0 && b > a)) throw Error(ErrorKind::InvalidArgument, "log cutoff needs 0 < a < b");
    return kTwoPi / std::log(b / a);
}

// Same energy by quadrature of |grad phi|^2 in polar coordinates.
inline double log_cutoff_energy_quadrature(double a, double b) {
    if (!(a > 0.0 && b > a)) throw Error(ErrorKind::InvalidArgument, "log cutoff needs 0 < a < b");
    const double L = std::log(b / a);
    QuadOptions q;
    q.rel_tol = 1e-12;
    q.abs_tol = 0.0;
    return kTwoPi * quad([L](double r) { const double d = 1.0 / (r * L); return r * d * d; }, a, b, q);
}

} // namespace negbound
