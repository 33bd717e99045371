#pragma once

// Transport between the punctured plane and the strip along Psi(z) = ln z.
//
// The slit plane maps onto a strip of height 2 pi.  The strip functionals use
// height pi, reached by the squeeze y2 -> y2 / 2 with the density doubled, so
// that integrals of V are preserved.  Under the squeeze a_n is unchanged while
// b_n^p picks up the factor 2^{p-1}.

#include <cmath>

#include "estimates.hpp"
#include "strip.hpp"

namespace negbound {

inline constexpr double kNativeStripHeight = kTwoPi;

// V~(y) = |Phi'(y)|^2 V(Phi(y)) with Phi(y) = e^y, on a strip of the given height.
inline Potential log_pushforward(const Potential& V, double height = kPi) {
    if (!(height > 0.0)) throw Error(ErrorKind::InvalidArgument, "strip height must be positive");
    return make_potential(kinds::Pushforward{V, true, height});
}

// Inverse transport of a strip potential of the given height.
inline Potential exp_pushforward(const Potential& W, double height = kPi) {
    if (!(height > 0.0)) throw Error(ErrorKind::InvalidArgument, "strip height must be positive");
    return make_potential(kinds::Pushforward{W, false, height});
}

// Multiplier on b_n^p caused by squeezing the native strip to `height`.
inline double squeeze_factor_bp(double p, double height = kPi) {
    return std::pow(kNativeStripHeight / height, p - 1.0);
}

struct Correspondence {
    long long n = 0;
    double p = 2.0;
    double A = 0.0, a = 0.0, dA = 0.0;   // A_n and a_n on the native strip
    double Bp = 0.0, bp = 0.0, dB = 0.0; // B_n^p and b_n^p on the native strip
    double bp_squeezed = 0.0;            // b_n^p on the height-pi strip
    double squeeze_factor = 1.0;         // bp_squeezed / bp
};

inline Correspondence check_correspondence(const Potential& V, long long n, double p = 2.0) {
    Correspondence c;
    c.n = n;
    c.p = p;
    if (is_zero(V)) return c;
    const Potential native = log_pushforward(V, kNativeStripHeight);
    c.A = term_A(V, n);
    c.a = term_a(native, n);
    c.dA = std::abs(c.A - c.a);
    c.Bp = std::pow(term_B(V, n, p), p);
    c.bp = std::pow(term_b(native, n, p), p);
    c.dB = std::abs(c.Bp - c.bp);
    c.bp_squeezed = std::pow(term_b(log_pushforward(V, kPi), n, p), p);
    c.squeeze_factor = squeeze_factor_bp(p);
    return c;
}

} // namespace negbound
