#pragma once

// Named integration weights W(x). Radial weights also expose the strip form
//   ln W~(t) = ln W(e^t) - 2(p-1) t,
// so that  int V^p W dx = 2 pi int g(t)^p W~(t) dt  with g(t) = e^{2t} V(e^t).

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "geometry.hpp"

namespace negbound {

namespace detail {

// ln(e + e^s), stable for any s.
inline double log_bracket_exp(double s) {
    return s > 1.0 ? s + std::log1p(std::exp(1.0 - s)) : 1.0 + std::log1p(std::exp(s - 1.0));
}

// ln(e + |y|)
inline double log_bracket(double y) {
    const double a = std::abs(y);
    return a > 1.0 ? std::log(a) + std::log1p(std::numbers::e / a) : std::log(std::numbers::e + a);
}

} // namespace detail

class Weight {
public:
    enum class Kind { One, LogAbs, Power, StripLinear, Custom, Psi, MvLog };

    static Weight one() { return Weight(Kind::One); }
    static Weight log_abs() { return Weight(Kind::LogAbs); }
    static Weight power() { return Weight(Kind::Power); }
    static Weight strip_linear() { return Weight(Kind::StripLinear); }
    static Weight custom(std::function<double(double)> w, std::string name = "custom") {
        Weight out(Kind::Custom);
        out.custom_ = std::move(w);
        out.name_ = std::move(name);
        return out;
    }
    // r^{2(p-1)} <ln r>^{2p-1} ln^{p-1+eps} <ln r>,  <y> = e + |y|.
    static Weight psi(double eps) {
        Weight out(Kind::Psi);
        out.eps_ = eps;
        return out;
    }
    // ln <x>
    static Weight mv_log() { return Weight(Kind::MvLog); }

    Kind kind() const { return kind_; }
    double eps() const { return eps_; }
    std::string name() const {
        switch (kind_) {
        case Kind::One: return "one";
        case Kind::LogAbs: return "log_abs";
        case Kind::Power: return "power";
        case Kind::StripLinear: return "strip_linear";
        case Kind::Custom: return name_;
        case Kind::Psi: return "psi";
        case Kind::MvLog: return "mv_log";
        }
        return "?";
    }

    bool radial() const { return kind_ != Kind::StripLinear; }
    // Weights depending only on x1 (used by strip-profile potentials).
    bool x1_only() const { return kind_ == Kind::One || kind_ == Kind::StripLinear; }

    double value(Point2 x, double p) const {
        if (kind_ == Kind::StripLinear) return 1.0 + std::abs(x.x1);
        if (kind_ == Kind::One) return 1.0;
        const double r = norm(x);
        if (kind_ == Kind::Custom) return custom_(r);
        return std::exp(log_tilde(std::log(r), p) + 2.0 * (p - 1.0) * std::log(r));
    }

    double x1_value(double x1) const { return kind_ == Kind::StripLinear ? 1.0 + std::abs(x1) : 1.0; }

    // ln W~(t) for a radial weight.
    double log_tilde(double t, double p) const {
        const double q = p - 1.0;
        const double lin = q == 0.0 ? 0.0 : -2.0 * q * t;
        switch (kind_) {
        case Kind::One: return lin;
        case Kind::LogAbs: return std::log1p(std::abs(t)) + lin;
        case Kind::Power: return 0.0;
        case Kind::Custom: return std::log(custom_(std::exp(t))) + lin;
        case Kind::Psi: return psi_tail(detail::log_bracket(t), p);
        case Kind::MvLog: return std::log(detail::log_bracket_exp(t)) + lin;
        case Kind::StripLinear: break;
        }
        throw Error(ErrorKind::InvalidArgument, "weight is not radial");
    }

    // ln W~(t) + (1 - 2p) s at t = side * e^s.  This is the log of the factor
    // multiplying k(s)^p in the far-field integrand; terms are grouped so that
    // no large cancellation occurs when s is huge.
    double log_far_factor(double s, int side, double p) const {
        const double q = p - 1.0;
        const double es = std::exp(s);
        const double lin = q == 0.0 ? 0.0 : -2.0 * q * side * es;
        const double base = (1.0 - 2.0 * p) * s;
        switch (kind_) {
        case Kind::One: return lin + base;
        case Kind::LogAbs: return std::log1p(std::exp(-s)) - 2.0 * q * s + lin;
        case Kind::Power: return base;
        case Kind::Custom: return std::log(custom_(std::exp(side * es))) + lin + base;
        case Kind::Psi: {
            const double L = detail::log_bracket_exp(s);
            return (2.0 * p - 1.0) * std::log1p(std::exp(1.0 - s)) + (q + eps_) * std::log(L);
        }
        case Kind::MvLog: {
            if (side > 0) {
                const double corr = std::log1p(std::exp(1.0 - es));
                return std::log1p(corr / es) - 2.0 * q * s + lin;
            }
            return std::log(1.0 + std::log1p(std::exp(-es - 1.0))) + lin + base;
        }
        case Kind::StripLinear: break;
        }
        throw Error(ErrorKind::InvalidArgument, "weight is not radial");
    }

    // Log of the Dini integrand |ln r|^{p'} r W(r)^{-1/(p-1)} dr written in
    // t = ln r, where it becomes |t|^{p'} W~(t)^{-1/(p-1)} dt.
    double log_dini_near(double t, double p) const {
        const double pp = p / (p - 1.0);
        return pp * std::log(std::abs(t)) - log_tilde(t, p) / (p - 1.0);
    }

    // Same at t = side * e^s with the Jacobian e^s included.
    double log_dini_far(double s, int side, double p) const {
        const double q = p - 1.0;
        const double lead = (p / q + 1.0) * s;
        const double es = std::exp(s);
        switch (kind_) {
        case Kind::One: return lead + 2.0 * side * es;
        case Kind::LogAbs: return lead - (s + std::log1p(std::exp(-s))) / q + 2.0 * side * es;
        case Kind::Power: return lead;
        case Kind::Psi: {
            const double L = detail::log_bracket_exp(s);
            return -(p / q + 1.0) * std::log1p(std::exp(1.0 - s)) - (1.0 + eps_ / q) * std::log(L);
        }
        case Kind::MvLog: {
            const double t = side * es;
            return lead - std::log(detail::log_bracket_exp(t)) / q + 2.0 * t;
        }
        case Kind::Custom: {
            const double t = side * es;
            return lead - std::log(custom_(std::exp(t))) / q + 2.0 * t;
        }
        case Kind::StripLinear: break;
        }
        throw Error(ErrorKind::InvalidArgument, "weight is not radial");
    }

private:
    explicit Weight(Kind k) : kind_(k) {}

    // (2p-1) L + (p-1+eps) ln L with L = ln <t>.
    double psi_tail(double L, double p) const { return (2.0 * p - 1.0) * L + (p - 1.0 + eps_) * std::log(L); }

    Kind kind_;
    double eps_ = 0.5;
    std::function<double(double)> custom_;
    std::string name_;
};

} // namespace negbound
