#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "potential.hpp"

namespace negbound {

// V = alpha / |x|^2, i.e. g(t) = alpha.
inline Potential inverse_square(double alpha) {
    if (!(alpha >= 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be >= 0");
    RadialProfile p;
    p.g = [alpha](double) { return alpha; };
    p.k_plus = [alpha](double s) { return alpha * std::exp(2.0 * s); };
    p.k_minus = p.k_plus;
    return radial(std::move(p), "inverse_square(" + std::to_string(alpha) + ")");
}

// V = 1 / (|x|^2 (1 + ln^2 |x|)), i.e. g(t) = 1 / (1 + t^2).
inline Potential example2() {
    RadialProfile p;
    p.g = [](double t) { return 1.0 / (1.0 + t * t); };
    p.k_plus = [](double s) { return 1.0 / (1.0 + std::exp(-2.0 * s)); };
    p.k_minus = p.k_plus;
    return radial(std::move(p), "example2");
}

// V = 1 / (|x|^2 ln^2|x| (ln ln|x|)^q) for |x| > e^2, zero otherwise.
inline Potential example4(double q) {
    if (!(q > 0.0)) throw Error(ErrorKind::InvalidArgument, "q must be positive");
    RadialProfile p;
    p.g = [q](double t) { return 1.0 / (t * t * std::pow(std::log(t), q)); };
    p.k_plus = [q](double s) { return std::pow(s, -q); };
    p.k_minus = [](double) { return 0.0; };
    p.t_lo = 2.0;
    return radial(std::move(p), "example4(" + std::to_string(q) + ")");
}

// Same potential with an arbitrary outer log-radius: e < |x| < e^{t_max}.
inline Potential example6_range(double alpha, double t_max) {
    RadialProfile p;
    p.g = [alpha](double t) { return alpha / (t * t); };
    p.k_plus = [alpha](double) { return alpha; };
    p.k_minus = [](double) { return 0.0; };
    p.t_lo = 1.0;
    p.t_hi = t_max;
    return radial(std::move(p), "example6(" + std::to_string(alpha) + "," + std::to_string(t_max) + ")");
}

// V = alpha / (|x|^2 ln^2|x|) on e < |x| < e^{2^m}.
inline Potential example6(double alpha, int m) {
    if (!(alpha >= 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be >= 0");
    if (m < 1) throw Error(ErrorKind::InvalidArgument, "m must be >= 1");
    return example6_range(alpha, std::ldexp(1.0, m));
}

// Radial potential from a profile r -> V(r).
inline Potential ckmw_radial(std::function<double(double)> profile, double r_lo = 0.0, double r_hi = kInf) {
    return radial_from_r(std::move(profile), r_lo, r_hi, "ckmw_radial");
}

// V = v everywhere (use restricted() to localize it).
inline Potential constant(double v) {
    if (!(v >= 0.0)) throw Error(ErrorKind::InvalidArgument, "constant must be >= 0");
    RadialProfile p;
    p.g = [v](double t) { return v * std::exp(2.0 * t); };
    p.k_plus = [v](double s) { return v > 0.0 ? std::exp(2.0 * s + std::log(v) + 2.0 * std::exp(s)) : 0.0; };
    p.k_minus = [v](double s) { return v > 0.0 ? std::exp(2.0 * s + std::log(v) - 2.0 * std::exp(s)) : 0.0; };
    return radial(std::move(p), "constant(" + std::to_string(v) + ")");
}

struct Bump {
    Point2 center;
    double amplitude;
    double sigma;
};

// Sum of Gaussian bumps, truncated at 10 sigma.
inline Potential gaussian_bumps(std::vector<Bump> bumps) {
    Box box{0, 0, 0, 0};
    for (const auto& b : bumps) {
        if (!(b.amplitude >= 0.0 && b.sigma > 0.0))
            throw Error(ErrorKind::InvalidArgument, "bumps need amplitude >= 0 and sigma > 0");
        const double r = 10.0 * b.sigma;
        box = hull(box, Box{b.center.x1 - r, b.center.x1 + r, b.center.x2 - r, b.center.x2 + r});
    }
    auto f = [bumps](Point2 x) {
        double s = 0.0;
        for (const auto& b : bumps) {
            const double dx = x.x1 - b.center.x1, dy = x.x2 - b.center.x2;
            const double q = (dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma);
            if (q < 50.0) s += b.amplitude * std::exp(-q);
        }
        return s;
    };
    return cartesian(f, box, "gaussian_bumps");
}

// Samples V at the nodes of an nx x ny grid over a box.
inline Potential sample_to_grid(const Potential& V, int nx, int ny, double x_lo, double x_hi, double y_lo,
                                double y_hi) {
    GridData g;
    g.nx = nx;
    g.ny = ny;
    g.x_lo = x_lo;
    g.x_hi = x_hi;
    g.y_lo = y_lo;
    g.y_hi = y_hi;
    g.values.resize(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            g.values[static_cast<std::size_t>(j) * nx + i] =
                V({x_lo + (x_hi - x_lo) * i / (nx - 1), y_lo + (y_hi - y_lo) * j / (ny - 1)});
    return grid(std::move(g));
}

using ExampleParams = std::map<std::string, double>;

inline Potential named_example(const std::string& name, const ExampleParams& params = {}) {
    auto get = [&](const char* key, double def) {
        auto it = params.find(key);
        return it == params.end() ? def : it->second;
    };
    for (const auto& [k, v] : params) {
        static const std::vector<std::string> known = {"alpha", "q", "m", "t_max", "v"};
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw Error(ErrorKind::InvalidArgument, "unknown example parameter '" + k + "'");
    }
    const double alpha = get("alpha", 1.0);
    Potential base;
    if (name == "inverse_square") return inverse_square(alpha);
    if (name == "example2") base = example2();
    else if (name == "example4") base = example4(get("q", 1.0));
    else if (name == "example6") {
        if (params.count("t_max")) return example6_range(alpha, params.at("t_max"));
        const double m = get("m", 3.0);
        if (m != std::floor(m)) throw Error(ErrorKind::InvalidArgument, "m must be an integer");
        return example6(alpha, static_cast<int>(m));
    } else if (name == "constant") return constant(get("v", 1.0));
    else if (name == "zero") return zero();
    else throw Error(ErrorKind::UnknownName, "unknown example '" + name + "'");
    return params.count("alpha") ? scaled(alpha, base) : base;
}

} // namespace negbound
