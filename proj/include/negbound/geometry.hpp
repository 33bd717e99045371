#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>
#include <variant>

#include "error.hpp"

namespace negbound {

struct Point2 {
    double x1 = 0.0;
    double x2 = 0.0;
};

inline double norm(Point2 p) { return std::hypot(p.x1, p.x2); }

struct Annulus {
    double r_in;
    double r_out; // may be +inf
};

struct Disk {
    Point2 center;
    double radius;
};

struct Rect {
    double x1_lo, x1_hi, x2_lo, x2_hi;
};

// (alpha, beta) x (0, height); height is pi in the strip convention.
struct StripRect {
    double alpha, beta;
    double height = std::numbers::pi;
};

class Region {
public:
    using Kind = std::variant<Annulus, Disk, Rect, StripRect>;

    Region(Annulus a) : kind_(a) {
        if (!(a.r_in >= 0.0 && a.r_in < a.r_out))
            throw Error(ErrorKind::InvalidArgument, "annulus requires 0 <= r_in < r_out");
    }
    Region(Disk d) : kind_(d) {
        if (!(d.radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "disk radius must be positive");
    }
    Region(Rect r) : kind_(r) {
        if (!(r.x1_lo < r.x1_hi && r.x2_lo < r.x2_hi))
            throw Error(ErrorKind::InvalidArgument, "empty rectangle");
    }
    Region(StripRect s) : kind_(s) {
        if (!(s.alpha < s.beta && s.height > 0.0)) throw Error(ErrorKind::InvalidArgument, "empty strip rectangle");
    }

    const Kind& kind() const { return kind_; }

    bool contains(Point2 x) const {
        return std::visit(
            [&](const auto& r) -> bool {
                using T = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<T, Annulus>) {
                    const double n = norm(x);
                    return n > r.r_in && n < r.r_out;
                } else if constexpr (std::is_same_v<T, Disk>) {
                    return std::hypot(x.x1 - r.center.x1, x.x2 - r.center.x2) < r.radius;
                } else if constexpr (std::is_same_v<T, Rect>) {
                    return x.x1 > r.x1_lo && x.x1 < r.x1_hi && x.x2 > r.x2_lo && x.x2 < r.x2_hi;
                } else {
                    return x.x1 > r.alpha && x.x1 < r.beta && x.x2 > 0.0 && x.x2 < r.height;
                }
            },
            kind_);
    }

    // Rectangle form of a strip rectangle; identity for Rect.
    static Rect as_rect(const StripRect& s) { return {s.alpha, s.beta, 0.0, s.height}; }

private:
    Kind kind_;
};

// Axis-aligned bounding box, possibly unbounded.
struct Box {
    double x1_lo = -std::numeric_limits<double>::infinity();
    double x1_hi = std::numeric_limits<double>::infinity();
    double x2_lo = -std::numeric_limits<double>::infinity();
    double x2_hi = std::numeric_limits<double>::infinity();

    bool bounded() const {
        return std::isfinite(x1_lo) && std::isfinite(x1_hi) && std::isfinite(x2_lo) && std::isfinite(x2_hi);
    }
    bool empty() const { return !(x1_lo < x1_hi && x2_lo < x2_hi); }
};

inline Box intersect(const Box& a, const Box& b) {
    return {std::max(a.x1_lo, b.x1_lo), std::min(a.x1_hi, b.x1_hi), std::max(a.x2_lo, b.x2_lo),
            std::min(a.x2_hi, b.x2_hi)};
}

inline Box hull(const Box& a, const Box& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    return {std::min(a.x1_lo, b.x1_lo), std::max(a.x1_hi, b.x1_hi), std::min(a.x2_lo, b.x2_lo),
            std::max(a.x2_hi, b.x2_hi)};
}

inline Box bounding_box(const Region& r) {
    return std::visit(
        [](const auto& k) -> Box {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Annulus>) {
                return {-k.r_out, k.r_out, -k.r_out, k.r_out};
            } else if constexpr (std::is_same_v<T, Disk>) {
                return {k.center.x1 - k.radius, k.center.x1 + k.radius, k.center.x2 - k.radius,
                        k.center.x2 + k.radius};
            } else if constexpr (std::is_same_v<T, Rect>) {
                return {k.x1_lo, k.x1_hi, k.x2_lo, k.x2_hi};
            } else {
                return {k.alpha, k.beta, 0.0, k.height};
            }
        },
        r.kind());
}

} // namespace negbound
