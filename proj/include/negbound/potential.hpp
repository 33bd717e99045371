#pragma once

// Nonnegative potentials on the plane and on strips.
//
// Radial potentials are stored through the log-density g(t) = e^{2t} V(e^t),
// so V(r) = g(ln r) / r^2.  Far-field evaluation uses the second log-density
// k(s) = e^{2s} g(+-e^s), which keeps annuli like U_n with n in the thousands
// representable.

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "weight.hpp"

namespace negbound {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {
inline std::atomic<long long>& clamp_counter() {
    static std::atomic<long long> counter{0};
    return counter;
}
inline double clamp_nonneg(double v) {
    if (v < 0.0) {
        clamp_counter().fetch_add(1, std::memory_order_relaxed);
        return 0.0;
    }
    return std::isnan(v) ? 0.0 : v;
}
} // namespace detail

// Number of negative closed-form values clamped to zero so far (process-wide).
inline long long clamp_events() { return detail::clamp_counter().load(); }

struct RadialProfile {
    std::function<double(double)> g;
    std::function<double(double)> k_plus;  // optional: e^{2s} g(e^s)
    std::function<double(double)> k_minus; // optional: e^{2s} g(-e^s)
    double t_lo = -kInf;
    double t_hi = kInf;

    bool empty() const { return !g || !(t_lo < t_hi); }

    bool in_support(double t) const { return t > t_lo && t < t_hi; }

    // Whether t = side * e^s lies in (t_lo, t_hi), decided without forming e^s.
    bool in_support_far(double s, int side) const {
        if (side > 0) {
            const bool below_hi = t_hi > 0.0 && (std::isinf(t_hi) || s < std::log(t_hi));
            const bool above_lo = t_lo <= 0.0 || s > std::log(t_lo);
            return below_hi && above_lo;
        }
        const bool above_lo = t_lo < 0.0 && (std::isinf(t_lo) || s < std::log(-t_lo));
        const bool below_hi = t_hi >= 0.0 || s > std::log(-t_hi);
        return above_lo && below_hi;
    }

    double g_at(double t) const { return in_support(t) ? detail::clamp_nonneg(g(t)) : 0.0; }

    double k_at(double s, int side) const {
        if (empty() || !in_support_far(s, side)) return 0.0;
        const auto& k = side > 0 ? k_plus : k_minus;
        if (k) return detail::clamp_nonneg(k(s));
        const double t = side * std::exp(s);
        if (!std::isfinite(t)) return 0.0;
        const double gv = detail::clamp_nonneg(g(t));
        return gv > 0.0 ? std::exp(2.0 * s + std::log(gv)) : 0.0;
    }

    std::vector<double> t_breaks() const {
        std::vector<double> b;
        if (std::isfinite(t_lo)) b.push_back(t_lo);
        if (std::isfinite(t_hi)) b.push_back(t_hi);
        return b;
    }
};

struct GridData {
    int nx = 0, ny = 0;
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    std::vector<double> values; // row-major, index j * nx + i with j along x2

    double dx() const { return (x_hi - x_lo) / (nx - 1); }
    double dy() const { return (y_hi - y_lo) / (ny - 1); }
    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }

    void validate() const {
        if (nx < 2 || ny < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least 2x2 nodes");
        if (!(x_lo < x_hi && y_lo < y_hi)) throw Error(ErrorKind::InvalidArgument, "grid extent is empty");
        if (values.size() != static_cast<std::size_t>(nx) * ny)
            throw Error(ErrorKind::InvalidArgument, "grid value count does not match nx*ny");
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw Error(ErrorKind::InvalidArgument, "grid entries must be finite and nonnegative");
    }

    double eval(Point2 x) const {
        if (!(x.x1 >= x_lo && x.x1 <= x_hi && x.x2 >= y_lo && x.x2 <= y_hi)) return 0.0;
        const double fx = (x.x1 - x_lo) / dx();
        const double fy = (x.x2 - y_lo) / dy();
        const int i = std::min(static_cast<int>(fx), nx - 2);
        const int j = std::min(static_cast<int>(fy), ny - 2);
        const double u = fx - i, v = fy - j;
        return (1 - u) * (1 - v) * at(i, j) + u * (1 - v) * at(i + 1, j) + (1 - u) * v * at(i, j + 1) +
               u * v * at(i + 1, j + 1);
    }
};

struct PotentialNode;

class Potential {
public:
    Potential(); // the zero potential
    explicit Potential(std::shared_ptr<const PotentialNode> n) : node_(std::move(n)) {}

    double operator()(Point2 x) const;
    const PotentialNode& node() const { return *node_; }
    std::string describe() const;

private:
    std::shared_ptr<const PotentialNode> node_;
};

namespace kinds {
struct Radial {
    RadialProfile profile;
    std::string name;
};
struct Cartesian {
    std::function<double(Point2)> f;
    Box support;
    std::string name;
};
struct Grid {
    std::shared_ptr<const GridData> data;
};
struct Scaled {
    double alpha;
    Potential inner;
};
struct Sum {
    std::vector<Potential> terms;
};
struct Restricted {
    Potential inner;
    Region region;
};
// Strip potential depending on x1 only: h(x1) on (x1_lo, x1_hi) x (0, height).
struct StripProfile {
    std::function<double(double)> h;
    double height;
    double x1_lo = -kInf;
    double x1_hi = kInf;
    std::string name;
};
// Transport along Psi(z) = ln z.  `height` is the strip height: 2 pi is the
// native image of the slit plane, pi applies the mass-preserving squeeze
// y2 -> y2 / 2 (density doubled).
struct Pushforward {
    Potential base;
    bool to_strip;
    double height;
};
} // namespace kinds

struct PotentialNode {
    std::variant<kinds::Radial, kinds::Cartesian, kinds::Grid, kinds::Scaled, kinds::Sum, kinds::Restricted,
                 kinds::StripProfile, kinds::Pushforward>
        kind;
};

inline Potential make_potential(auto kind) {
    return Potential(std::make_shared<const PotentialNode>(PotentialNode{std::move(kind)}));
}

inline Potential::Potential() : node_(std::make_shared<const PotentialNode>(PotentialNode{kinds::Sum{}})) {}

inline Potential radial(RadialProfile profile, std::string name = "radial") {
    if (!profile.g) throw Error(ErrorKind::InvalidArgument, "radial profile needs g");
    return make_potential(kinds::Radial{std::move(profile), std::move(name)});
}

// Radial potential from an ordinary profile r -> V(r) supported on (r_lo, r_hi).
inline Potential radial_from_r(std::function<double(double)> V, double r_lo = 0.0, double r_hi = kInf,
                               std::string name = "radial") {
    RadialProfile p;
    p.g = [V](double t) {
        const double v = V(std::exp(t));
        return v > 0.0 ? std::exp(2.0 * t + std::log(v)) : 0.0;
    };
    p.t_lo = r_lo > 0.0 ? std::log(r_lo) : -kInf;
    p.t_hi = std::log(r_hi);
    return radial(std::move(p), std::move(name));
}

inline Potential cartesian(std::function<double(Point2)> f, Box support = {}, std::string name = "cartesian") {
    return make_potential(kinds::Cartesian{std::move(f), support, std::move(name)});
}

inline Potential grid(GridData data) {
    data.validate();
    return make_potential(kinds::Grid{std::make_shared<const GridData>(std::move(data))});
}

inline Potential scaled(double alpha, Potential inner) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::InvalidArgument, "scale must be >= 0");
    return make_potential(kinds::Scaled{alpha, std::move(inner)});
}

inline Potential sum(std::vector<Potential> terms) { return make_potential(kinds::Sum{std::move(terms)}); }

inline Potential restricted(Potential inner, Region region) {
    return make_potential(kinds::Restricted{std::move(inner), std::move(region)});
}

inline Potential strip_profile(std::function<double(double)> h, double height = kPi, double x1_lo = -kInf,
                               double x1_hi = kInf, std::string name = "strip_profile") {
    if (!(height > 0.0)) throw Error(ErrorKind::InvalidArgument, "strip height must be positive");
    return make_potential(kinds::StripProfile{std::move(h), height, x1_lo, x1_hi, std::move(name)});
}

inline Potential zero() { return Potential(); }

// ---------------------------------------------------------------- evaluation

inline double Potential::operator()(Point2 x) const {
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, kinds::Radial>) {
                const double r = norm(x);
                const double t = std::log(r);
                const double gv = k.profile.g_at(t);
                if (gv <= 0.0) return 0.0;
                return std::exp(std::log(gv) - 2.0 * t);
            } else if constexpr (std::is_same_v<T, kinds::Cartesian>) {
                const Box& b = k.support;
                if (x.x1 < b.x1_lo || x.x1 > b.x1_hi || x.x2 < b.x2_lo || x.x2 > b.x2_hi) return 0.0;
                return detail::clamp_nonneg(k.f(x));
            } else if constexpr (std::is_same_v<T, kinds::Grid>) {
                return k.data->eval(x);
            } else if constexpr (std::is_same_v<T, kinds::Scaled>) {
                return k.alpha == 0.0 ? 0.0 : k.alpha * k.inner(x);
            } else if constexpr (std::is_same_v<T, kinds::Sum>) {
                double s = 0.0;
                for (const auto& v : k.terms) s += v(x);
                return s;
            } else if constexpr (std::is_same_v<T, kinds::Restricted>) {
                return k.region.contains(x) ? k.inner(x) : 0.0;
            } else if constexpr (std::is_same_v<T, kinds::StripProfile>) {
                if (!(x.x2 > 0.0 && x.x2 < k.height && x.x1 > k.x1_lo && x.x1 < k.x1_hi)) return 0.0;
                return detail::clamp_nonneg(k.h(x.x1));
            } else {
                const double fold = kTwoPi / k.height;
                if (k.to_strip) {
                    if (!(x.x2 > 0.0 && x.x2 < k.height)) return 0.0;
                    const double theta = fold * x.x2;
                    const double r = std::exp(x.x1);
                    const double v = k.base(Point2{r * std::cos(theta), r * std::sin(theta)});
                    return v > 0.0 ? fold * std::exp(2.0 * x.x1 + std::log(v)) : 0.0;
                }
                const double r = norm(x);
                if (r == 0.0) return 0.0;
                double theta = std::atan2(x.x2, x.x1);
                if (theta <= 0.0) theta += kTwoPi;
                const double w = k.base(Point2{std::log(r), theta / fold});
                return w > 0.0 ? std::exp(std::log(w) - 2.0 * std::log(r)) / fold : 0.0;
            }
        },
        node_->kind);
}

inline double eval(const Potential& V, Point2 x) { return V(x); }

inline std::string Potential::describe() const {
    return std::visit(
        [](const auto& k) -> std::string {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, kinds::Radial>) return k.name;
            else if constexpr (std::is_same_v<T, kinds::Cartesian>) return k.name;
            else if constexpr (std::is_same_v<T, kinds::Grid>)
                return "grid(" + std::to_string(k.data->nx) + "x" + std::to_string(k.data->ny) + ")";
            else if constexpr (std::is_same_v<T, kinds::Scaled>)
                return std::to_string(k.alpha) + "*" + k.inner.describe();
            else if constexpr (std::is_same_v<T, kinds::Sum>) {
                if (k.terms.empty()) return "zero";
                std::string s = "sum(";
                for (std::size_t i = 0; i < k.terms.size(); ++i) s += (i ? "," : "") + k.terms[i].describe();
                return s + ")";
            } else if constexpr (std::is_same_v<T, kinds::Restricted>)
                return "restricted(" + k.inner.describe() + ")";
            else if constexpr (std::is_same_v<T, kinds::StripProfile>) return k.name;
            else return std::string(k.to_strip ? "log_pushforward(" : "exp_pullback(") + k.base.describe() + ")";
        },
        node_->kind);
}

// ---------------------------------------------------------------- structure

inline bool is_zero(const Potential& V) {
    return std::visit(
        [](const auto& k) -> bool {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, kinds::Sum>) {
                for (const auto& t : k.terms)
                    if (!is_zero(t)) return false;
                return true;
            } else if constexpr (std::is_same_v<T, kinds::Scaled>) {
                return k.alpha == 0.0 || is_zero(k.inner);
            } else if constexpr (std::is_same_v<T, kinds::Restricted>) {
                return is_zero(k.inner);
            } else if constexpr (std::is_same_v<T, kinds::Radial>) {
                return k.profile.empty();
            } else {
                return false;
            }
        },
        V.node().kind);
}

// Log-density view of a radial potential, if V is radial.
inline std::optional<RadialProfile> radial_view(const Potential& V) {
    return std::visit(
        [](const auto& k) -> std::optional<RadialProfile> {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, kinds::Radial>) {
                return k.profile;
            } else if constexpr (std::is_same_v<T, kinds::Scaled>) {
                auto in = radial_view(k.inner);
                if (!in) return std::nullopt;
                const double a = k.alpha;
                RadialProfile p = *in;
                if (a == 0.0) {
                    p.t_lo = 0.0;
                    p.t_hi = 0.0;
                }
                auto g = in->g;
                p.g = [g, a](double t) { return a * g(t); };
                if (in->k_plus) p.k_plus = [f = in->k_plus, a](double s) { return a * f(s); };
                if (in->k_minus) p.k_minus = [f = in->k_minus, a](double s) { return a * f(s); };
                return p;
            } else if constexpr (std::is_same_v<T, kinds::Sum>) {
                std::vector<RadialProfile> parts;
                for (const auto& t : k.terms) {
                    auto v = radial_view(t);
                    if (!v) return std::nullopt;
                    if (!v->empty()) parts.push_back(*v);
                }
                RadialProfile p;
                if (parts.empty()) {
                    p.g = [](double) { return 0.0; };
                    p.t_lo = 0.0;
                    p.t_hi = 0.0;
                    return p;
                }
                if (parts.size() == 1) return parts[0];
                p.t_lo = kInf;
                p.t_hi = -kInf;
                for (const auto& q : parts) {
                    p.t_lo = std::min(p.t_lo, q.t_lo);
                    p.t_hi = std::max(p.t_hi, q.t_hi);
                }
                p.g = [parts](double t) {
                    double s = 0.0;
                    for (const auto& q : parts) s += q.g_at(t);
                    return s;
                };
                p.k_plus = [parts](double s) {
                    double v = 0.0;
                    for (const auto& q : parts) v += q.k_at(s, +1);
                    return v;
                };
                p.k_minus = [parts](double s) {
                    double v = 0.0;
                    for (const auto& q : parts) v += q.k_at(s, -1);
                    return v;
                };
                return p;
            } else if constexpr (std::is_same_v<T, kinds::Restricted>) {
                const auto* ann = std::get_if<Annulus>(&k.region.kind());
                const auto* disk = std::get_if<Disk>(&k.region.kind());
                double r_in = 0.0, r_out = 0.0;
                if (ann) {
                    r_in = ann->r_in;
                    r_out = ann->r_out;
                } else if (disk && disk->center.x1 == 0.0 && disk->center.x2 == 0.0) {
                    r_out = disk->radius;
                } else {
                    return std::nullopt;
                }
                auto in = radial_view(k.inner);
                if (!in) return std::nullopt;
                RadialProfile p = *in;
                p.t_lo = std::max(in->t_lo, r_in > 0.0 ? std::log(r_in) : -kInf);
                p.t_hi = std::min(in->t_hi, std::log(r_out));
                return p;
            } else if constexpr (std::is_same_v<T, kinds::Pushforward>) {
                if (k.to_strip) return std::nullopt;
                const auto* sp = std::get_if<kinds::StripProfile>(&k.base.node().kind);
                if (!sp || sp->height != k.height) return std::nullopt;
                const double fold = kTwoPi / k.height;
                RadialProfile p;
                p.g = [h = sp->h, fold](double t) { return h(t) / fold; };
                p.t_lo = sp->x1_lo;
                p.t_hi = sp->x1_hi;
                return p;
            } else {
                return std::nullopt;
            }
        },
        V.node().kind);
}

inline bool is_radial(const Potential& V) { return radial_view(V).has_value(); }

// Radius range [r_min, r_max] covered by a box.
inline std::pair<double, double> radius_range(const Box& b) {
    if (b.empty()) return {0.0, 0.0};
    const double cx = std::clamp(0.0, b.x1_lo, b.x1_hi);
    const double cy = std::clamp(0.0, b.x2_lo, b.x2_hi);
    const double rmin = std::hypot(cx, cy);
    const double fx = std::max(std::abs(b.x1_lo), std::abs(b.x1_hi));
    const double fy = std::max(std::abs(b.x2_lo), std::abs(b.x2_hi));
    return {rmin, std::hypot(fx, fy)};
}

// Axis-aligned box outside of which V vanishes (possibly unbounded).
inline Box support_box(const Potential& V) {
    return std::visit(
        [&](const auto& k) -> Box {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, kinds::Radial>) {
                if (k.profile.empty()) return {0, 0, 0, 0};
                const double r = std::exp(k.profile.t_hi);
                return {-r, r, -r, r};
            } else if constexpr (std::is_same_v<T, kinds::Cartesian>) {
                return k.support;
            } else if constexpr (std::is_same_v<T, kinds::Grid>) {
                return {k.data->x_lo, k.data->x_hi, k.data->y_lo, k.data->y_hi};
            } else if constexpr (std::is_same_v<T, kinds::Scaled>) {
                return k.alpha == 0.0 ? Box{0, 0, 0, 0} : support_box(k.inner);
            } else if constexpr (std::is_same_v<T, kinds::Sum>) {
                Box b{0, 0, 0, 0};
                for (const auto& t : k.terms) b = hull(b, support_box(t));
                return b;
            } else if constexpr (std::is_same_v<T, kinds::Restricted>) {
                return intersect(support_box(k.inner), bounding_box(k.region));
            } else if constexpr (std::is_same_v<T, kinds::StripProfile>) {
                return {k.x1_lo, k.x1_hi, 0.0, k.height};
            } else {
                const Box bb = support_box(k.base);
                if (k.to_strip) {
                    if (bb.empty()) return {0, 0, 0, 0};
                    auto rv = radial_view(k.base);
                    if (rv) return {rv->t_lo, rv->t_hi, 0.0, k.height};
                    auto [rmin, rmax] = radius_range(bb);
                    return {rmin > 0.0 ? std::log(rmin) : -kInf, std::log(rmax), 0.0, k.height};
                }
                const double r = std::exp(bb.x1_hi);
                return {-r, r, -r, r};
            }
        },
        V.node().kind);
}

// ---------------------------------------------------------------- integration

struct LineValue {
    double value = 0.0;
    bool finite = true;
};

// Integral over t in (t1, t2) of a density given in two forms:
//   near(t) for |t| <= 1 and far(s, side) for t = side * e^s, Jacobian included.
// Unbounded ranges are summed in blocks of doubling width in s; the result is
// marked non-finite when the blocks fail to decay before s = 2^62.  A tail
// whose blocks shrink by a steady ratio is closed with its geometric remainder.
template <class Near, class Far>
LineValue line_integral(Near&& near, Far&& far, double t1, double t2, std::span<const double> t_breaks,
                        const QuadOptions& opt = {}) {
    LineValue out;
    if (!(t2 > t1)) return out;
    const double a = std::max(t1, -1.0), b = std::min(t2, 1.0);
    if (b > a) out.value += quad(near, a, b, opt, t_breaks);

    auto tail = [&](int side, double s_a, double s_b) -> bool {
        std::vector<double> sb;
        for (double t : t_breaks)
            if (side * t > 1.0) sb.push_back(std::log(side * t));
        auto f = [&](double s) { return far(s, side); };
        if (std::isfinite(s_b)) {
            try {
                out.value += quad(f, s_a, s_b, opt, sb);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Overflow) throw;
                return false;
            }
            return true;
        }
        double last_break = s_a;
        for (double x : sb) last_break = std::max(last_break, x);
        double lo = s_a, width = 1.0;
        double acc = 0.0, prev = -1.0;
        int shrinking = 0;
        while (lo < 0x1p62) {
            const double hi = lo + width;
            double blk = 0.0;
            try {
                blk = quad(f, lo, hi, opt, sb);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Overflow) throw;
                return false;
            }
            acc += blk;
            const double total = std::abs(acc + out.value);
            if (hi >= last_break && std::abs(blk) <= 1e-13 * total) {
                out.value += acc;
                return true;
            }
            // Once the doubling blocks shrink geometrically the remainder is
            // extrapolated; this admits slowly decaying (power-of-s) tails.
            const bool doubled = lo - s_a >= 2.0;
            if (doubled && prev > 0.0 && blk <= 0.97 * prev) ++shrinking;
            else if (doubled) shrinking = 0;
            if (hi >= last_break && shrinking >= 4) {
                const double r = blk / prev;
                const double rest = blk * r / (1.0 - r);
                if (rest <= 1e-6 * total) {
                    out.value += acc + rest;
                    return true;
                }
            }
            prev = doubled ? blk : -1.0;
            lo = hi;
            if (doubled) width *= 2.0;
        }
        return false;
    };

    if (t2 > 1.0) {
        const double lo = std::max(t1, 1.0);
        if (!tail(+1, std::log(lo), std::log(t2))) out.finite = false;
    }
    if (t1 < -1.0) {
        const double hi = std::min(t2, -1.0);
        if (!tail(-1, std::log(-hi), std::log(-t1))) out.finite = false;
    }
    if (!out.finite) out.value = kInf;
    return out;
}

// 2 pi int_{t1}^{t2} g(t)^p W~(t) dt for a radial profile.
inline LineValue radial_integral(const RadialProfile& prof, double p, const Weight& w, double t1, double t2,
                                 const QuadOptions& opt = {}) {
    if (prof.empty()) return {};
    t1 = std::max(t1, prof.t_lo);
    t2 = std::min(t2, prof.t_hi);
    if (!(t2 > t1)) return {};
    auto near = [&](double t) {
        const double gv = prof.g_at(t);
        if (gv <= 0.0) return 0.0;
        return kTwoPi * std::exp(p * std::log(gv) + w.log_tilde(t, p));
    };
    auto far = [&](double s, int side) {
        const double kv = prof.k_at(s, side);
        if (kv <= 0.0) return 0.0;
        return kTwoPi * std::exp(p * std::log(kv) + w.log_far_factor(s, side, p));
    };
    const auto br = prof.t_breaks();
    return line_integral(near, far, t1, t2, br, opt);
}

// Same integrand over t = side * e^s with s in [s1, s2]; used for the doubly
// exponential annuli U_n where t itself may not be representable.
inline double radial_integral_s(const RadialProfile& prof, double p, const Weight& w, int side, double s1, double s2,
                                const QuadOptions& opt = {}) {
    if (prof.empty() || !(s2 > s1)) return 0.0;
    auto far = [&](double s) {
        const double kv = prof.k_at(s, side);
        if (kv <= 0.0) return 0.0;
        return kTwoPi * std::exp(p * std::log(kv) + w.log_far_factor(s, side, p));
    };
    std::vector<double> sb;
    for (double t : prof.t_breaks())
        if (side * t > 0.0) sb.push_back(std::log(side * t));
    return quad(far, s1, s2, opt, sb);
}

namespace detail {

inline std::optional<Rect> rect_of(const Region& region) {
    if (const auto* r = std::get_if<Rect>(&region.kind())) return *r;
    if (const auto* s = std::get_if<StripRect>(&region.kind())) return Region::as_rect(*s);
    return std::nullopt;
}

inline double grid_rect_integral(const GridData& gd, Rect r, double p, const Weight& w) {
    const double x0 = std::max(r.x1_lo, gd.x_lo), x1 = std::min(r.x1_hi, gd.x_hi);
    const double y0 = std::max(r.x2_lo, gd.y_lo), y1 = std::min(r.x2_hi, gd.y_hi);
    if (!(x1 > x0 && y1 > y0)) return 0.0;
    const double dx = gd.dx(), dy = gd.dy();
    const int i0 = std::clamp(static_cast<int>(std::floor((x0 - gd.x_lo) / dx)), 0, gd.nx - 2);
    const int i1 = std::clamp(static_cast<int>(std::ceil((x1 - gd.x_lo) / dx)) - 1, 0, gd.nx - 2);
    const int j0 = std::clamp(static_cast<int>(std::floor((y0 - gd.y_lo) / dy)), 0, gd.ny - 2);
    const int j1 = std::clamp(static_cast<int>(std::ceil((y1 - gd.y_lo) / dy)) - 1, 0, gd.ny - 2);
    double total = 0.0;
    for (int j = j0; j <= j1; ++j) {
        const double cy0 = std::max(y0, gd.y_lo + j * dy), cy1 = std::min(y1, gd.y_lo + (j + 1) * dy);
        if (!(cy1 > cy0)) continue;
        for (int i = i0; i <= i1; ++i) {
            const double cx0 = std::max(x0, gd.x_lo + i * dx), cx1 = std::min(x1, gd.x_lo + (i + 1) * dx);
            if (!(cx1 > cx0)) continue;
            const double f00 = gd.at(i, j), f10 = gd.at(i + 1, j), f01 = gd.at(i, j + 1), f11 = gd.at(i + 1, j + 1);
            if (f00 == 0.0 && f10 == 0.0 && f01 == 0.0 && f11 == 0.0) continue;
            double cell = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double xx = cx0 + (cx1 - cx0) * kGl3x[a];
                const double u = (xx - (gd.x_lo + i * dx)) / dx;
                for (int b = 0; b < 3; ++b) {
                    const double yy = cy0 + (cy1 - cy0) * kGl3x[b];
                    const double v = (yy - (gd.y_lo + j * dy)) / dy;
                    const double val =
                        (1 - u) * (1 - v) * f00 + u * (1 - v) * f10 + (1 - u) * v * f01 + u * v * f11;
                    double wv = w.kind() == Weight::Kind::One ? 1.0 : w.value({xx, yy}, p);
                    cell += kGl3w[a] * kGl3w[b] * (p == 1.0 ? val : p == 2.0 ? val * val : std::pow(val, p)) * wv;
                }
            }
            total += cell * (cx1 - cx0) * (cy1 - cy0);
        }
    }
    return total;
}

// Annulus r_in < |x - c| < r_out over bilinear grid data. At fixed x1 the section is at most two
// x2-intervals; they are split at grid rows and integrated with 5-point Gauss-Legendre, which is
// exact for the polynomial part. Only the outer x1 integral is adaptive.
inline double grid_annulus_integral(const GridData& gd, Point2 c, double r_in, double r_out, double p,
                                    const Weight& w, const QuadOptions& q) {
    static constexpr std::array<double, 5> gx = {0.0469100770306680036, 0.2307653449471584545, 0.5,
                                                 0.7692346550528415455, 0.9530899229693319964};
    static constexpr std::array<double, 5> gw = {0.1184634425280945438, 0.2393143352496832340,
                                                 0.2844444444444444444, 0.2393143352496832340,
                                                 0.1184634425280945438};
    const double xa = std::max(gd.x_lo, c.x1 - r_out), xb = std::min(gd.x_hi, c.x1 + r_out);
    if (!(xb > xa)) return 0.0;
    const double dy = gd.dy();
    auto segment = [&](double x, double y0, double y1) {
        y0 = std::max(y0, gd.y_lo);
        y1 = std::min(y1, gd.y_hi);
        double s = 0.0;
        while (y1 > y0) {
            const int j = std::min(static_cast<int>((y0 - gd.y_lo) / dy), gd.ny - 2);
            const double ye = std::min(y1, gd.y_lo + (j + 1) * dy);
            const double len = ye - y0;
            if (len <= 0.0) break;
            for (int k = 0; k < 5; ++k) {
                const Point2 pt{x, y0 + len * gx[k]};
                const double v = gd.eval(pt);
                if (v <= 0.0) continue;
                s += gw[k] * len * (p == 1.0 ? v : p == 2.0 ? v * v : std::pow(v, p)) * w.value(pt, p);
            }
            y0 = ye;
        }
        return s;
    };
    auto column = [&](double x) {
        const double d2 = (x - c.x1) * (x - c.x1);
        const double hi2 = r_out * r_out - d2;
        if (!(hi2 > 0.0)) return 0.0;
        const double hi = std::sqrt(hi2);
        const double lo = r_in * r_in > d2 ? std::sqrt(r_in * r_in - d2) : 0.0;
        if (lo == 0.0) return segment(x, c.x2 - hi, c.x2 + hi);
        return segment(x, c.x2 - hi, c.x2 - lo) + segment(x, c.x2 + lo, c.x2 + hi);
    };
    std::vector<double> br;
    for (int i = 1; i < gd.nx - 1; ++i) br.push_back(gd.x_lo + i * gd.dx());
    for (double b : {c.x1 - r_out, c.x1 - r_in, c.x1 + r_in, c.x1 + r_out}) br.push_back(b);
    std::sort(br.begin(), br.end());
    std::vector<double> inside;
    for (double b : br)
        if (b > xa && b < xb) inside.push_back(b);
    QuadOptions o = q;
    o.max_panels = std::max<int>(o.max_panels, 8 * static_cast<int>(inside.size() + 1));
    return quad(column, xa, xb, o, inside);
}

} // namespace detail

struct IntegrateOptions {
    QuadOptions quad{};
    bool force_cartesian = false; // skip the radial and profile reductions
};

double integrate(const Potential& V, const Region& region, double p, const Weight& w,
                 const IntegrateOptions& opt = {});

namespace detail {

inline double integrate_generic(const Potential& V, const Region& region, double p, const Weight& w,
                                const QuadOptions& q) {
    const Box sb = support_box(V);
    auto dens = [&](Point2 x) {
        const double v = V(x);
        if (v <= 0.0) return 0.0;
        return (p == 1.0 ? v : std::pow(v, p)) * w.value(x, p);
    };
    auto rect_integral = [&](Rect r) {
        const Box b = intersect({r.x1_lo, r.x1_hi, r.x2_lo, r.x2_hi}, sb);
        if (b.empty()) return 0.0;
        return quad_2d([&](double x, double y) { return dens({x, y}); }, b.x1_lo, b.x1_hi,
                       [&](double) { return b.x2_lo; }, [&](double) { return b.x2_hi; }, q);
    };
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Rect>) {
                return rect_integral(k);
            } else if constexpr (std::is_same_v<T, StripRect>) {
                return rect_integral(Region::as_rect(k));
            } else if constexpr (std::is_same_v<T, Disk>) {
                return quad_2d(
                    [&](double rho, double th) {
                        return rho * dens({k.center.x1 + rho * std::cos(th), k.center.x2 + rho * std::sin(th)});
                    },
                    0.0, k.radius, [](double) { return 0.0; }, [](double) { return kTwoPi; }, q);
            } else {
                if (sb.empty()) return 0.0;
                auto [rmin, rmax] = radius_range(sb);
                const double lo = std::max(k.r_in, rmin), hi = std::min(k.r_out, rmax);
                if (!(hi > lo)) return 0.0;
                if (!std::isfinite(hi))
                    throw Error(ErrorKind::InvalidArgument, "unbounded region for a potential without bounded support");
                if (lo == 0.0) {
                    return quad_2d(
                        [&](double r, double th) { return r * dens({r * std::cos(th), r * std::sin(th)}); }, 0.0, hi,
                        [](double) { return 0.0; }, [](double) { return kTwoPi; }, q);
                }
                return quad_2d(
                    [&](double t, double th) {
                        const double r = std::exp(t);
                        return r * r * dens({r * std::cos(th), r * std::sin(th)});
                    },
                    std::log(lo), std::log(hi), [](double) { return 0.0; }, [](double) { return kTwoPi; }, q);
            }
        },
        region.kind());
}

} // namespace detail

// int_region V^p W dx.  Returns +inf when a radial tail is detected to diverge.
inline double integrate(const Potential& V, const Region& region, double p, const Weight& w,
                        const IntegrateOptions& opt) {
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be >= 1");
    if (is_zero(V)) return 0.0;
    const auto& kind = V.node().kind;
    if (const auto* s = std::get_if<kinds::Scaled>(&kind)) {
        if (s->alpha == 0.0) return 0.0;
        return std::pow(s->alpha, p) * integrate(s->inner, region, p, w, opt);
    }
    if (const auto* s = std::get_if<kinds::Sum>(&kind); s && p == 1.0) {
        double t = 0.0;
        for (const auto& term : s->terms) t += integrate(term, region, p, w, opt);
        return t;
    }
    if (!opt.force_cartesian) {
        const auto* ann = std::get_if<Annulus>(&region.kind());
        const auto* disk = std::get_if<Disk>(&region.kind());
        const bool centered = disk && disk->center.x1 == 0.0 && disk->center.x2 == 0.0;
        if ((ann || centered) && w.radial()) {
            if (auto rv = radial_view(V)) {
                const double r_in = ann ? ann->r_in : 0.0;
                const double r_out = ann ? ann->r_out : disk->radius;
                const double t1 = r_in > 0.0 ? std::log(r_in) : -kInf;
                return radial_integral(*rv, p, w, t1, std::log(r_out), opt.quad).value;
            }
        }
        const auto* sp = std::get_if<kinds::StripProfile>(&kind);
        const auto rect = detail::rect_of(region);
        if (sp && rect && w.x1_only()) {
            const Rect& r = *rect;
            const double h = std::min(r.x2_hi, sp->height) - std::max(r.x2_lo, 0.0);
            const double a = std::max(r.x1_lo, sp->x1_lo), b = std::min(r.x1_hi, sp->x1_hi);
            if (!(h > 0.0) || !(b > a)) return 0.0;
            auto f = [&](double x1) {
                const double v = detail::clamp_nonneg(sp->h(x1));
                return (p == 1.0 ? v : std::pow(v, p)) * w.x1_value(x1);
            };
            std::vector<double> br{0.0};
            return h * quad(f, a, b, opt.quad, br);
        }
    }
    if (const auto* gd = std::get_if<kinds::Grid>(&kind)) {
        if (const auto rect = detail::rect_of(region)) return detail::grid_rect_integral(*gd->data, *rect, p, w);
        if (const auto* a = std::get_if<Annulus>(&region.kind())) {
            const GridData& g = *gd->data;
            const double reach = std::hypot(std::max(std::abs(g.x_lo), std::abs(g.x_hi)),
                                            std::max(std::abs(g.y_lo), std::abs(g.y_hi)));
            if (!(a->r_in < reach)) return 0.0;
            return detail::grid_annulus_integral(g, {0.0, 0.0}, a->r_in, std::min(a->r_out, reach), p, w, opt.quad);
        }
        if (const auto* d = std::get_if<Disk>(&region.kind()))
            return detail::grid_annulus_integral(*gd->data, d->center, 0.0, d->radius, p, w, opt.quad);
    }
    return detail::integrate_generic(V, region, p, w, opt.quad);
}

inline double integrate(const Potential& V, const Region& region, double p = 1.0) {
    return integrate(V, region, p, Weight::one(), IntegrateOptions{});
}

} // namespace negbound
