#pragma once

// Adaptive partition of the unit square Q = [0,1]^2 into squares and corner
// "steps" (a square with a smaller square cut out of one corner), driven by
// the L^p mass of V on each tile.  With l the outer side of a tile and
// m = int_tile V^p:
//   Large   m > c l^{2-2p}
//   Medium  c' l^{2-2p} < m <= c l^{2-2p}
//   Small   otherwise
// Large squares are split into quarters; when exactly three quarters are
// Small, the remaining corner square is shrunk until the surrounding step
// carries mass c l^{2-2p} exactly.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "potential.hpp"

namespace negbound {

struct Square {
    Point2 corner; // lower-left
    double side = 1.0;

    double x_hi() const { return corner.x1 + side; }
    double y_hi() const { return corner.x2 + side; }
    Rect rect() const { return {corner.x1, x_hi(), corner.x2, y_hi()}; }
};

enum class TileLabel { Small, Medium, Large, Unclassified };

inline const char* to_string(TileLabel l) {
    switch (l) {
    case TileLabel::Small: return "small";
    case TileLabel::Medium: return "medium";
    case TileLabel::Large: return "large";
    case TileLabel::Unclassified: return "unclassified";
    }
    return "?";
}

struct Tile {
    Square outer;
    bool is_step = false;
    Square removed; // meaningful for steps only
    TileLabel label = TileLabel::Unclassified;

    static Tile square(Square s) { return Tile{s, false, {}, TileLabel::Unclassified}; }
    static Tile step(Square outer, Square removed) { return Tile{outer, true, removed, TileLabel::Unclassified}; }

    double size() const { return outer.side; }
    double area() const { return outer.side * outer.side - (is_step ? removed.side * removed.side : 0.0); }

    // Structural checks for a step: notch side <= half and exactly one shared corner.
    bool step_well_formed() const {
        if (!is_step) return true;
        if (!(removed.side > 0.0 && removed.side <= 0.5 * outer.side * (1.0 + 1e-12))) return false;
        const bool left = removed.corner.x1 == outer.corner.x1;
        const bool right = removed.x_hi() == outer.x_hi();
        const bool bottom = removed.corner.x2 == outer.corner.x2;
        const bool top = removed.y_hi() == outer.y_hi();
        return (left != right) && (bottom != top);
    }
};

struct TilingConstants {
    double c = 0.25;
    double c_prime = 0.01;
    double p = 2.0;

    // 4 c' 2^{2p-2} < c keeps the all-small split impossible.
    bool admissible() const { return 4.0 * c_prime * std::pow(2.0, 2.0 * p - 2.0) < c; }
    void validate() const {
        if (!(c > 0.0 && c_prime > 0.0 && p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "need c, c' > 0, p >= 1");
        if (!admissible())
            throw Error(ErrorKind::InvalidArgument, "tiling constants violate 4 c' 2^(2p-2) < c");
    }
};

struct Counters {
    long L = 0, M = 0, S = 0;
    long potential() const { return 2 * L + 3 * M - S; }
};

struct Partition {
    std::vector<Tile> tiles;
    std::vector<Counters> counters_history;
    TilingConstants consts;

    Counters counters() const {
        Counters k;
        for (const auto& t : tiles) {
            if (t.label == TileLabel::Large) ++k.L;
            else if (t.label == TileLabel::Medium) ++k.M;
            else if (t.label == TileLabel::Small) ++k.S;
        }
        return k;
    }
};

// Rectangle masses int V^p.  Grid potentials use prefix sums of exact cell
// integrals plus exact Gauss-Legendre on the partially covered border cells
// (exact for p = 1, 2 on the bilinear interpolant); other potentials fall
// back to adaptive quadrature.
class MassOracle {
public:
    MassOracle(Potential V, double p) : V_(std::move(V)), p_(p) {
        const Potential* cur = &V_;
        double factor = 1.0;
        while (const auto* sc = std::get_if<kinds::Scaled>(&cur->node().kind)) {
            factor *= std::abs(sc->alpha);
            cur = &sc->inner;
        }
        if (const auto* g = std::get_if<kinds::Grid>(&cur->node().kind)) {
            build(*g->data);
            grid_scale_ = std::pow(factor, p_);
        }
    }

    double p() const { return p_; }

    double rect(double x0, double x1, double y0, double y1) const {
        if (!(x1 > x0 && y1 > y0)) return 0.0;
        if (grid_) return grid_scale_ * grid_rect(x0, x1, y0, y1);
        QuadOptions q;
        q.rel_tol = 1e-9;
        IntegrateOptions opt{q, false};
        return integrate(V_, Rect{x0, x1, y0, y1}, p_, Weight::one(), opt);
    }
    double rect(const Rect& r) const { return rect(r.x1_lo, r.x1_hi, r.x2_lo, r.x2_hi); }

    double tile(const Tile& t) const {
        const double outer = rect(t.outer.rect());
        if (!t.is_step) return outer;
        return std::max(0.0, outer - rect(t.removed.rect()));
    }

private:
    void build(const GridData& g) {
        grid_ = std::make_shared<GridData>(g);
        const int cx = g.nx - 1, cy = g.ny - 1;
        prefix_.assign(static_cast<std::size_t>(cx + 1) * (cy + 1), 0.0L);
        for (int j = 0; j < cy; ++j)
            for (int i = 0; i < cx; ++i) {
                const long double cell = cell_part(i, j, 0.0, 1.0, 0.0, 1.0);
                pre(i + 1, j + 1) = cell + pre(i, j + 1) + pre(i + 1, j) - pre(i, j);
            }
    }

    long double& pre(int i, int j) { return prefix_[static_cast<std::size_t>(j) * grid_->nx + i]; }
    long double pre(int i, int j) const { return prefix_[static_cast<std::size_t>(j) * grid_->nx + i]; }

    // Exact integral over the sub-rectangle [u0,u1]x[v0,v1] of cell (i, j),
    // in local coordinates, scaled to physical area.
    long double cell_part(int i, int j, double u0, double u1, double v0, double v1) const {
        const GridData& g = *grid_;
        const double f00 = g.at(i, j), f10 = g.at(i + 1, j), f01 = g.at(i, j + 1), f11 = g.at(i + 1, j + 1);
        if (f00 == 0.0 && f10 == 0.0 && f01 == 0.0 && f11 == 0.0) return 0.0L;
        long double s = 0.0L;
        for (int a = 0; a < 3; ++a) {
            const double u = u0 + (u1 - u0) * kGl3x[a];
            for (int b = 0; b < 3; ++b) {
                const double v = v0 + (v1 - v0) * kGl3x[b];
                const double val = (1 - u) * (1 - v) * f00 + u * (1 - v) * f10 + (1 - u) * v * f01 + u * v * f11;
                const double vp = p_ == 1.0 ? val : p_ == 2.0 ? val * val : std::pow(val, p_);
                s += static_cast<long double>(kGl3w[a] * kGl3w[b]) * vp;
            }
        }
        return s * (u1 - u0) * (v1 - v0) * g.dx() * g.dy();
    }

    double grid_rect(double x0, double x1, double y0, double y1) const {
        const GridData& g = *grid_;
        x0 = std::max(x0, g.x_lo);
        x1 = std::min(x1, g.x_hi);
        y0 = std::max(y0, g.y_lo);
        y1 = std::min(y1, g.y_hi);
        if (!(x1 > x0 && y1 > y0)) return 0.0;
        const double fx0 = (x0 - g.x_lo) / g.dx(), fx1 = (x1 - g.x_lo) / g.dx();
        const double fy0 = (y0 - g.y_lo) / g.dy(), fy1 = (y1 - g.y_lo) / g.dy();
        const int cx = g.nx - 1, cy = g.ny - 1;
        // Cells fully covered: [ia, ib) x [ja, jb).
        const int ia = std::clamp(static_cast<int>(std::ceil(fx0 - 1e-12)), 0, cx);
        const int ib = std::clamp(static_cast<int>(std::floor(fx1 + 1e-12)), 0, cx);
        const int ja = std::clamp(static_cast<int>(std::ceil(fy0 - 1e-12)), 0, cy);
        const int jb = std::clamp(static_cast<int>(std::floor(fy1 + 1e-12)), 0, cy);
        long double total = 0.0L;
        if (ib > ia && jb > ja) total += pre(ib, jb) - pre(ia, jb) - pre(ib, ja) + pre(ia, ja);
        // Border cells: every touched cell not inside the full block.
        const int i0 = std::clamp(static_cast<int>(std::floor(fx0)), 0, cx - 1);
        const int i1 = std::clamp(static_cast<int>(std::ceil(fx1)) - 1, 0, cx - 1);
        const int j0 = std::clamp(static_cast<int>(std::floor(fy0)), 0, cy - 1);
        const int j1 = std::clamp(static_cast<int>(std::ceil(fy1)) - 1, 0, cy - 1);
        auto partial = [&](int i, int j) {
            const double u0 = std::clamp(fx0 - i, 0.0, 1.0), u1 = std::clamp(fx1 - i, 0.0, 1.0);
            const double v0 = std::clamp(fy0 - j, 0.0, 1.0), v1 = std::clamp(fy1 - j, 0.0, 1.0);
            if (u1 > u0 && v1 > v0) total += cell_part(i, j, u0, u1, v0, v1);
        };
        const bool has_block = ib > ia && jb > ja;
        for (int j = j0; j <= j1; ++j) {
            const bool row_in = has_block && j >= ja && j < jb;
            if (!row_in) {
                for (int i = i0; i <= i1; ++i) partial(i, j);
                continue;
            }
            for (int i = i0; i < std::min(ia, i1 + 1); ++i) partial(i, j);
            for (int i = std::max(ib, i0); i <= i1; ++i) partial(i, j);
        }
        return static_cast<double>(total);
    }

    Potential V_;
    double p_;
    std::shared_ptr<GridData> grid_;
    double grid_scale_ = 1.0;
    std::vector<long double> prefix_;
};

inline TileLabel classify_mass(double mass, double l, const TilingConstants& k) {
    const double scale = std::pow(l, 2.0 - 2.0 * k.p);
    if (mass > k.c * scale) return TileLabel::Large;
    if (mass > k.c_prime * scale) return TileLabel::Medium;
    return TileLabel::Small;
}

inline TileLabel classify(const MassOracle& m, const Tile& t, const TilingConstants& k) {
    return classify_mass(m.tile(t), t.size(), k);
}

inline TileLabel classify(const Potential& V, const Tile& t, double p, double c, double c_prime) {
    const TilingConstants k{c, c_prime, p};
    return classify(MassOracle(V, p), t, k);
}

struct RefineOptions {
    int bisection_iters = 60;
    double rel_tol = 1e-6;
};

namespace detail {

// Splits one Large square; appends the new tiles.
inline void split_large(const MassOracle& m, const Tile& big, const TilingConstants& k, const RefineOptions& ro,
                        std::vector<Tile>& out) {
    if (big.is_step) throw Error(ErrorKind::InvariantViolation, "a step tile was classified Large");
    const double l = big.outer.side, h = 0.5 * l;
    const Point2 o = big.outer.corner;
    std::array<Tile, 4> q = {Tile::square({{o.x1, o.x2}, h}), Tile::square({{o.x1 + h, o.x2}, h}),
                             Tile::square({{o.x1, o.x2 + h}, h}), Tile::square({{o.x1 + h, o.x2 + h}, h})};
    int small = 0, keep = -1;
    for (int i = 0; i < 4; ++i) {
        q[i].label = classify(m, q[i], k);
        if (q[i].label == TileLabel::Small) ++small;
        else keep = i;
    }
    if (small <= 2) {
        out.insert(out.end(), q.begin(), q.end());
        return;
    }
    if (small == 4) throw Error(ErrorKind::InvariantViolation, "all four quarters of a Large square are Small");

    // Shrink the non-small corner square until the step mass equals c l^{2-2p}.
    const double target = k.c * std::pow(l, 2.0 - 2.0 * k.p);
    const bool right = keep == 1 || keep == 3, top = keep == 2 || keep == 3;
    auto notch = [&](double s) {
        return Square{{right ? o.x1 + l - s : o.x1, top ? o.x2 + l - s : o.x2}, s};
    };
    const double whole = m.rect(big.outer.rect());
    auto step_mass = [&](double s) { return whole - m.rect(notch(s).rect()); };
    double lo = 0.0, hi = h; // step_mass(lo) > target >= step_mass(hi)
    if (!(step_mass(hi) <= target)) throw Error(ErrorKind::InvariantViolation, "three small quarters exceed the step target");
    bool done = false;
    for (int it = 0; it < ro.bisection_iters; ++it) {
        if (target - step_mass(hi) <= ro.rel_tol * target) {
            done = true;
            break;
        }
        const double mid = 0.5 * (lo + hi);
        (step_mass(mid) > target ? lo : hi) = mid;
    }
    if (!done && target - step_mass(hi) > ro.rel_tol * target)
        throw Error(ErrorKind::BisectionStall, "could not match the step mass within tolerance");
    Tile corner = Tile::square(notch(hi));
    corner.label = classify(m, corner, k);
    Tile step = Tile::step(big.outer, notch(hi));
    step.label = classify(m, step, k);
    out.push_back(corner);
    out.push_back(step);
}

} // namespace detail

// One sweep: every Large tile is split.  The counters are recorded after each
// individual split.
inline Partition refine_once(const MassOracle& m, Partition part, const RefineOptions& ro = {}) {
    std::vector<Tile> next;
    Counters k = part.counters();
    bool any = false;
    for (const auto& t : part.tiles) {
        if (t.label != TileLabel::Large) {
            next.push_back(t);
            continue;
        }
        any = true;
        std::vector<Tile> pieces;
        detail::split_large(m, t, part.consts, ro, pieces);
        --k.L;
        for (const auto& pc : pieces) {
            if (pc.label == TileLabel::Large) ++k.L;
            else if (pc.label == TileLabel::Medium) ++k.M;
            else ++k.S;
        }
        part.counters_history.push_back(k);
        next.insert(next.end(), pieces.begin(), pieces.end());
    }
    if (any) part.tiles = std::move(next);
    return part;
}

inline Partition refine_once(const Potential& V, Partition part, const RefineOptions& ro = {}) {
    return refine_once(MassOracle(V, part.consts.p), std::move(part), ro);
}

struct PartitionOptions {
    int max_sweeps = 200;
    RefineOptions refine{};
};

inline Partition partition_square(const MassOracle& m, const TilingConstants& k, const PartitionOptions& po = {}) {
    k.validate();
    Partition part;
    part.consts = k;
    Tile q = Tile::square({{0.0, 0.0}, 1.0});
    q.label = classify(m, q, k);
    part.tiles.push_back(q);
    part.counters_history.push_back(part.counters());
    for (int sweep = 0; sweep < po.max_sweeps; ++sweep) {
        if (part.counters().L == 0) return part;
        part = refine_once(m, std::move(part), po.refine);
    }
    if (part.counters().L == 0) return part;
    throw Error(ErrorKind::IterationBudgetExceeded, "partition did not terminate within the sweep budget");
}

inline Partition partition_square(const Potential& V, double p = 2.0, double c = 0.25, double c_prime = 0.01,
                                  const PartitionOptions& po = {}) {
    const TilingConstants k{c, c_prime, p};
    return partition_square(MassOracle(V, p), k, po);
}

// ---------------------------------------------------------------- audit

struct AuditReport {
    std::vector<std::string> violations; // empty = pass
    long N = 0, L = 0, M = 0, S = 0;
    double sum_l2_medium = 0.0;
    double area = 0.0;
    double lp_norm = 0.0; // ||V||_{L^p(Q)}
    double c_audit = 0.0; // M <= c_audit * ||V||_p
    bool pass() const { return violations.empty(); }
};

namespace detail {

inline bool boxes_overlap(const Rect& a, const Rect& b, double eps) {
    return std::min(a.x1_hi, b.x1_hi) - std::max(a.x1_lo, b.x1_lo) > eps &&
           std::min(a.x2_hi, b.x2_hi) - std::max(a.x2_lo, b.x2_lo) > eps;
}

// Decomposes a tile into disjoint rectangles.
inline std::vector<Rect> tile_rects(const Tile& t) {
    if (!t.is_step) return {t.outer.rect()};
    const Rect o = t.outer.rect(), r = t.removed.rect();
    std::vector<Rect> out;
    // Horizontal band not touching the notch, then the side piece beside it.
    if (r.x2_lo > o.x2_lo) out.push_back({o.x1_lo, o.x1_hi, o.x2_lo, r.x2_lo});
    if (r.x2_hi < o.x2_hi) out.push_back({o.x1_lo, o.x1_hi, r.x2_hi, o.x2_hi});
    if (r.x1_lo > o.x1_lo) out.push_back({o.x1_lo, r.x1_lo, r.x2_lo, r.x2_hi});
    if (r.x1_hi < o.x1_hi) out.push_back({r.x1_hi, o.x1_hi, r.x2_lo, r.x2_hi});
    return out;
}

} // namespace detail

inline AuditReport audit(const Partition& part, const MassOracle& m) {
    AuditReport a;
    const auto& k = part.consts;
    // (i) counter monotonicity
    for (std::size_t i = 1; i < part.counters_history.size(); ++i)
        if (part.counters_history[i].potential() < part.counters_history[i - 1].potential()) {
            a.violations.push_back("counter_monotone");
            break;
        }
    const Counters fin = part.counters();
    a.L = fin.L;
    a.M = fin.M;
    a.S = fin.S;
    a.N = static_cast<long>(part.tiles.size());
    // (ii) no Large tile left
    if (a.L != 0) a.violations.push_back("no_large");
    // (iii) N <= 1 + 4M
    if (a.N > 1 + 4 * a.M) a.violations.push_back("count_bound");
    // (iv) sum of squared sizes of Medium tiles <= 4
    for (const auto& t : part.tiles)
        if (t.label == TileLabel::Medium) a.sum_l2_medium += t.size() * t.size();
    if (a.sum_l2_medium > 4.0 * (1.0 + 1e-12)) a.violations.push_back("medium_area");
    // (v) M <= 4^{1/p'} c'^{-1/p} ||V||_p
    a.lp_norm = std::pow(m.rect(0.0, 1.0, 0.0, 1.0), 1.0 / k.p);
    const double inv_pp = k.p > 1.0 ? 1.0 - 1.0 / k.p : 0.0;
    a.c_audit = std::pow(4.0, inv_pp) * std::pow(k.c_prime, -1.0 / k.p);
    if (static_cast<double>(a.M) > a.c_audit * a.lp_norm * (1.0 + 1e-9)) a.violations.push_back("medium_count");
    // (vi) disjointness and coverage
    std::vector<Rect> rects;
    bool shapes_ok = true;
    for (const auto& t : part.tiles) {
        a.area += t.area();
        if (!t.step_well_formed()) shapes_ok = false;
        const Rect o = t.outer.rect();
        if (o.x1_lo < -1e-12 || o.x2_lo < -1e-12 || o.x1_hi > 1.0 + 1e-12 || o.x2_hi > 1.0 + 1e-12) shapes_ok = false;
        for (const auto& r : detail::tile_rects(t)) rects.push_back(r);
    }
    bool overlap = false;
    if (rects.size() <= 20000) {
        std::sort(rects.begin(), rects.end(), [](const Rect& x, const Rect& y) { return x.x1_lo < y.x1_lo; });
        for (std::size_t i = 0; i < rects.size() && !overlap; ++i)
            for (std::size_t j = i + 1; j < rects.size() && rects[j].x1_lo < rects[i].x1_hi; ++j)
                if (detail::boxes_overlap(rects[i], rects[j], 1e-12)) {
                    overlap = true;
                    break;
                }
    }
    if (std::abs(a.area - 1.0) > 1e-9 || overlap || !shapes_ok) a.violations.push_back("coverage");
    return a;
}

inline AuditReport audit(const Partition& part, const Potential& V) {
    return audit(part, MassOracle(V, part.consts.p));
}

} // namespace negbound
