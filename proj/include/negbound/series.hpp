#pragma once

// Summation of index tails that may reach billions of terms.
//
// A tail is given by a smooth continuation term(nu) >= 0 of its entries for
// nu >= start.  Indices are visited in dyadic blocks [a, 2a - 1].  Inside a
// block the continuation is sampled; if it is monotone, the threshold
// crossing is located by integer bisection and each piece is summed with the
// Euler-Maclaurin formula.  Non-monotone blocks are split until they are
// short enough to sum term by term.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "quadrature.hpp"

namespace negbound {

struct TailSummary {
    double start = 0.0;       // first index (absolute value) covered
    double end = 0.0;         // last index inspected
    double count_above = 0.0; // #{n : term > thr}
    double sum_above = 0.0;   // sum of f(term) over those n
    double total = 0.0;       // sum of all terms (only when requested)
    double max_term = 0.0;
    double first_above = 0.0; // index range holding the terms above thr (0 when none)
    double last_above = 0.0;
    bool above_finite = true;
    bool total_finite = true;
};

struct TailOptions {
    double nu_max = 0x1p120;
    bool want_total = false;
    int explicit_len = 64;
    int quiet_blocks = 3;
    double total_rel = 1e-13;
};

namespace detail {

class TailEngine {
public:
    using Fn = std::function<double(double)>;

    TailEngine(Fn term, double thr, Fn f, const TailOptions& opt)
        : term_(std::move(term)), thr_(thr), f_(std::move(f)), opt_(opt) {}

    struct Block {
        double count = 0.0, sum = 0.0, total = 0.0, max = 0.0;
        double first = 0.0, last = 0.0;
        bool nonincreasing = true;
    };

    Block process(double a, double b, int depth = 0) {
        Block blk;
        if (b - a + 1.0 <= opt_.explicit_len) {
            double prev = kNaN;
            for (double n = a; n <= b; n += 1.0) {
                const double v = term_(n);
                add_single(blk, n, v);
                if (!std::isnan(prev) && v > prev * (1.0 + 1e-12) + 1e-300) blk.nonincreasing = false;
                prev = v;
            }
            return blk;
        }
        std::array<double, 9> xs{}, vs{};
        for (int i = 0; i < 9; ++i) {
            xs[i] = i == 8 ? b : std::floor(a + (b - a) * i / 8.0);
            vs[i] = term_(xs[i]);
        }
        bool dec = true, inc = true;
        for (int i = 1; i < 9; ++i) {
            const double tol = 1e-12 * std::max(vs[i], vs[i - 1]) + 1e-300;
            if (vs[i] > vs[i - 1] + tol) dec = false;
            if (vs[i] < vs[i - 1] - tol) inc = false;
        }
        if (!(dec || inc) && depth < 200) {
            const double mid = std::floor(0.5 * (a + b));
            Block l = process(a, mid, depth + 1);
            Block r = process(mid + 1.0, b, depth + 1);
            return merge(l, r);
        }
        blk.nonincreasing = dec;
        blk.max = std::max(vs[0], vs[8]);
        const bool a_above = vs[0] > thr_, b_above = vs[8] > thr_;
        double lo = 0.0, hi = -1.0; // range of indices above the threshold
        if (a_above && b_above) {
            lo = a;
            hi = b;
        } else if (a_above != b_above) {
            // Bisection for the last index on the "above" side.
            double in = a_above ? a : b, out = a_above ? b : a;
            while (std::abs(out - in) > 1.0) {
                const double m = std::floor(0.5 * (in + out));
                (term_(m) > thr_ ? in : out) = m;
            }
            lo = a_above ? a : in;
            hi = a_above ? in : b;
        }
        if (hi >= lo) {
            blk.count = hi - lo + 1.0;
            if (f_) blk.sum = em_sum([this](double x) { return f_(term_(x)); }, lo, hi);
            blk.first = lo;
            blk.last = hi;
        }
        if (opt_.want_total) blk.total = em_sum(term_, a, b);
        return blk;
    }

    TailSummary run(double start) {
        TailSummary out;
        out.start = start;
        double a = std::max(1.0, std::floor(start));
        int quiet = 0;
        bool above_done = false, total_done = !opt_.want_total;
        while (a <= opt_.nu_max) {
            const double b = a < 2.0 ? a : 2.0 * a - 1.0;
            Block blk = process(a, b);
            out.end = b;
            out.count_above += blk.count;
            out.sum_above += blk.sum;
            out.total += blk.total;
            out.max_term = std::max(out.max_term, blk.max);
            if (blk.count > 0.0) {
                if (out.first_above == 0.0) out.first_above = blk.first;
                out.last_above = blk.last;
            }
            if (!above_done) {
                if (blk.count == 0.0 && blk.nonincreasing) {
                    if (++quiet >= opt_.quiet_blocks) above_done = true;
                } else {
                    quiet = 0;
                }
            }
            if (!total_done && blk.nonincreasing && blk.total <= opt_.total_rel * out.total) total_done = true;
            if (above_done && total_done) break;
            a = b + 1.0;
        }
        if (!above_done) {
            out.above_finite = false;
            out.sum_above = kInfinity;
            out.count_above = kInfinity;
        }
        if (!total_done) {
            out.total_finite = false;
            out.total = kInfinity;
        }
        return out;
    }

private:
    static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    static constexpr double kInfinity = std::numeric_limits<double>::infinity();

    void add_single(Block& blk, double n, double v) {
        blk.total += v;
        blk.max = std::max(blk.max, v);
        if (v > thr_) {
            blk.count += 1.0;
            if (f_) blk.sum += f_(v);
            if (blk.first == 0.0) blk.first = n;
            blk.last = n;
        }
    }

    static Block merge(const Block& l, const Block& r) {
        Block m;
        m.count = l.count + r.count;
        m.sum = l.sum + r.sum;
        m.total = l.total + r.total;
        m.max = std::max(l.max, r.max);
        m.first = l.first != 0.0 ? l.first : r.first;
        m.last = r.last != 0.0 ? r.last : l.last;
        m.nonincreasing = l.nonincreasing && r.nonincreasing;
        return m;
    }

    // sum_{n=a}^{b} F(n) for smooth F: integral, endpoint halves and the first
    // derivative correction.
    template <class F>
    double em_sum(F&& F_, double a, double b) const {
        if (b - a + 1.0 <= opt_.explicit_len) {
            double s = 0.0;
            for (double n = a; n <= b; n += 1.0) s += F_(n);
            return s;
        }
        QuadOptions q;
        q.rel_tol = 1e-10;
        q.max_panels = 2000;
        const double integral = quad_offset(F_, a, b - a, q);
        const double fa = F_(a), fb = F_(b);
        const double da = 0.5 * (F_(a + 1.0) - F_(a - 1.0));
        const double db = 0.5 * (F_(b + 1.0) - F_(b - 1.0));
        return integral + 0.5 * (fa + fb) + (db - da) / 12.0;
    }

    Fn term_;
    double thr_;
    Fn f_;
    TailOptions opt_;
};

} // namespace detail

// Sums a tail term(nu), nu >= start, against threshold thr.  sum_above uses
// f(term) for the terms above thr (an empty f only counts them); total is the
// plain sum when requested.
inline TailSummary summarize_tail(std::function<double(double)> term, double start, double thr,
                                  std::function<double(double)> f, const TailOptions& opt = {}) {
    detail::TailEngine eng(std::move(term), thr, std::move(f), opt);
    return eng.run(start);
}

} // namespace negbound
