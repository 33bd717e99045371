#pragma once

// Finite-difference ground truth for the number of negative eigenvalues of
// -Delta - alpha V with Dirichlet truncation.  Counts come from matrix
// inertia (Sylvester's law): Sturm sequences for tridiagonal matrices, a
// band LDL^T otherwise, with a dense eigensolver as fallback and oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "potential.hpp"

namespace negbound {

// Symmetric band matrix; stores M(i, i + d) for d = 0..w in row-major bands.
class BandedSymMatrix {
public:
    BandedSymMatrix() = default;
    BandedSymMatrix(int n, int w) : n_(n), w_(w), data_(static_cast<std::size_t>(n) * (w + 1), 0.0) {
        if (n < 0 || w < 0) throw Error(ErrorKind::InvalidArgument, "matrix dimension and bandwidth must be >= 0");
    }

    int dim() const { return n_; }
    int bandwidth() const { return w_; }

    double get(int i, int j) const {
        if (i > j) std::swap(i, j);
        if (j - i > w_) return 0.0;
        return data_[static_cast<std::size_t>(i) * (w_ + 1) + (j - i)];
    }
    void set(int i, int j, double v) {
        if (i > j) std::swap(i, j);
        if (j - i > w_) throw Error(ErrorKind::InvalidArgument, "entry outside the band");
        data_[static_cast<std::size_t>(i) * (w_ + 1) + (j - i)] = v;
    }
    void add(int i, int j, double v) { set(i, j, get(i, j) + v); }

    // Max absolute row sum.
    double norm_inf() const {
        double best = 0.0;
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int j = std::max(0, i - w_); j <= std::min(n_ - 1, i + w_); ++j) s += std::abs(get(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = i; j <= std::min(n_ - 1, i + w_); ++j) m(i, j) = m(j, i) = get(i, j);
        return m;
    }

private:
    int n_ = 0, w_ = 0;
    std::vector<double> data_;
};

enum class InertiaMethod { BandedLdlt, SturmTridiagonal, DenseOracle };

inline const char* to_string(InertiaMethod m) {
    switch (m) {
    case InertiaMethod::BandedLdlt: return "banded_ldlt";
    case InertiaMethod::SturmTridiagonal: return "sturm_tridiagonal";
    case InertiaMethod::DenseOracle: return "dense_oracle";
    }
    return "?";
}

struct InertiaResult {
    long n_neg = 0, n_zero = 0, n_pos = 0;
    double pivot_tolerance = 1e-10;
    InertiaMethod method = InertiaMethod::BandedLdlt;
};

inline constexpr int kDenseLimit = 2000;

// All eigenvalues in increasing order.
inline std::vector<double> dense_oracle(const BandedSymMatrix& M) {
    if (M.dim() > kDenseLimit) throw Error(ErrorKind::SizeExceeded, "dense oracle limited to dimension 2000");
    if (M.dim() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.dense(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::NonConvergent, "dense eigensolver failed");
    const auto& ev = es.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

namespace detail {

// Number of eigenvalues below x of a tridiagonal matrix.
inline long sturm_count(const BandedSymMatrix& M, double x, double pivmin) {
    long neg = 0;
    double d = 1.0;
    for (int i = 0; i < M.dim(); ++i) {
        const double b = i > 0 ? M.get(i - 1, i) : 0.0;
        d = M.get(i, i) - x - (i > 0 ? b * b / d : 0.0);
        if (std::abs(d) < pivmin) d = -pivmin;
        if (d < 0.0) ++neg;
    }
    return neg;
}

// Number of negative pivots of M - x I by band LDL^T; nullopt when the
// factorization grows beyond `growth` * ||M|| or meets a zero pivot.
inline std::optional<long> ldlt_count(const BandedSymMatrix& M, double x, double norm, double growth) {
    const int n = M.dim(), w = M.bandwidth();
    // Lower band: lo[i * (w + 1) + (i - j)] = A(i, j), j <= i.
    std::vector<double> lo(static_cast<std::size_t>(n) * (w + 1));
    auto L = [&](int i, int j) -> double& { return lo[static_cast<std::size_t>(i) * (w + 1) + (i - j)]; };
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - w); j <= i; ++j) L(i, j) = M.get(i, j) - (i == j ? x : 0.0);
    std::vector<double> col(w + 1);
    long neg = 0;
    const double tiny = 1e-300 + 1e-15 * norm;
    for (int k = 0; k < n; ++k) {
        const double d = L(k, k);
        if (!(std::abs(d) > tiny) || !std::isfinite(d)) return std::nullopt;
        if (d < 0.0) ++neg;
        const int last = std::min(n - 1, k + w);
        for (int i = k + 1; i <= last; ++i) col[i - k] = L(i, k);
        for (int i = k + 1; i <= last; ++i) {
            const double l = col[i - k] / d;
            if (l * l * std::abs(d) > growth * norm) return std::nullopt;
            L(i, k) = l;
            for (int j = k + 1; j <= i; ++j) L(i, j) -= l * col[j - k];
        }
    }
    return neg;
}

} // namespace detail

struct InertiaOptions {
    double pivot_tolerance = 1e-10; // zero cluster: |lambda - shift| < tol * ||M||
    double growth_limit = 1e8;
};

// Counts of eigenvalues below, within and above the zero cluster around shift.
inline InertiaResult inertia(const BandedSymMatrix& M, double shift = 0.0, const InertiaOptions& o = {}) {
    InertiaResult r;
    r.pivot_tolerance = o.pivot_tolerance;
    const int n = M.dim();
    if (n == 0) return r;
    const double norm = std::max(M.norm_inf(), std::abs(shift));
    const double tol = o.pivot_tolerance * (norm > 0.0 ? norm : 1.0);
    long below = 0, upto = 0;
    if (M.bandwidth() <= 1) {
        r.method = InertiaMethod::SturmTridiagonal;
        const double pivmin = 1e-300 + std::numeric_limits<double>::epsilon() * norm * 1e-3;
        below = detail::sturm_count(M, shift - tol, pivmin);
        upto = detail::sturm_count(M, shift + tol, pivmin);
    } else {
        r.method = InertiaMethod::BandedLdlt;
        auto a = detail::ldlt_count(M, shift - tol, norm, o.growth_limit);
        auto b = detail::ldlt_count(M, shift + tol, norm, o.growth_limit);
        if (a && b) {
            below = *a;
            upto = *b;
        } else if (n <= kDenseLimit) {
            r.method = InertiaMethod::DenseOracle;
            for (double ev : dense_oracle(M)) {
                if (ev < shift - tol) ++below;
                if (ev <= shift + tol) ++upto;
            }
        } else {
            // Nudge the evaluation points off a near-singular pivot.
            for (int tries = 1; tries <= 4 && !(a && b); ++tries) {
                const double nudge = tol * 0.1 * tries;
                a = detail::ldlt_count(M, shift - tol - nudge, norm, o.growth_limit * 1e4);
                b = detail::ldlt_count(M, shift + tol + nudge, norm, o.growth_limit * 1e4);
            }
            if (!(a && b)) throw Error(ErrorKind::NonConvergent, "band LDL^T unstable beyond the dense fallback size");
            below = *a;
            upto = *b;
        }
    }
    r.n_neg = below;
    r.n_zero = upto - below;
    r.n_pos = n - upto;
    return r;
}

// ---------------------------------------------------------------- discretization

struct SquareDomain {
    double side = 1.0;
    Point2 center{0.0, 0.0};
};
struct DiskDomain {
    double radius = 1.0;
};
struct LogRadialDomain {
    double t_min = 0.0, t_max = 1.0;
    int m_max = -1; // -1: stop at the first mode without negatives
};

struct DiscretizationSpec {
    std::variant<SquareDomain, DiskDomain, LogRadialDomain> domain = SquareDomain{};
    double h = 0.05;
    std::string bc = "dirichlet";

    void validate() const {
        if (!(h > 0.0 && std::isfinite(h))) throw Error(ErrorKind::InvalidArgument, "grid spacing must be > 0");
        if (bc != "dirichlet") throw Error(ErrorKind::InvalidArgument, "only Dirichlet boundary conditions are supported");
        if (const auto* s = std::get_if<SquareDomain>(&domain); s && !(s->side > 0.0))
            throw Error(ErrorKind::InvalidArgument, "square side must be > 0");
        if (const auto* d = std::get_if<DiskDomain>(&domain); d && !(d->radius > 0.0))
            throw Error(ErrorKind::InvalidArgument, "disk radius must be > 0");
        if (const auto* l = std::get_if<LogRadialDomain>(&domain); l && !(l->t_max > l->t_min))
            throw Error(ErrorKind::InvalidArgument, "log-radial range is empty");
    }
};

inline constexpr long kDefaultMaxDim = 250'000;

// Number of interior nodes for an interval of length len at spacing ~h.
inline int interior_nodes(double len, double h) {
    const double k = std::round(len / h);
    if (k > 1e8) throw Error(ErrorKind::GridTooLarge, "grid spacing too small for the domain");
    return std::max(1, static_cast<int>(k) - 1);
}

// -u'' + shift u - W u on (a, b) with Dirichlet ends.
inline BandedSymMatrix assemble_interval(const std::function<double(double)>& W, double a, double b, double h,
                                         double shift = 0.0, long max_dim = kDefaultMaxDim) {
    const int n = interior_nodes(b - a, h);
    if (n > max_dim) throw Error(ErrorKind::GridTooLarge, "1D grid exceeds the dimension budget");
    const double hh = (b - a) / (n + 1);
    const double inv = 1.0 / (hh * hh);
    BandedSymMatrix M(n, 1);
    for (int i = 0; i < n; ++i) {
        const double t = a + (i + 1) * hh;
        M.set(i, i, 2.0 * inv + shift - W(t));
        if (i + 1 < n) M.set(i, i + 1, -inv);
    }
    return M;
}

// Mode-m matrices of the log-radial reduction; mode m carries the shift m^2.
inline BandedSymMatrix assemble_log_radial_mode(const Potential& V, double alpha, const LogRadialDomain& d, double h,
                                                int m, long max_dim = kDefaultMaxDim) {
    auto rv = radial_view(V);
    if (!rv) throw Error(ErrorKind::InvalidArgument, "log-radial discretization needs a radial potential");
    const RadialProfile prof = *rv;
    auto W = [&](double t) { return alpha == 0.0 ? 0.0 : alpha * prof.g_at(t); };
    return assemble_interval(W, d.t_min, d.t_max, h, static_cast<double>(m) * m, max_dim);
}

// 5-point Laplacian minus alpha V on the nodes of a square or disk.
inline BandedSymMatrix assemble_cartesian(const Potential& V, double alpha, const DiscretizationSpec& spec,
                                          long max_dim = kDefaultMaxDim) {
    spec.validate();
    double x0 = 0.0, y0 = 0.0, len = 0.0;
    std::optional<double> radius;
    if (const auto* s = std::get_if<SquareDomain>(&spec.domain)) {
        x0 = s->center.x1 - 0.5 * s->side;
        y0 = s->center.x2 - 0.5 * s->side;
        len = s->side;
    } else if (const auto* d = std::get_if<DiskDomain>(&spec.domain)) {
        x0 = y0 = -d->radius;
        len = 2.0 * d->radius;
        radius = d->radius;
    } else {
        throw Error(ErrorKind::InvalidArgument, "use the log-radial assembler for LogRadial domains");
    }
    const int k = interior_nodes(len, spec.h);
    if (static_cast<double>(k) * k > static_cast<double>(max_dim) * (radius ? 4.0 / kPi : 1.0) + 1.0)
        throw Error(ErrorKind::GridTooLarge, "2D grid exceeds the dimension budget");
    const double hh = len / (k + 1);
    // Active nodes in row-major order.
    std::vector<int> index(static_cast<std::size_t>(k) * k, -1);
    int n = 0, max_gap = 0;
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
            const double x = x0 + (i + 1) * hh, y = y0 + (j + 1) * hh;
            if (radius && std::hypot(x, y) >= *radius) continue;
            index[static_cast<std::size_t>(j) * k + i] = n++;
        }
    }
    if (n > max_dim) throw Error(ErrorKind::GridTooLarge, "2D grid exceeds the dimension budget");
    // Bandwidth: largest index distance between vertical neighbours.
    for (int j = 0; j + 1 < k; ++j)
        for (int i = 0; i < k; ++i) {
            const int a = index[static_cast<std::size_t>(j) * k + i], b = index[static_cast<std::size_t>(j + 1) * k + i];
            if (a >= 0 && b >= 0) max_gap = std::max(max_gap, b - a);
        }
    const int w = std::max(1, max_gap);
    BandedSymMatrix M(n, w);
    const double inv = 1.0 / (hh * hh);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) {
            const int a = index[static_cast<std::size_t>(j) * k + i];
            if (a < 0) continue;
            const Point2 x{x0 + (i + 1) * hh, y0 + (j + 1) * hh};
            M.set(a, a, 4.0 * inv - (alpha == 0.0 ? 0.0 : alpha * V(x)));
            if (i + 1 < k) {
                const int b = index[static_cast<std::size_t>(j) * k + i + 1];
                if (b >= 0) M.set(a, b, -inv);
            }
            if (j + 1 < k) {
                const int b = index[static_cast<std::size_t>(j + 1) * k + i];
                if (b >= 0) M.set(a, b, -inv);
            }
        }
    return M;
}

// ---------------------------------------------------------------- counting

struct ModeCount {
    int m = 0;
    long n_neg = 0;
    long n_zero = 0;
};

struct LevelCount {
    double h = 0.0;
    long n_neg = 0;  // with angular multiplicity
    long n_zero = 0;
    std::vector<ModeCount> modes; // log-radial only
    InertiaMethod method = InertiaMethod::BandedLdlt;
    long dim = 0;
};

struct NegCountResult {
    long count = 0;             // n_neg at the finest level
    long count_nonpositive = 0; // n_neg + n_zero at the finest level
    bool converged = false;     // last two levels agree
    std::vector<LevelCount> trace;
};

struct NegCountOptions {
    int levels = 3;
    double factor = 2.0;
    long max_dim = kDefaultMaxDim;
    int max_modes = 100000;
    InertiaOptions inertia{};
};

inline LevelCount count_level(const Potential& V, double alpha, const DiscretizationSpec& spec, double h,
                              const NegCountOptions& o) {
    LevelCount lc;
    lc.h = h;
    if (const auto* d = std::get_if<LogRadialDomain>(&spec.domain)) {
        lc.method = InertiaMethod::SturmTridiagonal;
        for (int m = 0; m < o.max_modes; ++m) {
            if (d->m_max >= 0 && m > d->m_max) break;
            const auto M = assemble_log_radial_mode(V, alpha, *d, h, m, o.max_dim);
            const auto in = inertia(M, 0.0, o.inertia);
            lc.dim = M.dim();
            lc.modes.push_back({m, in.n_neg, in.n_zero});
            const long mult = m == 0 ? 1 : 2;
            lc.n_neg += mult * in.n_neg;
            lc.n_zero += mult * in.n_zero;
            if (d->m_max < 0 && in.n_neg == 0 && in.n_zero == 0) break;
        }
        return lc;
    }
    DiscretizationSpec s = spec;
    s.h = h;
    const auto M = assemble_cartesian(V, alpha, s, o.max_dim);
    const auto in = inertia(M, 0.0, o.inertia);
    lc.n_neg = in.n_neg;
    lc.n_zero = in.n_zero;
    lc.method = in.method;
    lc.dim = M.dim();
    return lc;
}

inline NegCountResult neg_count(const Potential& V, double alpha, const DiscretizationSpec& spec,
                                const NegCountOptions& o = {}) {
    spec.validate();
    if (o.levels < 1 || !(o.factor > 1.0)) throw Error(ErrorKind::InvalidArgument, "need levels >= 1 and factor > 1");
    NegCountResult r;
    double h = spec.h;
    for (int l = 0; l < o.levels; ++l, h /= o.factor) r.trace.push_back(count_level(V, alpha, spec, h, o));
    const auto& last = r.trace.back();
    r.count = last.n_neg;
    r.count_nonpositive = last.n_neg + last.n_zero;
    r.converged = r.trace.size() >= 2 && r.trace[r.trace.size() - 2].n_neg == last.n_neg;
    return r;
}

} // namespace negbound
