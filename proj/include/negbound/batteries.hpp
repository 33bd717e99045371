#pragma once

// Seeded random families and the property batteries run over them.  Each
// trial draws from its own generator seeded by (seed, trial), so results do
// not depend on how trials are scheduled across threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "hardy.hpp"
#include "named_examples.hpp"
#include "tiling.hpp"

namespace negbound {

inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(seq);
}

// Length 1..64, magnitudes log-uniform in [1e-6, 1e6], about one entry in five zero.
inline std::vector<double> random_hardy_sequence(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> w(1 + rng() % 64);
    for (double& x : w) x = U(rng) < 0.2 ? 0.0 : std::pow(10.0, -6.0 + 12.0 * U(rng));
    return w;
}

// 1..200 atoms, |x| log-uniform up to 2^10 with random sign, masses in [1e-4, 1].
inline AtomicMeasure random_atomic_measure(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    AtomicMeasure mu(1 + rng() % 200);
    for (auto& a : mu) {
        a.x = (2.0 * U(rng) - 1.0) * std::pow(2.0, 10.0 * U(rng));
        a.mass = std::pow(10.0, -4.0 + 4.0 * U(rng));
    }
    return mu;
}

// Three Gaussian bumps of width 0.06 centred in [0.15, 0.85]^2 with a shared
// random scale, sampled on a 257^2 grid over the unit square.
inline Potential random_bump_mixture(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double amp = 2.0 + 100.0 * U(rng);
    std::vector<Bump> bumps;
    for (int i = 0; i < 3; ++i) {
        const double x = 0.15 + 0.7 * U(rng);
        const double y = 0.15 + 0.7 * U(rng);
        bumps.push_back({{x, y}, amp * (0.5 + U(rng)), 0.06});
    }
    return sample_to_grid(gaussian_bumps(std::move(bumps)), 257, 257, 0.0, 1.0, 0.0, 1.0);
}

// Runs body(i) for i in [0, n) on up to jobs threads; body must write only to slot i.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += jobs) body(i);
        });
}

struct BatteryResult {
    long trials = 0;
    long failures = 0;
    double worst = 0.0; // largest observed lhs / rhs, scaled to the stated constant
    long first_failure = -1;
    bool pass() const { return failures == 0; }
};

namespace detail {

inline BatteryResult tally(const std::vector<double>& worst, const std::vector<char>& ok) {
    BatteryResult r;
    r.trials = static_cast<long>(ok.size());
    for (std::size_t i = 0; i < ok.size(); ++i) {
        r.worst = std::max(r.worst, worst[i]);
        if (!ok[i]) {
            ++r.failures;
            if (r.first_failure < 0) r.first_failure = static_cast<long>(i);
        }
    }
    return r;
}

} // namespace detail

// worst = max lhs * 16 / rhs, i.e. the smallest constant that would still work.
inline BatteryResult hardy_battery(long trials, std::uint64_t seed, unsigned jobs = 1) {
    std::vector<double> worst(trials, 0.0);
    std::vector<char> ok(trials, 1);
    parallel_for(trials, jobs, [&](std::size_t i) {
        auto rng = trial_rng(seed, i);
        const auto r = hardy_check(random_hardy_sequence(rng));
        ok[i] = r.holds;
        if (r.rhs > 0.0) worst[i] = 16.0 * r.lhs / r.rhs;
    });
    return detail::tally(worst, ok);
}

// worst = max ||T|| / sup alpha_n, to compare with 64.
inline BatteryResult operator_battery(long trials, std::uint64_t seed, unsigned jobs = 1) {
    std::vector<double> worst(trials, 0.0);
    std::vector<char> ok(trials, 1);
    parallel_for(trials, jobs, [&](std::size_t i) {
        auto rng = trial_rng(seed, i);
        const auto r = operator_T_norm(random_atomic_measure(rng));
        ok[i] = r.holds;
        worst[i] = r.ratio();
    });
    return detail::tally(worst, ok);
}

struct TilingBatteryResult {
    long trials = 0;
    long failures = 0;
    std::vector<double> norms; // ||V||_{L^p(Q)} per trial
    std::vector<long> medium;  // M per trial
    std::vector<std::string> first_violations;
    double r_squared = 0.0;    // linear fit of M against the norm
    double slope = 0.0;
};

inline TilingBatteryResult tiling_battery(long trials, std::uint64_t seed, const TilingConstants& k = {},
                                          unsigned jobs = 1) {
    TilingBatteryResult out;
    out.trials = trials;
    out.norms.assign(trials, 0.0);
    out.medium.assign(trials, 0);
    std::vector<std::vector<std::string>> viol(trials);
    parallel_for(trials, jobs, [&](std::size_t i) {
        auto rng = trial_rng(seed, i);
        const Potential V = random_bump_mixture(rng);
        const MassOracle m(V, k.p);
        const AuditReport a = audit(partition_square(m, k), m);
        out.norms[i] = a.lp_norm;
        out.medium[i] = a.M;
        viol[i] = a.violations;
    });
    for (const auto& v : viol)
        if (!v.empty()) {
            if (out.failures++ == 0) out.first_violations = v;
        }
    const double n = static_cast<double>(trials);
    double mx = 0, my = 0;
    for (long i = 0; i < trials; ++i) {
        mx += out.norms[i];
        my += static_cast<double>(out.medium[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (long i = 0; i < trials; ++i) {
        const double dx = out.norms[i] - mx, dy = static_cast<double>(out.medium[i]) - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx > 0 && syy > 0) {
        out.r_squared = sxy * sxy / (sxx * syy);
        out.slope = sxy / sxx;
    }
    return out;
}

} // namespace negbound
