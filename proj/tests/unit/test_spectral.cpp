#include <catch_amalgamated.hpp>

#include <negbound.hpp>

#include <random>

using namespace negbound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BandedSymMatrix diag(std::vector<double> d) {
    BandedSymMatrix M(static_cast<int>(d.size()), 0);
    for (int i = 0; i < static_cast<int>(d.size()); ++i) M.set(i, i, d[i]);
    return M;
}

} // namespace

TEST_CASE("inertia of small matrices") {
    const auto r = inertia(diag({1, -1, 0}));
    CHECK(r.n_neg == 1);
    CHECK(r.n_zero == 1);
    CHECK(r.n_pos == 1);
    CHECK(dense_oracle(diag({3, 1, 2})) == std::vector<double>{1, 2, 3});
    SECTION("shifted counts") {
        const auto s = inertia(diag({3, 1, 2}), 1.5);
        CHECK(s.n_neg == 1);
        CHECK(s.n_pos == 2);
    }
    SECTION("a zero leading pivot is handled") {
        BandedSymMatrix M(2, 1);
        M.set(0, 0, 0.0);
        M.set(0, 1, 1.0);
        M.set(1, 1, 0.0);
        const auto s = inertia(M);
        CHECK(s.n_neg == 1);
        CHECK(s.n_pos == 1);
    }
}

TEST_CASE("inertia agrees with the dense oracle on random banded matrices") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng() % 60), w = static_cast<int>(rng() % 8);
        BandedSymMatrix M(n, w);
        for (int i = 0; i < n; ++i)
            for (int j = i; j <= std::min(n - 1, i + w); ++j) M.set(i, j, U(rng));
        const auto in = inertia(M);
        const auto ev = dense_oracle(M);
        const double tol = in.pivot_tolerance;
        long neg = 0, zero = 0;
        for (double e : ev) {
            if (e < -tol) ++neg;
            else if (e <= tol) ++zero;
        }
        INFO("trial " << t << " n = " << n << " w = " << w);
        REQUIRE(in.n_neg == neg);
        REQUIRE(in.n_zero == zero);
        REQUIRE(in.n_neg + in.n_zero + in.n_pos == n);
    }
}

TEST_CASE("one-dimensional Dirichlet problems") {
    SECTION("-u'' - 5 on (0, pi) has two negative eigenvalues") {
        for (double h : {0.05, 0.01, 0.005}) {
            const auto M = assemble_interval([](double) { return 5.0; }, 0.0, kPi, h);
            const auto r = inertia(M);
            CHECK(r.n_neg == 2);
            CHECK(r.method == InertiaMethod::SturmTridiagonal);
        }
    }
    SECTION("FD Laplacian eigenvalues follow the sine formula") {
        const int n = 20;
        const double h = 1.0 / (n + 1);
        const auto M = assemble_interval([](double) { return 0.0; }, 0.0, 1.0, h);
        REQUIRE(M.dim() == n);
        const auto ev = dense_oracle(M);
        for (int j = 1; j <= n; ++j) {
            const double s = std::sin(j * kPi * h / 2.0);
            CHECK_THAT(ev[j - 1], WithinRel(4.0 / (h * h) * s * s, 1e-9));
        }
        CHECK(inertia(M, -1.0).n_neg == 0);
    }
}

TEST_CASE("Cartesian assembly") {
    SECTION("Laplacian on the unit square") {
        const DiscretizationSpec spec{SquareDomain{1.0, {0.5, 0.5}}, 0.05};
        const auto M = assemble_cartesian(zero(), 1.0, spec);
        const auto ev = dense_oracle(M);
        const double h = 0.05, s = std::sin(kPi * h / 2.0);
        CHECK_THAT(ev.front(), WithinRel(8.0 / (h * h) * s * s, 1e-10));
        CHECK(ev.front() > 0.0);
    }
    SECTION("zero coupling ignores the potential") {
        const DiscretizationSpec spec{DiskDomain{1.0}, 0.1};
        const auto V = gaussian_bumps({{{0, 0}, 500.0, 0.3}});
        const auto A = assemble_cartesian(V, 0.0, spec), B = assemble_cartesian(zero(), 1.0, spec);
        REQUIRE(A.dim() == B.dim());
        CHECK(dense_oracle(A) == dense_oracle(B));
    }
    SECTION("budget") {
        const DiscretizationSpec spec{SquareDomain{10.0}, 0.001};
        CHECK_THROWS_AS(assemble_cartesian(zero(), 1.0, spec, 1000), Error);
    }
}

TEST_CASE("neg_count") {
    SECTION("zero potential") {
        const auto r = neg_count(zero(), 1.0, DiscretizationSpec{SquareDomain{1.0}, 0.1});
        CHECK(r.count == 0);
        CHECK(r.converged);
    }
    SECTION("monotone in the coupling") {
        const auto V = gaussian_bumps({{{0, 0}, 1.0, 0.3}});
        const DiscretizationSpec spec{DiskDomain{2.0}, 0.1};
        NegCountOptions o;
        o.levels = 1;
        long prev = 0;
        for (double a : {1.0, 10.0, 50.0, 100.0, 200.0, 400.0}) {
            const long c = neg_count(V, a, spec, o).count;
            CHECK(c >= prev);
            prev = c;
        }
        CHECK(prev >= 2);
    }
    SECTION("larger disks never lose eigenvalues") {
        const auto V = gaussian_bumps({{{0.3, 0}, 150.0, 0.25}, {{-1.2, 0.4}, 80.0, 0.3}});
        NegCountOptions o;
        o.levels = 1;
        long prev = 0;
        for (double R : {0.5, 1.0, 1.5, 2.5}) {
            const long c = neg_count(V, 1.0, DiscretizationSpec{DiskDomain{R}, 0.05}, o).count;
            CHECK(c >= prev);
            prev = c;
        }
    }
    SECTION("log-radial reduction of example6") {
        const auto V = example6_range(10.0, std::exp(3.0));
        const auto r = neg_count(V, 1.0, DiscretizationSpec{LogRadialDomain{1.0, std::exp(3.0)}, 0.01});
        REQUIRE(r.converged);
        const auto& modes = r.trace.back().modes;
        REQUIRE(modes.size() >= 2);
        for (std::size_t m = 1; m < modes.size(); ++m) CHECK(modes[m].n_neg <= modes[m - 1].n_neg);
        // Frozen: per-mode counts 2, 1, 0 on t in (1, e^3).
        CHECK(modes[0].n_neg == 2);
        CHECK(modes[1].n_neg == 1);
        CHECK(r.count == 4);
    }
    SECTION("the mode-0 potential of example6 is alpha / t^2") {
        const double t_max = 8.0;
        const auto V = example6_range(10.0, t_max);
        const LogRadialDomain d{1.0, t_max, 0};
        const double h = 0.01;
        const auto M = assemble_log_radial_mode(V, 1.0, d, h, 0);
        const auto L = assemble_interval([](double t) { return 10.0 / (t * t); }, 1.0, t_max, h);
        REQUIRE(M.dim() == L.dim());
        for (int i = 0; i < M.dim(); ++i) CHECK_THAT(M.get(i, i), WithinRel(L.get(i, i), 1e-12));
    }
}
