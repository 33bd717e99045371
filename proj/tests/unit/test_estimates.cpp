#include <catch_amalgamated.hpp>

#include <negbound.hpp>

#include <random>

using namespace negbound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("annulus radii") {
    const double e = std::numbers::e;
    auto [a0, b0] = annulus_U(0);
    CHECK_THAT(a0, WithinRel(1.0 / e, 1e-15));
    CHECK_THAT(b0, WithinRel(e, 1e-15));
    auto [a1, b1] = annulus_U(1);
    CHECK_THAT(a1, WithinRel(e, 1e-15));
    CHECK_THAT(b1, WithinRel(e * e, 1e-15));
    auto [am, bm] = annulus_U(-1);
    CHECK_THAT(am, WithinRel(1.0 / (e * e), 1e-15));
    CHECK_THAT(bm, WithinRel(1.0 / e, 1e-15));
    CHECK(annulus_U_log(12) == std::pair{2048.0, 4096.0});
    CHECK_THROWS_AS(annulus_U(11), Error);
    CHECK_THROWS_AS(annulus_U_log(2000), Error);
}

TEST_CASE("annulus functionals") {
    SECTION("zero potential") {
        CHECK(term_A(zero(), 3) == 0.0);
        CHECK(term_B(zero(), -2, 2.0) == 0.0);
    }
    SECTION("A_n of example2 approaches 2 pi ln 2") {
        const double limit = kTwoPi * std::log(2.0);
        auto closed = [](double n) {
            const double a = std::ldexp(1.0, static_cast<int>(n) - 1), b = 2.0 * a;
            return kTwoPi * (std::atan(b) - std::atan(a) + 0.5 * std::log((1.0 + b * b) / (1.0 + a * a)));
        };
        for (int n = 1; n <= 30; ++n) CHECK_THAT(term_A(example2(), n), WithinRel(closed(n), 1e-9));
        // The gap to the limit is about 2 pi 2^-n, so 1e-3 is reached from n = 13 on.
        for (int n = 13; n <= 20; ++n) CHECK_THAT(term_A(example2(), n), WithinAbs(limit, 1e-3));
        CHECK(std::abs(term_A(example2(), 12) - limit) > 1e-3);
        // Frozen reference values.
        CHECK_THAT(term_A(example2(), 0), WithinRel(14.2247765817, 1e-8));
        CHECK_THAT(term_A(example2(), 1), WithinRel(4.9002305878, 1e-8));
        CHECK_THAT(term_A(example2(), 10), WithinRel(4.3612991020, 1e-8));
        CHECK_THAT(term_A(example2(), 0), WithinRel(kPi * kPi + kTwoPi * std::log(2.0), 1e-8));
    }
    SECTION("B_n of the inverse square is alpha sqrt(2 pi)") {
        for (int n : {-5, -1, 0, 3, 40}) {
            CHECK_THAT(term_B(inverse_square(1.0), n, 2.0), WithinRel(std::sqrt(kTwoPi), 1e-8));
            CHECK_THAT(term_B(inverse_square(3.0), n, 2.0), WithinRel(3.0 * std::sqrt(kTwoPi), 1e-8));
        }
    }
    SECTION("unit potential on W_0") {
        const auto V = restricted(constant(1.0), Annulus{1.0, std::numbers::e});
        CHECK_THAT(term_B(V, 0, 2.0), WithinRel(std::sqrt(kTwoPi * (std::pow(std::numbers::e, 4.0) - 1.0) / 4.0), 1e-9));
        CHECK_THAT(term_B(V, 0, 2.0), WithinAbs(9.175608, 1e-6));
        CHECK(term_B(V, 1, 2.0) == 0.0);
    }
    SECTION("terms are linear in the coupling") {
        for (const auto& V : {example2(), example4(0.5), example6(3.0, 4)}) {
            for (long long n : {-2LL, 0LL, 1LL, 3LL}) {
                for (double a : {0.1, 7.0, 1e4}) {
                    CHECK_THAT(term_A(scaled(a, V), n), WithinRel(a * term_A(V, n), 1e-10));
                    CHECK_THAT(term_B(scaled(a, V), n, 2.0), WithinRel(a * term_B(V, n, 2.0), 1e-10));
                }
            }
        }
    }
}

TEST_CASE("main bound") {
    SECTION("empty sums give 1") {
        CHECK(main_bound(zero()).value == 1.0);
        const auto r = main_bound(scaled(0.01, example2()));
        CHECK(r.value == 1.0);
        CHECK(r.sqrt_count() == 0);
        CHECK(r.linear_count() == 0);
    }
    SECTION("frozen values") {
        CHECK_THAT(main_bound(example6(10.0, 3)).value, WithinRel(187.50162642, 1e-7));
        CHECK_THAT(main_bound(scaled(0.05, example2())).value, WithinRel(8.45988, 1e-5));
        CHECK_THAT(main_bound(example4(2.0)).value, WithinRel(27.5525, 1e-5));
    }
    SECTION("example2 at unit coupling diverges through the A tail") {
        const auto r = main_bound(example2());
        CHECK_FALSE(r.finite);
        CHECK(std::isinf(r.value));
    }
    SECTION("report structure") {
        const auto r = main_bound(example6(32.0, 4));
        CHECK(r.sqrt_count() == 4);
        CHECK_THAT(r.value, WithinRel(1.0 + r.constants.C * (r.sqrt_part() + r.linear_part()), 1e-12));
        CHECK(r.constants.c == 0.25);
        CHECK(r.constants.C == 4.0);
        for (const auto& [n, s] : r.sqrt_sum_terms) CHECK(s * s > r.constants.c);
        for (const auto& [n, b] : r.linear_sum_terms) CHECK(b > r.constants.c);
    }
    SECTION("user window that cuts through contributing terms is rejected") {
        try {
            main_bound(inverse_square(1.0), {}, Window{0, 0});
            FAIL("expected WindowTooSmall");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::WindowTooSmall);
        }
    }
}

TEST_CASE("refined bound") {
    SECTION("identical to the main bound when every B_n is small") {
        const auto V = scaled(0.1, example6(1.0, 3));
        const auto m = main_bound(V), r = refined_main_bound(V);
        CHECK(m.linear_count() == 0);
        CHECK(r.value == m.value);
    }
    SECTION("A-part of example4(2) grows slower than alpha") {
        double prev = kInf;
        for (int e = 6; e <= 12; e += 2) {
            const double a = std::ldexp(1.0, e);
            const double ratio = refined_main_bound(scaled(a, example4(2.0))).sqrt_part() / a;
            CHECK(ratio < prev);
            prev = ratio;
        }
        CHECK(prev < 0.25);
    }
}

TEST_CASE("weak l1 norm") {
    CHECK(weak_l1_norm(std::vector<double>{}) == 0.0);
    CHECK(weak_l1_norm(std::vector<double>{0, 0, 0}) == 0.0);
    CHECK(weak_l1_norm(std::vector<double>{4, 2, 1}) == 4.0);
    CHECK_THAT(weak_l1_norm(std::vector<double>{1, 0.5, 1.0 / 3, 0.25}), WithinRel(1.0, 1e-15));
}

TEST_CASE("weak l1 sandwich on random series") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> v(1 + rng() % 40);
        for (double& x : v) x = std::pow(10.0, -3.0 + 6.0 * U(rng));
        const double w = weak_l1_norm(v), l = lorentz_sqrt_sup(v);
        REQUIRE(w <= l * (1 + 1e-12));
        REQUIRE(l <= 4.0 * w * (1 + 1e-12));
    }
}

TEST_CASE("classical bounds") {
    SECTION("zero potential gives ones") {
        for (const auto& r : classical_bounds(zero())) CHECK(r.value == 1.0);
    }
    SECTION("example2 makes the integral bounds and the weak norm diverge") {
        for (const auto& r : classical_bounds(example2())) {
            INFO(r.estimate_name);
            if (r.estimate_name == "zn" || r.estimate_name == "kmw" || r.estimate_name == "solomyak")
                CHECK_FALSE(r.finite);
        }
    }
    SECTION("main bound is dominated by a finite Zn bound") {
        for (const auto& V : {example6(10.0, 3), example4(2.0), gaussian_bumps({{{0.3, 0.2}, 5.0, 0.1}}),
                              restricted(inverse_square(1.0), Annulus{1.0, std::numbers::e})}) {
            const auto cl = classical_bounds(V);
            const auto zn = std::find_if(cl.begin(), cl.end(), [](const auto& r) { return r.estimate_name == "zn"; });
            REQUIRE(zn != cl.end());
            REQUIRE(zn->finite);
            CHECK(main_bound(V).value <= zn->value);
        }
    }
}

TEST_CASE("enlarging the window never lowers a bound") {
    const auto V = gaussian_bumps({{{2.0, 1.0}, 4.0, 0.7}, {{30.0, 0.0}, 0.5, 3.0}});
    double prev = 0.0;
    for (long long w : {6, 8, 12, 20}) {
        const double v = main_bound(V, {}, Window{-w, w}).value;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("lower bound") {
    CHECK(lower_bound(zero(), 1.0) == 0.0);
    CHECK_THAT(lower_bound(restricted(inverse_square(1.0), Annulus{1.0, std::numbers::e}), 1.0),
               WithinRel(kTwoPi, 1e-8));
    CHECK_THROWS_AS(lower_bound(example2(), 0.0), Error);
}

TEST_CASE("scaling study") {
    std::vector<double> alphas;
    for (int e = 0; e <= 10; ++e) alphas.push_back(std::ldexp(1.0, e));
    ScalingOptions o;
    o.classical = false;
    SECTION("zero potential stays at 1") {
        const auto st = scaling_study(zero(), alphas, {}, std::nullopt, o);
        for (const auto& r : st.rows) CHECK(r.main.value == 1.0);
    }
    SECTION("example4 slopes") {
        CHECK_THAT(*scaling_study(example4(0.5), alphas, {}, std::nullopt, o).slope_main, WithinAbs(2.0, 0.2));
        CHECK_THAT(*scaling_study(example4(1.0), alphas, {}, std::nullopt, o).slope_main, WithinAbs(1.0, 0.1));
    }
    SECTION("alphas must increase") {
        CHECK_THROWS_AS(scaling_study(example2(), {2.0, 1.0}), Error);
    }
}
