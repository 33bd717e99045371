#include <catch_amalgamated.hpp>

#include <negbound.hpp>
#include <negbound/batteries.hpp>

using namespace negbound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Potential unit_on_Q() { return restricted(constant(1.0), Rect{0, 1, 0, 1}); }

Potential bump_grid(std::vector<Bump> b) { return sample_to_grid(gaussian_bumps(std::move(b)), 257, 257, 0, 1, 0, 1); }

long count_steps(const Partition& p) {
    return std::count_if(p.tiles.begin(), p.tiles.end(), [](const Tile& t) { return t.is_step; });
}

} // namespace

TEST_CASE("classification") {
    const Tile Q = Tile::square({{0, 0}, 1.0});
    CHECK(classify(zero(), Q, 2.0, 0.25, 0.01) == TileLabel::Small);
    CHECK(classify(unit_on_Q(), Q, 2.0, 0.25, 0.01) == TileLabel::Large);
    CHECK(classify(unit_on_Q(), Tile::square({{0.2, 0.2}, 0.3}), 2.0, 0.25, 0.01) == TileLabel::Small);
    SECTION("ties classify downward") {
        const TilingConstants k;
        CHECK(classify_mass(0.25, 1.0, k) == TileLabel::Medium);
        CHECK(classify_mass(0.01, 1.0, k) == TileLabel::Small);
        CHECK(classify_mass(1.0, 0.5, k) == TileLabel::Medium);
        CHECK(classify_mass(1.0 + 1e-12, 0.5, k) == TileLabel::Large);
    }
}

TEST_CASE("constants must satisfy the admissibility relation") {
    CHECK(TilingConstants{}.admissible());
    CHECK_FALSE((TilingConstants{0.25, 0.02, 2.0}.admissible()));
    CHECK_THROWS_AS(partition_square(zero(), 2.0, 0.25, 0.02), Error);
}

TEST_CASE("grid mass oracle matches quadrature") {
    const auto bumps = std::vector<Bump>{{{0.3, 0.6}, 20.0, 0.1}, {{0.8, 0.2}, 5.0, 0.2}};
    const auto G = bump_grid(bumps);
    const MassOracle fast(G, 2.0);
    for (const Rect r : {Rect{0, 1, 0, 1}, Rect{0.11, 0.37, 0.5, 0.93}, Rect{0.123, 0.1234, 0.7, 0.8}}) {
        const double slow = integrate(G, r, 2.0);
        CHECK_THAT(fast.rect(r), WithinRel(slow, 1e-7));
    }
    const MassOracle scaled_oracle(scaled(3.0, G), 2.0);
    CHECK_THAT(scaled_oracle.rect(0, 1, 0, 1), WithinRel(9.0 * fast.rect(0, 1, 0, 1), 1e-12));
}

TEST_CASE("one refinement step") {
    const TilingConstants k;
    SECTION("central bump splits into four equal quarters") {
        const auto V = bump_grid({{{0.5, 0.5}, 50.0, 0.08}});
        const MassOracle m(V, 2.0);
        Partition p;
        p.consts = k;
        Tile q = Tile::square({{0, 0}, 1.0});
        q.label = classify(m, q, k);
        REQUIRE(q.label == TileLabel::Large);
        p.tiles = {q};
        p.counters_history = {p.counters()};
        const auto next = refine_once(m, p);
        REQUIRE(next.tiles.size() == 4);
        const double total = m.rect(0, 1, 0, 1);
        for (const auto& t : next.tiles) {
            CHECK_FALSE(t.is_step);
            CHECK_THAT(m.tile(t), WithinRel(total / 4.0, 1e-9));
        }
    }
    SECTION("bump in one corner quarter produces a Medium step") {
        const auto V = bump_grid({{{0.2, 0.2}, 30.0, 0.05}});
        const MassOracle m(V, 2.0);
        Partition p;
        p.consts = k;
        Tile q = Tile::square({{0, 0}, 1.0});
        q.label = classify(m, q, k);
        REQUIRE(q.label == TileLabel::Large);
        p.tiles = {q};
        p.counters_history = {p.counters()};
        const auto next = refine_once(m, p);
        REQUIRE(next.tiles.size() == 2);
        REQUIRE(count_steps(next) == 1);
        for (const auto& t : next.tiles) {
            if (!t.is_step) continue;
            CHECK(t.label == TileLabel::Medium);
            CHECK(t.step_well_formed());
            // The step mass hits c l^{2-2p} within the bisection tolerance.
            CHECK_THAT(m.tile(t), WithinRel(k.c, 1e-6));
        }
    }
}

TEST_CASE("partitions of trivial potentials") {
    SECTION("zero") {
        const auto p = partition_square(zero());
        CHECK(p.tiles.size() == 1);
        const auto a = audit(p, zero());
        CHECK(a.pass());
        CHECK(a.M == 0);
        CHECK(a.N == 1);
    }
    SECTION("small constant") {
        const auto V = restricted(constant(0.09), Rect{0, 1, 0, 1});
        const auto p = partition_square(V);
        CHECK(p.tiles.size() == 1);
        CHECK(audit(p, V).pass());
    }
}

TEST_CASE("five separated bumps") {
    // Each bump carries L^2 mass about 10 c.
    const double sigma = 0.03;
    const double amp = std::sqrt(10.0 * 0.25 * 2.0 / (kPi * sigma * sigma));
    std::vector<Bump> b;
    for (Point2 c : {Point2{0.2, 0.2}, Point2{0.8, 0.2}, Point2{0.2, 0.8}, Point2{0.8, 0.8}, Point2{0.5, 0.5}})
        b.push_back({c, amp, sigma});
    const auto V = bump_grid(b);
    const MassOracle m(V, 2.0);
    const auto p = partition_square(m, TilingConstants{});
    const auto a = audit(p, m);
    INFO("N = " << a.N << ", M = " << a.M);
    CHECK(a.pass());
    CHECK(a.N >= 6);
    CHECK(a.N <= 1 + 4 * a.M);
}

TEST_CASE("partition properties on random mixtures") {
    for (std::uint64_t trial = 0; trial < 12; ++trial) {
        auto rng = trial_rng(99, trial);
        const auto V = random_bump_mixture(rng);
        const MassOracle m(V, 2.0);
        const TilingConstants k;
        const auto p = partition_square(m, k);
        const auto a = audit(p, m);
        INFO("trial " << trial);
        REQUIRE(a.pass());
        // Counter quantity never decreases.
        for (std::size_t i = 1; i < p.counters_history.size(); ++i)
            CHECK(p.counters_history[i].potential() >= p.counters_history[i - 1].potential());
        // Steps are Medium when re-measured with independent quadrature.
        for (const auto& t : p.tiles) {
            if (!t.is_step) continue;
            double mass = 0.0;
            for (const auto& r : detail::tile_rects(t)) mass += integrate(V, r, 2.0);
            const double scale = std::pow(t.size(), -2.0);
            CHECK(mass > k.c_prime * scale);
            CHECK(mass <= k.c * scale * (1.0 + 1e-5));
        }
        // Each Medium tile contains a square of half its size; these are disjoint.
        std::vector<Rect> inner;
        for (const auto& t : p.tiles) {
            if (t.label != TileLabel::Medium) continue;
            const double h = 0.5 * t.size();
            Point2 c = t.outer.corner;
            if (t.is_step) {
                // The quarter diagonally opposite the notch.
                const bool left = t.removed.corner.x1 == t.outer.corner.x1;
                const bool bottom = t.removed.corner.x2 == t.outer.corner.x2;
                c = {left ? c.x1 + h : c.x1, bottom ? c.x2 + h : c.x2};
            } else {
                c = {c.x1 + 0.5 * h, c.x2 + 0.5 * h};
            }
            inner.push_back({c.x1, c.x1 + h, c.x2, c.x2 + h});
        }
        for (std::size_t i = 0; i < inner.size(); ++i)
            for (std::size_t j = i + 1; j < inner.size(); ++j) CHECK_FALSE(detail::boxes_overlap(inner[i], inner[j], 1e-12));
    }
}

TEST_CASE("audit detects corruption") {
    const auto V = bump_grid({{{0.3, 0.3}, 60.0, 0.06}, {{0.7, 0.6}, 40.0, 0.06}});
    const MassOracle m(V, 2.0);
    auto p = partition_square(m, TilingConstants{});
    REQUIRE(audit(p, m).pass());
    SECTION("overlapping tile") {
        Tile extra = Tile::square({{0.25, 0.25}, 0.5});
        extra.label = TileLabel::Small;
        p.tiles.push_back(extra);
        const auto a = audit(p, m);
        CHECK(std::find(a.violations.begin(), a.violations.end(), "coverage") != a.violations.end());
    }
    SECTION("leftover Large tile") {
        p.tiles.front().label = TileLabel::Large;
        const auto a = audit(p, m);
        CHECK(std::find(a.violations.begin(), a.violations.end(), "no_large") != a.violations.end());
    }
    SECTION("decreasing counter history") {
        p.counters_history.push_back({0, 0, 1000});
        const auto a = audit(p, m);
        CHECK(std::find(a.violations.begin(), a.violations.end(), "counter_monotone") != a.violations.end());
    }
}

TEST_CASE("partition is deterministic") {
    const auto V = bump_grid({{{0.4, 0.45}, 80.0, 0.05}});
    const auto a = to_json(partition_square(V)).dump();
    const auto b = to_json(partition_square(V)).dump();
    CHECK(a == b);
}
