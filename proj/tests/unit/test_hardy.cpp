#include <catch_amalgamated.hpp>

#include <negbound.hpp>
#include <negbound/batteries.hpp>

#include <Eigen/Dense>

using namespace negbound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("weighted Hardy inequality") {
    SECTION("single spike") {
        const auto r = hardy_check({1, 0, 0, 0, 0, 0, 0, 0});
        CHECK_THAT(r.lhs, WithinRel(2.0 - std::ldexp(1.0, -7), 1e-15));
        CHECK(r.rhs == 16.0);
        CHECK(r.holds);
    }
    SECTION("flat sequence") {
        const auto r = hardy_check({1, 1, 1, 1});
        CHECK_THAT(r.lhs, WithinRel(45.875, 1e-15));
        CHECK(r.rhs == 240.0);
        CHECK(r.holds);
    }
    SECTION("zeros") {
        const auto r = hardy_check({0, 0, 0});
        CHECK(r.lhs == 0.0);
        CHECK(r.rhs == 0.0);
        CHECK(r.holds);
    }
    CHECK_THROWS_AS(hardy_check({1, -1}), Error);
}

TEST_CASE("Hardy battery") {
    const auto r = hardy_battery(2000, 5);
    CHECK(r.pass());
    CHECK(r.worst < 16.0);
    CHECK(r.worst > 1.0);
}

TEST_CASE("Bennett schema") {
    SECTION("the Hardy instantiation satisfies the premise") {
        const auto [u, v] = hardy_bennett_weights(31);
        const auto r = bennett_check(u, v, std::vector<double>(31, 0.0), 2.0, 1.0);
        CHECK(r.premise_holds);
        CHECK(r.lhs == 0.0);
        CHECK(r.rhs == 0.0);
        CHECK(r.factor == 4.0);
    }
    SECTION("random weights under the instantiation") {
        const auto [u, v] = hardy_bennett_weights(16);
        for (std::uint64_t t = 0; t < 500; ++t) {
            auto rng = trial_rng(3, t);
            std::uniform_real_distribution<double> U(0.0, 1.0);
            std::vector<double> w(16);
            for (double& x : w) x = std::pow(10.0, -3.0 + 6.0 * U(rng));
            const auto r = bennett_check(u, v, w, 2.0, 1.0);
            REQUIRE(r.premise_holds);
            REQUIRE(r.holds);
        }
    }
    SECTION("a violated premise is reported") {
        std::vector<double> u{1, 1}, v{1, 1}, w{1, 1};
        try {
            bennett_check(u, v, w, 2.0, 1.0);
            FAIL("expected PremiseFailed");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::PremiseFailed);
        }
        const auto r = bennett_check(u, v, w, 2.0, 1.0, false);
        CHECK_FALSE(r.premise_holds);
        CHECK(r.first_violation == 1);
    }
    CHECK_THROWS_AS(bennett_check({1}, {1}, {1}, 1.0, 1.0), Error);
}

TEST_CASE("operator norm bound") {
    SECTION("single atom") {
        const auto r = operator_T_norm({{0.0, 1.0}});
        CHECK_THAT(r.norm, WithinRel(1.0, 1e-12));
        CHECK(r.sup_alpha == 1.0);
        CHECK(r.holds);
    }
    SECTION("empty measure") {
        const auto r = operator_T_norm({});
        CHECK(r.norm == 0.0);
        CHECK(r.holds);
    }
    SECTION("dyadic intervals") {
        CHECK(dyadic_line_indices(0.5) == std::vector<long long>{0});
        CHECK(dyadic_line_indices(1.0) == std::vector<long long>{0, 1});
        CHECK(dyadic_line_indices(3.0) == std::vector<long long>{2});
        CHECK(dyadic_line_indices(-4.0) == std::vector<long long>{-2, -3});
    }
    SECTION("power iteration matches a dense eigensolver") {
        for (std::uint64_t t = 0; t < 20; ++t) {
            auto rng = trial_rng(17, t);
            const auto mu = random_atomic_measure(rng);
            const auto n = static_cast<Eigen::Index>(mu.size());
            Eigen::MatrixXd K(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    K(i, j) = (1.0 + std::min(std::abs(mu[i].x), std::abs(mu[j].x))) * std::sqrt(mu[i].mass * mu[j].mass);
            const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().maxCoeff();
            CHECK_THAT(operator_T_norm(mu, 1e-12).norm, WithinRel(top, 1e-7));
        }
    }
    SECTION("projection of strip measures keeps the norm") {
        for (std::uint64_t t = 0; t < 20; ++t) {
            auto rng = trial_rng(23, t);
            std::uniform_real_distribution<double> U(0.0, 1.0);
            std::vector<std::pair<Point2, double>> atoms;
            for (int i = 0; i < 30; ++i) atoms.push_back({{(2 * U(rng) - 1) * 100.0, kPi * U(rng)}, 0.01 + U(rng)});
            const auto line = project_to_line(atoms);
            const auto n = static_cast<Eigen::Index>(atoms.size());
            Eigen::MatrixXd K(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    K(i, j) = (1.0 + std::min(std::abs(atoms[i].first.x1), std::abs(atoms[j].first.x1))) *
                              std::sqrt(atoms[i].second * atoms[j].second);
            const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().maxCoeff();
            CHECK_THAT(operator_T_norm(line, 1e-12).norm, WithinRel(top, 1e-7));
        }
    }
    SECTION("battery") {
        const auto r = operator_battery(200, 9);
        CHECK(r.pass());
        CHECK(r.worst < 64.0);
    }
}

TEST_CASE("kernel bound") {
    CHECK(std::isinf(gamma_kernel_bound({1, 1}, {1, 1}, 2.0)));
    CHECK(gamma_kernel_bound({0, 0}, {0, 2}, 3.0) == 3.0);
    CHECK(gamma_kernel_bound({3, 1}, {-5, 2}, 1.0) == 4.0);
    CHECK_THAT(gamma_kernel_bound({0, 0}, {0, 0.5}, 1.0), WithinRel(1.0 + std::log(2.0), 1e-15));
    for (std::uint64_t t = 0; t < 100; ++t) {
        auto rng = trial_rng(31, t);
        std::uniform_real_distribution<double> U(-3.0, 3.0);
        const Point2 x{U(rng), U(rng)}, y{U(rng), U(rng)};
        CHECK(gamma_kernel_bound(x, y, 1.7) == gamma_kernel_bound(y, x, 1.7));
    }
}

TEST_CASE("batteries are independent of the thread count") {
    const auto a = hardy_battery(300, 4, 1), b = hardy_battery(300, 4, 3);
    CHECK(a.worst == b.worst);
    const auto c = operator_battery(40, 4, 1), d = operator_battery(40, 4, 4);
    CHECK(c.worst == d.worst);
}
