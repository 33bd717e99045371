#include <catch_amalgamated.hpp>

#include <negbound.hpp>

#include <filesystem>
#include <fstream>

using namespace negbound;
using Catch::Matchers::WithinRel;

namespace {

std::filesystem::path scratch_dir() {
    auto d = std::filesystem::temp_directory_path() / "negbound_io_test";
    std::filesystem::create_directories(d);
    return d;
}

} // namespace

TEST_CASE("potential specs") {
    SECTION("named example with parameters") {
        const auto V = potential_from_json(json::parse(R"({"kind": "example6", "params": {"alpha": 10, "m": 3}})"));
        CHECK_THAT(main_bound(V).value, WithinRel(187.50162642, 1e-7));
    }
    SECTION("composed specs") {
        const auto V = potential_from_json(json::parse(R"({
            "kind": "sum", "params": {"terms": [
                {"kind": "scaled", "params": {"alpha": 2, "inner": {"kind": "example2"}}},
                {"kind": "restricted", "params": {"inner": {"kind": "constant", "params": {"v": 3}}, "disk": [0, 0, 1]}}
            ]}})"));
        CHECK_THAT(V({0.5, 0.0}), WithinRel(2.0 * example2()({0.5, 0.0}) + 3.0, 1e-14));
        CHECK_THAT(V({2.0, 0.0}), WithinRel(2.0 * example2()({2.0, 0.0}), 1e-14));
    }
    SECTION("bumps and strip profiles") {
        const auto B = potential_from_json(json::parse(R"({"kind": "gaussian_bumps", "params": {"bumps": [[0.5, 0.5, 4, 0.1]]}})"));
        CHECK_THAT(B({0.5, 0.5}), WithinRel(4.0, 1e-14));
        const auto S = potential_from_json(json::parse(R"({"kind": "strip_constant", "params": {"v": 1, "x1_lo": 5, "x1_hi": 6}})"));
        CHECK_THAT(term_b(S, 5, 2.0), WithinRel(std::sqrt(kPi), 1e-10));
    }
    SECTION("unknown kinds and fields are rejected") {
        CHECK_THROWS_AS(potential_from_json(json::parse(R"({"kind": "nope"})")), Error);
        CHECK_THROWS_AS(potential_from_json(json::parse(R"({"kind": "example2", "extra": 1})")), Error);
        CHECK_THROWS_AS(potential_from_json(json::parse(R"({"kind": "scaled", "params": {"alpha": 2, "beta": 1, "inner": {"kind": "zero"}}})")),
                        Error);
        CHECK_THROWS_AS(potential_from_json(json::parse(R"({"kind": "example4", "params": {"q": "two"}})")), Error);
    }
    SECTION("example arguments") {
        CHECK_THAT(main_bound(parse_example_arg("example6:alpha=10,m=3")).value, WithinRel(187.50162642, 1e-7));
        CHECK(is_zero(parse_example_arg("zero")));
        CHECK_THROWS_AS(parse_example_arg("example6:alpha"), Error);
        CHECK_THROWS_AS(parse_example_arg("example6:alpha=ten"), Error);
    }
}

TEST_CASE("grid CSV round trip") {
    GridData g;
    g.nx = 3;
    g.ny = 2;
    g.x_lo = -1;
    g.x_hi = 1;
    g.y_lo = 0;
    g.y_hi = 0.5;
    g.values = {0.1, 0.2, 0.3, 1.0 / 3.0, 5.0, 6e-7};
    std::stringstream ss;
    write_grid_csv(ss, g);
    const auto back = read_grid_csv(ss);
    CHECK(back.nx == 3);
    CHECK(back.ny == 2);
    CHECK(back.x_lo == -1.0);
    CHECK(back.values == g.values);

    const auto dir = scratch_dir();
    {
        std::ofstream f(dir / "g.csv");
        write_grid_csv(f, g);
        std::ofstream s(dir / "g.json");
        s << R"({"kind": "grid", "params": {"file": "g.csv"}})";
    }
    const auto V = load_potential(dir / "g.json");
    CHECK_THAT(V({0.0, 0.0}), WithinRel(0.2, 1e-14));

    std::stringstream bad("2,2,0,1,0,1\n1,2,3\n");
    CHECK_THROWS_AS(read_grid_csv(bad), Error);
    std::stringstream junk("2,2,0,1,0,1\n1,2,x,4\n");
    CHECK_THROWS_AS(read_grid_csv(junk), Error);
    CHECK_THROWS_AS(load_potential(dir / "missing.json"), Error);
}

TEST_CASE("report serialization") {
    const auto r = main_bound(example6(10.0, 3));
    const json j = to_json(r);
    CHECK(j["estimate"] == "main");
    CHECK_THAT(j["value"].get<double>(), WithinRel(r.value, 1e-15));
    CHECK(j["constants"]["c"] == 0.25);

    std::stringstream csv;
    write_report_csv(csv, {r});
    std::string header;
    std::getline(csv, header);
    CHECK(header == "estimate,n,term,contributes,total");
    long rows = 0, contributing = 0;
    for (std::string line; std::getline(csv, line); ++rows)
        if (line.find(",1,") != std::string::npos) ++contributing;
    CHECK(rows == static_cast<long>(r.A.entries.size() + r.B.entries.size()));
    CHECK(contributing == static_cast<long>(r.sqrt_sum_terms.size() + r.linear_sum_terms.size()));

    SECTION("non-finite values become null") {
        const json d = to_json(main_bound(example2()));
        CHECK(d["value"].is_null());
        CHECK_FALSE(d["finite"].get<bool>());
    }
    SECTION("serialization is deterministic") {
        CHECK(to_json(r).dump() == to_json(main_bound(example6(10.0, 3))).dump());
    }
}

TEST_CASE("partition rendering") {
    const auto V = sample_to_grid(gaussian_bumps({{{0.2, 0.2}, 30.0, 0.05}}), 129, 129, 0, 1, 0, 1);
    const auto p = partition_square(V);
    const auto a = audit(p, V);
    const json j = to_json(p, &a);
    CHECK(j["tiles"].size() == p.tiles.size());
    CHECK(j["audit"]["pass"].get<bool>());
    const auto svg = partition_svg(p);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("evenodd") != std::string::npos); // at least one step
}
