#include <doctest.h>

#include <collective/trajectory.hpp>

#include <random>
#include <sstream>

#include "helpers.hpp"

using namespace collective;
using testing::make_traj;

TEST_CASE("parse a consistent one-round record")
{
    const auto t = parse_trajectory_line(
        R"({"group_id":"a","condition":"plain","group_size":2,"target":20,"seed":7,"success":true,)"
        R"("rounds":[{"t":1,"guesses":[10,10],"sum":20,"feedback":"CORRECT"}]})");
    CHECK(t.success);
    CHECK(t.group_size == 2);
    CHECK(t.rounds.size() == 1);
    CHECK(t.seed == 7);
}

TEST_CASE("sum field that disagrees with the guesses is rejected")
{
    const std::string line =
        R"({"group_id":"a","condition":"plain","group_size":2,"target":20,"seed":7,"success":false,)"
        R"("rounds":[{"t":1,"guesses":[10,10],"sum":19,"feedback":"LOW"}]})";
    CHECK_THROWS_WITH_AS(parse_trajectory_line(line), doctest::Contains("sum mismatch"), TrajectoryError);
}

TEST_CASE("wrong feedback is rejected")
{
    const std::string line =
        R"({"group_id":"a","condition":"plain","group_size":2,"target":20,"seed":7,"success":false,)"
        R"("rounds":[{"t":1,"guesses":[10,11],"sum":21,"feedback":"LOW"}]})";
    CHECK_THROWS_WITH_AS(parse_trajectory_line(line), doctest::Contains("feedback mismatch"), TrajectoryError);
}

TEST_CASE("malformed line names line and field")
{
    std::istringstream in("\n{\"group_id\":\"a\",\"condition\":\"x\",\"group_size\":\"two\"}\n");
    try {
        parse_trajectories(in);
        FAIL("expected a parse error");
    } catch (const TrajectoryParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.field() == "group_size");
    }
}

TEST_CASE("empty stream gives no trajectories")
{
    std::istringstream in("");
    CHECK(parse_trajectories(in).empty());
}

TEST_CASE("serialize then parse is the identity")
{
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 1 + static_cast<int>(rng() % 5);
        const int rounds = 1 + static_cast<int>(rng() % 6);
        std::vector<std::vector<int>> g(static_cast<std::size_t>(rounds), std::vector<int>(static_cast<std::size_t>(n)));
        for (auto& r : g) {
            for (int& v : r) {
                v = static_cast<int>(rng() % 51);
            }
        }
        auto t = make_traj(static_cast<std::int64_t>(rng() % (50 * n + 1)), g, "rt" + std::to_string(rep));
        t.seed = rng();
        if (rep % 7 == 0) {
            t.valid = false;
            t.abort_reason = "agent 3 silent";
        }
        CHECK(parse_trajectory_line(serialize_trajectory(t)) == t);
    }
}

TEST_CASE("equal-share deviations")
{
    SUBCASE("exact equal share")
    {
        const auto d = equal_share_deviations(make_traj(20, {{10, 10}}));
        CHECK(d.at(0, 0) == 0.0);
        CHECK(d.at(1, 0) == 0.0);
    }
    SUBCASE("non-integer share")
    {
        const auto d = equal_share_deviations(make_traj(255, {std::vector<int>(10, 25)}));
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(d.at(i, 0) == -0.5);
        }
    }
    SUBCASE("target 250")
    {
        const auto t = make_traj(250, {std::vector<int>(10, 25)});
        const auto d = equal_share_deviations(t);
        CHECK(d.column(0) == std::vector<double>(10, 0.0));
        CHECK(macro_signal(t, MacroMode::GroupError).values == std::vector<double>{0.0});
    }
}

TEST_CASE("group error macro")
{
    std::vector<std::vector<int>> g{std::vector<int>(10, 26), std::vector<int>(10, 24), std::vector<int>(10, 25)};
    const auto t = make_traj(250, g);
    CHECK(macro_signal(t, MacroMode::GroupError).values == std::vector<double>{10.0, -10.0, 0.0});
}

TEST_CASE("column sums of devs equal the group error")
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 9);
        std::vector<std::vector<int>> g(8, std::vector<int>(static_cast<std::size_t>(n)));
        for (auto& r : g) {
            for (int& v : r) {
                v = static_cast<int>(rng() % 51);
            }
        }
        const auto t = make_traj(static_cast<std::int64_t>(rng() % (50 * n + 1)), g);
        const auto d = equal_share_deviations(t);
        const auto v = macro_signal(t, MacroMode::GroupError).values;
        for (std::size_t k = 0; k < d.rounds(); ++k) {
            double s = 0.0;
            for (double x : d.column(k)) {
                s += x;
            }
            CHECK(std::abs(s - v[k]) <= 1e-9);
        }
        CHECK(macro_from_devs(d, MacroMode::GroupError).values == v);
    }
}

TEST_CASE("pc1 recovers a rank-one component up to positive scale")
{
    // agent rows = loading * common signal
    const std::vector<double> common{1.0, -2.0, 0.5, 3.0, -1.5};
    DeviationMatrix d(2, common.size());
    for (std::size_t t = 0; t < common.size(); ++t) {
        d.at(0, t) = 2.0 * common[t];
        d.at(1, t) = 1.0 * common[t];
    }
    const auto v = macro_from_devs(d, MacroMode::Pc1).values;
    const double scale = v[0] / common[0];
    CHECK(scale > 0.0);
    for (std::size_t t = 0; t < common.size(); ++t) {
        CHECK(v[t] == doctest::Approx(scale * common[t]).epsilon(1e-12));
    }
    // power-iteration oracle: loading is (2,1)/sqrt(5)
    CHECK(scale == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("pc1 of constant data is degenerate")
{
    const auto d = testing::matrix({{1, 1, 1}, {2, 2, 2}});
    CHECK_THROWS_WITH_AS(macro_from_devs(d, MacroMode::Pc1), doctest::Contains("degenerate covariance"),
                         std::domain_error);
}

TEST_CASE("truncate")
{
    std::vector<std::vector<int>> g(30, std::vector<int>{1, 1});
    const auto t = make_traj(100, g);
    CHECK(truncate(t, 10).round_count() == 10);
    CHECK(truncate(t, 50) == t);
    CHECK(truncate(truncate(t, 10), 10) == truncate(t, 10));
    CHECK(truncate(truncate(t, 12), 7) == truncate(t, 7));
    CHECK(truncate(truncate(t, 7), 12) == truncate(t, 7));

    std::vector<std::vector<int>> s(7, std::vector<int>{1, 1});
    s.push_back({50, 50});
    const auto won = make_traj(100, s);
    CHECK(won.success);
    CHECK(truncate(won, 10) == won);
    CHECK_FALSE(truncate(won, 5).success);
    CHECK_THROWS_AS(truncate(won, 0), std::invalid_argument);
}

TEST_CASE("reactivity is the first difference")
{
    CHECK(reactivity(testing::matrix({{0, 2, -1}})) == testing::matrix({{2, -3}}));
    CHECK(reactivity(testing::matrix({{1, -1, 1, -1}})) == testing::matrix({{-2, 2, -2}}));
    CHECK(reactivity(testing::matrix({{4, 4, 4}})) == testing::matrix({{0, 0}}));
    CHECK_THROWS_WITH(reactivity(testing::matrix({{1}})), doctest::Contains("too short"));
}

TEST_CASE("validation catches structural problems")
{
    auto t = make_traj(20, {{10, 9}, {10, 10}});
    CHECK_NOTHROW(validate(t));
    auto bad = t;
    bad.rounds[1].t = 3;
    CHECK_THROWS_AS(validate(bad), TrajectoryError);
    bad = t;
    bad.rounds[0].guesses.push_back(1);
    CHECK_THROWS_AS(validate(bad), TrajectoryError);
    bad = t;
    bad.success = false;
    CHECK_THROWS_AS(validate(bad), TrajectoryError);
    bad = t;
    bad.rounds[0].guesses[0] = 51;
    bad.rounds[0].sum = 60;
    bad.rounds[0].feedback = Feedback::High;
    CHECK_THROWS_AS(validate(bad), TrajectoryError);
}
