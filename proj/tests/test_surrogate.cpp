#include <doctest.h>

#include <collective/emergence.hpp>
#include <collective/game.hpp>
#include <collective/surrogate.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "helpers.hpp"

using namespace collective;
using testing::matrix;

namespace {

DeviationMatrix random_devs(std::uint64_t seed, std::size_t n, std::size_t t)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> g(0, 50);
    DeviationMatrix d(n, t);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < t; ++k) {
            d.at(i, k) = g(rng) - 25.3;
        }
    }
    return d;
}

std::vector<double> sorted(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<double> row_vec(const DeviationMatrix& d, std::size_t i)
{
    return {d.row(i).begin(), d.row(i).end()};
}

}  // namespace

TEST_CASE("row shuffle")
{
    Rng rng(1);
    const auto one = matrix({{1, 2, 3}});
    CHECK(row_shuffle(one, rng) == one);

    const auto forced = permute_within_rounds(matrix({{1, 2}, {3, 4}}), {{1, 0}, {0, 1}});
    CHECK(forced == matrix({{3, 2}, {1, 4}}));

    const auto d = random_devs(2, 6, 25);
    for (int rep = 0; rep < 20; ++rep) {
        const auto s = row_shuffle(d, rng);
        for (std::size_t t = 0; t < d.rounds(); ++t) {
            CHECK(sorted(s.column(t)) == sorted(d.column(t)));
        }
        CHECK(macro_from_devs(s, MacroMode::GroupError).values == macro_from_devs(d, MacroMode::GroupError).values);
    }
}

TEST_CASE("column time shift")
{
    CHECK(rotate_rows(matrix({{1, 2, 3}}), {1}) == matrix({{3, 1, 2}}));
    Rng rng(3);
    const auto d = random_devs(4, 5, 20);
    const auto s = column_time_shift(d, rng);
    for (std::size_t i = 0; i < d.agents(); ++i) {
        CHECK(sorted(row_vec(s, i)) == sorted(row_vec(d, i)));
        CHECK(row_vec(s, i) != row_vec(d, i));
    }
    CHECK_THROWS(column_time_shift(matrix({{1}, {2}}), rng));

    // two synchronized rows lose alignment when their offsets differ
    std::vector<double> base(40);
    std::iota(base.begin(), base.end(), 0.0);
    DeviationMatrix sync(2, 40);
    for (std::size_t t = 0; t < 40; ++t) {
        sync.at(0, t) = sync.at(1, t) = std::sin(0.7 * static_cast<double>(t));
    }
    const auto shifted = rotate_rows(sync, {3, 11});
    double corr_num = 0.0;
    double n0 = 0.0;
    double n1 = 0.0;
    for (std::size_t t = 0; t < 40; ++t) {
        corr_num += shifted.at(0, t) * shifted.at(1, t);
        n0 += shifted.at(0, t) * shifted.at(0, t);
        n1 += shifted.at(1, t) * shifted.at(1, t);
    }
    CHECK(corr_num / std::sqrt(n0 * n1) < 0.9);
}

TEST_CASE("block time shuffle")
{
    const auto d = matrix({{1, 2, 3, 4}, {5, 6, 7, 8}});
    CHECK(permute_blocks(d, 2, {1, 0}) == matrix({{3, 4, 1, 2}, {7, 8, 5, 6}}));
    Rng rng(5);
    CHECK(block_time_shuffle(d, 4 / 2, rng).rounds() == 4);
    const auto e = random_devs(6, 4, 9);
    CHECK(permute_blocks(e, 9, {0}) == e);
    const auto s = block_time_shuffle(e, 2, rng);
    std::vector<std::vector<double>> before;
    std::vector<std::vector<double>> after;
    for (std::size_t t = 0; t < e.rounds(); ++t) {
        before.push_back(e.column(t));
        after.push_back(s.column(t));
    }
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    CHECK(before == after);
    CHECK_THROWS(block_time_shuffle(matrix({{1, 2, 3}}), 2, rng));
}

TEST_CASE("permutation p-value and bias correction")
{
    std::vector<double> null(199);
    std::iota(null.begin(), null.end(), 0.0);
    CHECK(permutation_p_value(1000.0, null) == 1.0 / 200.0);
    CHECK(permutation_p_value(-1.0, null) == 1.0);

    SurrogateSpec spec;
    spec.B = 19;
    const auto d = random_devs(7, 3, 10);
    const auto nd = null_test([](const DeviationMatrix&, const MacroSeries&) { return 4.0; }, d, MacroMode::GroupError,
                              spec, "g");
    CHECK(nd.bias_corrected == 0.0);
    CHECK(nd.p_value == 1.0);
    CHECK(nd.null_values.size() == 19);
}

TEST_CASE("null test is reproducible and thread-independent")
{
    const auto d = random_devs(8, 5, 20);
    SurrogateSpec spec;
    spec.kind = SurrogateKind::ColumnTimeShift;
    spec.B = 40;
    spec.seed = 77;
    const auto settings = AnalysisSettings::main_preset();
    const Statistic stat = [&](const DeviationMatrix& x, const MacroSeries& m) {
        return practical_criterion(x, m, settings);
    };
    const auto a = null_test(stat, d, MacroMode::GroupError, spec, "grp");
    const auto b = null_test(stat, d, MacroMode::GroupError, spec, "grp", 3);
    CHECK(a.null_values == b.null_values);
    CHECK(a.p_value == b.p_value);
    const auto c = null_test(stat, d, MacroMode::GroupError, spec, "other");
    CHECK(c.null_values != a.null_values);
    CHECK(a.observed == c.observed);
}

TEST_CASE("row shuffle leaves the macro self-information untouched")
{
    const auto d = random_devs(9, 6, 30);
    SurrogateSpec spec;
    spec.B = 50;
    const auto nd = null_test(
        [](const DeviationMatrix& x, const MacroSeries& m) {
            const auto v = quantile_bin(m.values, 2);
            const std::array<BinnedSeries, 2> axes{v.slice(0, x.rounds() - 1), v.slice(1, x.rounds() - 1)};
            const std::array<int, 1> s{0};
            const std::array<int, 1> t{1};
            return mutual_information(contingency_table(axes), s, t, EstimatorSpec::plugin());
        },
        d, MacroMode::GroupError, spec, "g");
    for (double v : nd.null_values) {
        CHECK(v == nd.observed);
    }
}

TEST_CASE("statistic failures carry the surrogate index")
{
    const auto d = random_devs(10, 3, 10);
    SurrogateSpec spec;
    spec.B = 20;
    int calls = 0;
    const Statistic bad = [&](const DeviationMatrix&, const MacroSeries&) -> double {
        if (calls++ == 3) {
            throw std::runtime_error("boom");
        }
        return 0.0;
    };
    try {
        null_test(bad, d, MacroMode::GroupError, spec, "g");
        FAIL("expected SurrogateError");
    } catch (const SurrogateError& e) {
        CHECK(e.index() == 2);
        CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
}

TEST_CASE("spec validation")
{
    SurrogateSpec s;
    s.B = 18;
    CHECK_THROWS(s.validate());
    s.B = 19;
    s.block_len = 0;
    CHECK_THROWS(s.validate());
    for (auto k : {SurrogateKind::RowShuffle, SurrogateKind::ColumnTimeShift, SurrogateKind::BlockTimeShuffle}) {
        CHECK(surrogate_kind_from_string(to_string(k)) == k);
    }
}

TEST_CASE("linear detrending")
{
    const auto z = detrend_linear(matrix({{1, 3, 5, 7}, {2, 2, 2, 2}}));
    for (std::size_t i = 0; i < 2; ++i) {
        for (double v : z.row(i)) {
            CHECK(std::abs(v) < 1e-12);
        }
    }
    const auto r = detrend_linear(matrix({{0, 1, 0}}));
    CHECK(r.at(0, 0) == doctest::Approx(-1.0 / 3.0));
    CHECK(r.at(0, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(r.at(0, 2) == doctest::Approx(-1.0 / 3.0));
    CHECK_THROWS(detrend_linear(matrix({{1, 2}})));
}

TEST_CASE("functional null residuals")
{
    SUBCASE("a null-agent group residualizes to zero")
    {
        GameConfig cfg;
        cfg.target = 313;
        const auto policies = make_policies(PolicyKind::Null, cfg, 1);
        Rng rng(1);
        const auto t = run_group(cfg, policies, rng).trajectory;
        const auto r = functional_null_residuals(t);
        for (std::size_t i = 0; i < r.agents(); ++i) {
            for (double v : r.row(i)) {
                CHECK(v == 0.0);
            }
        }
    }
    SUBCASE("null that finishes in round 1 is held there")
    {
        std::vector<std::vector<int>> g{std::vector<int>(10, 20), std::vector<int>(10, 30), std::vector<int>(10, 27)};
        const auto t = testing::make_traj(250, g);
        const auto r = functional_null_residuals(t);
        const auto d = equal_share_deviations(t);
        // the null group guesses 25 = target/N in round 1, so its devs stay 0
        CHECK(r == d);
    }
    SUBCASE("residual column sums are the macro difference")
    {
        GameConfig cfg;
        cfg.target = 137;
        const auto policies = make_policies(PolicyKind::IidUniform, cfg, 2);
        Rng rng(2);
        const auto t = run_group(cfg, policies, rng).trajectory;
        const auto r = functional_null_residuals(t);
        const auto observed = macro_from_devs(equal_share_deviations(t), MacroMode::GroupError).values;
        GameConfig ncfg = cfg;
        ncfg.max_rounds = static_cast<int>(t.round_count());
        const auto null_policies = make_policies(PolicyKind::Null, ncfg, 0);
        Rng nrng(0);
        const auto nt = run_group(ncfg, null_policies, nrng).trajectory;
        const auto null_macro = macro_from_devs(equal_share_deviations(nt), MacroMode::GroupError).values;
        for (std::size_t k = 0; k < r.rounds(); ++k) {
            double s = 0.0;
            for (double v : r.column(k)) {
                s += v;
            }
            CHECK(s == doctest::Approx(observed[k] - null_macro[std::min(k, null_macro.size() - 1)]).epsilon(1e-9));
        }
    }
}
