#include <doctest.h>

#include <collective/infotheory.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "oracle.hpp"

using namespace collective;

namespace {

const std::array<int, 1> A0{0};
const std::array<int, 1> A1{1};

ContingencyTable table(std::vector<int> alph, std::vector<std::int64_t> counts)
{
    return {std::move(alph), std::move(counts)};
}

ContingencyTable random_table(std::mt19937_64& rng, std::vector<int> alph, int max_count)
{
    std::size_t cells = 1;
    for (int a : alph) {
        cells *= static_cast<std::size_t>(a);
    }
    std::vector<std::int64_t> c(cells);
    for (auto& v : c) {
        v = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_count + 1));
    }
    c[rng() % cells] += 1;
    return {alph, c};
}

// Sample rows that reproduce a 2-axis table.
std::vector<oracle::Sample> rows_of(const ContingencyTable& t)
{
    std::vector<oracle::Sample> rows;
    const auto& a = t.axis_alphabets();
    for (int i = 0; i < a[0]; ++i) {
        for (int j = 0; j < a[1]; ++j) {
            const std::array<int, 2> coords{i, j};
            for (std::int64_t k = 0; k < t.counts()[t.index(coords)]; ++k) {
                rows.push_back({i, j});
            }
        }
    }
    return rows;
}

}  // namespace

TEST_CASE("entropy closed forms")
{
    CHECK(entropy(table({2}, {5, 5}), EstimatorSpec::plugin()) == doctest::Approx(1.0));
    CHECK(entropy(table({2}, {4, 0}), EstimatorSpec::plugin()) == 0.0);
    CHECK(entropy(table({2}, {3, 1}), EstimatorSpec::miller_madow()) == doctest::Approx(0.99160).epsilon(1e-5));
    CHECK(entropy(table({2}, {4, 0}), EstimatorSpec::jeffreys(0.5)) == doctest::Approx(0.46900).epsilon(1e-5));
    CHECK_THROWS(entropy(table({2}, {0, 0}), EstimatorSpec::plugin()));
}

TEST_CASE("mutual information closed forms")
{
    const auto plug = EstimatorSpec::plugin();
    CHECK(mutual_information(table({2, 2}, {1, 1, 1, 1}), A0, A1, plug) == 0.0);
    CHECK(mutual_information(table({2, 2}, {2, 0, 0, 2}), A0, A1, plug) == doctest::Approx(1.0));
    CHECK(mutual_information(table({2, 2}, {3, 1, 1, 3}), A0, A1, plug) == doctest::Approx(0.18872).epsilon(1e-5));
    const std::array<int, 1> bad{2};
    CHECK_THROWS(mutual_information(table({2, 2}, {1, 1, 1, 1}), A0, bad, plug));
    CHECK_THROWS(mutual_information(table({2, 2}, {1, 1, 1, 1}), A0, A0, plug));
}

TEST_CASE("plug-in MI agrees with the brute-force oracle")
{
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 300; ++rep) {
        const auto t = random_table(rng, {2 + static_cast<int>(rng() % 3), 2 + static_cast<int>(rng() % 3)}, 6);
        const auto rows = rows_of(t);
        const double lib = mutual_information(t, A0, A1, EstimatorSpec::plugin());
        CHECK(lib == doctest::Approx(oracle::mi(rows, {0}, {1})).epsilon(1e-12));
        CHECK(lib >= 0.0);
        CHECK(lib == doctest::Approx(mutual_information(t, A1, A0, EstimatorSpec::plugin())).epsilon(1e-12));
    }
}

TEST_CASE("entropy bounds")
{
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 200; ++rep) {
        const auto t = random_table(rng, {2 + static_cast<int>(rng() % 3), 2}, 5);
        const double cap = std::log2(static_cast<double>(t.cell_count()));
        for (const auto& est : {EstimatorSpec::plugin(), EstimatorSpec::jeffreys()}) {
            const double h = entropy(t, est);
            CHECK(h >= 0.0);
            CHECK(h <= cap + 1e-12);
        }
    }
}

TEST_CASE("Miller-Madow offset is exact")
{
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 500; ++rep) {
        const auto t = random_table(rng, {2 + static_cast<int>(rng() % 3), 2 + static_cast<int>(rng() % 2)}, 4);
        const auto occupied = std::count_if(t.counts().begin(), t.counts().end(), [](auto c) { return c > 0; });
        const double expect = static_cast<double>(occupied - 1) / (2.0 * static_cast<double>(t.total()) * std::numbers::ln2);
        CHECK(entropy(t, EstimatorSpec::miller_madow()) - entropy(t, EstimatorSpec::plugin())
              == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("Jeffreys with a vanishing pseudo-count approaches plug-in")
{
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 200; ++rep) {
        const auto t = random_table(rng, {2, 3}, 5);
        CHECK(std::abs(mutual_information(t, A0, A1, EstimatorSpec::jeffreys(1e-8))
                       - mutual_information(t, A0, A1, EstimatorSpec::plugin()))
              <= 1e-6);
    }
}

TEST_CASE("specific information")
{
    // copy channel: p(t)=1/2 gives 1 bit for each outcome
    const auto copy = table({2, 2}, {3, 0, 0, 3});
    CHECK(specific_information(copy, A0, A1, 0) == doctest::Approx(1.0));
    CHECK(specific_information(copy, A0, A1, 1) == doctest::Approx(1.0));

    const auto indep = table({2, 2}, {2, 2, 2, 2});
    CHECK(specific_information(indep, A0, A1, 0) == doctest::Approx(0.0));
    CHECK(specific_information(indep, A0, A1, 1) == doctest::Approx(0.0));

    const auto empty_target = table({2, 2}, {3, 0, 2, 0});
    CHECK_THROWS_WITH_AS(specific_information(empty_target, A0, A1, 1),
                         doctest::Contains("undefined specific information"), std::domain_error);
}

TEST_CASE("expected specific information equals plug-in MI")
{
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 500; ++rep) {
        const auto t = random_table(rng, {2 + static_cast<int>(rng() % 2), 2 + static_cast<int>(rng() % 2)}, 5);
        const std::array<int, 1> tgt{1};
        const auto tm = t.marginal(tgt);
        double sum = 0.0;
        for (std::size_t k = 0; k < tm.cell_count(); ++k) {
            if (tm.counts()[k] > 0) {
                const double p = static_cast<double>(tm.counts()[k]) / static_cast<double>(tm.total());
                sum += p * specific_information(t, A0, A1, k);
                CHECK(specific_information(t, A0, A1, k)
                      == doctest::Approx(oracle::specific(rows_of(t), {0}, 1, static_cast<int>(k))).epsilon(1e-12));
            }
        }
        CHECK(std::abs(sum - mutual_information(t, A0, A1, EstimatorSpec::plugin())) <= 1e-9);
    }
}

TEST_CASE("plug-in MI grows when the source is enlarged")
{
    std::mt19937_64 rng(23);
    const std::array<int, 2> xy{0, 1};
    const std::array<int, 1> t2{2};
    for (int rep = 0; rep < 300; ++rep) {
        const auto t = random_table(rng, {2, 3, 2}, 4);
        CHECK(mutual_information(t, xy, t2, EstimatorSpec::plugin())
              >= mutual_information(t, A0, t2, EstimatorSpec::plugin()) - 1e-12);
    }
}

TEST_CASE("estimator names")
{
    for (auto k : {EstimatorKind::Plugin, EstimatorKind::Jeffreys, EstimatorKind::MillerMadow}) {
        CHECK(estimator_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS(estimator_kind_from_string("ksg"));
    CHECK_THROWS(EstimatorSpec::jeffreys(0.0).validate());
}
