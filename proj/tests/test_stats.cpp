#include <doctest.h>

#include <collective/stats.hpp>

#include <cmath>
#include <numeric>
#include <random>

using namespace collective;

// Reference values frozen from an independent statistics package (two-sided
// unless noted).

TEST_CASE("Fisher's method")
{
    const auto half = fisher_combine(std::vector<double>{0.5, 0.5});
    CHECK(half.statistic == doctest::Approx(2.7725887222).epsilon(1e-9));
    CHECK(*half.df == 4);
    CHECK(half.p_value == doctest::Approx(0.5965735902799727).epsilon(1e-9));

    const auto ones = fisher_combine(std::vector<double>{1.0, 1.0, 1.0});
    CHECK(ones.statistic == 0.0);
    CHECK(ones.p_value == 1.0);

    const auto three = fisher_combine(std::vector<double>{0.01, 0.02, 0.03});
    CHECK(three.statistic == doctest::Approx(24.04750217747244).epsilon(1e-9));
    CHECK(three.p_value == doctest::Approx(0.0005118542772640737).epsilon(1e-8));

    CHECK_THROWS(fisher_combine(std::vector<double>{0.0, 0.5}));
    CHECK_THROWS(fisher_combine(std::vector<double>{1.5}));
    CHECK_THROWS(fisher_combine(std::vector<double>{}));
}

TEST_CASE("Fisher p shrinks with more copies of a small p")
{
    for (double p : {0.2, 0.1, 0.01}) {
        double prev = 1.0;
        for (int k = 1; k <= 20; ++k) {
            const double c = fisher_combine(std::vector<double>(static_cast<std::size_t>(k), p)).p_value;
            CHECK(c < prev);
            prev = c;
        }
    }
}

TEST_CASE("Wilcoxon signed-rank exact")
{
    CHECK(wilcoxon_signed_rank(std::vector<double>{1, 2, 3}).p_value == 0.125);
    CHECK(wilcoxon_signed_rank(std::vector<double>{1, 2, 3, 4, 5}).p_value == 0.03125);
    CHECK(wilcoxon_signed_rank(std::vector<double>{-2, -1, 1, 2}, 0.0, Alternative::TwoSided).p_value == 1.0);
    CHECK_THROWS_WITH(wilcoxon_signed_rank(std::vector<double>{0, 0, 0}), doctest::Contains("degenerate sample"));
    // zeros are dropped
    CHECK(wilcoxon_signed_rank(std::vector<double>{0, 1, 2, 3, 0}).p_value == 0.125);
    // shifting by mu0
    CHECK(wilcoxon_signed_rank(std::vector<double>{11, 12, 13}, 10.0).p_value == 0.125);
}

TEST_CASE("Wilcoxon matches reference values")
{
    std::vector<double> y(20);
    const int signs[20] = {1, -1, 1, 1, -1, 1, 1, 1, -1, 1, 1, -1, 1, 1, 1, -1, 1, 1, 1, 1};
    for (int i = 0; i < 20; ++i) {
        y[static_cast<std::size_t>(i)] = (i + 1) * signs[i];
    }
    const auto exact = wilcoxon_signed_rank(y, 0.0, Alternative::Greater, WilcoxonMethod::Exact);
    CHECK(exact.statistic == 166.0);
    CHECK(exact.p_value == doctest::Approx(0.0107421875).epsilon(1e-12));
    const auto approx = wilcoxon_signed_rank(y, 0.0, Alternative::Greater, WilcoxonMethod::Normal);
    CHECK(approx.p_value == doctest::Approx(0.011953313559440787).epsilon(1e-9));

    // ties and a zero: normal path with tie and continuity correction
    const std::vector<double> x{1.5, -0.5, 2, 2, 3, -1, 0.5, 4, 4, -2, 1, 1, 2.5, 3, -0.5,
                                0, 6, 1.5, 2, -1.5, 0.25, 1, 3, 3, -2.5, 1.75, 2, 0.5, -1, 2};
    const auto g = wilcoxon_signed_rank(x, 0.0, Alternative::Greater);
    CHECK(g.statistic == 361.0);
    CHECK(g.p_value == doctest::Approx(0.0009693589112552828).epsilon(1e-9));
    CHECK(wilcoxon_signed_rank(x, 0.0, Alternative::TwoSided).p_value
          == doctest::Approx(0.0019387178225105657).epsilon(1e-9));
    CHECK_THROWS(wilcoxon_signed_rank(x, 0.0, Alternative::Greater, WilcoxonMethod::Exact));
}

TEST_CASE("Wilcoxon exact and normal paths agree at n = 20")
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> nd(0.2, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> v(20);
        for (double& x : v) {
            x = nd(rng);
        }
        for (auto alt : {Alternative::Greater, Alternative::Less, Alternative::TwoSided}) {
            const double e = wilcoxon_signed_rank(v, 0.0, alt, WilcoxonMethod::Exact).p_value;
            const double a = wilcoxon_signed_rank(v, 0.0, alt, WilcoxonMethod::Normal).p_value;
            CHECK(std::abs(e - a) <= 0.02);
        }
    }
}

TEST_CASE("two-sample KS")
{
    const std::vector<double> a{1, 2, 3, 4};
    const auto same = ks_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    const std::vector<double> far{10, 11, 12};
    CHECK(ks_two_sample(a, far).statistic == 1.0);
    const std::vector<double> shifted{1.5, 2.5, 3.5, 4.5};
    CHECK(ks_two_sample(a, shifted).statistic == doctest::Approx(0.25));

    const std::vector<double> x{0.1, 0.4, 0.7, 1.2, 1.9, 2.5, 3.1, 3.3, 4.0, 5.5};
    const std::vector<double> y{0.3, 0.9, 1.0, 1.1, 1.5, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6, 2.8};
    const auto r = ks_two_sample(x, y);
    CHECK(r.statistic == doctest::Approx(0.4));
    CHECK(r.p_value == doctest::Approx(0.3472743203431365).epsilon(1e-9));
}

TEST_CASE("Kolmogorov tail")
{
    CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
    CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
    CHECK(kolmogorov_sf(1.5) == doctest::Approx(0.022217962616525127).epsilon(1e-10));
    CHECK(kolmogorov_sf(0.3) == doctest::Approx(0.9999906941986655).epsilon(1e-10));
    CHECK(kolmogorov_sf(0.0) == 1.0);
}

TEST_CASE("two-proportion test with Yates correction")
{
    CHECK(two_proportion_test(5, 10, 5, 10).p_value == 1.0);
    const auto extreme = two_proportion_test(0, 10, 10, 10);
    CHECK(extreme.statistic == doctest::Approx(16.2));
    CHECK(extreme.p_value == doctest::Approx(5.699411623331848e-05).epsilon(1e-9));
    CHECK(two_proportion_test(3, 20, 9, 22).p_value == doctest::Approx(0.1299337847826221).epsilon(1e-9));
    CHECK(two_proportion_test(7, 50, 2, 45).p_value == doctest::Approx(0.21603931435117152).epsilon(1e-9));
    const auto close = two_proportion_test(15, 40, 14, 38);
    CHECK(close.statistic == 0.0);
    CHECK(close.p_value == 1.0);
    CHECK(two_proportion_test(0, 10, 0, 12).p_value == 1.0);
}

TEST_CASE("Wilson interval")
{
    const auto zero = wilson_interval(0, 10);
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi == doctest::Approx(0.27753279986288926).epsilon(1e-9));
    const auto mid = wilson_interval(7, 23);
    CHECK(mid.lo == doctest::Approx(0.1560402445321402).epsilon(1e-9));
    CHECK(mid.hi == doctest::Approx(0.5086575626875921).epsilon(1e-9));
    CHECK(wilson_interval(10, 10).hi == 1.0);
}

TEST_CASE("winsorize")
{
    const std::vector<double> flat(7, 3.0);
    CHECK(winsorize(flat) == flat);

    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    const auto w = winsorize(v, 0.01, 0.99);
    CHECK(w.size() == 100);
    CHECK(w.front() >= 1.0);
    CHECK(w.back() <= 100.0);
    for (std::size_t i = 2; i < 98; ++i) {
        CHECK(w[i] == v[i]);
    }
    CHECK(winsorize(w, 0.01, 0.99) == w);

    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> ln;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(30 + rng() % 200);
        for (double& e : x) {
            e = ln(rng);
        }
        const auto once = winsorize(x, 0.05, 0.95);
        CHECK(winsorize(once, 0.05, 0.95) == once);
    }
}

TEST_CASE("median and quantile")
{
    CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
    CHECK(median(std::vector<double>{4, 1, 3, 2}) == 2.5);
    CHECK(quantile(std::vector<double>{1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile(std::vector<double>{1, 2, 3, 4, 5, 6}, 1.0 / 3.0) == doctest::Approx(2.0 + 2.0 / 3.0));
}

TEST_CASE("chi-square tail")
{
    CHECK(chi_square_sf(2 * 1.9208, 1) == doctest::Approx(0.049995790296440884).epsilon(1e-9));
    CHECK(chi_square_sf(0.0, 3) == 1.0);
}
