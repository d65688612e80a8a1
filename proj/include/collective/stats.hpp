#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace collective {

enum class Alternative { Greater, Less, TwoSided };

std::string_view to_string(Alternative alt);

struct TestResult {
    double statistic = 0.0;
    std::optional<double> df;
    double p_value = 1.0;
    Alternative alternative = Alternative::TwoSided;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// Distribution tails.
double chi_square_sf(double x, double df);
double normal_sf(double z);
double normal_quantile(double p);

/// Upper tail of the asymptotic Kolmogorov distribution, P(K > lambda).
double kolmogorov_sf(double lambda);

/// Sample median; mean of the two middle values for even counts.
double median(std::span<const double> values);

/// Type-7 empirical quantile of an unsorted sample.
double quantile(std::span<const double> values, double p);

/// Fisher's method: -2 sum ln p against chi-square with 2k df. Every p must lie
/// in (0, 1]; floor permutation p-values at 1/(B+1) before combining.
TestResult fisher_combine(std::span<const double> pvalues);

enum class WilcoxonMethod { Auto, Exact, Normal };

/// One-sample signed-rank test of values - mu0. Zeros are dropped, ties get
/// mid-ranks. Auto uses the exact null for n <= 25 without ties and the normal
/// approximation (tie and continuity corrected) otherwise. The statistic is
/// V, the rank sum of positive differences.
TestResult wilcoxon_signed_rank(std::span<const double> values,
                                double mu0 = 0.0,
                                Alternative alternative = Alternative::Greater,
                                WilcoxonMethod method = WilcoxonMethod::Auto);

/// Two-sample Kolmogorov-Smirnov; asymptotic p with n_eff = na*nb/(na+nb).
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Two-sided chi-square test of equal proportions, Yates-corrected, df 1.
TestResult two_proportion_test(std::int64_t x1, std::int64_t n1, std::int64_t x2, std::int64_t n2);

Interval wilson_interval(std::int64_t x, std::int64_t n, double confidence = 0.95);

/// Clamp to the empirical lower/upper quantiles. The bounds are order
/// statistics (inverse-ECDF quantiles), which makes the operation idempotent.
std::vector<double> winsorize(std::span<const double> values, double lower_q = 0.01, double upper_q = 0.99);

}  // namespace collective
