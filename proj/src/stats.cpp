#include "collective/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>

namespace collective {

namespace {

void quiet_gsl()
{
    static const bool once = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)once;
}

double clamp_unit(double p)
{
    return std::clamp(p, 0.0, 1.0);
}

// Mid-ranks of |d| (1-based) and the tie group sizes.
std::vector<double> mid_ranks(const std::vector<double>& abs_values, std::vector<std::size_t>& tie_sizes)
{
    const std::size_t n = abs_values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return abs_values[a] < abs_values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_values[order[j + 1]] == abs_values[order[i]]) {
            ++j;
        }
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        tie_sizes.push_back(j - i + 1);
        i = j + 1;
    }
    return ranks;
}

// Number of sign patterns giving each rank sum 0..n(n+1)/2.
std::vector<double> signed_rank_counts(std::size_t n)
{
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<double> counts(max_sum + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
        for (std::size_t s = max_sum; s >= r; --s) {
            counts[s] += counts[s - r];
        }
    }
    return counts;
}

}  // namespace

std::string_view to_string(Alternative alt)
{
    switch (alt) {
    case Alternative::Greater:
        return "greater";
    case Alternative::Less:
        return "less";
    case Alternative::TwoSided:
        return "two_sided";
    }
    return "?";
}

double chi_square_sf(double x, double df)
{
    quiet_gsl();
    if (x <= 0.0) {
        return 1.0;
    }
    return clamp_unit(gsl_cdf_chisq_Q(x, df));
}

double normal_sf(double z)
{
    quiet_gsl();
    return gsl_cdf_ugaussian_Q(z);
}

double normal_quantile(double p)
{
    quiet_gsl();
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal quantile needs p in (0, 1)");
    }
    return gsl_cdf_ugaussian_Pinv(p);
}

double kolmogorov_sf(double lambda)
{
    if (lambda <= 0.0) {
        return 1.0;
    }
    if (lambda < 1.18) {
        // small-lambda form of the CDF converges fast here
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double odd = 2.0 * k - 1.0;
            cdf += std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
        return clamp_unit(1.0 - cdf);
    }
    double sf = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sf += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-17) {
            break;
        }
    }
    return clamp_unit(sf);
}

double median(std::span<const double> values)
{
    if (values.empty()) {
        throw std::invalid_argument("median of empty sample");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n % 2 == 1) {
        return sorted[n / 2];
    }
    return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

double quantile(std::span<const double> values, double p)
{
    if (values.empty()) {
        throw std::invalid_argument("quantile of empty sample");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

TestResult fisher_combine(std::span<const double> pvalues)
{
    if (pvalues.empty()) {
        throw std::invalid_argument("fisher_combine needs at least one p-value");
    }
    double stat = 0.0;
    for (double p : pvalues) {
        if (!(p > 0.0 && p <= 1.0)) {
            throw std::domain_error("fisher_combine: p-value " + std::to_string(p) + " outside (0, 1]");
        }
        stat -= 2.0 * std::log(p);
    }
    const double df = 2.0 * static_cast<double>(pvalues.size());
    return {stat, df, chi_square_sf(stat, df), Alternative::Greater};
}

TestResult wilcoxon_signed_rank(std::span<const double> values,
                                double mu0,
                                Alternative alternative,
                                WilcoxonMethod method)
{
    std::vector<double> diffs;
    for (double v : values) {
        const double d = v - mu0;
        if (d != 0.0) {
            diffs.push_back(d);
        }
    }
    if (diffs.empty()) {
        throw std::invalid_argument("degenerate sample: all differences are zero");
    }
    const std::size_t n = diffs.size();
    std::vector<double> abs_values(n);
    std::transform(diffs.begin(), diffs.end(), abs_values.begin(), [](double d) { return std::abs(d); });
    std::vector<std::size_t> ties;
    const std::vector<double> ranks = mid_ranks(abs_values, ties);
    const bool has_ties = std::any_of(ties.begin(), ties.end(), [](std::size_t t) { return t > 1; });

    double v_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) {
            v_plus += ranks[i];
        }
    }

    bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && n <= 25 && !has_ties);
    if (exact && has_ties) {
        throw std::invalid_argument("exact signed-rank distribution requires untied data");
    }

    TestResult out;
    out.statistic = v_plus;
    out.alternative = alternative;
    if (exact) {
        const std::vector<double> counts = signed_rank_counts(n);
        const double total = std::ldexp(1.0, static_cast<int>(n));
        const auto v = static_cast<std::size_t>(std::llround(v_plus));
        double upper = 0.0;
        double lower = 0.0;
        for (std::size_t s = 0; s < counts.size(); ++s) {
            if (s >= v) {
                upper += counts[s];
            }
            if (s <= v) {
                lower += counts[s];
            }
        }
        upper /= total;
        lower /= total;
        switch (alternative) {
        case Alternative::Greater:
            out.p_value = upper;
            break;
        case Alternative::Less:
            out.p_value = lower;
            break;
        case Alternative::TwoSided:
            out.p_value = std::min(1.0, 2.0 * std::min(upper, lower));
            break;
        }
        return out;
    }

    const double nd = static_cast<double>(n);
    double tie_term = 0.0;
    for (std::size_t t : ties) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double sigma = std::sqrt(nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0);
    double z = v_plus - nd * (nd + 1.0) / 4.0;
    double correction = 0.0;
    switch (alternative) {
    case Alternative::Greater:
        correction = 0.5;
        break;
    case Alternative::Less:
        correction = -0.5;
        break;
    case Alternative::TwoSided:
        correction = z > 0 ? 0.5 : (z < 0 ? -0.5 : 0.0);
        break;
    }
    z = (z - correction) / sigma;
    switch (alternative) {
    case Alternative::Greater:
        out.p_value = normal_sf(z);
        break;
    case Alternative::Less:
        out.p_value = normal_sf(-z);
        break;
    case Alternative::TwoSided:
        out.p_value = std::min(1.0, 2.0 * std::min(normal_sf(z), normal_sf(-z)));
        break;
    }
    return out;
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_two_sample needs two nonempty samples");
    }
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());

    double d = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < sa.size() || j < sb.size()) {
        double x;
        if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
            x = sa[i];
        } else {
            x = sb[j];
        }
        while (i < sa.size() && sa[i] == x) {
            ++i;
        }
        while (j < sb.size() && sb[j] == x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double n_eff = na * nb / (na + nb);
    return {d, std::nullopt, kolmogorov_sf(std::sqrt(n_eff) * d), Alternative::TwoSided};
}

TestResult two_proportion_test(std::int64_t x1, std::int64_t n1, std::int64_t x2, std::int64_t n2)
{
    if (n1 < 1 || n2 < 1 || x1 < 0 || x2 < 0 || x1 > n1 || x2 > n2) {
        throw std::invalid_argument("two_proportion_test needs 0 <= x <= n and n >= 1");
    }
    const double dn1 = static_cast<double>(n1);
    const double dn2 = static_cast<double>(n2);
    const double pooled = static_cast<double>(x1 + x2) / (dn1 + dn2);
    if (pooled <= 0.0 || pooled >= 1.0) {
        return {0.0, 1.0, 1.0, Alternative::TwoSided};
    }
    const double delta = static_cast<double>(x1) / dn1 - static_cast<double>(x2) / dn2;
    const double yates = std::min(0.5, std::abs(delta) / (1.0 / dn1 + 1.0 / dn2));

    const double observed[4] = {static_cast<double>(x1), dn1 - static_cast<double>(x1),
                                static_cast<double>(x2), dn2 - static_cast<double>(x2)};
    const double expected[4] = {dn1 * pooled, dn1 * (1.0 - pooled), dn2 * pooled, dn2 * (1.0 - pooled)};
    double stat = 0.0;
    for (int c = 0; c < 4; ++c) {
        const double dev = std::max(0.0, std::abs(observed[c] - expected[c]) - yates);
        stat += dev * dev / expected[c];
    }
    return {stat, 1.0, chi_square_sf(stat, 1.0), Alternative::TwoSided};
}

Interval wilson_interval(std::int64_t x, std::int64_t n, double confidence)
{
    if (n < 1 || x < 0 || x > n) {
        throw std::invalid_argument("wilson_interval needs 0 <= x <= n and n >= 1");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw std::invalid_argument("confidence must lie in (0, 1)");
    }
    const double z = normal_quantile((1.0 + confidence) / 2.0);
    const double nd = static_cast<double>(n);
    const double p = static_cast<double>(x) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double center = (p + z2 / (2.0 * nd)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
    Interval out{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (x == 0) {
        out.lo = 0.0;
    }
    if (x == n) {
        out.hi = 1.0;
    }
    return out;
}

std::vector<double> winsorize(std::span<const double> values, double lower_q, double upper_q)
{
    if (!(lower_q >= 0.0 && lower_q < upper_q && upper_q <= 1.0)) {
        throw std::invalid_argument("winsorize needs 0 <= lower_q < upper_q <= 1");
    }
    std::vector<double> out(values.begin(), values.end());
    if (out.empty()) {
        return out;
    }
    std::vector<double> sorted = out;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    auto order_stat = [&](double q) {
        const double pos = std::ceil(n * q - 1e-9);
        const auto idx = static_cast<std::size_t>(std::clamp(pos, 1.0, n)) - 1;
        return sorted[idx];
    };
    const double lo = order_stat(lower_q);
    const double hi = order_stat(upper_q);
    for (double& v : out) {
        v = std::clamp(v, lo, hi);
    }
    return out;
}

}  // namespace collective
