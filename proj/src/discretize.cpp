#include "collective/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace collective {

BinnedSeries BinnedSeries::slice(std::size_t begin, std::size_t length) const
{
    if (begin + length > levels.size()) {
        throw std::out_of_range("slice exceeds series length");
    }
    BinnedSeries out;
    out.alphabet_size = alphabet_size;
    out.levels.assign(levels.begin() + static_cast<std::ptrdiff_t>(begin),
                      levels.begin() + static_cast<std::ptrdiff_t>(begin + length));
    return out;
}

double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) {
        throw std::invalid_argument("quantile of empty series");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BinnedSeries quantile_bin(std::span<const double> series, int bins)
{
    if (bins < 2) {
        throw std::invalid_argument("quantile_bin needs K >= 2");
    }
    if (series.empty()) {
        throw std::invalid_argument("quantile_bin of empty series");
    }
    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> cuts(static_cast<std::size_t>(bins - 1));
    for (int j = 1; j < bins; ++j) {
        cuts[static_cast<std::size_t>(j - 1)] =
            quantile_sorted(sorted, static_cast<double>(j) / static_cast<double>(bins));
    }

    BinnedSeries out;
    out.alphabet_size = bins;
    out.levels.reserve(series.size());
    for (double v : series) {
        // first cut with v <= cut
        auto it = std::lower_bound(cuts.begin(), cuts.end(), v);
        out.levels.push_back(static_cast<int>(it - cuts.begin()) + 1);
    }
    return out;
}

BinnedSeries joint_encode(const BinnedSeries& a, const BinnedSeries& b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("joint_encode length mismatch");
    }
    BinnedSeries out;
    out.alphabet_size = a.alphabet_size * b.alphabet_size;
    out.levels.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.levels[i] = (a.levels[i] - 1) * b.alphabet_size + b.levels[i];
    }
    return out;
}

std::pair<int, int> joint_decode(int level, int alphabet_b)
{
    return {(level - 1) / alphabet_b + 1, (level - 1) % alphabet_b + 1};
}

ContingencyTable::ContingencyTable(std::vector<int> axis_alphabets, std::vector<std::int64_t> counts)
    : alphabets_(std::move(axis_alphabets)),
      counts_(std::move(counts))
{
    std::size_t cells = 1;
    for (int k : alphabets_) {
        if (k < 1) {
            throw std::invalid_argument("axis alphabet must be >= 1");
        }
        cells *= static_cast<std::size_t>(k);
    }
    if (alphabets_.empty() || cells != counts_.size()) {
        throw std::invalid_argument("count array length must equal the product of axis alphabets");
    }
    for (std::int64_t c : counts_) {
        if (c < 0) {
            throw std::invalid_argument("negative cell count");
        }
        total_ += c;
    }
}

std::size_t ContingencyTable::index(std::span<const int> coords) const
{
    std::size_t idx = 0;
    for (std::size_t a = 0; a < alphabets_.size(); ++a) {
        idx = idx * static_cast<std::size_t>(alphabets_[a]) + static_cast<std::size_t>(coords[a]);
    }
    return idx;
}

ContingencyTable ContingencyTable::marginal(std::span<const int> axes) const
{
    if (axes.empty()) {
        throw std::invalid_argument("marginal over no axes");
    }
    std::vector<int> out_alphabets;
    for (int ax : axes) {
        if (ax < 0 || static_cast<std::size_t>(ax) >= alphabets_.size()) {
            throw std::invalid_argument("marginal axis out of range");
        }
        out_alphabets.push_back(alphabets_[static_cast<std::size_t>(ax)]);
    }
    std::size_t out_cells = 1;
    for (int k : out_alphabets) {
        out_cells *= static_cast<std::size_t>(k);
    }
    std::vector<std::int64_t> out_counts(out_cells, 0);

    std::vector<int> coords(alphabets_.size(), 0);
    for (std::size_t cell = 0; cell < counts_.size(); ++cell) {
        if (counts_[cell] != 0) {
            std::size_t out_idx = 0;
            for (std::size_t j = 0; j < axes.size(); ++j) {
                out_idx = out_idx * static_cast<std::size_t>(out_alphabets[j])
                          + static_cast<std::size_t>(coords[static_cast<std::size_t>(axes[j])]);
            }
            out_counts[out_idx] += counts_[cell];
        }
        // odometer increment, last axis fastest
        for (std::size_t a = alphabets_.size(); a-- > 0;) {
            if (++coords[a] < alphabets_[a]) {
                break;
            }
            coords[a] = 0;
        }
    }
    return ContingencyTable(std::move(out_alphabets), std::move(out_counts));
}

ContingencyTable contingency_table(std::span<const BinnedSeries> axes)
{
    if (axes.empty()) {
        throw std::invalid_argument("contingency table needs at least one axis");
    }
    const std::size_t n = axes.front().size();
    if (n == 0) {
        throw std::invalid_argument("contingency table needs at least one sample");
    }
    std::vector<int> alphabets;
    std::size_t cells = 1;
    for (const BinnedSeries& axis : axes) {
        if (axis.size() != n) {
            throw std::invalid_argument("contingency table axes differ in length");
        }
        alphabets.push_back(axis.alphabet_size);
        cells *= static_cast<std::size_t>(axis.alphabet_size);
    }
    std::vector<std::int64_t> counts(cells, 0);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t idx = 0;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const int level = axes[a].levels[s];
            if (level < 1 || level > alphabets[a]) {
                throw std::invalid_argument("level " + std::to_string(level) + " outside alphabet");
            }
            idx = idx * static_cast<std::size_t>(alphabets[a]) + static_cast<std::size_t>(level - 1);
        }
        ++counts[idx];
    }
    return ContingencyTable(std::move(alphabets), std::move(counts));
}

}  // namespace collective
