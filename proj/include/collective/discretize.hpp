#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace collective {

/// Symbols in 1..alphabet_size. The alphabet is fixed by construction and does
/// not shrink when some levels never occur.
struct BinnedSeries {
    std::vector<int> levels;
    int alphabet_size = 0;

    std::size_t size() const { return levels.size(); }
    /// Contiguous sub-series [begin, begin + length), same alphabet.
    BinnedSeries slice(std::size_t begin, std::size_t length) const;

    bool operator==(const BinnedSeries&) const = default;
};

/// Type-7 (linear interpolation) empirical quantile of an ascending series.
double quantile_sorted(std::span<const double> sorted, double p);

/// Equal-frequency binning on the j/K type-7 quantiles; a value sitting on a
/// cut point goes to the lower bin.
BinnedSeries quantile_bin(std::span<const double> series, int bins);

/// Level (a-1)*K_b + b over the product alphabet K_a*K_b.
BinnedSeries joint_encode(const BinnedSeries& a, const BinnedSeries& b);
std::pair<int, int> joint_decode(int level, int alphabet_b);

/// Dense count array over a product alphabet; the last axis varies fastest.
/// Empty cells are kept.
class ContingencyTable {
public:
    ContingencyTable() = default;
    ContingencyTable(std::vector<int> axis_alphabets, std::vector<std::int64_t> counts);

    const std::vector<int>& axis_alphabets() const { return alphabets_; }
    std::size_t axis_count() const { return alphabets_.size(); }
    const std::vector<std::int64_t>& counts() const { return counts_; }
    std::int64_t total() const { return total_; }
    std::size_t cell_count() const { return counts_.size(); }

    /// Counts of the sub-table over `axes` (in the given order).
    ContingencyTable marginal(std::span<const int> axes) const;

    /// Flat cell index of zero-based per-axis coordinates.
    std::size_t index(std::span<const int> coords) const;

    bool operator==(const ContingencyTable&) const = default;

private:
    std::vector<int> alphabets_;
    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
};

ContingencyTable contingency_table(std::span<const BinnedSeries> axes);

}  // namespace collective
