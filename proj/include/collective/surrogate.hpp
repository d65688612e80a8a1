#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "collective/random.hpp"
#include "collective/trajectory.hpp"

namespace collective {

enum class SurrogateKind { RowShuffle, ColumnTimeShift, BlockTimeShuffle };

std::string_view to_string(SurrogateKind kind);
SurrogateKind surrogate_kind_from_string(std::string_view text);

struct SurrogateSpec {
    SurrogateKind kind = SurrogateKind::RowShuffle;
    int B = 200;
    int block_len = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct NullDistribution {
    double observed = 0.0;
    std::vector<double> null_values;
    double p_value = 1.0;
    double bias_corrected = 0.0;
};

/// Raised when the statistic fails on one surrogate draw.
class SurrogateError : public std::runtime_error {
public:
    SurrogateError(int index, const std::string& what);
    int index() const { return index_; }

private:
    int index_;
};

// Deterministic building blocks; the random versions below draw the
// permutations/offsets and delegate here.
DeviationMatrix permute_within_rounds(const DeviationMatrix& devs, const std::vector<std::vector<std::size_t>>& perms);
DeviationMatrix rotate_rows(const DeviationMatrix& devs, const std::vector<std::size_t>& offsets);
DeviationMatrix permute_blocks(const DeviationMatrix& devs, int block_len, const std::vector<std::size_t>& block_order);

/// Permutes each round's values across agents; the macro is unchanged.
DeviationMatrix row_shuffle(const DeviationMatrix& devs, Rng& rng);

/// Circularly shifts each agent's row by its own offset in 1..T-1.
DeviationMatrix column_time_shift(const DeviationMatrix& devs, Rng& rng);

/// Reorders time blocks of length block_len, same order for every agent.
DeviationMatrix block_time_shuffle(const DeviationMatrix& devs, int block_len, Rng& rng);

DeviationMatrix draw_surrogate(const DeviationMatrix& devs, const SurrogateSpec& spec, Rng& rng);

double permutation_p_value(double observed, std::span<const double> null_values);

using Statistic = std::function<double(const DeviationMatrix&, const MacroSeries&)>;
using MultiStatistic = std::function<std::vector<double>(const DeviationMatrix&, const MacroSeries&)>;

/// Statistic on the observed data and on spec.B surrogates. The macro is
/// recomputed from the (shuffled) devs on both sides. Draw b uses the
/// substream derive_seed(derive_seed(seed, group_id), b), so results do not
/// depend on `threads`.
NullDistribution null_test(const Statistic& statistic,
                           const DeviationMatrix& devs,
                           MacroMode macro_mode,
                           const SurrogateSpec& spec,
                           std::string_view group_id = {},
                           int threads = 1);

/// Same, with several statistics sharing one set of surrogate draws.
std::vector<NullDistribution> null_test_multi(const MultiStatistic& statistic,
                                              const DeviationMatrix& devs,
                                              MacroMode macro_mode,
                                              const SurrogateSpec& spec,
                                              std::string_view group_id = {},
                                              int threads = 1);

/// Residuals of a per-agent OLS fit on (1, t). Needs T >= 3.
DeviationMatrix detrend_linear(const DeviationMatrix& devs);

/// Observed devs minus those of a binary-search group with the same N,
/// target and length. A null run that finishes early is held at its last
/// round.
DeviationMatrix functional_null_residuals(const GroupTrajectory& traj);

}  // namespace collective
