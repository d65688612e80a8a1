#include "collective/surrogate.hpp"

#include <algorithm>
#include <future>
#include <numeric>

#include "collective/game.hpp"
#include "collective/stats.hpp"

namespace collective {

namespace {

std::vector<std::size_t> identity_perm(std::size_t n)
{
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return p;
}

void check_perm(const std::vector<std::size_t>& perm, std::size_t n)
{
    if (perm.size() != n) {
        throw std::invalid_argument("permutation has wrong length");
    }
    std::vector<bool> seen(n, false);
    for (std::size_t v : perm) {
        if (v >= n || seen[v]) {
            throw std::invalid_argument("not a permutation");
        }
        seen[v] = true;
    }
}

DeviationMatrix copy_shape(const DeviationMatrix& devs)
{
    DeviationMatrix out(devs.agents(), devs.rounds());
    out.set_agent_ids(devs.agent_ids());
    return out;
}

// Runs fn(b) for b in [0, B) on up to `threads` workers, collecting results in order.
template <typename Fn>
auto run_draws(int B, int threads, Fn fn)
{
    using R = decltype(fn(0));
    std::vector<R> out(static_cast<std::size_t>(B));
    if (threads <= 1) {
        for (int b = 0; b < B; ++b) {
            out[static_cast<std::size_t>(b)] = fn(b);
        }
        return out;
    }
    std::vector<std::future<void>> workers;
    for (int w = 0; w < threads; ++w) {
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (int b = w; b < B; b += threads) {
                out[static_cast<std::size_t>(b)] = fn(b);
            }
        }));
    }
    std::exception_ptr first;
    for (auto& f : workers) {
        try {
            f.get();
        } catch (...) {
            if (!first) {
                first = std::current_exception();
            }
        }
    }
    if (first) {
        std::rethrow_exception(first);
    }
    return out;
}

}  // namespace

std::string_view to_string(SurrogateKind kind)
{
    switch (kind) {
    case SurrogateKind::RowShuffle:
        return "row_shuffle";
    case SurrogateKind::ColumnTimeShift:
        return "column_time_shift";
    case SurrogateKind::BlockTimeShuffle:
        return "block_time_shuffle";
    }
    return "?";
}

SurrogateKind surrogate_kind_from_string(std::string_view text)
{
    if (text == "row_shuffle") {
        return SurrogateKind::RowShuffle;
    }
    if (text == "column_time_shift") {
        return SurrogateKind::ColumnTimeShift;
    }
    if (text == "block_time_shuffle") {
        return SurrogateKind::BlockTimeShuffle;
    }
    throw std::invalid_argument("unknown surrogate kind '" + std::string(text) + "'");
}

void SurrogateSpec::validate() const
{
    if (B < 19) {
        throw std::invalid_argument("surrogate count B must be >= 19");
    }
    if (block_len < 1) {
        throw std::invalid_argument("block_len must be >= 1");
    }
}

SurrogateError::SurrogateError(int index, const std::string& what)
    : std::runtime_error("surrogate " + std::to_string(index) + ": " + what),
      index_(index)
{
}

DeviationMatrix permute_within_rounds(const DeviationMatrix& devs, const std::vector<std::vector<std::size_t>>& perms)
{
    if (perms.size() != devs.rounds()) {
        throw std::invalid_argument("need one permutation per round");
    }
    DeviationMatrix out = copy_shape(devs);
    for (std::size_t t = 0; t < devs.rounds(); ++t) {
        check_perm(perms[t], devs.agents());
        for (std::size_t i = 0; i < devs.agents(); ++i) {
            out.at(i, t) = devs.at(perms[t][i], t);
        }
    }
    return out;
}

DeviationMatrix rotate_rows(const DeviationMatrix& devs, const std::vector<std::size_t>& offsets)
{
    if (offsets.size() != devs.agents()) {
        throw std::invalid_argument("need one offset per agent");
    }
    const std::size_t T = devs.rounds();
    DeviationMatrix out = copy_shape(devs);
    for (std::size_t i = 0; i < devs.agents(); ++i) {
        const std::size_t k = T == 0 ? 0 : offsets[i] % T;
        for (std::size_t t = 0; t < T; ++t) {
            out.at(i, (t + k) % T) = devs.at(i, t);
        }
    }
    return out;
}

DeviationMatrix permute_blocks(const DeviationMatrix& devs, int block_len, const std::vector<std::size_t>& block_order)
{
    if (block_len < 1) {
        throw std::invalid_argument("block_len must be >= 1");
    }
    const std::size_t T = devs.rounds();
    const auto L = static_cast<std::size_t>(block_len);
    const std::size_t blocks = (T + L - 1) / L;
    check_perm(block_order, blocks);
    std::vector<std::size_t> time_map;
    time_map.reserve(T);
    for (std::size_t b : block_order) {
        for (std::size_t t = b * L; t < std::min(T, (b + 1) * L); ++t) {
            time_map.push_back(t);
        }
    }
    DeviationMatrix out = copy_shape(devs);
    for (std::size_t i = 0; i < devs.agents(); ++i) {
        for (std::size_t t = 0; t < T; ++t) {
            out.at(i, t) = devs.at(i, time_map[t]);
        }
    }
    return out;
}

DeviationMatrix row_shuffle(const DeviationMatrix& devs, Rng& rng)
{
    std::vector<std::vector<std::size_t>> perms(devs.rounds());
    for (auto& p : perms) {
        p = identity_perm(devs.agents());
        std::shuffle(p.begin(), p.end(), rng);
    }
    return permute_within_rounds(devs, perms);
}

DeviationMatrix column_time_shift(const DeviationMatrix& devs, Rng& rng)
{
    const std::size_t T = devs.rounds();
    if (T < 2) {
        throw std::invalid_argument("column time shift needs T >= 2");
    }
    std::uniform_int_distribution<std::size_t> dist(1, T - 1);
    std::vector<std::size_t> offsets(devs.agents());
    for (auto& k : offsets) {
        k = dist(rng);
    }
    return rotate_rows(devs, offsets);
}

DeviationMatrix block_time_shuffle(const DeviationMatrix& devs, int block_len, Rng& rng)
{
    if (block_len < 1) {
        throw std::invalid_argument("block_len must be >= 1");
    }
    const std::size_t T = devs.rounds();
    const auto L = static_cast<std::size_t>(block_len);
    if (T < 2 * L) {
        throw std::invalid_argument("block shuffle needs T >= 2 * block_len");
    }
    std::vector<std::size_t> order = identity_perm((T + L - 1) / L);
    std::shuffle(order.begin(), order.end(), rng);
    return permute_blocks(devs, block_len, order);
}

DeviationMatrix draw_surrogate(const DeviationMatrix& devs, const SurrogateSpec& spec, Rng& rng)
{
    switch (spec.kind) {
    case SurrogateKind::RowShuffle:
        return row_shuffle(devs, rng);
    case SurrogateKind::ColumnTimeShift:
        return column_time_shift(devs, rng);
    case SurrogateKind::BlockTimeShuffle:
        return block_time_shuffle(devs, spec.block_len, rng);
    }
    throw std::logic_error("unreachable surrogate kind");
}

double permutation_p_value(double observed, std::span<const double> null_values)
{
    const auto r = std::count_if(null_values.begin(), null_values.end(), [&](double v) { return v >= observed; });
    return (1.0 + static_cast<double>(r)) / (static_cast<double>(null_values.size()) + 1.0);
}

std::vector<NullDistribution> null_test_multi(const MultiStatistic& statistic,
                                              const DeviationMatrix& devs,
                                              MacroMode macro_mode,
                                              const SurrogateSpec& spec,
                                              std::string_view group_id,
                                              int threads)
{
    spec.validate();
    const std::vector<double> observed = statistic(devs, macro_from_devs(devs, macro_mode));
    const std::uint64_t group_seed = derive_seed(spec.seed, group_id);

    const auto draws = run_draws(spec.B, threads, [&](int b) {
        Rng rng(derive_seed(group_seed, static_cast<std::uint64_t>(b)));
        try {
            const DeviationMatrix s = draw_surrogate(devs, spec, rng);
            std::vector<double> v = statistic(s, macro_from_devs(s, macro_mode));
            if (v.size() != observed.size()) {
                throw std::runtime_error("statistic changed arity");
            }
            return v;
        } catch (const std::exception& e) {
            throw SurrogateError(b, e.what());
        }
    });

    std::vector<NullDistribution> out(observed.size());
    for (std::size_t m = 0; m < observed.size(); ++m) {
        NullDistribution& nd = out[m];
        nd.observed = observed[m];
        nd.null_values.reserve(draws.size());
        for (const auto& d : draws) {
            nd.null_values.push_back(d[m]);
        }
        nd.p_value = permutation_p_value(nd.observed, nd.null_values);
        nd.bias_corrected = nd.observed - median(nd.null_values);
    }
    return out;
}

NullDistribution null_test(const Statistic& statistic,
                           const DeviationMatrix& devs,
                           MacroMode macro_mode,
                           const SurrogateSpec& spec,
                           std::string_view group_id,
                           int threads)
{
    auto wrapped = [&](const DeviationMatrix& d, const MacroSeries& m) { return std::vector<double>{statistic(d, m)}; };
    return null_test_multi(wrapped, devs, macro_mode, spec, group_id, threads).front();
}

DeviationMatrix detrend_linear(const DeviationMatrix& devs)
{
    const std::size_t T = devs.rounds();
    if (T < 3) {
        throw std::invalid_argument("detrending needs T >= 3");
    }
    const double tbar = static_cast<double>(T - 1) / 2.0;
    double stt = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        stt += (static_cast<double>(t) - tbar) * (static_cast<double>(t) - tbar);
    }
    DeviationMatrix out = copy_shape(devs);
    for (std::size_t i = 0; i < devs.agents(); ++i) {
        const auto row = devs.row(i);
        const double ybar = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(T);
        double sty = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            sty += (static_cast<double>(t) - tbar) * (row[t] - ybar);
        }
        const double slope = sty / stt;
        for (std::size_t t = 0; t < T; ++t) {
            out.at(i, t) = row[t] - ybar - slope * (static_cast<double>(t) - tbar);
        }
    }
    return out;
}

DeviationMatrix functional_null_residuals(const GroupTrajectory& traj)
{
    validate(traj);
    const DeviationMatrix observed = equal_share_deviations(traj);
    if (observed.rounds() == 0) {
        return observed;
    }

    GameConfig config;
    config.group_size = traj.group_size;
    config.guess_lo = traj.guess_lo;
    config.guess_hi = traj.guess_hi;
    config.target = traj.target;
    config.max_rounds = static_cast<int>(observed.rounds());
    config.seed = traj.seed;
    const auto policies = make_policies(PolicyKind::Null, config, traj.seed);
    Rng rng(traj.seed);
    const GroupRun null_run = run_group(config, policies, rng, {traj.group_id, "functional_null", 1});
    const DeviationMatrix null_devs = equal_share_deviations(null_run.trajectory);

    DeviationMatrix out = observed;
    const std::size_t last = null_devs.rounds() - 1;
    for (std::size_t i = 0; i < observed.agents(); ++i) {
        for (std::size_t t = 0; t < observed.rounds(); ++t) {
            out.at(i, t) = observed.at(i, t) - null_devs.at(i, std::min(t, last));
        }
    }
    return out;
}

}  // namespace collective
