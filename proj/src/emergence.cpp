#include "collective/emergence.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

#include "collective/discretize.hpp"
#include "collective/stats.hpp"

namespace collective {

namespace {

void check_lengths(const DeviationMatrix& devs, const AnalysisSettings& settings)
{
    settings.validate();
    if (devs.rounds() <= static_cast<std::size_t>(settings.lag)) {
        throw std::invalid_argument("series too short: T = " + std::to_string(devs.rounds())
                                    + " <= lag " + std::to_string(settings.lag));
    }
}

std::vector<BinnedSeries> bin_agents(const DeviationMatrix& devs, int bins)
{
    std::vector<BinnedSeries> out;
    out.reserve(devs.agents());
    for (std::size_t i = 0; i < devs.agents(); ++i) {
        out.push_back(quantile_bin(devs.row(i), bins));
    }
    return out;
}

struct Lagged {
    std::size_t samples;
    std::size_t lag;

    BinnedSeries present(const BinnedSeries& s) const { return s.slice(0, samples); }
    BinnedSeries future(const BinnedSeries& s) const { return s.slice(lag, samples); }
};

Lagged lagged(const DeviationMatrix& devs, const AnalysisSettings& settings)
{
    const auto lag = static_cast<std::size_t>(settings.lag);
    return {devs.rounds() - lag, lag};
}

double snap_plugin(double value, const EstimatorSpec& est)
{
    if (est.kind == EstimatorKind::Plugin && value < 0.0 && value > -1e-12) {
        return 0.0;
    }
    return value;
}

}  // namespace

std::string_view to_string(DataVariant variant)
{
    switch (variant) {
    case DataVariant::Devs:
        return "devs";
    case DataVariant::Reactivity:
        return "reactivity";
    case DataVariant::Detrended:
        return "detrended";
    case DataVariant::FunctionalResidual:
        return "functional_residual";
    }
    return "?";
}

DataVariant data_variant_from_string(std::string_view text)
{
    if (text == "devs") {
        return DataVariant::Devs;
    }
    if (text == "reactivity") {
        return DataVariant::Reactivity;
    }
    if (text == "detrended") {
        return DataVariant::Detrended;
    }
    if (text == "functional_residual") {
        return DataVariant::FunctionalResidual;
    }
    throw std::invalid_argument("unknown data variant '" + std::string(text) + "'");
}

AnalysisSettings AnalysisSettings::main_preset()
{
    return {};
}

AnalysisSettings AnalysisSettings::jeffreys_preset()
{
    AnalysisSettings s;
    s.estimator = EstimatorSpec::jeffreys(0.5);
    return s;
}

AnalysisSettings AnalysisSettings::mmi_preset()
{
    AnalysisSettings s;
    s.estimator = EstimatorSpec::miller_madow();
    s.redundancy = RedundancyKind::Mmi;
    return s;
}

void AnalysisSettings::validate() const
{
    if (lag < 1) {
        throw std::invalid_argument("lag must be >= 1");
    }
    if (bins < 2) {
        throw std::invalid_argument("bins must be >= 2");
    }
    if (truncation && *truncation < 1) {
        throw std::invalid_argument("truncation horizon must be >= 1");
    }
    estimator.validate();
}

double practical_criterion(const DeviationMatrix& devs, const MacroSeries& macro, const AnalysisSettings& settings)
{
    check_lengths(devs, settings);
    if (macro.values.size() != devs.rounds()) {
        throw std::invalid_argument("macro series and deviation matrix are not aligned");
    }
    const Lagged lg = lagged(devs, settings);
    const BinnedSeries v = quantile_bin(macro.values, settings.bins);
    const BinnedSeries v_future = lg.future(v);
    constexpr std::array<int, 1> src{0};
    constexpr std::array<int, 1> tgt{1};

    const std::array<BinnedSeries, 2> self{lg.present(v), v_future};
    const double macro_term = mutual_information(contingency_table(self), src, tgt, settings.estimator);

    double parts = 0.0;
    for (const BinnedSeries& x : bin_agents(devs, settings.bins)) {
        const std::array<BinnedSeries, 2> axes{lg.present(x), v_future};
        parts += mutual_information(contingency_table(axes), src, tgt, settings.estimator);
    }
    return macro_term - parts;
}

CapacityResult emergence_capacity(const DeviationMatrix& devs, const AnalysisSettings& settings)
{
    if (devs.agents() < 2) {
        throw std::invalid_argument("emergence capacity needs at least two agents");
    }
    check_lengths(devs, settings);
    const Lagged lg = lagged(devs, settings);
    const std::vector<BinnedSeries> binned = bin_agents(devs, settings.bins);

    CapacityResult out;
    std::vector<double> values;
    const int n = static_cast<int>(devs.agents());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const BinnedSeries& xi = binned[static_cast<std::size_t>(i)];
            const BinnedSeries& xj = binned[static_cast<std::size_t>(j)];
            const std::array<BinnedSeries, 3> axes{lg.present(xi), lg.present(xj),
                                                   joint_encode(lg.future(xi), lg.future(xj))};
            const PidResult pid = pid_two_source(contingency_table(axes), settings.redundancy, settings.estimator);
            out.pairs.push_back({i, j, pid.syn});
            values.push_back(pid.syn);
        }
    }
    out.median = median(values);
    return out;
}

CoalitionResult coalition_scores(const DeviationMatrix& devs, const MacroSeries& macro, const AnalysisSettings& settings)
{
    if (devs.agents() < 3) {
        throw std::invalid_argument("coalition test needs at least three agents");
    }
    check_lengths(devs, settings);
    if (macro.values.size() != devs.rounds()) {
        throw std::invalid_argument("macro series and deviation matrix are not aligned");
    }
    const Lagged lg = lagged(devs, settings);
    std::vector<BinnedSeries> present;
    for (const BinnedSeries& b : bin_agents(devs, settings.bins)) {
        present.push_back(lg.present(b));
    }
    const BinnedSeries v_future = lg.future(quantile_bin(macro.values, settings.bins));

    constexpr std::array<int, 3> triple{0, 1, 2};
    constexpr std::array<int, 2> p01{0, 1};
    constexpr std::array<int, 2> p02{0, 2};
    constexpr std::array<int, 2> p12{1, 2};
    constexpr std::array<int, 1> target{3};

    CoalitionResult out;
    std::vector<double> i3s;
    std::vector<double> g3s;
    const int n = static_cast<int>(devs.agents());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            for (int k = j + 1; k < n; ++k) {
                const std::array<BinnedSeries, 4> axes{present[static_cast<std::size_t>(i)],
                                                       present[static_cast<std::size_t>(j)],
                                                       present[static_cast<std::size_t>(k)], v_future};
                const ContingencyTable table = contingency_table(axes);
                const EstimatorSpec& est = settings.estimator;
                const double i3 = mutual_information(table, triple, target, est);
                const double best_pair = std::max({mutual_information(table, p01, target, est),
                                                   mutual_information(table, p02, target, est),
                                                   mutual_information(table, p12, target, est)});
                const double g3 = snap_plugin(i3 - best_pair, est);
                if (g3 < 0.0) {
                    out.negative_g3 = true;
                }
                out.triplets.push_back({i, j, k, i3, g3});
                i3s.push_back(i3);
                g3s.push_back(g3);
            }
        }
    }
    out.i3_median = median(i3s);
    out.g3_median = median(g3s);
    return out;
}

EmergenceScores emergence_scores(const DeviationMatrix& devs, const MacroSeries& macro, const AnalysisSettings& settings)
{
    EmergenceScores out;
    out.s_macro = practical_criterion(devs, macro, settings);
    out.capacity = emergence_capacity(devs, settings);
    if (devs.agents() >= 3) {
        out.coalition = coalition_scores(devs, macro, settings);
    }
    return out;
}

}  // namespace collective
