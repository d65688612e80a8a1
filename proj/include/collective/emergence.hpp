#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "collective/infotheory.hpp"
#include "collective/pid.hpp"
#include "collective/trajectory.hpp"

namespace collective {

enum class DataVariant { Devs, Reactivity, Detrended, FunctionalResidual };

std::string_view to_string(DataVariant variant);
DataVariant data_variant_from_string(std::string_view text);

struct AnalysisSettings {
    int lag = 1;
    int bins = 2;
    EstimatorSpec estimator = EstimatorSpec::plugin();
    RedundancyKind redundancy = RedundancyKind::Imin;
    MacroMode macro_mode = MacroMode::GroupError;
    std::optional<int> truncation;
    DataVariant data_variant = DataVariant::Devs;

    /// imin + plug-in
    static AnalysisSettings main_preset();
    /// imin + Jeffreys(1/2)
    static AnalysisSettings jeffreys_preset();
    /// mmi + Miller-Madow
    static AnalysisSettings mmi_preset();

    void validate() const;
};

struct PairScore {
    int i = 0;
    int j = 0;
    double syn = 0.0;
};

struct CapacityResult {
    std::vector<PairScore> pairs;  // lexicographic (i < j)
    double median = 0.0;
};

struct TripletScore {
    int i = 0;
    int j = 0;
    int k = 0;
    double i3 = 0.0;
    double g3 = 0.0;
};

struct CoalitionResult {
    std::vector<TripletScore> triplets;  // lexicographic (i < j < k)
    double i3_median = 0.0;
    double g3_median = 0.0;
    /// Set when a bias-corrected estimator produced some G3 < 0. Values are
    /// reported as computed.
    bool negative_g3 = false;
};

struct EmergenceScores {
    double s_macro = 0.0;
    CapacityResult capacity;
    std::optional<CoalitionResult> coalition;  // needs N >= 3
};

/// S_macro(lag) = I(V_t; V_{t+lag}) - sum_k I(X_{k,t}; V_{t+lag}).
/// Every series is quantile-binned over its full length, then split into the
/// aligned (t, t+lag) pairs.
double practical_criterion(const DeviationMatrix& devs, const MacroSeries& macro, const AnalysisSettings& settings);

/// Pairwise synergy about the joint future (X_{i,t+lag}, X_{j,t+lag}) for every
/// unordered pair, and its median.
CapacityResult emergence_capacity(const DeviationMatrix& devs, const AnalysisSettings& settings);

/// I3 of every triplet against V_{t+lag}, and G3 = I3 - max pairwise I2 within
/// the triplet.
CoalitionResult coalition_scores(const DeviationMatrix& devs, const MacroSeries& macro, const AnalysisSettings& settings);

/// All three measures; coalition omitted for N < 3.
EmergenceScores emergence_scores(const DeviationMatrix& devs, const MacroSeries& macro, const AnalysisSettings& settings);

}  // namespace collective
