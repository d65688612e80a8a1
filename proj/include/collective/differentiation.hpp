#pragma once

#include <map>
#include <string>
#include <string_view>

#include "collective/stats.hpp"
#include "collective/trajectory.hpp"

namespace collective {

/// m0: round intercept. m1: + agent intercept. m2: + agent slope on the
/// standardized round index. All random effects independent.
enum class LmmModel { M0 = 0, M1 = 1, M2 = 2 };

std::string_view to_string(LmmModel model);

struct LmmFit {
    LmmModel model = LmmModel::M0;
    double loglik = 0.0;
    /// residual, time_intercept, agent_intercept, agent_slope (absent terms omitted)
    std::map<std::string, double> variance_components;
    double fixed_intercept = 0.0;
    /// relative standard deviations (random-effect sd / residual sd)
    std::vector<double> theta;
    bool converged = false;
    int iterations = 0;
};

struct LmmOptions {
    int max_iterations = 4000;
    double tolerance = 1e-7;
};

/// Maximum-likelihood fit with the profiled deviance optimized over the
/// relative sds. Needs N >= 2, T >= 3 and some within-round variation.
LmmFit fit_lmm(const DeviationMatrix& devs, LmmModel model, const LmmOptions& options = {});

/// Same, also trying `start` (padded with zeros) as an initial point.
LmmFit fit_lmm(const DeviationMatrix& devs, LmmModel model, const std::vector<double>& start, const LmmOptions& options = {});

/// Profiled ML deviance (-2 loglik) at given relative sds.
double lmm_deviance(const DeviationMatrix& devs, LmmModel model, const std::vector<double>& theta);

/// 2 (loglik_big - loglik_small) clamped at 0, chi-square with one df per
/// added variance component.
TestResult lrt(const LmmFit& small, const LmmFit& big);

struct DiffTestResult {
    double p_intercept = 1.0;
    double p_slope = 1.0;
    bool flagged = false;
    /// No variation left after the round effect; the models cannot be
    /// compared and both p-values are 1.
    bool degenerate = false;
};

DiffTestResult differentiation_test(const DeviationMatrix& devs, double alpha = 0.05, const LmmOptions& options = {});

/// True when every round has zero spread across agents.
bool lacks_within_round_variation(const DeviationMatrix& devs);

}  // namespace collective
