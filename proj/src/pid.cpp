#include "collective/pid.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace collective {

namespace {

// Cancellation in H(S)+H(T)-H(S,T) leaves residue of order 1e-16 on atoms that
// are exactly zero; under plug-in the atoms are nonnegative, so snap it.
double snap_noise(double atom, const EstimatorSpec& est)
{
    if (est.kind == EstimatorKind::Plugin && atom < 0.0 && atom > -1e-12) {
        return 0.0;
    }
    return atom;
}

}  // namespace

std::string_view to_string(RedundancyKind kind)
{
    return kind == RedundancyKind::Imin ? "imin" : "mmi";
}

RedundancyKind redundancy_kind_from_string(std::string_view text)
{
    if (text == "imin") {
        return RedundancyKind::Imin;
    }
    if (text == "mmi") {
        return RedundancyKind::Mmi;
    }
    throw std::invalid_argument("unknown redundancy kind '" + std::string(text) + "'");
}

PidResult pid_two_source(const ContingencyTable& joint, RedundancyKind kind, const EstimatorSpec& est)
{
    if (joint.axis_count() != 3) {
        throw std::invalid_argument("PID table must have exactly three axes (X, Y, T)");
    }
    if (joint.total() < 1) {
        throw std::invalid_argument("PID table is empty");
    }
    constexpr std::array<int, 1> x{0};
    constexpr std::array<int, 1> y{1};
    constexpr std::array<int, 2> xy{0, 1};
    constexpr std::array<int, 1> t{2};

    const double i_x = mutual_information(joint, x, t, est);
    const double i_y = mutual_information(joint, y, t, est);
    const double i_xy = mutual_information(joint, xy, t, est);

    double red = 0.0;
    if (kind == RedundancyKind::Mmi) {
        red = std::min(i_x, i_y);
    } else {
        const ContingencyTable target = joint.marginal(t);
        const bool smoothed = est.kind == EstimatorKind::Jeffreys;
        const double alpha = est.jeffreys_alpha;
        // p(t) as the marginal of the smoothed (X,T) table the specific
        // information is computed from
        const double k_x = static_cast<double>(joint.axis_alphabets()[0]);
        const double k_t = static_cast<double>(joint.axis_alphabets()[2]);
        const double denom = static_cast<double>(target.total()) + (smoothed ? alpha * k_x * k_t : 0.0);
        const double per_target_cell = smoothed ? alpha * k_x : 0.0;
        const EstimatorSpec spec_est = smoothed ? est : EstimatorSpec::plugin();
        for (std::size_t level = 0; level < target.cell_count(); ++level) {
            const double p_t = (static_cast<double>(target.counts()[level]) + per_target_cell) / denom;
            if (!(p_t > 0.0)) {
                continue;
            }
            const double sx = specific_information(joint, x, t, level, spec_est);
            const double sy = specific_information(joint, y, t, level, spec_est);
            red += p_t * std::min(sx, sy);
        }
    }

    PidResult out;
    out.redundancy_kind = kind;
    out.estimator = est;
    out.total = i_xy;
    out.red = snap_noise(red, est);
    out.ui_x = snap_noise(i_x - out.red, est);
    out.ui_y = snap_noise(i_y - out.red, est);
    out.syn = snap_noise(i_xy - out.ui_x - out.ui_y - out.red, est);
    return out;
}

}  // namespace collective
