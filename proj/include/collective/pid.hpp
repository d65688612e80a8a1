#pragma once

#include <string_view>

#include "collective/discretize.hpp"
#include "collective/infotheory.hpp"

namespace collective {

enum class RedundancyKind { Imin, Mmi };

std::string_view to_string(RedundancyKind kind);
RedundancyKind redundancy_kind_from_string(std::string_view text);

/// Atoms of a two-source decomposition of I({X,Y};T), in bits.
struct PidResult {
    double ui_x = 0.0;
    double ui_y = 0.0;
    double red = 0.0;
    double syn = 0.0;
    double total = 0.0;
    RedundancyKind redundancy_kind = RedundancyKind::Imin;
    EstimatorSpec estimator;
};

/// Two-source PID of a three-axis table ordered (X, Y, T).
///
/// imin: Red = sum_t p(t) min(I(X;T=t), I(Y;T=t)), outcomes with p(t) = 0
///       contributing nothing.
/// mmi:  Red = min(I(X;T), I(Y;T)).
///
/// The unique and synergistic atoms follow from the MI terms under `est`, so
/// the consistency and sum identities hold by construction.
PidResult pid_two_source(const ContingencyTable& joint, RedundancyKind kind, const EstimatorSpec& est);

}  // namespace collective
