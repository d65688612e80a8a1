#pragma once

#include <span>
#include <string_view>

#include "collective/discretize.hpp"

namespace collective {

enum class EstimatorKind { Plugin, Jeffreys, MillerMadow };

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(std::string_view text);

/// Entropy estimator; all results are in bits.
struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Plugin;
    double jeffreys_alpha = 0.5;

    static EstimatorSpec plugin() { return {EstimatorKind::Plugin, 0.5}; }
    static EstimatorSpec jeffreys(double alpha = 0.5) { return {EstimatorKind::Jeffreys, alpha}; }
    static EstimatorSpec miller_madow() { return {EstimatorKind::MillerMadow, 0.5}; }

    void validate() const;
    bool operator==(const EstimatorSpec&) const = default;
};

/// Entropy of the whole table (all axes jointly).
///  plugin:       -sum p log2 p with p = count/total
///  jeffreys:     plug-in on (count + a) / (total + a*M) over all M cells
///  miller_madow: plug-in + (occupied - 1) / (2 total ln 2)
double entropy(const ContingencyTable& counts, const EstimatorSpec& est);

/// I(S;T) = H(S) + H(T) - H(S,T), each entropy under `est` on the grouped
/// marginal tables. Axis groups must be nonempty and disjoint; axes in neither
/// group are marginalized out. Miller-Madow and Jeffreys results are returned
/// unclamped.
double mutual_information(const ContingencyTable& joint,
                          std::span<const int> source_axes,
                          std::span<const int> target_axes,
                          const EstimatorSpec& est);

/// Specific information I(S; T=t) = sum_s p(s|t) log2[p(t|s)/p(t)], with
/// `target_cell` the zero-based cell of the target-group marginal. Plug-in
/// probabilities unless `est` is Jeffreys, in which case the (S,T) marginal is
/// smoothed first. Throws std::domain_error when p(T=t) = 0.
double specific_information(const ContingencyTable& joint,
                            std::span<const int> source_axes,
                            std::span<const int> target_axes,
                            std::size_t target_cell,
                            const EstimatorSpec& est = EstimatorSpec::plugin());

}  // namespace collective
