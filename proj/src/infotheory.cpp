#include "collective/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace collective {

namespace {

// Summing over the sorted nonzero counts makes the plug-in entropy a function
// of the count multiset alone, so relabeled or padded tables agree bit for bit.
double plugin_entropy(const std::vector<std::int64_t>& counts, std::int64_t total)
{
    std::vector<std::int64_t> nonzero;
    nonzero.reserve(counts.size());
    for (std::int64_t c : counts) {
        if (c > 0) {
            nonzero.push_back(c);
        }
    }
    std::sort(nonzero.begin(), nonzero.end());
    const double n = static_cast<double>(total);
    double acc = 0.0;
    for (std::int64_t c : nonzero) {
        const double cd = static_cast<double>(c);
        acc += cd * std::log2(cd);
    }
    return std::log2(n) - acc / n;
}

double smoothed_entropy(const std::vector<std::int64_t>& counts, std::int64_t total, double alpha)
{
    const double denom = static_cast<double>(total) + alpha * static_cast<double>(counts.size());
    std::vector<double> probs;
    probs.reserve(counts.size());
    for (std::int64_t c : counts) {
        probs.push_back((static_cast<double>(c) + alpha) / denom);
    }
    std::sort(probs.begin(), probs.end());
    double h = 0.0;
    for (double p : probs) {
        h -= p * std::log2(p);
    }
    return h;
}

void check_groups(const ContingencyTable& joint, std::span<const int> source, std::span<const int> target)
{
    if (source.empty() || target.empty()) {
        throw std::invalid_argument("invalid axis partition: empty axis group");
    }
    std::vector<bool> seen(joint.axis_count(), false);
    for (auto group : {source, target}) {
        for (int ax : group) {
            if (ax < 0 || static_cast<std::size_t>(ax) >= joint.axis_count()) {
                throw std::invalid_argument("invalid axis partition: axis out of range");
            }
            if (seen[static_cast<std::size_t>(ax)]) {
                throw std::invalid_argument("invalid axis partition: axis repeated");
            }
            seen[static_cast<std::size_t>(ax)] = true;
        }
    }
}

std::vector<int> concat(std::span<const int> a, std::span<const int> b)
{
    std::vector<int> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

std::string_view to_string(EstimatorKind kind)
{
    switch (kind) {
    case EstimatorKind::Plugin:
        return "plugin";
    case EstimatorKind::Jeffreys:
        return "jeffreys";
    case EstimatorKind::MillerMadow:
        return "miller_madow";
    }
    return "?";
}

EstimatorKind estimator_kind_from_string(std::string_view text)
{
    if (text == "plugin") {
        return EstimatorKind::Plugin;
    }
    if (text == "jeffreys") {
        return EstimatorKind::Jeffreys;
    }
    if (text == "miller_madow") {
        return EstimatorKind::MillerMadow;
    }
    throw std::invalid_argument("unknown estimator '" + std::string(text) + "'");
}

void EstimatorSpec::validate() const
{
    if (!(jeffreys_alpha > 0.0)) {
        throw std::invalid_argument("jeffreys_alpha must be > 0");
    }
}

double entropy(const ContingencyTable& counts, const EstimatorSpec& est)
{
    if (counts.total() <= 0) {
        throw std::invalid_argument("entropy of an empty table");
    }
    switch (est.kind) {
    case EstimatorKind::Plugin:
        return plugin_entropy(counts.counts(), counts.total());
    case EstimatorKind::Jeffreys:
        est.validate();
        return smoothed_entropy(counts.counts(), counts.total(), est.jeffreys_alpha);
    case EstimatorKind::MillerMadow: {
        const auto occupied = std::count_if(counts.counts().begin(), counts.counts().end(),
                                            [](std::int64_t c) { return c > 0; });
        return plugin_entropy(counts.counts(), counts.total())
               + static_cast<double>(occupied - 1)
                     / (2.0 * static_cast<double>(counts.total()) * std::numbers::ln2);
    }
    }
    throw std::logic_error("unhandled estimator");
}

double mutual_information(const ContingencyTable& joint,
                          std::span<const int> source_axes,
                          std::span<const int> target_axes,
                          const EstimatorSpec& est)
{
    check_groups(joint, source_axes, target_axes);
    const std::vector<int> both = concat(source_axes, target_axes);
    const double mi = entropy(joint.marginal(source_axes), est) + entropy(joint.marginal(target_axes), est)
                      - entropy(joint.marginal(both), est);
    if (est.kind == EstimatorKind::Plugin && mi < 0.0 && mi > -1e-12) {
        return 0.0;
    }
    return mi;
}

double specific_information(const ContingencyTable& joint,
                            std::span<const int> source_axes,
                            std::span<const int> target_axes,
                            std::size_t target_cell,
                            const EstimatorSpec& est)
{
    check_groups(joint, source_axes, target_axes);
    const ContingencyTable st = joint.marginal(concat(source_axes, target_axes));
    std::size_t n_target = 1;
    for (int ax : target_axes) {
        n_target *= static_cast<std::size_t>(joint.axis_alphabets()[static_cast<std::size_t>(ax)]);
    }
    const std::size_t n_source = st.cell_count() / n_target;
    if (target_cell >= n_target) {
        throw std::out_of_range("target level outside the target alphabet");
    }

    // probabilities p(s,t) laid out [s][t]
    std::vector<double> p(st.cell_count());
    const double total = static_cast<double>(st.total());
    if (est.kind == EstimatorKind::Jeffreys) {
        est.validate();
        const double denom = total + est.jeffreys_alpha * static_cast<double>(st.cell_count());
        for (std::size_t c = 0; c < p.size(); ++c) {
            p[c] = (static_cast<double>(st.counts()[c]) + est.jeffreys_alpha) / denom;
        }
    } else {
        for (std::size_t c = 0; c < p.size(); ++c) {
            p[c] = static_cast<double>(st.counts()[c]) / total;
        }
    }

    double p_t = 0.0;
    for (std::size_t s = 0; s < n_source; ++s) {
        p_t += p[s * n_target + target_cell];
    }
    if (!(p_t > 0.0)) {
        throw std::domain_error("undefined specific information: target level has zero probability");
    }

    double info = 0.0;
    for (std::size_t s = 0; s < n_source; ++s) {
        const double p_st = p[s * n_target + target_cell];
        if (p_st <= 0.0) {
            continue;
        }
        double p_s = 0.0;
        for (std::size_t t = 0; t < n_target; ++t) {
            p_s += p[s * n_target + t];
        }
        info += (p_st / p_t) * std::log2((p_st / p_s) / p_t);
    }
    return info;
}

}  // namespace collective
