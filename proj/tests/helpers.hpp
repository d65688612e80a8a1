#pragma once

#include <collective/trajectory.hpp>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace testing {

inline collective::DeviationMatrix matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    const std::size_t n = rows.size();
    const std::size_t t = n ? rows.begin()->size() : 0;
    collective::DeviationMatrix m(n, t);
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) {
            m.at(i, j++) = v;
        }
        ++i;
    }
    return m;
}

// Builds a consistent trajectory from per-round guess vectors.
inline collective::GroupTrajectory make_traj(std::int64_t target, const std::vector<std::vector<int>>& rounds,
                                             std::string id = "g")
{
    collective::GroupTrajectory t;
    t.group_id = std::move(id);
    t.condition = "test";
    t.group_size = rounds.empty() ? 1 : static_cast<int>(rounds.front().size());
    t.target = target;
    int k = 1;
    for (const auto& g : rounds) {
        collective::RoundRecord r;
        r.t = k++;
        r.guesses = g;
        for (int v : g) {
            r.sum += v;
        }
        r.feedback = collective::feedback_for(r.sum, target);
        t.rounds.push_back(r);
    }
    t.success = !t.rounds.empty() && t.rounds.back().feedback == collective::Feedback::Correct;
    return t;
}

}  // namespace testing
