#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace collective {

enum class Feedback { High, Low, Correct };

std::string_view to_string(Feedback feedback);
Feedback feedback_from_string(std::string_view text);

/// Group-level feedback for a round whose guesses sum to `sum`.
Feedback feedback_for(std::int64_t sum, std::int64_t target);

struct RoundRecord {
    int t = 0;
    std::vector<int> guesses;
    std::int64_t sum = 0;
    Feedback feedback = Feedback::High;

    bool operator==(const RoundRecord&) const = default;
};

/// One game run. `valid == false` marks runs that were aborted (e.g. an LLM
/// agent never produced a usable answer); such runs are persisted for audit
/// but never analyzed.
struct GroupTrajectory {
    std::string group_id;
    std::string condition;
    int group_size = 0;
    std::int64_t target = 0;
    int guess_lo = 0;
    int guess_hi = 50;
    std::uint64_t seed = 0;
    bool success = false;
    bool valid = true;
    std::string abort_reason;
    std::vector<RoundRecord> rounds;

    std::size_t round_count() const { return rounds.size(); }
    bool operator==(const GroupTrajectory&) const = default;
};

class TrajectoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrajectoryParseError : public TrajectoryError {
public:
    TrajectoryParseError(std::size_t line, std::string field, const std::string& what);

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Throws TrajectoryError naming the violated invariant.
void validate(const GroupTrajectory& traj);

GroupTrajectory parse_trajectory_line(std::string_view line, std::size_t line_number = 1);
std::vector<GroupTrajectory> parse_trajectories(std::istream& in);
std::string serialize_trajectory(const GroupTrajectory& traj);
void write_trajectories(std::ostream& out, std::span<const GroupTrajectory> trajectories);

/// N x T matrix of equal-share deviations, row per agent.
class DeviationMatrix {
public:
    DeviationMatrix() = default;
    DeviationMatrix(std::size_t agents, std::size_t rounds, double fill = 0.0);

    std::size_t agents() const { return agents_; }
    std::size_t rounds() const { return rounds_; }

    double& at(std::size_t agent, std::size_t round) { return values_[agent * rounds_ + round]; }
    double at(std::size_t agent, std::size_t round) const { return values_[agent * rounds_ + round]; }

    std::span<double> row(std::size_t agent) { return {values_.data() + agent * rounds_, rounds_}; }
    std::span<const double> row(std::size_t agent) const
    {
        return {values_.data() + agent * rounds_, rounds_};
    }
    std::vector<double> column(std::size_t round) const;

    const std::vector<std::string>& agent_ids() const { return agent_ids_; }
    void set_agent_ids(std::vector<std::string> ids);

    bool operator==(const DeviationMatrix&) const = default;

private:
    std::size_t agents_ = 0;
    std::size_t rounds_ = 0;
    std::vector<double> values_;
    std::vector<std::string> agent_ids_;
};

enum class MacroMode { GroupError, Pc1 };

std::string_view to_string(MacroMode mode);
MacroMode macro_mode_from_string(std::string_view text);

struct MacroSeries {
    std::vector<double> values;
    MacroMode mode = MacroMode::GroupError;
};

DeviationMatrix equal_share_deviations(const GroupTrajectory& traj);

/// Macro series straight from the raw guesses. group_error is exact integer
/// arithmetic; pc1 goes through macro_from_devs.
MacroSeries macro_signal(const GroupTrajectory& traj, MacroMode mode);

/// Macro series from a (possibly transformed or shuffled) deviation matrix.
/// group_error sums each column in sorted order and snaps the result to a 1e-9
/// grid, so any permutation of a column yields a bit-identical value.
/// pc1 projects columns onto the leading eigenvector of the agent covariance,
/// loading sign fixed so the first nonzero entry is positive.
MacroSeries macro_from_devs(const DeviationMatrix& devs, MacroMode mode);

GroupTrajectory truncate(const GroupTrajectory& traj, int horizon);

/// First differences along time; T shrinks by one.
DeviationMatrix reactivity(const DeviationMatrix& devs);

}  // namespace collective
