#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "collective/random.hpp"
#include "collective/trajectory.hpp"

namespace collective {

struct GameConfig {
    int group_size = 10;
    int guess_lo = 0;
    int guess_hi = 50;
    std::optional<std::int64_t> target;
    int max_rounds = 30;
    std::uint64_t seed = 0;

    std::int64_t target_min() const { return static_cast<std::int64_t>(group_size) * guess_lo; }
    std::int64_t target_max() const { return static_cast<std::int64_t>(group_size) * guess_hi; }
    void validate() const;
};

/// Uniform on [N*guess_lo, N*guess_hi] unless the target is fixed.
std::int64_t sample_target(const GameConfig& config, Rng& rng);

struct BinarySearchState {
    int lo = 0;
    int hi = 50;
    std::optional<int> last_high_guess;
    std::optional<int> last_low_guess;
    std::optional<int> last_guess;
    int range_lo = 0;
    int range_hi = 50;

    static BinarySearchState start(int guess_lo, int guess_hi);
};

/// Applies the feedback on the previous guess (none on the first round) and
/// returns the next guess floor((lo+hi)/2). When the bracket empties it resets
/// to [min, max] of the last too-low and too-high guesses, which makes a
/// stuck group oscillate with period 2.
std::pair<int, BinarySearchState> binary_search_step(const BinarySearchState& state,
                                                     std::optional<Feedback> feedback);

struct OwnRound {
    int round = 0;
    int guess = 0;
    Feedback feedback = Feedback::High;
};

/// What an agent is allowed to see: its own guesses and the group feedback.
struct AgentView {
    int agent = 0;
    int round = 1;
    int guess_lo = 0;
    int guess_hi = 50;
    std::span<const OwnRound> history;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual int next_guess(const AgentView& view) = 0;
};

/// Thrown by a policy that cannot produce a guess; aborts the group run.
class PolicyAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::unique_ptr<Policy> make_null_agent(int guess_lo = 0, int guess_hi = 50);
std::unique_ptr<Policy> make_iid_uniform_agent(std::uint64_t seed);

/// Two agents whose binned states follow x' = x XOR y, y' = fresh bit; bit 0
/// maps to the lower 40% of the range, bit 1 to the upper 40%.
std::pair<std::unique_ptr<Policy>, std::unique_ptr<Policy>> make_xor_pair(std::uint64_t seed,
                                                                          int guess_lo = 0,
                                                                          int guess_hi = 50);

enum class PolicyKind { Null, IidUniform, XorPair };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view text);

/// N policies of one scripted kind. XorPair couples agents 0 and 1 and fills
/// the rest with iid-uniform agents.
std::vector<std::unique_ptr<Policy>> make_policies(PolicyKind kind, const GameConfig& config, std::uint64_t seed);

struct RunOptions {
    std::string group_id;
    std::string condition;
    /// Agents queried concurrently within a round; policies must then be
    /// independent of each other.
    int max_parallel = 1;
};

struct GroupRun {
    GroupTrajectory trajectory;
    int clamped_guesses = 0;
};

GroupRun run_group(const GameConfig& config,
                   std::span<const std::unique_ptr<Policy>> policies,
                   Rng& rng,
                   const RunOptions& options = {});

struct DifficultyCovariates {
    double mid_distance = 0.0;
    std::int64_t target_mod_n = 0;
};

DifficultyCovariates difficulty_covariates(const GroupTrajectory& traj);

}  // namespace collective
