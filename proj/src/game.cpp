#include "collective/game.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <mutex>

namespace collective {

namespace {

int floor_mid(int lo, int hi)
{
    const int sum = lo + hi;
    return sum >= 0 ? sum / 2 : -((-sum + 1) / 2);
}

class NullAgent final : public Policy {
public:
    NullAgent(int guess_lo, int guess_hi) : state_(BinarySearchState::start(guess_lo, guess_hi)) {}

    int next_guess(const AgentView& view) override
    {
        std::optional<Feedback> fb;
        if (!view.history.empty()) {
            fb = view.history.back().feedback;
        }
        auto [guess, next] = binary_search_step(state_, fb);
        state_ = next;
        return guess;
    }

private:
    BinarySearchState state_;
};

class IidUniformAgent final : public Policy {
public:
    explicit IidUniformAgent(std::uint64_t seed) : rng_(seed) {}

    int next_guess(const AgentView& view) override
    {
        std::uniform_int_distribution<int> dist(view.guess_lo, view.guess_hi);
        return dist(rng_);
    }

private:
    Rng rng_;
};

// Hidden bit process shared by the two coupled agents; bits are generated
// lazily in round order so the result is independent of query order.
class XorProcess {
public:
    explicit XorProcess(std::uint64_t seed) : rng_(seed) {}

    int bit(int role, int round)
    {
        std::lock_guard lock(mutex_);
        while (static_cast<int>(bits_.size()) < round) {
            if (bits_.empty()) {
                bits_.push_back({coin(), coin()});
            } else {
                const auto [x, y] = bits_.back();
                bits_.push_back({x ^ y, coin()});
            }
        }
        const auto& state = bits_[static_cast<std::size_t>(round - 1)];
        return role == 0 ? state.first : state.second;
    }

private:
    int coin() { return static_cast<int>(rng_() >> 63); }

    std::mutex mutex_;
    Rng rng_;
    std::vector<std::pair<int, int>> bits_;
};

class XorAgent final : public Policy {
public:
    XorAgent(std::shared_ptr<XorProcess> process, int role, std::uint64_t seed)
        : process_(std::move(process)),
          role_(role),
          rng_(seed)
    {
    }

    int next_guess(const AgentView& view) override
    {
        const int bit = process_->bit(role_, view.round);
        const int width = std::max(1, (view.guess_hi - view.guess_lo + 1) * 2 / 5);
        std::uniform_int_distribution<int> dist(0, width - 1);
        const int offset = dist(rng_);
        return bit == 0 ? view.guess_lo + offset : view.guess_hi - offset;
    }

private:
    std::shared_ptr<XorProcess> process_;
    int role_;
    Rng rng_;
};

}  // namespace

void GameConfig::validate() const
{
    if (group_size < 1) {
        throw std::invalid_argument("group_size must be >= 1");
    }
    if (guess_lo >= guess_hi) {
        throw std::invalid_argument("guess_lo must be below guess_hi");
    }
    if (max_rounds < 1) {
        throw std::invalid_argument("max_rounds must be >= 1");
    }
    if (target && (*target < target_min() || *target > target_max())) {
        throw std::invalid_argument("fixed target outside [N*guess_lo, N*guess_hi]");
    }
}

std::int64_t sample_target(const GameConfig& config, Rng& rng)
{
    config.validate();
    if (config.target) {
        return *config.target;
    }
    std::uniform_int_distribution<std::int64_t> dist(config.target_min(), config.target_max());
    return dist(rng);
}

BinarySearchState BinarySearchState::start(int guess_lo, int guess_hi)
{
    BinarySearchState s;
    s.lo = guess_lo;
    s.hi = guess_hi;
    s.range_lo = guess_lo;
    s.range_hi = guess_hi;
    return s;
}

std::pair<int, BinarySearchState> binary_search_step(const BinarySearchState& state,
                                                     std::optional<Feedback> feedback)
{
    BinarySearchState next = state;
    if (feedback && next.last_guess) {
        const int last = *next.last_guess;
        if (*feedback == Feedback::Correct) {
            return {last, next};
        }
        if (*feedback == Feedback::High) {
            next.hi = last - 1;
            next.last_high_guess = last;
        } else {
            next.lo = last + 1;
            next.last_low_guess = last;
        }
    }
    if (next.lo > next.hi) {
        if (next.last_low_guess && next.last_high_guess) {
            next.lo = std::min(*next.last_low_guess, *next.last_high_guess);
            next.hi = std::max(*next.last_low_guess, *next.last_high_guess);
        } else if (next.last_high_guess) {
            next.lo = next.hi = next.range_lo;
        } else {
            next.lo = next.hi = next.range_hi;
        }
    }
    next.lo = std::max(next.lo, next.range_lo);
    next.hi = std::min(next.hi, next.range_hi);
    const int guess = floor_mid(next.lo, next.hi);
    next.last_guess = guess;
    return {guess, next};
}

std::unique_ptr<Policy> make_null_agent(int guess_lo, int guess_hi)
{
    return std::make_unique<NullAgent>(guess_lo, guess_hi);
}

std::unique_ptr<Policy> make_iid_uniform_agent(std::uint64_t seed)
{
    return std::make_unique<IidUniformAgent>(seed);
}

std::pair<std::unique_ptr<Policy>, std::unique_ptr<Policy>> make_xor_pair(std::uint64_t seed, int, int)
{
    auto process = std::make_shared<XorProcess>(derive_seed(seed, std::uint64_t{0}));
    return {std::make_unique<XorAgent>(process, 0, derive_seed(seed, std::uint64_t{1})),
            std::make_unique<XorAgent>(process, 1, derive_seed(seed, std::uint64_t{2}))};
}

std::string_view to_string(PolicyKind kind)
{
    switch (kind) {
    case PolicyKind::Null:
        return "null";
    case PolicyKind::IidUniform:
        return "iid";
    case PolicyKind::XorPair:
        return "xor";
    }
    return "?";
}

PolicyKind policy_kind_from_string(std::string_view text)
{
    if (text == "null") {
        return PolicyKind::Null;
    }
    if (text == "iid") {
        return PolicyKind::IidUniform;
    }
    if (text == "xor") {
        return PolicyKind::XorPair;
    }
    throw std::invalid_argument("unknown policy '" + std::string(text) + "'");
}

std::vector<std::unique_ptr<Policy>> make_policies(PolicyKind kind, const GameConfig& config, std::uint64_t seed)
{
    config.validate();
    std::vector<std::unique_ptr<Policy>> out;
    const auto n = static_cast<std::size_t>(config.group_size);
    if (kind == PolicyKind::XorPair) {
        if (n < 2) {
            throw std::invalid_argument("xor policy needs at least two agents");
        }
        auto [a, b] = make_xor_pair(derive_seed(seed, std::uint64_t{1000}), config.guess_lo, config.guess_hi);
        out.push_back(std::move(a));
        out.push_back(std::move(b));
    }
    for (std::size_t i = out.size(); i < n; ++i) {
        if (kind == PolicyKind::Null) {
            out.push_back(make_null_agent(config.guess_lo, config.guess_hi));
        } else {
            out.push_back(make_iid_uniform_agent(derive_seed(seed, static_cast<std::uint64_t>(i))));
        }
    }
    return out;
}

GroupRun run_group(const GameConfig& config,
                   std::span<const std::unique_ptr<Policy>> policies,
                   Rng& rng,
                   const RunOptions& options)
{
    config.validate();
    if (policies.size() != static_cast<std::size_t>(config.group_size)) {
        throw std::invalid_argument("need exactly one policy per agent");
    }

    GroupRun run;
    GroupTrajectory& traj = run.trajectory;
    traj.group_id = options.group_id;
    traj.condition = options.condition;
    traj.group_size = config.group_size;
    traj.guess_lo = config.guess_lo;
    traj.guess_hi = config.guess_hi;
    traj.seed = config.seed;
    traj.target = sample_target(config, rng);

    const auto n = static_cast<std::size_t>(config.group_size);
    std::vector<std::vector<OwnRound>> histories(n);
    const auto ask = [&](std::size_t agent, int round) {
        AgentView view{static_cast<int>(agent), round, config.guess_lo, config.guess_hi, histories[agent]};
        return policies[agent]->next_guess(view);
    };

    for (int round = 1; round <= config.max_rounds; ++round) {
        std::vector<int> guesses(n);
        try {
            if (options.max_parallel <= 1) {
                for (std::size_t i = 0; i < n; ++i) {
                    guesses[i] = ask(i, round);
                }
            } else {
                const auto batch = static_cast<std::size_t>(options.max_parallel);
                for (std::size_t start = 0; start < n; start += batch) {
                    std::vector<std::future<int>> pending;
                    for (std::size_t i = start; i < std::min(n, start + batch); ++i) {
                        pending.push_back(std::async(std::launch::async, ask, i, round));
                    }
                    // collect all before rethrowing so no task outlives the round
                    std::exception_ptr first_error;
                    for (std::size_t k = 0; k < pending.size(); ++k) {
                        try {
                            guesses[start + k] = pending[k].get();
                        } catch (...) {
                            if (!first_error) {
                                first_error = std::current_exception();
                            }
                        }
                    }
                    if (first_error) {
                        std::rethrow_exception(first_error);
                    }
                }
            }
        } catch (const PolicyAbort& e) {
            traj.valid = false;
            traj.abort_reason = "round " + std::to_string(round) + ": " + e.what();
            break;
        }

        RoundRecord rec;
        rec.t = round;
        for (int& g : guesses) {
            const int clamped = std::clamp(g, config.guess_lo, config.guess_hi);
            if (clamped != g) {
                ++run.clamped_guesses;
                g = clamped;
            }
            rec.sum += g;
        }
        rec.guesses = guesses;
        rec.feedback = feedback_for(rec.sum, traj.target);
        for (std::size_t i = 0; i < n; ++i) {
            histories[i].push_back({round, guesses[i], rec.feedback});
        }
        traj.rounds.push_back(std::move(rec));
        if (traj.rounds.back().feedback == Feedback::Correct) {
            traj.success = true;
            break;
        }
    }
    return run;
}

DifficultyCovariates difficulty_covariates(const GroupTrajectory& traj)
{
    DifficultyCovariates out;
    const double mid = static_cast<double>(traj.group_size) * (traj.guess_lo + traj.guess_hi) / 2.0;
    out.mid_distance = std::abs(static_cast<double>(traj.target) - mid);
    const std::int64_t n = traj.group_size;
    out.target_mod_n = ((traj.target % n) + n) % n;
    return out;
}

}  // namespace collective
