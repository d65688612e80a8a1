#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "collective/differentiation.hpp"
#include "collective/emergence.hpp"
#include "collective/game.hpp"
#include "collective/llm_adapter.hpp"
#include "collective/surrogate.hpp"

namespace collective {

struct SimulateSettings {
    GameConfig game;
    PolicyKind policy = PolicyKind::IidUniform;
    std::string condition = "sim";
    int groups = 10;
    /// keep redrawing a group (fresh substream) until it runs all max_rounds
    bool require_full_length = false;
};

/// Group g gets group_id "<condition>-<g, 4 digits>" and seed
/// derive_seed(master_seed, g); independent of thread count.
std::vector<GroupTrajectory> simulate_groups(const SimulateSettings& settings, std::uint64_t master_seed, int threads = 1);

struct LlmRunSettings {
    GameConfig game;
    EndpointConfig endpoint;
    PromptCondition condition = PromptCondition::Plain;
    std::vector<std::string> personas;
    int groups = 1;
    std::string condition_label;  // defaults to the prompt condition name
};

/// Runs LLM-backed groups sequentially; aborted groups come back with
/// valid=false and their completed rounds.
std::vector<GroupTrajectory> run_llm_groups(const LlmRunSettings& settings,
                                            std::uint64_t master_seed,
                                            std::shared_ptr<ChatTransport> transport,
                                            std::shared_ptr<ExchangeJournal> journal,
                                            std::function<void(std::chrono::milliseconds)> sleep = {});

struct MeasureResult {
    double value = 0.0;
    double bias_corrected = 0.0;
    double p_value = 1.0;
};

struct GroupRow {
    std::string group_id;
    std::string condition;
    std::string status = "ok";  // ok | skipped
    std::string skip_reason;
    int rounds = 0;
    bool success = false;
    std::int64_t target = 0;
    double mid_distance = 0.0;
    std::int64_t target_mod_n = 0;
    std::optional<MeasureResult> s_macro;
    std::optional<MeasureResult> capacity;
    std::optional<MeasureResult> i3;
    std::optional<MeasureResult> g3;
    bool negative_g3 = false;
    std::optional<DiffTestResult> diff;

    bool analyzed() const { return status == "ok"; }
};

/// Data variant + all three measures with their surrogate nulls, plus the
/// differentiation test on the (truncated) equal-share deviations. Groups
/// that cannot be analyzed come back with status "skipped" and a reason.
GroupRow analyze_group(const GroupTrajectory& traj, const AnalysisSettings& settings, const SurrogateSpec& spec);

std::vector<GroupRow> analyze_groups(std::span<const GroupTrajectory> trajs,
                                     const AnalysisSettings& settings,
                                     const SurrogateSpec& spec,
                                     int threads = 1);

/// Differentiation-only rows (the difftest subcommand).
std::vector<GroupRow> difftest_groups(std::span<const GroupTrajectory> trajs,
                                      std::optional<int> truncation,
                                      int threads = 1);

std::string format_number(double value);

/// CSV with a leading "# config: <json>" comment line.
void write_rows_csv(std::ostream& out, std::span<const GroupRow> rows, const nlohmann::ordered_json& config);
std::vector<GroupRow> read_rows_csv(std::istream& in);
void write_difftest_csv(std::ostream& out, std::span<const GroupRow> rows, const nlohmann::ordered_json& config);

inline const std::vector<std::string>& measure_names()
{
    static const std::vector<std::string> names{"s_macro", "capacity", "i3", "g3"};
    return names;
}

const std::optional<MeasureResult>& measure_of(const GroupRow& row, const std::string& name);

/// Per-condition and pooled aggregates plus pairwise condition comparisons.
nlohmann::ordered_json aggregate_report(std::span<const GroupRow> rows, double alpha = 0.05);

/// Winsorized measure values for plotting only.
void write_plot_csv(std::ostream& out, std::span<const GroupRow> rows, double lower_q, double upper_q);

// JSON config <-> settings. Unknown keys are rejected.
AnalysisSettings analysis_settings_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AnalysisSettings& s);
SurrogateSpec surrogate_spec_from_json(const nlohmann::json& j, std::uint64_t default_seed);
nlohmann::ordered_json to_json(const SurrogateSpec& s);
GameConfig game_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const GameConfig& g);
EndpointConfig endpoint_config_from_json(const nlohmann::json& j);

}  // namespace collective
