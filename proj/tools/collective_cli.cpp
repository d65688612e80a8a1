// Command-line front end: simulate, run-llm, analyze, difftest, report.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "collective/pipeline.hpp"

using namespace collective;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json load_config(const std::string& path)
{
    if (path.empty()) {
        return json::object();
    }
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    }
}

json section(const json& cfg, const char* name)
{
    return cfg.contains(name) ? cfg.at(name) : json::object();
}

template <typename T>
void override(json& j, const char* key, const std::optional<T>& v)
{
    if (v) {
        j[key] = *v;
    }
}

std::uint64_t master_seed(const json& cfg, const std::optional<std::uint64_t>& flag)
{
    if (flag) {
        return *flag;
    }
    return cfg.contains("master_seed") ? cfg.at("master_seed").get<std::uint64_t>() : 0;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    return out;
}

std::vector<GroupTrajectory> read_trajectories(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open trajectories " + path);
    }
    return parse_trajectories(in);
}

struct GameFlags {
    std::optional<int> group_size;
    std::optional<int> max_rounds;
    std::optional<std::int64_t> target;

    void add(CLI::App* app)
    {
        app->add_option("--group-size", group_size, "agents per group");
        app->add_option("--max-rounds", max_rounds, "round budget");
        app->add_option("--target", target, "fixed target instead of a uniform draw");
    }

    GameConfig apply(const json& cfg) const
    {
        json g = section(cfg, "game");
        override(g, "group_size", group_size);
        override(g, "max_rounds", max_rounds);
        override(g, "target", target);
        return game_config_from_json(g);
    }
};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Emergence and falsification analysis for group guessing games"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (overrides master_seed)");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate scripted groups into a trajectory file");
    std::string sim_out;
    std::optional<int> sim_groups;
    std::optional<std::string> sim_policy;
    std::optional<std::string> sim_condition;
    bool sim_full = false;
    GameFlags sim_game;
    sim->add_option("--out", sim_out, "trajectory JSONL")->required();
    sim->add_option("--groups", sim_groups, "number of groups");
    sim->add_option("--policy", sim_policy, "null | iid | xor");
    sim->add_option("--condition", sim_condition, "condition label");
    sim->add_flag("--full-length", sim_full, "redraw groups until they use every round");
    sim_game.add(sim);

    // run-llm
    auto* llm = app.add_subcommand("run-llm", "play groups against a chat-completion endpoint");
    std::string llm_out;
    std::string llm_journal;
    std::optional<std::string> llm_condition;
    std::optional<std::string> llm_personas;
    std::optional<int> llm_groups;
    std::optional<std::string> llm_url;
    std::optional<std::string> llm_model;
    std::optional<double> llm_temperature;
    std::optional<int> llm_retries;
    GameFlags llm_game;
    llm->add_option("--out", llm_out, "trajectory JSONL")->required();
    llm->add_option("--journal", llm_journal, "exchange journal JSONL")->required();
    llm->add_option("--condition", llm_condition, "plain | persona | tom");
    llm->add_option("--personas", llm_personas, "persona file (blank-line separated)");
    llm->add_option("--groups", llm_groups, "number of groups");
    llm->add_option("--base-url", llm_url, "endpoint base URL");
    llm->add_option("--model", llm_model, "model name");
    llm->add_option("--temperature", llm_temperature, "sampling temperature");
    llm->add_option("--max-retries", llm_retries, "retries per request");
    llm_game.add(llm);

    // analyze
    auto* ana = app.add_subcommand("analyze", "emergence measures and null tests per group");
    std::string ana_in;
    std::string ana_out;
    std::optional<std::string> preset;
    std::optional<int> lag;
    std::optional<int> bins;
    std::optional<std::string> estimator;
    std::optional<double> jeffreys_alpha;
    std::optional<std::string> redundancy;
    std::optional<std::string> macro_mode;
    std::optional<int> truncation;
    std::optional<std::string> data_variant;
    std::optional<std::string> surrogate;
    std::optional<int> B;
    std::optional<int> block_len;
    ana->add_option("--in", ana_in, "trajectory JSONL")->required();
    ana->add_option("--out", ana_out, "per-group CSV")->required();
    ana->add_option("--preset", preset, "main | jeffreys | mmi");
    ana->add_option("--lag", lag);
    ana->add_option("--bins", bins);
    ana->add_option("--estimator", estimator, "plugin | jeffreys | miller_madow");
    ana->add_option("--jeffreys-alpha", jeffreys_alpha);
    ana->add_option("--redundancy", redundancy, "imin | mmi");
    ana->add_option("--macro-mode", macro_mode, "group_error | pc1");
    ana->add_option("--truncation", truncation, "analyze only the first H rounds");
    ana->add_option("--data-variant", data_variant, "devs | reactivity | detrended | functional_residual");
    ana->add_option("--surrogate", surrogate, "row_shuffle | column_time_shift | block_time_shuffle");
    ana->add_option("--B", B, "surrogates per group");
    ana->add_option("--block-len", block_len);

    // difftest
    auto* dt = app.add_subcommand("difftest", "agent-differentiation mixed-model tests");
    std::string dt_in;
    std::string dt_out;
    std::optional<int> dt_truncation;
    dt->add_option("--in", dt_in, "trajectory JSONL")->required();
    dt->add_option("--out", dt_out, "differentiation CSV")->required();
    dt->add_option("--truncation", dt_truncation);

    // report
    auto* rep = app.add_subcommand("report", "aggregate per-group CSV into a JSON report");
    std::string rep_in;
    std::string rep_out;
    double alpha = 0.05;
    std::string plot_csv;
    double winsor_lo = 0.01;
    double winsor_hi = 0.99;
    rep->add_option("--in", rep_in, "per-group CSV")->required();
    rep->add_option("--out", rep_out, "report JSON")->required();
    rep->add_option("--alpha", alpha);
    rep->add_option("--plot-csv", plot_csv, "also write winsorized values for plotting");
    rep->add_option("--winsor-lower", winsor_lo);
    rep->add_option("--winsor-upper", winsor_hi);

    CLI11_PARSE(app, argc, argv);

    try {
        const json cfg = load_config(config_path);
        const std::uint64_t master = master_seed(cfg, seed);

        if (*sim) {
            json s = section(cfg, "simulate");
            override(s, "groups", sim_groups);
            override(s, "policy", sim_policy);
            override(s, "condition", sim_condition);
            SimulateSettings settings;
            settings.game = sim_game.apply(cfg);
            settings.groups = s.value("groups", settings.groups);
            settings.policy = policy_kind_from_string(s.value("policy", std::string("iid")));
            settings.condition = s.value("condition", std::string(to_string(settings.policy)));
            settings.require_full_length = sim_full || s.value("full_length", false);
            const auto trajs = simulate_groups(settings, master, threads);
            auto out = open_out(sim_out);
            write_trajectories(out, trajs);
        } else if (*llm) {
            json l = section(cfg, "llm");
            json e = section(cfg, "endpoint");
            override(l, "condition", llm_condition);
            override(l, "personas", llm_personas);
            override(l, "groups", llm_groups);
            override(e, "base_url", llm_url);
            override(e, "model_name", llm_model);
            override(e, "temperature", llm_temperature);
            override(e, "max_retries", llm_retries);
            LlmRunSettings settings;
            settings.game = llm_game.apply(cfg);
            settings.endpoint = endpoint_config_from_json(e);
            settings.condition = prompt_condition_from_string(l.value("condition", std::string("plain")));
            settings.groups = l.value("groups", 1);
            settings.condition_label = l.value("label", std::string());
            if (l.contains("personas")) {
                settings.personas = load_personas(l.at("personas").get<std::string>());
            }
            settings.endpoint.validate();
            auto journal = std::make_shared<ExchangeJournal>(llm_journal);
            const auto trajs = run_llm_groups(settings, master, make_http_transport(settings.endpoint), journal);
            auto out = open_out(llm_out);
            write_trajectories(out, trajs);
            for (const auto& t : trajs) {
                if (!t.valid) {
                    std::cerr << "warning: group " << t.group_id << " aborted: " << t.abort_reason << '\n';
                }
            }
        } else if (*ana) {
            json a = section(cfg, "analysis");
            json s = section(cfg, "surrogate");
            override(a, "preset", preset);
            override(a, "lag", lag);
            override(a, "bins", bins);
            override(a, "estimator", estimator);
            override(a, "jeffreys_alpha", jeffreys_alpha);
            override(a, "redundancy", redundancy);
            override(a, "macro_mode", macro_mode);
            override(a, "truncation", truncation);
            override(a, "data_variant", data_variant);
            override(s, "kind", surrogate);
            override(s, "B", B);
            override(s, "block_len", block_len);
            const AnalysisSettings settings = analysis_settings_from_json(a);
            const SurrogateSpec spec = surrogate_spec_from_json(s, master);
            const auto trajs = read_trajectories(ana_in);
            const auto rows = analyze_groups(trajs, settings, spec, threads);
            ordered_json effective;
            effective["master_seed"] = master;
            effective["analysis"] = to_json(settings);
            effective["surrogate"] = to_json(spec);
            auto out = open_out(ana_out);
            write_rows_csv(out, rows, effective);
        } else if (*dt) {
            const auto trajs = read_trajectories(dt_in);
            const auto rows = difftest_groups(trajs, dt_truncation, threads);
            ordered_json effective;
            effective["truncation"] = dt_truncation ? ordered_json(*dt_truncation) : ordered_json(nullptr);
            auto out = open_out(dt_out);
            write_difftest_csv(out, rows, effective);
        } else if (*rep) {
            std::ifstream in(rep_in);
            if (!in) {
                throw std::runtime_error("cannot open " + rep_in);
            }
            const auto rows = read_rows_csv(in);
            if (rows.empty()) {
                std::cerr << "warning: no rows in " << rep_in << '\n';
            }
            auto out = open_out(rep_out);
            out << aggregate_report(rows, alpha).dump(2) << '\n';
            if (!plot_csv.empty()) {
                auto plot = open_out(plot_csv);
                write_plot_csv(plot, rows, winsor_lo, winsor_hi);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
