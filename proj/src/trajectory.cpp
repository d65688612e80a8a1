#include "collective/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace collective {

namespace {

using nlohmann::json;

struct Violation {
    std::string field;
    std::string message;
};

std::optional<Violation> find_violation(const GroupTrajectory& traj)
{
    if (traj.group_size < 1) {
        return Violation{"group_size", "group_size must be >= 1"};
    }
    if (traj.guess_lo >= traj.guess_hi) {
        return Violation{"guess_lo", "guess_lo must be below guess_hi"};
    }
    for (std::size_t r = 0; r < traj.rounds.size(); ++r) {
        const RoundRecord& round = traj.rounds[r];
        const std::string where = "round " + std::to_string(r + 1) + ": ";
        if (round.t != static_cast<int>(r) + 1) {
            return Violation{"rounds.t", where + "round indices must be contiguous from 1 (got "
                                             + std::to_string(round.t) + ")"};
        }
        if (round.guesses.size() != static_cast<std::size_t>(traj.group_size)) {
            return Violation{"rounds.guesses", where + "expected " + std::to_string(traj.group_size)
                                                   + " guesses, got "
                                                   + std::to_string(round.guesses.size())};
        }
        std::int64_t total = 0;
        for (int g : round.guesses) {
            if (g < traj.guess_lo || g > traj.guess_hi) {
                return Violation{"rounds.guesses", where + "guess " + std::to_string(g)
                                                       + " outside range ["
                                                       + std::to_string(traj.guess_lo) + ", "
                                                       + std::to_string(traj.guess_hi) + "]"};
            }
            total += g;
        }
        if (total != round.sum) {
            return Violation{"rounds.sum", where + "sum mismatch (recorded " + std::to_string(round.sum)
                                               + ", guesses sum to " + std::to_string(total) + ")"};
        }
        if (feedback_for(round.sum, traj.target) != round.feedback) {
            return Violation{"rounds.feedback",
                             where + "feedback mismatch (recorded "
                                 + std::string(to_string(round.feedback)) + ", expected "
                                 + std::string(to_string(feedback_for(round.sum, traj.target))) + ")"};
        }
    }
    const bool final_correct = !traj.rounds.empty() && traj.rounds.back().feedback == Feedback::Correct;
    if (traj.success != final_correct) {
        return Violation{"success", "success must be true iff the final round is CORRECT"};
    }
    return std::nullopt;
}

[[noreturn]] void fail(std::size_t line, const std::string& field, const std::string& message)
{
    throw TrajectoryParseError(line, field, message);
}

const json& require(const json& obj, const char* name, std::size_t line)
{
    auto it = obj.find(name);
    if (it == obj.end()) {
        fail(line, name, "missing field");
    }
    return *it;
}

std::int64_t as_int(const json& value, const std::string& name, std::size_t line)
{
    if (!value.is_number_integer()) {
        fail(line, name, "expected integer");
    }
    return value.get<std::int64_t>();
}

std::string as_string(const json& value, const std::string& name, std::size_t line)
{
    if (!value.is_string()) {
        fail(line, name, "expected string");
    }
    return value.get<std::string>();
}

bool as_bool(const json& value, const std::string& name, std::size_t line)
{
    if (!value.is_boolean()) {
        fail(line, name, "expected boolean");
    }
    return value.get<bool>();
}

double snap(double x)
{
    return std::round(x * 1e9) / 1e9;
}

}  // namespace

std::string_view to_string(Feedback feedback)
{
    switch (feedback) {
    case Feedback::High:
        return "HIGH";
    case Feedback::Low:
        return "LOW";
    case Feedback::Correct:
        return "CORRECT";
    }
    return "?";
}

Feedback feedback_from_string(std::string_view text)
{
    if (text == "HIGH") {
        return Feedback::High;
    }
    if (text == "LOW") {
        return Feedback::Low;
    }
    if (text == "CORRECT") {
        return Feedback::Correct;
    }
    throw std::invalid_argument("unknown feedback '" + std::string(text) + "'");
}

Feedback feedback_for(std::int64_t sum, std::int64_t target)
{
    if (sum > target) {
        return Feedback::High;
    }
    if (sum < target) {
        return Feedback::Low;
    }
    return Feedback::Correct;
}

TrajectoryParseError::TrajectoryParseError(std::size_t line, std::string field, const std::string& what)
    : TrajectoryError("line " + std::to_string(line) + ", field '" + field + "': " + what),
      line_(line),
      field_(std::move(field))
{
}

void validate(const GroupTrajectory& traj)
{
    if (auto v = find_violation(traj)) {
        throw TrajectoryError("trajectory '" + traj.group_id + "': " + v->message);
    }
}

GroupTrajectory parse_trajectory_line(std::string_view line, std::size_t line_number)
{
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        fail(line_number, "<record>", std::string("malformed record: ") + e.what());
    }
    if (!obj.is_object()) {
        fail(line_number, "<record>", "expected an object");
    }

    GroupTrajectory traj;
    traj.group_id = as_string(require(obj, "group_id", line_number), "group_id", line_number);
    traj.condition = as_string(require(obj, "condition", line_number), "condition", line_number);
    traj.group_size = static_cast<int>(as_int(require(obj, "group_size", line_number), "group_size", line_number));
    traj.target = as_int(require(obj, "target", line_number), "target", line_number);
    traj.success = as_bool(require(obj, "success", line_number), "success", line_number);

    const json& seed = require(obj, "seed", line_number);
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
        fail(line_number, "seed", "expected non-negative integer");
    }
    traj.seed = seed.get<std::uint64_t>();

    if (auto it = obj.find("guess_lo"); it != obj.end()) {
        traj.guess_lo = static_cast<int>(as_int(*it, "guess_lo", line_number));
    }
    if (auto it = obj.find("guess_hi"); it != obj.end()) {
        traj.guess_hi = static_cast<int>(as_int(*it, "guess_hi", line_number));
    }
    if (auto it = obj.find("valid"); it != obj.end()) {
        traj.valid = as_bool(*it, "valid", line_number);
    }
    if (auto it = obj.find("abort_reason"); it != obj.end()) {
        traj.abort_reason = as_string(*it, "abort_reason", line_number);
    }

    const json& rounds = require(obj, "rounds", line_number);
    if (!rounds.is_array()) {
        fail(line_number, "rounds", "expected array");
    }
    traj.rounds.reserve(rounds.size());
    for (const json& r : rounds) {
        if (!r.is_object()) {
            fail(line_number, "rounds", "expected array of objects");
        }
        RoundRecord rec;
        rec.t = static_cast<int>(as_int(require(r, "t", line_number), "rounds.t", line_number));
        const json& guesses = require(r, "guesses", line_number);
        if (!guesses.is_array()) {
            fail(line_number, "rounds.guesses", "expected array");
        }
        for (const json& g : guesses) {
            rec.guesses.push_back(static_cast<int>(as_int(g, "rounds.guesses", line_number)));
        }
        rec.sum = as_int(require(r, "sum", line_number), "rounds.sum", line_number);
        const std::string fb = as_string(require(r, "feedback", line_number), "rounds.feedback", line_number);
        try {
            rec.feedback = feedback_from_string(fb);
        } catch (const std::invalid_argument& e) {
            fail(line_number, "rounds.feedback", e.what());
        }
        traj.rounds.push_back(std::move(rec));
    }

    if (auto v = find_violation(traj)) {
        fail(line_number, v->field, v->message);
    }
    return traj;
}

std::vector<GroupTrajectory> parse_trajectories(std::istream& in)
{
    std::vector<GroupTrajectory> out;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        out.push_back(parse_trajectory_line(line, line_number));
    }
    return out;
}

std::string serialize_trajectory(const GroupTrajectory& traj)
{
    nlohmann::ordered_json obj;
    obj["group_id"] = traj.group_id;
    obj["condition"] = traj.condition;
    obj["group_size"] = traj.group_size;
    obj["target"] = traj.target;
    obj["guess_lo"] = traj.guess_lo;
    obj["guess_hi"] = traj.guess_hi;
    obj["seed"] = traj.seed;
    obj["success"] = traj.success;
    obj["valid"] = traj.valid;
    if (!traj.abort_reason.empty()) {
        obj["abort_reason"] = traj.abort_reason;
    }
    auto rounds = nlohmann::ordered_json::array();
    for (const RoundRecord& r : traj.rounds) {
        nlohmann::ordered_json rec;
        rec["t"] = r.t;
        rec["guesses"] = r.guesses;
        rec["sum"] = r.sum;
        rec["feedback"] = std::string(to_string(r.feedback));
        rounds.push_back(std::move(rec));
    }
    obj["rounds"] = std::move(rounds);
    return obj.dump();
}

void write_trajectories(std::ostream& out, std::span<const GroupTrajectory> trajectories)
{
    for (const GroupTrajectory& traj : trajectories) {
        out << serialize_trajectory(traj) << '\n';
    }
}

DeviationMatrix::DeviationMatrix(std::size_t agents, std::size_t rounds, double fill)
    : agents_(agents),
      rounds_(rounds),
      values_(agents * rounds, fill)
{
    agent_ids_.reserve(agents);
    for (std::size_t i = 0; i < agents; ++i) {
        agent_ids_.push_back("agent" + std::to_string(i + 1));
    }
}

std::vector<double> DeviationMatrix::column(std::size_t round) const
{
    std::vector<double> col(agents_);
    for (std::size_t i = 0; i < agents_; ++i) {
        col[i] = at(i, round);
    }
    return col;
}

void DeviationMatrix::set_agent_ids(std::vector<std::string> ids)
{
    if (ids.size() != agents_) {
        throw std::invalid_argument("agent id count does not match matrix rows");
    }
    agent_ids_ = std::move(ids);
}

std::string_view to_string(MacroMode mode)
{
    return mode == MacroMode::GroupError ? "group_error" : "pc1";
}

MacroMode macro_mode_from_string(std::string_view text)
{
    if (text == "group_error") {
        return MacroMode::GroupError;
    }
    if (text == "pc1") {
        return MacroMode::Pc1;
    }
    throw std::invalid_argument("unknown macro mode '" + std::string(text) + "'");
}

DeviationMatrix equal_share_deviations(const GroupTrajectory& traj)
{
    validate(traj);
    const double share = static_cast<double>(traj.target) / static_cast<double>(traj.group_size);
    DeviationMatrix devs(static_cast<std::size_t>(traj.group_size), traj.rounds.size());
    for (std::size_t t = 0; t < traj.rounds.size(); ++t) {
        for (std::size_t i = 0; i < devs.agents(); ++i) {
            devs.at(i, t) = static_cast<double>(traj.rounds[t].guesses[i]) - share;
        }
    }
    return devs;
}

MacroSeries macro_signal(const GroupTrajectory& traj, MacroMode mode)
{
    if (mode == MacroMode::Pc1) {
        return macro_from_devs(equal_share_deviations(traj), mode);
    }
    validate(traj);
    MacroSeries macro{{}, MacroMode::GroupError};
    macro.values.reserve(traj.rounds.size());
    for (const RoundRecord& r : traj.rounds) {
        macro.values.push_back(static_cast<double>(r.sum - traj.target));
    }
    return macro;
}

MacroSeries macro_from_devs(const DeviationMatrix& devs, MacroMode mode)
{
    MacroSeries macro{std::vector<double>(devs.rounds(), 0.0), mode};
    if (mode == MacroMode::GroupError) {
        for (std::size_t t = 0; t < devs.rounds(); ++t) {
            std::vector<double> col = devs.column(t);
            std::sort(col.begin(), col.end());
            macro.values[t] = snap(std::accumulate(col.begin(), col.end(), 0.0));
        }
        return macro;
    }

    const auto n = static_cast<Eigen::Index>(devs.agents());
    const auto T = static_cast<Eigen::Index>(devs.rounds());
    if (T < 2) {
        throw std::invalid_argument("pc1 macro needs at least two rounds");
    }
    Eigen::MatrixXd x(n, T);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index t = 0; t < T; ++t) {
            x(i, t) = devs.at(static_cast<std::size_t>(i), static_cast<std::size_t>(t));
        }
    }
    Eigen::MatrixXd centered = x.colwise() - x.rowwise().mean();
    Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(T - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const double top = solver.eigenvalues()(n - 1);
    if (!(top > 1e-12)) {
        throw std::domain_error("degenerate covariance");
    }
    Eigen::VectorXd loading = solver.eigenvectors().col(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(loading(i)) > 1e-12) {
            if (loading(i) < 0) {
                loading = -loading;
            }
            break;
        }
    }
    Eigen::VectorXd projected = x.transpose() * loading;
    for (Eigen::Index t = 0; t < T; ++t) {
        macro.values[static_cast<std::size_t>(t)] = projected(t);
    }
    return macro;
}

GroupTrajectory truncate(const GroupTrajectory& traj, int horizon)
{
    if (horizon < 1) {
        throw std::invalid_argument("truncation horizon must be >= 1");
    }
    GroupTrajectory out = traj;
    if (out.rounds.size() > static_cast<std::size_t>(horizon)) {
        out.rounds.resize(static_cast<std::size_t>(horizon));
    }
    out.success = !out.rounds.empty() && out.rounds.back().feedback == Feedback::Correct;
    return out;
}

DeviationMatrix reactivity(const DeviationMatrix& devs)
{
    if (devs.rounds() < 2) {
        throw std::invalid_argument("too short: reactivity needs at least two rounds");
    }
    DeviationMatrix out(devs.agents(), devs.rounds() - 1);
    out.set_agent_ids(devs.agent_ids());
    for (std::size_t i = 0; i < devs.agents(); ++i) {
        for (std::size_t t = 0; t + 1 < devs.rounds(); ++t) {
            out.at(i, t) = devs.at(i, t + 1) - devs.at(i, t);
        }
    }
    return out;
}

}  // namespace collective
