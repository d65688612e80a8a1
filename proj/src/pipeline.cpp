#include "collective/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <future>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "collective/stats.hpp"

namespace collective {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Runs fn(i) for i in [0, n) on a small pool; output order is index order.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn)
{
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < threads; ++w) {
        workers.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next++; i < n; i = next++) {
                fn(i);
            }
        }));
    }
    std::exception_ptr first;
    for (auto& f : workers) {
        try {
            f.get();
        } catch (...) {
            if (!first) {
                first = std::current_exception();
            }
        }
    }
    if (first) {
        std::rethrow_exception(first);
    }
}

std::string group_name(const std::string& condition, int g)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "-%04d", g);
    return condition + buf;
}

GroupRow base_row(const GroupTrajectory& traj)
{
    GroupRow row;
    row.group_id = traj.group_id;
    row.condition = traj.condition;
    row.rounds = static_cast<int>(traj.round_count());
    row.success = traj.success;
    row.target = traj.target;
    if (traj.group_size >= 1) {
        const DifficultyCovariates cov = difficulty_covariates(traj);
        row.mid_distance = cov.mid_distance;
        row.target_mod_n = cov.target_mod_n;
    }
    return row;
}

GroupRow skipped(GroupRow row, std::string reason)
{
    row.status = "skipped";
    row.skip_reason = std::move(reason);
    row.s_macro.reset();
    row.capacity.reset();
    row.i3.reset();
    row.g3.reset();
    row.diff.reset();
    return row;
}

MeasureResult from_null(const NullDistribution& nd)
{
    return {nd.observed, nd.bias_corrected, nd.p_value};
}

std::optional<DiffTestResult> try_difftest(const DeviationMatrix& raw)
{
    if (raw.agents() < 2 || raw.rounds() < 3) {
        return std::nullopt;
    }
    return differentiation_test(raw);
}

// ---- CSV ----

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> cols{
        "group_id", "condition", "status", "skip_reason", "rounds", "success", "target", "mid_distance",
        "target_mod_n", "s_macro", "s_macro_bc", "s_macro_p", "capacity", "capacity_bc", "capacity_p", "i3", "i3_bc",
        "i3_p", "g3", "g3_bc", "g3_p", "negative_g3", "diff_p_intercept", "diff_p_slope", "diff_flagged",
        "diff_degenerate"};
    return cols;
}

std::string na_or(const std::optional<double>& v)
{
    return v ? format_number(*v) : "NA";
}

std::optional<double> parse_opt(const std::string& s)
{
    if (s == "NA" || s.empty()) {
        return std::nullopt;
    }
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
        throw std::invalid_argument("bad number '" + s + "'");
    }
    return v;
}

bool parse_bool(const std::string& s)
{
    if (s == "true" || s == "1") {
        return true;
    }
    if (s == "false" || s == "0" || s == "NA") {
        return false;
    }
    throw std::invalid_argument("bad boolean '" + s + "'");
}

// ---- report ----

ordered_json test_json(const TestResult& r)
{
    ordered_json j;
    j["statistic"] = r.statistic;
    if (r.df) {
        j["df"] = *r.df;
    }
    j["p_value"] = r.p_value;
    return j;
}

struct Block {
    std::vector<const GroupRow*> rows;
};

ordered_json measure_block(const Block& block, const std::string& measure, double alpha)
{
    std::vector<double> ps;
    std::vector<double> bcs;
    for (const GroupRow* r : block.rows) {
        if (const auto& m = measure_of(*r, measure)) {
            ps.push_back(m->p_value);
            bcs.push_back(m->bias_corrected);
        }
    }
    ordered_json j;
    j["n"] = ps.size();
    if (ps.empty()) {
        j["fisher"] = nullptr;
        j["wilcoxon_bc"] = nullptr;
        j["significant"] = 0;
        j["fraction_significant"] = nullptr;
        j["wilson_95"] = nullptr;
        return j;
    }
    j["fisher"] = test_json(fisher_combine(ps));
    try {
        j["wilcoxon_bc"] = test_json(wilcoxon_signed_rank(bcs, 0.0, Alternative::Greater));
    } catch (const std::exception&) {
        j["wilcoxon_bc"] = nullptr;  // every BC exactly zero
    }
    const auto sig = std::count_if(ps.begin(), ps.end(), [&](double p) { return p < alpha; });
    j["significant"] = sig;
    j["fraction_significant"] = static_cast<double>(sig) / static_cast<double>(ps.size());
    const Interval ci = wilson_interval(sig, static_cast<std::int64_t>(ps.size()));
    j["wilson_95"] = {ci.lo, ci.hi};
    return j;
}

ordered_json condition_block(const Block& block, double alpha)
{
    ordered_json j;
    std::int64_t analyzed = 0;
    std::map<std::string, std::int64_t> reasons;
    std::int64_t successes = 0;
    for (const GroupRow* r : block.rows) {
        if (r->analyzed()) {
            ++analyzed;
        } else {
            ++reasons[r->skip_reason];
        }
        successes += r->success ? 1 : 0;
    }
    j["groups"] = block.rows.size();
    j["analyzed"] = analyzed;
    j["skipped"] = static_cast<std::int64_t>(block.rows.size()) - analyzed;
    j["skip_reasons"] = ordered_json::object();
    for (const auto& [reason, count] : reasons) {
        j["skip_reasons"][reason] = count;
    }
    j["successes"] = successes;
    ordered_json measures = ordered_json::object();
    for (const std::string& m : measure_names()) {
        measures[m] = measure_block(block, m, alpha);
    }
    j["measures"] = measures;

    std::int64_t diff_n = 0;
    std::int64_t flagged = 0;
    std::int64_t degenerate = 0;
    for (const GroupRow* r : block.rows) {
        if (r->diff) {
            ++diff_n;
            flagged += r->diff->flagged ? 1 : 0;
            degenerate += r->diff->degenerate ? 1 : 0;
        }
    }
    ordered_json d;
    d["n"] = diff_n;
    d["flagged"] = flagged;
    d["degenerate"] = degenerate;
    if (diff_n > 0) {
        d["fraction_flagged"] = static_cast<double>(flagged) / static_cast<double>(diff_n);
        const Interval ci = wilson_interval(flagged, diff_n);
        d["wilson_95"] = {ci.lo, ci.hi};
    }
    j["differentiation"] = d;
    return j;
}

std::vector<double> values_of(const Block& block, const std::string& measure)
{
    std::vector<double> out;
    for (const GroupRow* r : block.rows) {
        if (const auto& m = measure_of(*r, measure)) {
            out.push_back(m->value);
        }
    }
    return out;
}

std::pair<std::int64_t, std::int64_t> significance_counts(const Block& block, const std::string& measure, double alpha)
{
    std::int64_t n = 0;
    std::int64_t sig = 0;
    for (const GroupRow* r : block.rows) {
        if (const auto& m = measure_of(*r, measure)) {
            ++n;
            sig += m->p_value < alpha ? 1 : 0;
        }
    }
    return {sig, n};
}

template <typename T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    return j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* section)
{
    if (!j.is_object()) {
        throw std::invalid_argument(std::string(section) + " config must be an object");
    }
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
            throw std::invalid_argument(std::string("unknown key '") + key + "' in " + section + " config");
        }
    }
}

}  // namespace

std::vector<GroupTrajectory> simulate_groups(const SimulateSettings& settings, std::uint64_t master_seed, int threads)
{
    settings.game.validate();
    if (settings.groups < 1) {
        throw std::invalid_argument("groups must be >= 1");
    }
    std::vector<GroupTrajectory> out(static_cast<std::size_t>(settings.groups));
    parallel_for(out.size(), threads, [&](std::size_t g) {
        const std::uint64_t group_seed = derive_seed(master_seed, static_cast<std::uint64_t>(g));
        for (std::uint64_t attempt = 0;; ++attempt) {
            GameConfig config = settings.game;
            config.seed = attempt == 0 ? group_seed : derive_seed(group_seed, attempt);
            const auto policies = make_policies(settings.policy, config, derive_seed(config.seed, "policy"));
            Rng rng(derive_seed(config.seed, "target"));
            RunOptions opts{group_name(settings.condition, static_cast<int>(g)), settings.condition, 1};
            GroupRun run = run_group(config, policies, rng, opts);
            const bool full = run.trajectory.round_count() == static_cast<std::size_t>(config.max_rounds) && !run.trajectory.success;
            if (!settings.require_full_length || full) {
                out[g] = std::move(run.trajectory);
                return;
            }
            if (attempt >= 10000) {
                throw std::runtime_error("could not draw a full-length group");
            }
        }
    });
    return out;
}

std::vector<GroupTrajectory> run_llm_groups(const LlmRunSettings& settings,
                                            std::uint64_t master_seed,
                                            std::shared_ptr<ChatTransport> transport,
                                            std::shared_ptr<ExchangeJournal> journal,
                                            std::function<void(std::chrono::milliseconds)> sleep)
{
    settings.game.validate();
    settings.endpoint.validate();
    const auto n = static_cast<std::size_t>(settings.game.group_size);
    if (settings.condition != PromptCondition::Plain && settings.personas.size() < n) {
        throw std::invalid_argument("persona file has " + std::to_string(settings.personas.size())
                                    + " personas, need " + std::to_string(n));
    }
    auto shared = std::make_shared<LlmShared>();
    shared->endpoint = settings.endpoint;
    shared->transport = std::move(transport);
    shared->journal = std::move(journal);
    shared->limiter = std::make_shared<RateLimiter>(settings.endpoint.request_rate_limit);
    shared->sleep = std::move(sleep);

    const std::string label = settings.condition_label.empty() ? std::string(to_string(settings.condition))
                                                               : settings.condition_label;
    std::vector<GroupTrajectory> out;
    for (int g = 0; g < settings.groups; ++g) {
        GameConfig config = settings.game;
        config.seed = derive_seed(master_seed, static_cast<std::uint64_t>(g));
        const std::string gid = group_name(label, g);
        std::vector<std::unique_ptr<Policy>> policies;
        for (std::size_t i = 0; i < n; ++i) {
            PromptTemplate tmpl;
            tmpl.condition = settings.condition;
            if (settings.condition != PromptCondition::Plain) {
                tmpl.persona_text = settings.personas[i];
            }
            tmpl.guess_lo = config.guess_lo;
            tmpl.guess_hi = config.guess_hi;
            policies.push_back(std::make_unique<LlmPolicy>(shared, tmpl, gid, static_cast<int>(i)));
        }
        Rng rng(derive_seed(config.seed, "target"));
        RunOptions opts{gid, label, settings.endpoint.max_concurrency};
        out.push_back(run_group(config, policies, rng, opts).trajectory);
    }
    return out;
}

GroupRow analyze_group(const GroupTrajectory& traj, const AnalysisSettings& settings, const SurrogateSpec& spec)
{
    settings.validate();
    spec.validate();
    GroupRow row = base_row(traj);
    if (!traj.valid) {
        return skipped(row, "aborted");
    }
    try {
        validate(traj);
    } catch (const std::exception& e) {
        return skipped(row, std::string("invalid: ") + e.what());
    }

    GroupTrajectory t = traj;
    if (settings.truncation && static_cast<std::size_t>(*settings.truncation) < traj.round_count()) {
        t = truncate(traj, *settings.truncation);
    }
    row.rounds = static_cast<int>(t.round_count());
    row.success = t.success;

    if (t.group_size < 2) {
        return skipped(row, "needs at least two agents");
    }
    const DeviationMatrix raw = equal_share_deviations(t);
    const std::size_t T = raw.rounds();
    const auto lag = static_cast<std::size_t>(settings.lag);

    DeviationMatrix devs;
    switch (settings.data_variant) {
    case DataVariant::Devs:
        devs = raw;
        break;
    case DataVariant::Reactivity:
        if (T < 2) {
            return skipped(row, "too short");
        }
        devs = reactivity(raw);
        break;
    case DataVariant::Detrended:
        if (T < 3) {
            return skipped(row, "too short");
        }
        devs = detrend_linear(raw);
        break;
    case DataVariant::FunctionalResidual:
        devs = functional_null_residuals(t);
        break;
    }
    if (devs.rounds() <= lag) {
        return skipped(row, "too short");
    }
    if (spec.kind == SurrogateKind::BlockTimeShuffle && devs.rounds() < 2 * static_cast<std::size_t>(spec.block_len)) {
        return skipped(row, "too short for block shuffle");
    }

    const bool triplets = devs.agents() >= 3;
    const MultiStatistic stat = [&](const DeviationMatrix& d, const MacroSeries& m) {
        const EmergenceScores sc = emergence_scores(d, m, settings);
        std::vector<double> v{sc.s_macro, sc.capacity.median};
        if (triplets) {
            v.push_back(sc.coalition->i3_median);
            v.push_back(sc.coalition->g3_median);
        }
        return v;
    };
    try {
        const std::vector<NullDistribution> nulls = null_test_multi(stat, devs, settings.macro_mode, spec, t.group_id);
        row.s_macro = from_null(nulls[0]);
        row.capacity = from_null(nulls[1]);
        if (triplets) {
            row.i3 = from_null(nulls[2]);
            row.g3 = from_null(nulls[3]);
            row.negative_g3 = coalition_scores(devs, macro_from_devs(devs, settings.macro_mode), settings).negative_g3;
        }
    } catch (const std::exception& e) {
        return skipped(row, e.what());
    }
    try {
        row.diff = try_difftest(raw);
    } catch (const std::exception&) {
        row.diff.reset();
    }
    return row;
}

std::vector<GroupRow> analyze_groups(std::span<const GroupTrajectory> trajs,
                                     const AnalysisSettings& settings,
                                     const SurrogateSpec& spec,
                                     int threads)
{
    std::vector<GroupRow> rows(trajs.size());
    parallel_for(trajs.size(), threads, [&](std::size_t i) { rows[i] = analyze_group(trajs[i], settings, spec); });
    return rows;
}

std::vector<GroupRow> difftest_groups(std::span<const GroupTrajectory> trajs, std::optional<int> truncation, int threads)
{
    std::vector<GroupRow> rows(trajs.size());
    parallel_for(trajs.size(), threads, [&](std::size_t i) {
        const GroupTrajectory& traj = trajs[i];
        GroupRow row = base_row(traj);
        if (!traj.valid) {
            rows[i] = skipped(row, "aborted");
            return;
        }
        GroupTrajectory t = traj;
        if (truncation && static_cast<std::size_t>(*truncation) < traj.round_count()) {
            t = truncate(traj, *truncation);
        }
        row.rounds = static_cast<int>(t.round_count());
        row.success = t.success;
        if (t.group_size < 2) {
            rows[i] = skipped(row, "needs at least two agents");
            return;
        }
        if (t.round_count() < 3) {
            rows[i] = skipped(row, "too short");
            return;
        }
        try {
            row.diff = differentiation_test(equal_share_deviations(t));
        } catch (const std::exception& e) {
            row = skipped(row, e.what());
        }
        rows[i] = row;
    });
    return rows;
}

std::string format_number(double value)
{
    if (std::isnan(value)) {
        return "NA";
    }
    if (value == 0.0) {
        return "0";  // no "-0"
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

const std::optional<MeasureResult>& measure_of(const GroupRow& row, const std::string& name)
{
    if (name == "s_macro") {
        return row.s_macro;
    }
    if (name == "capacity") {
        return row.capacity;
    }
    if (name == "i3") {
        return row.i3;
    }
    if (name == "g3") {
        return row.g3;
    }
    throw std::invalid_argument("unknown measure '" + name + "'");
}

void write_rows_csv(std::ostream& out, std::span<const GroupRow> rows, const ordered_json& config)
{
    out << "# config: " << config.dump() << '\n';
    const auto& cols = csv_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        out << (c ? "," : "") << cols[c];
    }
    out << '\n';
    for (const GroupRow& r : rows) {
        std::vector<std::string> f{csv_field(r.group_id), csv_field(r.condition), r.status, csv_field(r.skip_reason),
                                   std::to_string(r.rounds), r.success ? "true" : "false", std::to_string(r.target),
                                   format_number(r.mid_distance), std::to_string(r.target_mod_n)};
        for (const std::string& m : measure_names()) {
            const auto& v = measure_of(r, m);
            f.push_back(v ? format_number(v->value) : "NA");
            f.push_back(v ? format_number(v->bias_corrected) : "NA");
            f.push_back(v ? format_number(v->p_value) : "NA");
        }
        f.push_back(r.g3 ? (r.negative_g3 ? "true" : "false") : "NA");
        f.push_back(na_or(r.diff ? std::optional(r.diff->p_intercept) : std::nullopt));
        f.push_back(na_or(r.diff ? std::optional(r.diff->p_slope) : std::nullopt));
        f.push_back(r.diff ? (r.diff->flagged ? "true" : "false") : "NA");
        f.push_back(r.diff ? (r.diff->degenerate ? "true" : "false") : "NA");
        for (std::size_t c = 0; c < f.size(); ++c) {
            out << (c ? "," : "") << f[c];
        }
        out << '\n';
    }
}

std::vector<GroupRow> read_rows_csv(std::istream& in)
{
    std::string line;
    std::vector<std::string> header;
    std::vector<GroupRow> rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::vector<std::string> f = split_csv_line(line);
        if (header.empty()) {
            header = f;
            if (header != csv_columns()) {
                throw std::invalid_argument("unexpected CSV header on line " + std::to_string(line_no));
            }
            continue;
        }
        if (f.size() != header.size()) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected "
                                        + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        }
        try {
            GroupRow r;
            r.group_id = f[0];
            r.condition = f[1];
            r.status = f[2];
            r.skip_reason = f[3];
            r.rounds = std::stoi(f[4]);
            r.success = parse_bool(f[5]);
            r.target = std::stoll(f[6]);
            r.mid_distance = parse_opt(f[7]).value_or(0.0);
            r.target_mod_n = std::stoll(f[8]);
            std::size_t c = 9;
            for (std::optional<MeasureResult>* slot : {&r.s_macro, &r.capacity, &r.i3, &r.g3}) {
                const auto v = parse_opt(f[c]);
                const auto bc = parse_opt(f[c + 1]);
                const auto p = parse_opt(f[c + 2]);
                c += 3;
                if (v && bc && p) {
                    *slot = MeasureResult{*v, *bc, *p};
                }
            }
            r.negative_g3 = parse_bool(f[c++]);
            const auto pi = parse_opt(f[c]);
            const auto ps = parse_opt(f[c + 1]);
            if (pi && ps) {
                r.diff = DiffTestResult{*pi, *ps, parse_bool(f[c + 2]), parse_bool(f[c + 3])};
            }
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

void write_difftest_csv(std::ostream& out, std::span<const GroupRow> rows, const ordered_json& config)
{
    out << "# config: " << config.dump() << '\n';
    out << "group_id,condition,status,skip_reason,rounds,p_intercept,p_slope,flagged,degenerate\n";
    for (const GroupRow& r : rows) {
        out << csv_field(r.group_id) << ',' << csv_field(r.condition) << ',' << r.status << ','
            << csv_field(r.skip_reason) << ',' << r.rounds << ',';
        if (r.diff) {
            out << format_number(r.diff->p_intercept) << ',' << format_number(r.diff->p_slope) << ','
                << (r.diff->flagged ? "true" : "false") << ',' << (r.diff->degenerate ? "true" : "false") << '\n';
        } else {
            out << "NA,NA,NA,NA\n";
        }
    }
}

ordered_json aggregate_report(std::span<const GroupRow> rows, double alpha)
{
    std::map<std::string, Block> by_condition;
    Block pooled;
    for (const GroupRow& r : rows) {
        by_condition[r.condition].rows.push_back(&r);
        pooled.rows.push_back(&r);
    }

    ordered_json report;
    report["alpha"] = alpha;
    report["measures"] = measure_names();
    ordered_json conds = ordered_json::object();
    for (const auto& [name, block] : by_condition) {
        conds[name] = condition_block(block, alpha);
    }
    report["conditions"] = conds;
    report["pooled"] = condition_block(pooled, alpha);

    ordered_json comparisons = ordered_json::array();
    for (auto a = by_condition.begin(); a != by_condition.end(); ++a) {
        for (auto b = std::next(a); b != by_condition.end(); ++b) {
            ordered_json c;
            c["a"] = a->first;
            c["b"] = b->first;
            for (const std::string m : {"i3", "g3"}) {
                const auto va = values_of(a->second, m);
                const auto vb = values_of(b->second, m);
                c["ks_" + m] = va.empty() || vb.empty() ? ordered_json(nullptr) : test_json(ks_two_sample(va, vb));
            }
            for (const std::string& m : measure_names()) {
                const auto [xa, na] = significance_counts(a->second, m, alpha);
                const auto [xb, nb] = significance_counts(b->second, m, alpha);
                c["prop_" + m] = na == 0 || nb == 0 ? ordered_json(nullptr)
                                                     : test_json(two_proportion_test(xa, na, xb, nb));
            }
            comparisons.push_back(c);
        }
    }
    report["comparisons"] = comparisons;
    return report;
}

void write_plot_csv(std::ostream& out, std::span<const GroupRow> rows, double lower_q, double upper_q)
{
    out << "group_id,condition,measure,value,bias_corrected\n";
    for (const std::string& m : measure_names()) {
        std::vector<const GroupRow*> present;
        std::vector<double> values;
        std::vector<double> bcs;
        for (const GroupRow& r : rows) {
            if (const auto& v = measure_of(r, m)) {
                present.push_back(&r);
                values.push_back(v->value);
                bcs.push_back(v->bias_corrected);
            }
        }
        if (present.empty()) {
            continue;
        }
        const auto wv = winsorize(values, lower_q, upper_q);
        const auto wb = winsorize(bcs, lower_q, upper_q);
        for (std::size_t i = 0; i < present.size(); ++i) {
            out << csv_field(present[i]->group_id) << ',' << csv_field(present[i]->condition) << ',' << m << ','
                << format_number(wv[i]) << ',' << format_number(wb[i]) << '\n';
        }
    }
}

AnalysisSettings analysis_settings_from_json(const json& j)
{
    reject_unknown(j,
                   {"preset", "lag", "bins", "estimator", "jeffreys_alpha", "redundancy", "macro_mode", "truncation",
                    "data_variant"},
                   "analysis");
    AnalysisSettings s;
    const std::string preset = get_or<std::string>(j, "preset", "main");
    if (preset == "main") {
        s = AnalysisSettings::main_preset();
    } else if (preset == "jeffreys") {
        s = AnalysisSettings::jeffreys_preset();
    } else if (preset == "mmi") {
        s = AnalysisSettings::mmi_preset();
    } else {
        throw std::invalid_argument("unknown analysis preset '" + preset + "'");
    }
    s.lag = get_or<int>(j, "lag", s.lag);
    s.bins = get_or<int>(j, "bins", s.bins);
    if (j.contains("estimator")) {
        s.estimator.kind = estimator_kind_from_string(j.at("estimator").get<std::string>());
    }
    s.estimator.jeffreys_alpha = get_or<double>(j, "jeffreys_alpha", s.estimator.jeffreys_alpha);
    if (j.contains("redundancy")) {
        s.redundancy = redundancy_kind_from_string(j.at("redundancy").get<std::string>());
    }
    if (j.contains("macro_mode")) {
        s.macro_mode = macro_mode_from_string(j.at("macro_mode").get<std::string>());
    }
    if (j.contains("truncation") && !j.at("truncation").is_null()) {
        s.truncation = j.at("truncation").get<int>();
    }
    if (j.contains("data_variant")) {
        s.data_variant = data_variant_from_string(j.at("data_variant").get<std::string>());
    }
    s.validate();
    return s;
}

ordered_json to_json(const AnalysisSettings& s)
{
    ordered_json j;
    j["lag"] = s.lag;
    j["bins"] = s.bins;
    j["estimator"] = std::string(to_string(s.estimator.kind));
    j["jeffreys_alpha"] = s.estimator.jeffreys_alpha;
    j["redundancy"] = std::string(to_string(s.redundancy));
    j["macro_mode"] = std::string(to_string(s.macro_mode));
    j["truncation"] = s.truncation ? ordered_json(*s.truncation) : ordered_json(nullptr);
    j["data_variant"] = std::string(to_string(s.data_variant));
    return j;
}

SurrogateSpec surrogate_spec_from_json(const json& j, std::uint64_t default_seed)
{
    reject_unknown(j, {"kind", "B", "block_len", "seed"}, "surrogate");
    if (!j.contains("kind")) {
        throw std::invalid_argument("surrogate.kind must be named explicitly "
                                    "(row_shuffle, column_time_shift or block_time_shuffle)");
    }
    SurrogateSpec s;
    s.kind = surrogate_kind_from_string(j.at("kind").get<std::string>());
    s.B = get_or<int>(j, "B", s.B);
    s.block_len = get_or<int>(j, "block_len", s.block_len);
    s.seed = get_or<std::uint64_t>(j, "seed", default_seed);
    s.validate();
    return s;
}

ordered_json to_json(const SurrogateSpec& s)
{
    ordered_json j;
    j["kind"] = std::string(to_string(s.kind));
    j["B"] = s.B;
    j["block_len"] = s.block_len;
    j["seed"] = s.seed;
    return j;
}

GameConfig game_config_from_json(const json& j)
{
    reject_unknown(j, {"group_size", "guess_lo", "guess_hi", "target", "max_rounds"}, "game");
    GameConfig g;
    g.group_size = get_or<int>(j, "group_size", g.group_size);
    g.guess_lo = get_or<int>(j, "guess_lo", g.guess_lo);
    g.guess_hi = get_or<int>(j, "guess_hi", g.guess_hi);
    if (j.contains("target") && !j.at("target").is_null()) {
        g.target = j.at("target").get<std::int64_t>();
    }
    g.max_rounds = get_or<int>(j, "max_rounds", g.max_rounds);
    g.validate();
    return g;
}

ordered_json to_json(const GameConfig& g)
{
    ordered_json j;
    j["group_size"] = g.group_size;
    j["guess_lo"] = g.guess_lo;
    j["guess_hi"] = g.guess_hi;
    j["target"] = g.target ? ordered_json(*g.target) : ordered_json(nullptr);
    j["max_rounds"] = g.max_rounds;
    return j;
}

EndpointConfig endpoint_config_from_json(const json& j)
{
    reject_unknown(j,
                   {"base_url", "model_name", "temperature", "max_retries", "timeout_ms", "request_rate_limit",
                    "api_key_env", "backoff_initial_ms", "backoff_factor", "backoff_max_ms", "max_concurrency"},
                   "endpoint");
    EndpointConfig e;
    e.base_url = get_or<std::string>(j, "base_url", e.base_url);
    e.model_name = get_or<std::string>(j, "model_name", e.model_name);
    e.temperature = get_or<double>(j, "temperature", e.temperature);
    e.max_retries = get_or<int>(j, "max_retries", e.max_retries);
    e.timeout = std::chrono::milliseconds(get_or<std::int64_t>(j, "timeout_ms", e.timeout.count()));
    e.request_rate_limit = get_or<double>(j, "request_rate_limit", e.request_rate_limit);
    // the key itself never lives in a config file
    const std::string env = get_or<std::string>(j, "api_key_env", "");
    if (!env.empty()) {
        if (const char* key = std::getenv(env.c_str())) {
            e.api_key = key;
        }
    }
    e.backoff_initial = std::chrono::milliseconds(get_or<std::int64_t>(j, "backoff_initial_ms", e.backoff_initial.count()));
    e.backoff_factor = get_or<double>(j, "backoff_factor", e.backoff_factor);
    e.backoff_max = std::chrono::milliseconds(get_or<std::int64_t>(j, "backoff_max_ms", e.backoff_max.count()));
    e.max_concurrency = get_or<int>(j, "max_concurrency", e.max_concurrency);
    return e;
}

}  // namespace collective
