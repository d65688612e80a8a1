#include "collective/llm_adapter.hpp"

#include <httplib.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <regex>
#include <sstream>
#include <thread>

namespace collective {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const char* const kIntro =
    "You are playing a sum guessing game. Your goal is to help your group sum to the mystery number.";
const char* const kAsk =
    "What is your guess this round? Always start with the efficient strategy in guessing games which is to use a "
    "binary search approach: guessing the midpoint of the current range.";
const char* const kTom =
    "Only as a secondary approach, carefully think through step-by-step what others might guess and how the "
    "contributions of others contribute to the sum of the group guesses for the mystery number. Consider what roles "
    "other agents might be playing (e.g., guessing higher or lower) and adapt your own adjustment to complement the "
    "group.";
const char* const kAnchor = "Always anchor your guess on the group feedback from previous rounds (too high / too low).";

std::string result_text(Feedback fb)
{
    switch (fb) {
    case Feedback::High:
        return "too HIGH";
    case Feedback::Low:
        return "too LOW";
    case Feedback::Correct:
        return "CORRECT";
    }
    return "?";
}

std::string truncate_body(const std::string& body, std::size_t limit = 200)
{
    if (body.size() <= limit) {
        return body;
    }
    return body.substr(0, limit) + "...";
}

class HttpTransport final : public ChatTransport {
public:
    explicit HttpTransport(const EndpointConfig& config) : config_(config)
    {
        static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
        std::smatch m;
        if (!std::regex_match(config.base_url, m, url_re)) {
            throw std::invalid_argument("base_url must look like http(s)://host[:port][/prefix]");
        }
        host_ = m[1].str();
        path_ = m[2].str();
        while (!path_.empty() && path_.back() == '/') {
            path_.pop_back();
        }
        path_ += "/chat/completions";
    }

    std::string post(const std::string& body) override
    {
        httplib::Client client(host_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            throw TransportError("request to " + host_ + path_ + " failed: " + httplib::to_string(res.error()));
        }
        if (res->status < 200 || res->status >= 300) {
            throw TransportError("HTTP " + std::to_string(res->status) + ": " + truncate_body(res->body), res->status);
        }
        return res->body;
    }

private:
    EndpointConfig config_;
    std::string host_;
    std::string path_;
};

}  // namespace

std::string_view to_string(PromptCondition condition)
{
    switch (condition) {
    case PromptCondition::Plain:
        return "plain";
    case PromptCondition::Persona:
        return "persona";
    case PromptCondition::Tom:
        return "tom";
    }
    return "?";
}

PromptCondition prompt_condition_from_string(std::string_view text)
{
    if (text == "plain") {
        return PromptCondition::Plain;
    }
    if (text == "persona") {
        return PromptCondition::Persona;
    }
    if (text == "tom") {
        return PromptCondition::Tom;
    }
    throw std::invalid_argument("unknown prompt condition '" + std::string(text) + "'");
}

void PromptTemplate::validate() const
{
    const bool has_persona = persona_text && !persona_text->empty();
    if (condition == PromptCondition::Plain && persona_text) {
        throw std::invalid_argument("plain prompt takes no persona");
    }
    if (condition != PromptCondition::Plain && !has_persona) {
        throw std::invalid_argument(std::string(to_string(condition)) + " prompt needs a persona");
    }
    if (guess_lo >= guess_hi) {
        throw std::invalid_argument("guess_lo must be below guess_hi");
    }
}

std::string render_prompt(const PromptTemplate& tmpl, std::span<const OwnRound> history)
{
    tmpl.validate();
    std::string lo = std::to_string(tmpl.guess_lo);
    std::string hi = std::to_string(tmpl.guess_hi);
    std::ostringstream out;
    if (tmpl.condition != PromptCondition::Plain) {
        out << *tmpl.persona_text << '\n';
    }
    out << kIntro << '\n';
    out << "Your guess range is " << lo << " to " << hi << ".\n";
    out << "Game History:\n";
    int previous = 0;
    for (const OwnRound& r : history) {
        if (r.round <= previous) {
            throw std::invalid_argument("history must be in round order");
        }
        previous = r.round;
        out << "Round " << r.round << ": Your guess: " << r.guess << '\n';
        out << "Result: " << result_text(r.feedback) << '\n';
    }
    out << kAsk << ' ';
    if (tmpl.condition == PromptCondition::Tom) {
        out << kTom << ' ';
    }
    out << kAnchor << '\n';
    out << "End your answer with: FINAL GUESS: [" << lo << '-' << hi << ']';
    return out.str();
}

int parse_final_guess(std::string_view text, int guess_lo, int guess_hi)
{
    static const std::regex re(R"(final\s*guess[\s:*=\[\(#]*([+-]?\d+))", std::regex::icase);
    const std::string s(text);
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        last = (*it)[1].str();
    }
    if (!last) {
        throw ParseError("no FINAL GUESS found in reply");
    }
    long long value = 0;
    try {
        value = std::stoll(*last);
    } catch (const std::out_of_range&) {
        throw RangeError("final guess " + *last + " out of range", *last->c_str() == '-' ? -1 : guess_hi + 1LL);
    }
    if (value < guess_lo || value > guess_hi) {
        throw RangeError("final guess " + std::to_string(value) + " outside [" + std::to_string(guess_lo) + ", "
                             + std::to_string(guess_hi) + "]",
                         value);
    }
    return static_cast<int>(value);
}

void EndpointConfig::validate() const
{
    if (!(temperature >= 0.0)) {
        throw std::invalid_argument("temperature must be >= 0");
    }
    if (max_retries < 0) {
        throw std::invalid_argument("max_retries must be >= 0");
    }
    if (request_rate_limit < 0.0) {
        throw std::invalid_argument("request_rate_limit must be >= 0");
    }
    if (max_concurrency < 1) {
        throw std::invalid_argument("max_concurrency must be >= 1");
    }
    if (model_name.empty()) {
        throw std::invalid_argument("model_name is required");
    }
}

std::unique_ptr<ChatTransport> make_http_transport(const EndpointConfig& config)
{
    return std::make_unique<HttpTransport>(config);
}

std::string chat_request_body(const EndpointConfig& config, std::span<const ChatMessage> messages)
{
    ordered_json body;
    body["model"] = config.model_name;
    body["temperature"] = config.temperature;
    body["messages"] = ordered_json::array();
    for (const ChatMessage& m : messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    return body.dump();
}

std::string extract_reply(const std::string& response_body)
{
    json doc;
    try {
        doc = json::parse(response_body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("malformed response JSON: ") + e.what());
    }
    try {
        const json& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) {
            throw TransportError("response content is not a string");
        }
        return content.get<std::string>();
    } catch (const json::exception&) {
        throw TransportError("response lacks choices[0].message.content: " + truncate_body(response_body));
    }
}

ExchangeJournal::ExchangeJournal(const std::filesystem::path& path)
    : out_(std::make_unique<std::ofstream>(path, std::ios::app))
{
    if (!*out_) {
        throw std::runtime_error("cannot open journal " + path.string());
    }
}

void ExchangeJournal::record(const Entry& entry)
{
    ordered_json j;
    j["group_id"] = entry.group_id;
    j["agent"] = entry.agent;
    j["round"] = entry.round;
    j["attempt"] = entry.attempt;
    j["request"] = entry.request;
    j["response"] = entry.response ? ordered_json(*entry.response) : ordered_json(nullptr);
    j["outcome"] = entry.outcome;
    std::string line = j.dump();
    std::lock_guard lock(mutex_);
    if (out_) {
        *out_ << line << '\n';
        out_->flush();
    }
    lines_.push_back(std::move(line));
}

std::vector<std::string> ExchangeJournal::lines() const
{
    std::lock_guard lock(mutex_);
    return lines_;
}

RateLimiter::RateLimiter(double per_second)
{
    if (per_second > 0.0) {
        interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / per_second));
    }
}

void RateLimiter::acquire()
{
    if (interval_ == std::chrono::steady_clock::duration::zero()) {
        return;
    }
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_);
        next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

LlmPolicy::LlmPolicy(std::shared_ptr<const LlmShared> shared, PromptTemplate tmpl, std::string group_id, int agent)
    : shared_(std::move(shared)),
      template_(std::move(tmpl)),
      group_id_(std::move(group_id)),
      agent_(agent)
{
    template_.validate();
    if (!shared_ || !shared_->transport) {
        throw std::invalid_argument("LLM policy needs a transport");
    }
}

int LlmPolicy::next_guess(const AgentView& view)
{
    const LlmShared& s = *shared_;
    PromptTemplate tmpl = template_;
    tmpl.guess_lo = view.guess_lo;
    tmpl.guess_hi = view.guess_hi;
    const std::vector<ChatMessage> messages{{"user", render_prompt(tmpl, view.history)}};
    const std::string request = chat_request_body(s.endpoint, messages);

    auto delay = s.endpoint.backoff_initial;
    std::string last_error;
    for (int attempt = 0; attempt <= s.endpoint.max_retries; ++attempt) {
        if (attempt > 0) {
            if (s.sleep) {
                s.sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
            const auto next = std::chrono::duration<double, std::milli>(delay) * s.endpoint.backoff_factor;
            delay = std::min(s.endpoint.backoff_max, std::chrono::duration_cast<std::chrono::milliseconds>(next));
        }
        if (s.limiter) {
            s.limiter->acquire();
        }
        ExchangeJournal::Entry entry{group_id_, agent_, view.round, attempt, request, std::nullopt, "ok"};
        try {
            entry.response = s.transport->post(request);
            const int guess = parse_final_guess(extract_reply(*entry.response), view.guess_lo, view.guess_hi);
            if (s.journal) {
                s.journal->record(entry);
            }
            return guess;
        } catch (const TransportError& e) {
            last_error = e.what();
        } catch (const ReplyError& e) {
            last_error = e.what();
        }
        entry.outcome = last_error;
        if (s.journal) {
            s.journal->record(entry);
        }
    }
    throw PolicyAbort("agent " + std::to_string(agent_) + " gave no usable reply after "
                      + std::to_string(s.endpoint.max_retries + 1) + " attempts: " + last_error);
}

std::vector<std::string> parse_personas(std::istream& in)
{
    std::vector<std::string> out;
    std::string paragraph;
    std::string line;
    const auto flush = [&] {
        if (!paragraph.empty()) {
            out.push_back(paragraph);
            paragraph.clear();
        }
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            flush();
            continue;
        }
        if (!paragraph.empty()) {
            paragraph += '\n';
        }
        paragraph += line;
    }
    flush();
    return out;
}

std::vector<std::string> load_personas(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open persona file " + path.string());
    }
    return parse_personas(in);
}

}  // namespace collective
