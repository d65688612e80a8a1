#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "collective/game.hpp"

namespace collective {

enum class PromptCondition { Plain, Persona, Tom };

std::string_view to_string(PromptCondition condition);
PromptCondition prompt_condition_from_string(std::string_view text);

struct PromptTemplate {
    PromptCondition condition = PromptCondition::Plain;
    std::optional<std::string> persona_text;
    int guess_lo = 0;
    int guess_hi = 50;

    void validate() const;
};

/// Full prompt for one agent and round. Pure: same inputs, same bytes.
std::string render_prompt(const PromptTemplate& tmpl, std::span<const OwnRound> history);

class ReplyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No "FINAL GUESS <int>" in the reply.
class ParseError : public ReplyError {
public:
    using ReplyError::ReplyError;
};

/// A final guess was found but lies outside the range.
class RangeError : public ReplyError {
public:
    RangeError(const std::string& what, long long value) : ReplyError(what), value_(value) {}
    long long value() const { return value_; }

private:
    long long value_;
};

class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& what, int status = 0) : std::runtime_error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

/// Last case-insensitive "final guess" followed by optional punctuation and
/// an integer.
int parse_final_guess(std::string_view text, int guess_lo, int guess_hi);

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8000/v1";
    std::string model_name;
    double temperature = 1.0;
    int max_retries = 3;
    std::chrono::milliseconds timeout{60000};
    /// requests per second across all agents, 0 = unlimited
    double request_rate_limit = 0.0;
    std::string api_key;
    std::chrono::milliseconds backoff_initial{500};
    double backoff_factor = 2.0;
    std::chrono::milliseconds backoff_max{30000};
    /// agents queried concurrently within a round
    int max_concurrency = 1;

    void validate() const;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

/// Something that answers a chat-completion request with the reply text.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    /// Returns the raw response body; throws TransportError.
    virtual std::string post(const std::string& request_body) = 0;
};

/// POST {base_url}/chat/completions over HTTP(S).
std::unique_ptr<ChatTransport> make_http_transport(const EndpointConfig& config);

std::string chat_request_body(const EndpointConfig& config, std::span<const ChatMessage> messages);

/// choices[0].message.content of a chat-completion response.
std::string extract_reply(const std::string& response_body);

/// Append-only JSONL log of every request/response, safe to share.
class ExchangeJournal {
public:
    ExchangeJournal() = default;
    explicit ExchangeJournal(const std::filesystem::path& path);

    struct Entry {
        std::string group_id;
        int agent = 0;
        int round = 0;
        int attempt = 0;
        std::string request;
        std::optional<std::string> response;
        std::string outcome;  // "ok", or the error message
    };

    void record(const Entry& entry);
    std::vector<std::string> lines() const;

private:
    mutable std::mutex mutex_;
    std::unique_ptr<std::ofstream> out_;
    std::vector<std::string> lines_;
};

/// Spaces requests at least 1/rate seconds apart.
class RateLimiter {
public:
    explicit RateLimiter(double per_second = 0.0);
    void acquire();

private:
    std::mutex mutex_;
    std::chrono::steady_clock::duration interval_{};
    std::chrono::steady_clock::time_point next_{};
};

struct LlmShared {
    EndpointConfig endpoint;
    std::shared_ptr<ChatTransport> transport;
    std::shared_ptr<ExchangeJournal> journal;
    std::shared_ptr<RateLimiter> limiter;
    /// injectable so tests need not sleep
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// One agent backed by a chat endpoint. Retries reply and transport errors
/// with exponential backoff; throws PolicyAbort once retries run out.
class LlmPolicy final : public Policy {
public:
    LlmPolicy(std::shared_ptr<const LlmShared> shared, PromptTemplate tmpl, std::string group_id, int agent);
    int next_guess(const AgentView& view) override;

private:
    std::shared_ptr<const LlmShared> shared_;
    PromptTemplate template_;
    std::string group_id_;
    int agent_;
};

/// Persona paragraphs separated by blank lines, in file order.
std::vector<std::string> parse_personas(std::istream& in);
std::vector<std::string> load_personas(const std::filesystem::path& path);

}  // namespace collective
