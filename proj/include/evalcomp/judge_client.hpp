#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evalcomp/mqm_corpus.hpp"
#include "evalcomp/prompt_kit.hpp"
#include "evalcomp/response_scoring.hpp"
#include "evalcomp/rng.hpp"

namespace evalcomp {

enum class JudgeBackendKind { http, mock, synthetic };

std::string to_string(JudgeBackendKind k);

enum class ResponseFormat { text, json };

struct JudgeRequest {
    std::string model;
    ChatPrompt prompt;
    double temperature = 0.0;
    int max_output_tokens = 512;
    ResponseFormat response_format = ResponseFormat::text;
    // Lets offline backends look up the segment a prompt was built from;
    // not part of the cache key.
    std::string record_key;
};

struct JudgeResponse {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    JudgeBackendKind backend = JudgeBackendKind::mock;
    bool cached = false;
};

// SHA-256 of the canonical serialization of (model, messages,
// temperature, response_format), as lowercase hex.
std::string cache_key(const JudgeRequest& request);

// ── backends ─────────────────────────────────────────────────────────

class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;

    // Token counts may be left at -1 when the backend cannot know them;
    // the client fills them in with its configured counter.
    virtual JudgeResponse call(const JudgeRequest& request) = 0;

    long long calls() const { return calls_.load(); }

protected:
    std::atomic<long long> calls_{0};
};

struct HttpBackendOptions {
    std::string base_url;          // falls back to JUDGE_BASE_URL
    std::string api_key;           // falls back to JUDGE_API_KEY
    int max_attempts = 5;
    int base_delay_ms = 1000;      // exponential backoff with full jitter
    double backoff_factor = 2.0;
    int timeout_sec = 60;
};

// POST {base_url}/chat/completions with bearer auth. 429/5xx/timeouts
// retry with backoff; 401/403 -> AuthError and 400 -> BadRequestError
// immediately.
class HttpBackend final : public JudgeBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    JudgeResponse call(const JudgeRequest& request) override;

private:
    HttpBackendOptions options_;
    std::string scheme_host_;
    std::string path_prefix_;
};

// Scripted backend for tests and dry runs.
class MockBackend final : public JudgeBackend {
public:
    using Handler = std::function<std::string(const JudgeRequest&)>;

    explicit MockBackend(Handler handler) : handler_(std::move(handler)) {}

    static std::unique_ptr<MockBackend> returning(std::string reply);

    JudgeResponse call(const JudgeRequest& request) override;

private:
    Handler handler_;
};

struct SyntheticNoise {
    double span_drop_prob = 0.0;
    double severity_flip_prob = 0.0;  // minor <-> major
};

// Deterministic reply derived from the record's gold spans: a span is
// reported with its severity unless its tokens did not survive in the
// compressed text embedded in the prompt, or noise drops it. Every reply
// parses under the matching response_scoring parser.
JudgeResponse synthetic_judge(const SegmentRecord& record, PromptKind kind,
                              const SyntheticNoise& noise, Rng& rng, const ChatPrompt& prompt);

class SyntheticBackend final : public JudgeBackend {
public:
    SyntheticBackend(const Corpus& corpus, PromptKind kind, SyntheticNoise noise,
                     std::uint64_t seed);

    JudgeResponse call(const JudgeRequest& request) override;

private:
    std::map<std::string, const SegmentRecord*> by_key_;
    PromptKind kind_;
    SyntheticNoise noise_;
    std::uint64_t seed_;
};

// ── client ───────────────────────────────────────────────────────────

struct JudgeClientOptions {
    std::string cache_dir;  // empty disables caching
    int max_concurrency = 4;
};

struct BatchItem {
    std::optional<JudgeResponse> response;
    std::string error;  // set when the request failed
};

// Wraps a backend with disk caching ({cache_dir}/{hh}/{digest}.json,
// atomic write-temp-then-rename) and bounded-concurrency batching.
class JudgeClient {
public:
    JudgeClient(std::unique_ptr<JudgeBackend> backend, JudgeClientOptions options,
                TokenCounter counter = TokenCounter::builtin());

    JudgeResponse complete(const JudgeRequest& request);

    // Responses come back in input order regardless of completion order.
    std::vector<BatchItem> complete_batch(const std::vector<JudgeRequest>& requests);

    long long backend_calls() const { return backend_->calls(); }
    long long cache_hits() const { return cache_hits_.load(); }
    int max_concurrency() const { return options_.max_concurrency; }
    const TokenCounter& counter() const { return counter_; }

private:
    std::optional<JudgeResponse> cache_read(const std::string& digest) const;
    void cache_write(const std::string& digest, const JudgeResponse& response) const;

    std::unique_ptr<JudgeBackend> backend_;
    JudgeClientOptions options_;
    TokenCounter counter_;
    std::atomic<long long> cache_hits_{0};
};

}  // namespace evalcomp
