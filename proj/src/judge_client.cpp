#include "evalcomp/judge_client.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "evalcomp/compressor.hpp"
#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace evalcomp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(JudgeBackendKind k) {
    switch (k) {
        case JudgeBackendKind::http: return "http";
        case JudgeBackendKind::mock: return "mock";
        case JudgeBackendKind::synthetic: return "synthetic";
    }
    return "mock";
}

namespace {

JudgeBackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http") return JudgeBackendKind::http;
    if (s == "synthetic") return JudgeBackendKind::synthetic;
    return JudgeBackendKind::mock;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

json messages_json(const ChatPrompt& prompt) {
    json messages = json::array();
    for (const auto& m : prompt.messages)
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return messages;
}

}  // namespace

std::string cache_key(const JudgeRequest& request) {
    json canonical{{"model", request.model},
                   {"messages", messages_json(request.prompt)},
                   {"temperature", format_double(request.temperature)},
                   {"response_format", request.response_format == ResponseFormat::json ? "json" : "text"}};
    return sha256_hex(canonical.dump());
}

// ── HTTP backend ─────────────────────────────────────────────────────

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty())
        if (const char* env = std::getenv("JUDGE_BASE_URL")) options_.base_url = env;
    if (options_.api_key.empty())
        if (const char* env = std::getenv("JUDGE_API_KEY")) options_.api_key = env;
    if (options_.base_url.empty())
        throw ConfigError("http judge backend needs a base URL (config or JUDGE_BASE_URL)");
    if (options_.api_key.empty())
        throw ConfigError("http judge backend needs an API key (config or JUDGE_API_KEY)");

    // Split "scheme://host:port/prefix" into client target and path prefix.
    auto scheme_end = options_.base_url.find("://");
    std::size_t path_start = scheme_end == std::string::npos
                                 ? options_.base_url.find('/')
                                 : options_.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_ = options_.base_url;
    } else {
        scheme_host_ = options_.base_url.substr(0, path_start);
        path_prefix_ = options_.base_url.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
}

JudgeResponse HttpBackend::call(const JudgeRequest& request) {
    json body{{"model", request.model},
              {"messages", messages_json(request.prompt)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}};
    if (request.response_format == ResponseFormat::json)
        body["response_format"] = {{"type", "json_object"}};
    const std::string payload = body.dump();

    httplib::Headers headers = {{"Authorization", "Bearer " + options_.api_key}};

    thread_local std::mt19937_64 jitter_rng{std::random_device{}()};

    std::string last_error;
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        if (attempt > 0) {
            const double ceiling = options_.base_delay_ms *
                                   std::pow(options_.backoff_factor, attempt - 1);
            std::uniform_real_distribution<double> dist(0.0, ceiling);
            std::this_thread::sleep_for(std::chrono::milliseconds(
                static_cast<long long>(dist(jitter_rng))));
        }

        httplib::Client client(scheme_host_);
        client.set_connection_timeout(options_.timeout_sec);
        client.set_read_timeout(options_.timeout_sec);
        ++calls_;
        auto result = client.Post(path_prefix_ + "/chat/completions", headers, payload,
                                  "application/json");

        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;  // transient
        }
        const int status = result->status;
        if (status == 200) {
            json reply = json::parse(result->body, nullptr, false);
            if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
                throw BackendUnavailableError("malformed chat-completions response body");
            JudgeResponse out;
            out.text = reply["choices"][0]["message"]["content"].get<std::string>();
            out.prompt_tokens = reply.value("usage", json::object()).value("prompt_tokens", -1);
            out.completion_tokens =
                reply.value("usage", json::object()).value("completion_tokens", -1);
            out.backend = JudgeBackendKind::http;
            return out;
        }
        if (status == 401 || status == 403)
            throw AuthError("judge endpoint rejected credentials (HTTP " +
                            std::to_string(status) + ")");
        if (status == 400)
            throw BadRequestError("judge endpoint rejected request (HTTP 400): " + result->body);
        if (status == 429 || status >= 500) {
            last_error = "HTTP " + std::to_string(status);
            continue;  // transient
        }
        throw BackendUnavailableError("judge endpoint returned HTTP " + std::to_string(status));
    }
    throw ExhaustedRetriesError("judge request failed after " +
                                std::to_string(options_.max_attempts) +
                                " attempts; last error: " + last_error);
}

// ── mock backend ─────────────────────────────────────────────────────

std::unique_ptr<MockBackend> MockBackend::returning(std::string reply) {
    return std::make_unique<MockBackend>(
        [reply = std::move(reply)](const JudgeRequest&) { return reply; });
}

JudgeResponse MockBackend::call(const JudgeRequest& request) {
    ++calls_;
    JudgeResponse out;
    out.text = handler_(request);
    out.prompt_tokens = -1;
    out.completion_tokens = -1;
    out.backend = JudgeBackendKind::mock;
    return out;
}

// ── synthetic backend ────────────────────────────────────────────────

namespace {

// First and second ``` fenced blocks of the target human message.
std::pair<std::string, std::string> extract_fenced_pair(const std::string& content) {
    auto next_fence = [&](std::size_t from) { return content.find("```", from); };
    std::size_t a = next_fence(0);
    if (a == std::string::npos) throw BackendUnavailableError("prompt has no fenced source text");
    std::size_t b = next_fence(a + 3);
    if (b == std::string::npos) throw BackendUnavailableError("unterminated source fence in prompt");
    std::size_t c = next_fence(b + 3);
    if (c == std::string::npos) throw BackendUnavailableError("prompt has no fenced target text");
    std::size_t d = next_fence(c + 3);
    if (d == std::string::npos) throw BackendUnavailableError("unterminated target fence in prompt");
    return {content.substr(a + 3, b - a - 3), content.substr(c + 3, d - c - 3)};
}

std::vector<std::string> token_texts(const std::string& text) {
    std::vector<std::string> out;
    for (auto& t : tokenize_surface(text)) out.push_back(std::move(t.text));
    return out;
}

bool is_token_subsequence(const std::vector<std::string>& needle,
                          const std::vector<std::string>& haystack) {
    std::size_t i = 0;
    for (const auto& h : haystack) {
        if (i == needle.size()) break;
        if (h == needle[i]) ++i;
    }
    return i == needle.size();
}

// Tokens of the original side text overlapping [start, end).
std::vector<std::string> span_tokens(const std::vector<SurfaceToken>& side_tokens,
                                     const ErrorSpan& span) {
    std::vector<std::string> out;
    for (const auto& t : side_tokens)
        if (t.char_start < span.end && span.start < t.char_end) out.push_back(t.text);
    return out;
}

}  // namespace

JudgeResponse synthetic_judge(const SegmentRecord& record, PromptKind kind,
                              const SyntheticNoise& noise, Rng& rng, const ChatPrompt& prompt) {
    if (prompt.messages.empty() || prompt.messages.back().role != Role::user)
        throw BackendUnavailableError("synthetic judge needs a prompt ending in a user message");
    auto [prompt_source, prompt_target] = extract_fenced_pair(prompt.messages.back().content);

    const auto source_tokens = tokenize_surface(record.source);
    const auto target_tokens = tokenize_surface(record.target);
    const auto kept_source = token_texts(prompt_source);
    const auto kept_target = token_texts(prompt_target);

    auto [src_spans, tgt_spans] = extract_spans(record);
    std::vector<ErrorSpan> ordered = std::move(tgt_spans);
    ordered.insert(ordered.end(), src_spans.begin(), src_spans.end());

    std::vector<const ErrorSpan*> reported;
    for (const auto& span : ordered) {
        if (span.severity == Severity::neutral) continue;
        const bool on_source = span.side == Side::source;
        const auto needed = span_tokens(on_source ? source_tokens : target_tokens, span);
        if (!is_token_subsequence(needed, on_source ? kept_source : kept_target)) continue;
        if (noise.span_drop_prob > 0.0 && rng.uniform() < noise.span_drop_prob) continue;
        reported.push_back(&span);
    }

    std::vector<std::pair<Severity, const ErrorSpan*>> entries;
    for (const ErrorSpan* span : reported) {
        Severity sev = span->severity;
        if (noise.severity_flip_prob > 0.0 && sev != Severity::critical &&
            rng.uniform() < noise.severity_flip_prob)
            sev = sev == Severity::minor ? Severity::major : Severity::minor;
        entries.emplace_back(sev, span);
    }

    auto category_of = [](const ErrorSpan& s) {
        return s.category.empty() ? std::string("other") : s.category;
    };

    JudgeResponse out;
    out.backend = JudgeBackendKind::synthetic;
    out.prompt_tokens = -1;
    out.completion_tokens = -1;

    if (kind == PromptKind::classic) {
        std::string text;
        for (Severity sev : {Severity::critical, Severity::major, Severity::minor}) {
            text += sev == Severity::critical ? "Critical:\n"
                    : sev == Severity::major  ? "Major:\n"
                                              : "Minor:\n";
            bool any = false;
            for (const auto& [s, span] : entries) {
                if (s != sev) continue;
                text += category_of(*span) + " - \"" + span->text + "\"\n";
                any = true;
            }
            if (!any) text += "no-error\n";
        }
        text.pop_back();  // trailing newline
        out.text = std::move(text);
    } else {
        json reply;
        for (Severity sev : {Severity::critical, Severity::major, Severity::minor}) {
            json list = json::array();
            for (const auto& [s, span] : entries)
                if (s == sev) list.push_back({{category_of(*span), span->text}});
            const char* name = sev == Severity::critical ? "critical"
                               : sev == Severity::major  ? "major"
                                                         : "minor";
            if (sev == Severity::critical && list.empty()) list.push_back("no-error");
            reply[name] = std::move(list);
        }
        out.text = reply.dump();
    }
    return out;
}

SyntheticBackend::SyntheticBackend(const Corpus& corpus, PromptKind kind, SyntheticNoise noise,
                                   std::uint64_t seed)
    : kind_(kind), noise_(noise), seed_(seed) {
    for (const auto& record : corpus.records) by_key_[record.key()] = &record;
}

JudgeResponse SyntheticBackend::call(const JudgeRequest& request) {
    ++calls_;
    auto it = by_key_.find(request.record_key);
    if (it == by_key_.end())
        throw BackendUnavailableError("synthetic judge has no record for key '" +
                                      request.record_key + "'");
    // Noise draws depend only on (seed, request content), so identical
    // requests produce identical replies whether or not they hit cache.
    Rng rng = derive_rng(seed_, cache_key(request), "synthetic-noise");
    return synthetic_judge(*it->second, kind_, noise_, rng, request.prompt);
}

// ── client ───────────────────────────────────────────────────────────

JudgeClient::JudgeClient(std::unique_ptr<JudgeBackend> backend, JudgeClientOptions options,
                         TokenCounter counter)
    : backend_(std::move(backend)), options_(std::move(options)), counter_(std::move(counter)) {}

std::optional<JudgeResponse> JudgeClient::cache_read(const std::string& digest) const {
    const fs::path path = fs::path(options_.cache_dir) / digest.substr(0, 2) / (digest + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    JudgeResponse out;
    out.text = j.at("text").get<std::string>();
    out.prompt_tokens = j.at("prompt_tokens").get<long long>();
    out.completion_tokens = j.at("completion_tokens").get<long long>();
    out.backend = backend_kind_from_string(j.value("backend", "mock"));
    out.cached = true;
    return out;
}

void JudgeClient::cache_write(const std::string& digest, const JudgeResponse& response) const {
    const fs::path dir = fs::path(options_.cache_dir) / digest.substr(0, 2);
    fs::create_directories(dir);
    const fs::path path = dir / (digest + ".json");
    json j{{"text", response.text},
           {"prompt_tokens", response.prompt_tokens},
           {"completion_tokens", response.completion_tokens},
           {"backend", to_string(response.backend)}};
    const fs::path tmp = path.string() + ".tmp" + std::to_string(
        std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << j.dump();
    }
    fs::rename(tmp, path);
}

JudgeResponse JudgeClient::complete(const JudgeRequest& request) {
    const std::string digest = cache_key(request);
    if (!options_.cache_dir.empty()) {
        if (auto hit = cache_read(digest)) {
            ++cache_hits_;
            return *hit;
        }
    }
    JudgeResponse response = backend_->call(request);
    if (response.prompt_tokens < 0) response.prompt_tokens = count_tokens(request.prompt, counter_);
    if (response.completion_tokens < 0)
        response.completion_tokens = count_tokens(response.text, counter_);
    if (!options_.cache_dir.empty()) cache_write(digest, response);
    return response;
}

std::vector<BatchItem> JudgeClient::complete_batch(const std::vector<JudgeRequest>& requests) {
    std::vector<BatchItem> results(requests.size());
    const int workers = std::max(1, std::min<int>(options_.max_concurrency,
                                                  static_cast<int>(requests.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < requests.size(); ++i) {
            try {
                results[i].response = complete(requests[i]);
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
        return results;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            try {
                results[i].response = complete(requests[i]);
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace evalcomp
