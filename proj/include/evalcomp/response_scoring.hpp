#pragma once

#include <optional>
#include <string>
#include <vector>

namespace evalcomp {

enum class PromptKind { classic, lite };

std::string to_string(PromptKind k);
PromptKind prompt_kind_from_string(std::string_view s);

// ── parsed judge replies ─────────────────────────────────────────────

struct ErrorItem {
    std::string category;
    std::optional<std::string> span_text;

    friend bool operator==(const ErrorItem&, const ErrorItem&) = default;
};

// "no-error" entries contribute zero items; valid == false implies all
// lists empty.
struct ParsedErrors {
    std::vector<ErrorItem> critical;
    std::vector<ErrorItem> major;
    std::vector<ErrorItem> minor;
    std::string raw;
    bool valid = false;
};

// Classic text replies: case-insensitive "Critical:"/"Major:"/"Minor:"
// headers, entries `category - "span"` or bare category. Total: never
// throws, invalidity is in-band.
ParsedErrors parse_classic(const std::string& text);

// Lite JSON replies: {"critical": [...], "major": [...], "minor": [...]}
// with "no-error" strings or single-key {category: span} objects; a
// fenced code block wrapper is tolerated. Total.
ParsedErrors parse_lite_json(const std::string& text);

// ── MQM scoring ──────────────────────────────────────────────────────

struct SeverityWeights {
    double minor = 1.0;
    double major = 5.0;
    double critical = 10.0;
    double cap = 25.0;  // maximum total penalty

    bool valid() const { return 0 <= minor && minor <= major && major <= critical && cap > 0; }
};

struct MqmScore {
    double value = 0.0;  // <= 0 when valid
    struct {
        int minor_count = 0;
        int major_count = 0;
        int critical_count = 0;
    } penalty_breakdown;
    bool valid = false;
};

constexpr double kDefaultInvalidFallback = -25.0;

// value = -min(cap, sum of severity-weighted counts); invalid input maps
// to the configured fallback score with valid=false.
MqmScore mqm_score(const ParsedErrors& errors, const SeverityWeights& weights,
                   double invalid_fallback = kDefaultInvalidFallback);

// Dispatches to the parser matching `kind`, then scores.
MqmScore score_reply(const std::string& reply_text, PromptKind kind, const SeverityWeights& weights,
                     double invalid_fallback = kDefaultInvalidFallback);

// The error-free reply in either grammar.
std::string canonical_no_error_reply(PromptKind kind);

}  // namespace evalcomp
