#include "evalcomp/response_scoring.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"

namespace evalcomp {

using nlohmann::json;

std::string to_string(PromptKind k) {
    return k == PromptKind::classic ? "classic" : "lite";
}

PromptKind prompt_kind_from_string(std::string_view s) {
    std::string v = to_lower(trim(s));
    if (v == "classic" || v == "original") return PromptKind::classic;
    if (v == "lite" || v == "simplified") return PromptKind::lite;
    throw ConfigError("unknown prompt kind: '" + std::string(s) + "'");
}

// ── classic parser ───────────────────────────────────────────────────

namespace {

bool is_no_error(std::string_view line) {
    std::string v = to_lower(trim(line));
    return v == "no-error" || v == "no error" || v == "no-errors" || v == "no errors";
}

ErrorItem parse_entry(std::string_view line) {
    ErrorItem item;
    auto sep = line.find(" - ");
    if (sep == std::string_view::npos) {
        item.category = std::string(trim(line));
        return item;
    }
    item.category = std::string(trim(line.substr(0, sep)));
    std::string_view rest = trim(line.substr(sep + 3));
    if (rest.size() >= 2 && rest.front() == '"' && rest.back() == '"')
        rest = rest.substr(1, rest.size() - 2);
    item.span_text = std::string(rest);
    return item;
}

}  // namespace

ParsedErrors parse_classic(const std::string& text) {
    ParsedErrors out;
    out.raw = text;

    std::vector<ErrorItem>* section = nullptr;
    bool saw_critical = false, saw_major = false, saw_minor = false;
    for (auto raw_line : split_lines(text)) {
        auto line = trim(raw_line);
        if (line.empty()) continue;
        std::string lowered = to_lower(line);
        if (lowered == "critical:") {
            if (saw_critical) return out;  // duplicate header
            saw_critical = true;
            section = &out.critical;
            continue;
        }
        if (lowered == "major:") {
            if (saw_major) return out;
            saw_major = true;
            section = &out.major;
            continue;
        }
        if (lowered == "minor:") {
            if (saw_minor) return out;
            saw_minor = true;
            section = &out.minor;
            continue;
        }
        if (section == nullptr) return out;  // content before any header
        if (is_no_error(line)) continue;
        section->push_back(parse_entry(line));
    }
    if (!saw_critical && !saw_major && !saw_minor) return out;
    out.valid = true;
    return out;
}

// ── lite parser ──────────────────────────────────────────────────────

namespace {

// Drops a ``` or ```json wrapper when present.
std::string strip_code_fence(std::string_view text) {
    auto t = trim(text);
    if (!t.starts_with("```")) return std::string(t);
    auto nl = t.find('\n');
    if (nl == std::string_view::npos) return std::string(t);
    t = t.substr(nl + 1);
    auto close = t.rfind("```");
    if (close != std::string_view::npos) t = t.substr(0, close);
    return std::string(trim(t));
}

bool parse_lite_list(const json& arr, std::vector<ErrorItem>& into) {
    if (!arr.is_array()) return false;
    for (const auto& item : arr) {
        if (item.is_string()) {
            if (!is_no_error(item.get<std::string>())) return false;
            continue;
        }
        if (item.is_object() && item.size() == 1) {
            auto it = item.begin();
            if (!it.value().is_string()) return false;
            into.push_back({it.key(), it.value().get<std::string>()});
            continue;
        }
        return false;
    }
    return true;
}

}  // namespace

ParsedErrors parse_lite_json(const std::string& text) {
    ParsedErrors out;
    out.raw = text;

    json j = json::parse(strip_code_fence(text), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return out;
    if (!j.contains("critical") || !j.contains("major") || !j.contains("minor")) return out;

    ParsedErrors parsed;
    if (!parse_lite_list(j["critical"], parsed.critical) ||
        !parse_lite_list(j["major"], parsed.major) || !parse_lite_list(j["minor"], parsed.minor))
        return out;

    out.critical = std::move(parsed.critical);
    out.major = std::move(parsed.major);
    out.minor = std::move(parsed.minor);
    out.valid = true;
    return out;
}

// ── scoring ──────────────────────────────────────────────────────────

MqmScore mqm_score(const ParsedErrors& errors, const SeverityWeights& weights,
                   double invalid_fallback) {
    MqmScore score;
    if (!errors.valid) {
        score.valid = false;
        score.value = invalid_fallback;
        return score;
    }
    score.valid = true;
    score.penalty_breakdown.minor_count = static_cast<int>(errors.minor.size());
    score.penalty_breakdown.major_count = static_cast<int>(errors.major.size());
    score.penalty_breakdown.critical_count = static_cast<int>(errors.critical.size());
    double penalty = score.penalty_breakdown.minor_count * weights.minor +
                     score.penalty_breakdown.major_count * weights.major +
                     score.penalty_breakdown.critical_count * weights.critical;
    score.value = -std::min(weights.cap, penalty);
    return score;
}

MqmScore score_reply(const std::string& reply_text, PromptKind kind, const SeverityWeights& weights,
                     double invalid_fallback) {
    ParsedErrors errors =
        kind == PromptKind::classic ? parse_classic(reply_text) : parse_lite_json(reply_text);
    return mqm_score(errors, weights, invalid_fallback);
}

std::string canonical_no_error_reply(PromptKind kind) {
    if (kind == PromptKind::classic) return "Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error";
    return R"({"critical": ["no-error"], "major": [], "minor": []})";
}

}  // namespace evalcomp
