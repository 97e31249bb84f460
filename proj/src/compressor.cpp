#include "evalcomp/compressor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <nlohmann/json.hpp>

#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"

namespace evalcomp {

using nlohmann::json;

// ── rate set ─────────────────────────────────────────────────────────

RateSet RateSet::defaults() {
    return RateSet{{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}};
}

bool RateSet::valid() const {
    if (rates.empty()) return false;
    double prev = 0.0;
    bool has_one = false;
    for (double r : rates) {
        if (r <= prev || r > 1.0) return false;
        if (r == 1.0) has_one = true;
        prev = r;
    }
    return has_one;
}

double sample_rate(Rng& rng, const RateSet& rates) {
    return rates.rates[rng.uniform_below(rates.rates.size())];
}

// ── surface tokenization ─────────────────────────────────────────────

namespace {

bool is_space_cp(char32_t cp) {
    if (cp <= 0x7F) return std::isspace(static_cast<int>(cp)) != 0;
    return cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
           cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_punct_cp(char32_t cp) {
    if (cp <= 0x7F) return std::ispunct(static_cast<int>(cp)) != 0;
    return (cp >= 0x2010 && cp <= 0x2027)    // dashes, quotes, daggers, ellipsis
           || (cp >= 0x2030 && cp <= 0x205E) // per-mille, primes, brackets
           || (cp >= 0x3001 && cp <= 0x303F) // CJK punctuation
           || (cp >= 0xFF01 && cp <= 0xFF0F) // fullwidth ! to /
           || (cp >= 0xFF1A && cp <= 0xFF20) // fullwidth : to @
           || (cp >= 0xFF3B && cp <= 0xFF40) // fullwidth [ to `
           || (cp >= 0xFF5B && cp <= 0xFF65) // fullwidth { to halfwidth .
           || cp == 0xAB || cp == 0xBB || cp == 0xA1 || cp == 0xBF || cp == 0xB7;
}

bool is_cjk_cp(char32_t cp) {
    return (cp >= 0x3040 && cp <= 0x30FF)     // hiragana, katakana
           || (cp >= 0x3400 && cp <= 0x4DBF)  // CJK ext A
           || (cp >= 0x4E00 && cp <= 0x9FFF)  // CJK unified
           || (cp >= 0xF900 && cp <= 0xFAFF)  // CJK compat
           || (cp >= 0xAC00 && cp <= 0xD7AF)  // hangul
           || (cp >= 0x20000 && cp <= 0x2FA1F);
}

struct Cp {
    char32_t value;
    std::size_t byte_start;
    std::size_t byte_end;
};

std::vector<Cp> decode_all(const std::string& text) {
    std::vector<Cp> cps;
    cps.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t start = pos;
        char32_t v = utf8::decode_at(text, pos);
        cps.push_back({v, start, pos});
    }
    return cps;
}

constexpr std::size_t kCjkFallbackLength = 12;

}  // namespace

std::vector<SurfaceToken> tokenize_surface(const std::string& text) {
    const auto cps = decode_all(text);
    std::vector<SurfaceToken> tokens;

    auto emit = [&](std::size_t cp_begin, std::size_t cp_end) {
        SurfaceToken t;
        t.char_start = static_cast<int>(cp_begin);
        t.char_end = static_cast<int>(cp_end);
        t.text = text.substr(cps[cp_begin].byte_start, cps[cp_end - 1].byte_end - cps[cp_begin].byte_start);
        tokens.push_back(std::move(t));
    };

    std::size_t i = 0;
    const std::size_t n = cps.size();
    while (i < n) {
        if (is_space_cp(cps[i].value)) {
            ++i;
            continue;
        }
        std::size_t run_end = i;
        while (run_end < n && !is_space_cp(cps[run_end].value)) ++run_end;

        // Peel leading and trailing punctuation into single-codepoint tokens.
        std::size_t core_begin = i;
        while (core_begin < run_end && is_punct_cp(cps[core_begin].value)) ++core_begin;
        std::size_t core_end = run_end;
        while (core_end > core_begin && is_punct_cp(cps[core_end - 1].value)) --core_end;

        for (std::size_t k = i; k < core_begin; ++k) emit(k, k + 1);
        if (core_end > core_begin) {
            const std::size_t core_len = core_end - core_begin;
            bool has_cjk = false;
            for (std::size_t k = core_begin; k < core_end && !has_cjk; ++k)
                has_cjk = is_cjk_cp(cps[k].value);
            if (core_len > kCjkFallbackLength && has_cjk) {
                for (std::size_t k = core_begin; k < core_end; ++k) emit(k, k + 1);
            } else {
                emit(core_begin, core_end);
            }
        }
        for (std::size_t k = core_end; k < run_end; ++k) emit(k, k + 1);

        i = run_end;
    }
    return tokens;
}

std::string detokenize(const std::vector<SurfaceToken>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i].text;
    }
    return out;
}

void mark_protected(std::vector<SurfaceToken>& tokens, const std::vector<ErrorSpan>& spans) {
    for (auto& t : tokens) {
        t.is_protected = false;
        for (const auto& s : spans) {
            if (t.char_start < s.end && s.start < t.char_end) {
                t.is_protected = true;
                break;
            }
        }
    }
}

CompressedText compress_text(const std::string& text, const std::vector<ErrorSpan>& spans,
                             double rate, Rng& rng) {
    auto tokens = tokenize_surface(text);
    const std::size_t n = tokens.size();
    if (n == 0) throw EmptyTextError();
    mark_protected(tokens, spans);

    const auto keep_target = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n)));

    std::vector<int> kept;
    std::vector<int> unprotected;
    for (std::size_t i = 0; i < n; ++i) {
        if (tokens[i].is_protected)
            kept.push_back(static_cast<int>(i));
        else
            unprotected.push_back(static_cast<int>(i));
    }

    if (kept.size() < keep_target) {
        // Partial Fisher-Yates draw of keep_target - protected slots.
        const std::size_t want = keep_target - kept.size();
        for (std::size_t i = 0; i < want; ++i) {
            std::size_t j = i + rng.uniform_below(unprotected.size() - i);
            std::swap(unprotected[i], unprotected[j]);
            kept.push_back(unprotected[i]);
        }
    }
    std::sort(kept.begin(), kept.end());

    CompressedText out;
    out.original = text;
    out.requested_rate = rate;
    out.kept_token_indices = std::move(kept);
    out.achieved_rate = static_cast<double>(out.kept_token_indices.size()) / static_cast<double>(n);
    std::string joined;
    for (std::size_t i = 0; i < out.kept_token_indices.size(); ++i) {
        if (i) joined += ' ';
        joined += tokens[out.kept_token_indices[i]].text;
    }
    out.compressed = std::move(joined);
    return out;
}

// ── SFT prompt/completion format ─────────────────────────────────────

const char* const kSftSystemMessage =
    "You are a helpful AI assistant that intelligently compresses and summarizes the given "
    "Machine Translation outputs for further evaluation.";

std::string render_sft_prompt(const std::string& source, const std::string& target) {
    return "Compress the following MT input and output:\nSource:```" + source + "```\nMT:```" +
           target + "```";
}

namespace {

std::string render_span_list(const std::vector<std::string>& spans) {
    if (spans.empty()) return "None";
    std::string out;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (i) out += "; ";
        out += "[" + spans[i] + "]";
    }
    return out;
}

}  // namespace

std::string render_sft_completion(double rate, const std::vector<std::string>& source_spans,
                                  const std::vector<std::string>& target_spans,
                                  const std::string& compressed_source,
                                  const std::string& compressed_target) {
    std::string out;
    out += "Rate = " + format_double(rate) + "\n";
    out += "Quality-relevant parts of Source: " + render_span_list(source_spans) + "\n";
    out += "Quality-relevant parts of Translation: " + render_span_list(target_spans) + "\n";
    out += "Compressed Source:```" + compressed_source + "```\n";
    out += "Compressed MT:```" + compressed_target + "```";
    return out;
}

namespace {

// Cursor over the completion text tracking byte offsets for errors.
struct Scanner {
    const std::string& text;
    std::size_t pos = 0;

    void skip_blank_lines() {
        while (pos < text.size()) {
            std::size_t eol = text.find('\n', pos);
            std::size_t end = eol == std::string::npos ? text.size() : eol;
            if (!trim(std::string_view(text).substr(pos, end - pos)).empty()) return;
            if (eol == std::string::npos) {
                pos = text.size();
                return;
            }
            pos = eol + 1;
        }
    }

    // Matches `label` (plus optional alternates) followed by ':' or '='.
    // Returns false without advancing when the label does not match.
    bool match_label(std::string_view label) {
        if (!std::string_view(text).substr(pos).starts_with(label)) return false;
        std::size_t p = pos + label.size();
        while (p < text.size() && text[p] == ' ') ++p;
        if (p >= text.size() || (text[p] != ':' && text[p] != '=')) return false;
        ++p;
        while (p < text.size() && text[p] == ' ') ++p;
        pos = p;
        return true;
    }

    std::string rest_of_line() {
        std::size_t eol = text.find('\n', pos);
        std::size_t end = eol == std::string::npos ? text.size() : eol;
        std::string out = text.substr(pos, end - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        while (!out.empty() && (out.back() == ' ' || out.back() == '\r')) out.pop_back();
        return out;
    }
};

std::vector<std::string> parse_span_list(const std::string& payload, std::size_t base_offset) {
    std::string body = payload;
    // Tolerate a trailing semicolon after the last span.
    while (!body.empty() && (body.back() == ';' || body.back() == ' ')) body.pop_back();
    if (body == "None" || body == "none") return {};
    std::vector<std::string> spans;
    std::size_t i = 0;
    while (true) {
        if (i >= body.size() || body[i] != '[')
            throw GrammarError(base_offset + i, "expected '[' in span list");
        // A "]" immediately followed by ";" and the next "[" separates spans;
        // the final "]" must close the line.
        std::size_t close = std::string::npos;
        std::size_t scan = i + 1;
        while (scan < body.size()) {
            std::size_t cand = body.find("];", scan);
            if (cand == std::string::npos) break;
            std::size_t after = cand + 2;
            while (after < body.size() && body[after] == ' ') ++after;
            if (after < body.size() && body[after] == '[') {
                close = cand;
                break;
            }
            scan = cand + 1;
        }
        if (close != std::string::npos) {
            spans.push_back(body.substr(i + 1, close - i - 1));
            i = close + 2;
            while (i < body.size() && body[i] == ' ') ++i;
            continue;
        }
        if (body.back() != ']')
            throw GrammarError(base_offset + body.size(), "unterminated span list");
        spans.push_back(body.substr(i + 1, body.size() - i - 2));
        break;
    }
    return spans;
}

std::string parse_fenced(Scanner& sc) {
    std::size_t open = sc.text.find("```", sc.pos);
    if (open == std::string::npos || !trim(std::string_view(sc.text).substr(sc.pos, open - sc.pos)).empty())
        throw GrammarError(sc.pos, "expected ``` fence");
    std::size_t close = sc.text.find("```", open + 3);
    if (close == std::string::npos) throw GrammarError(open, "unterminated ``` fence");
    std::string out = sc.text.substr(open + 3, close - open - 3);
    sc.pos = close + 3;
    // Consume to end of line.
    std::size_t eol = sc.text.find('\n', sc.pos);
    sc.pos = eol == std::string::npos ? sc.text.size() : eol + 1;
    return out;
}

}  // namespace

SftCompletion parse_sft_completion(const std::string& text) {
    Scanner sc{text};
    SftCompletion out;

    sc.skip_blank_lines();
    if (!sc.match_label("Rate")) throw GrammarError(sc.pos, "expected 'Rate =' line");
    {
        std::string value = sc.rest_of_line();
        const char* begin = value.c_str();
        char* end = nullptr;
        out.rate = std::strtod(begin, &end);
        if (end == begin || *end != '\0')
            throw GrammarError(sc.pos, "malformed rate value '" + value + "'");
    }

    sc.skip_blank_lines();
    std::size_t src_line = sc.pos;
    if (!sc.match_label("Quality-relevant parts of Source"))
        throw GrammarError(sc.pos, "expected 'Quality-relevant parts of Source:' line");
    out.source_spans = parse_span_list(sc.rest_of_line(), src_line);

    sc.skip_blank_lines();
    std::size_t tgt_line = sc.pos;
    if (!sc.match_label("Quality-relevant parts of Translation") &&
        !sc.match_label("Quality-relevant parts of MT"))
        throw GrammarError(sc.pos, "expected 'Quality-relevant parts of Translation:' line");
    out.target_spans = parse_span_list(sc.rest_of_line(), tgt_line);

    sc.skip_blank_lines();
    if (!sc.match_label("Compressed Source"))
        throw GrammarError(sc.pos, "expected 'Compressed Source:' fence");
    out.compressed_source = parse_fenced(sc);

    sc.skip_blank_lines();
    if (!sc.match_label("Compressed MT"))
        throw GrammarError(sc.pos, "expected 'Compressed MT:' fence");
    out.compressed_target = parse_fenced(sc);

    return out;
}

// ── SFT example ──────────────────────────────────────────────────────

CompressionExample build_example_at_rate(const SegmentRecord& record, double rate, Rng& rng,
                                         std::uint64_t seed) {
    CompressionExample ex;
    ex.record_key = record.key();
    ex.seed = seed;
    ex.rate = rate;

    auto [src_spans, tgt_spans] = extract_spans(record);
    ex.compressed_source = compress_text(record.source, src_spans, ex.rate, rng);
    ex.compressed_target = compress_text(record.target, tgt_spans, ex.rate, rng);
    for (const auto& s : src_spans) ex.source_spans.push_back(s.text);
    for (const auto& s : tgt_spans) ex.target_spans.push_back(s.text);

    ex.prompt_text = render_sft_prompt(record.source, record.target);
    ex.completion_text =
        render_sft_completion(ex.rate, ex.source_spans, ex.target_spans,
                              ex.compressed_source.compressed, ex.compressed_target.compressed);
    return ex;
}

CompressionExample build_sft_example(const SegmentRecord& record, Rng& rng, const RateSet& rates,
                                     std::uint64_t seed) {
    return build_example_at_rate(record, sample_rate(rng, rates), rng, seed);
}

namespace {

json compressed_to_json(const CompressedText& c) {
    return json{{"original", c.original},
                {"compressed", c.compressed},
                {"requested_rate", c.requested_rate},
                {"achieved_rate", c.achieved_rate},
                {"kept_token_indices", c.kept_token_indices}};
}

}  // namespace

std::string example_to_json(const CompressionExample& ex) {
    json j{{"record_key", ex.record_key},
           {"rate", ex.rate},
           {"source_spans", ex.source_spans},
           {"target_spans", ex.target_spans},
           {"compressed_source", compressed_to_json(ex.compressed_source)},
           {"compressed_target", compressed_to_json(ex.compressed_target)},
           {"prompt_text", ex.prompt_text},
           {"completion_text", ex.completion_text},
           {"seed", ex.seed}};
    return j.dump();
}

}  // namespace evalcomp
