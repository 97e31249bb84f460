#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evalcomp/mqm_corpus.hpp"
#include "evalcomp/rng.hpp"

namespace evalcomp {

// ── rate set ─────────────────────────────────────────────────────────

// Candidate compression rates; 1.0 means no compression and is required
// as the reference rate.
struct RateSet {
    std::vector<double> rates;

    static RateSet defaults();  // {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}

    bool valid() const;  // strictly increasing, all in (0,1], contains 1.0
};

double sample_rate(Rng& rng, const RateSet& rates);

// ── surface tokenization ─────────────────────────────────────────────

// Offsets count codepoints into the original text, matching ErrorSpan.
struct SurfaceToken {
    std::string text;
    int char_start = 0;
    int char_end = 0;
    bool is_protected = false;
};

// Maximal non-whitespace runs with leading/trailing punctuation split
// into single-codepoint tokens. Runs longer than 12 codepoints that
// contain CJK characters fall back to one token per codepoint; without
// that, unsegmented Chinese text would be a single token per sentence.
std::vector<SurfaceToken> tokenize_surface(const std::string& text);

// Joining kept token texts with single spaces defines detokenization.
std::string detokenize(const std::vector<SurfaceToken>& tokens);

// Sets is_protected on every token whose [char_start, char_end) overlaps
// any span's [start, end). Spans must be offsets into the same text.
void mark_protected(std::vector<SurfaceToken>& tokens, const std::vector<ErrorSpan>& spans);

// ── compression ──────────────────────────────────────────────────────

struct CompressedText {
    std::string original;
    std::string compressed;
    double requested_rate = 1.0;
    double achieved_rate = 1.0;
    std::vector<int> kept_token_indices;  // strictly increasing
};

// Keeps max(protected_count, ceil(rate * N)) tokens: every protected
// token plus a uniform random draw (without replacement) among the
// unprotected ones, rejoined in original order. Throws EmptyTextError
// when the text has no tokens.
CompressedText compress_text(const std::string& text, const std::vector<ErrorSpan>& spans,
                             double rate, Rng& rng);

// ── SFT prompt/completion format ─────────────────────────────────────

extern const char* const kSftSystemMessage;

// "Compress the following MT input and output:" user message with both
// texts in triple-backtick fences.
std::string render_sft_prompt(const std::string& source, const std::string& target);

// Rate line, two "Quality-relevant parts" span lists (or "None"), and the
// two fenced compressed texts.
std::string render_sft_completion(double rate, const std::vector<std::string>& source_spans,
                                  const std::vector<std::string>& target_spans,
                                  const std::string& compressed_source,
                                  const std::string& compressed_target);

struct SftCompletion {
    double rate = 1.0;
    std::vector<std::string> source_spans;
    std::vector<std::string> target_spans;
    std::string compressed_source;
    std::string compressed_target;

    friend bool operator==(const SftCompletion&, const SftCompletion&) = default;
};

// Inverse of render_sft_completion. Tolerates the label variants and
// blank section separators seen in model output ("Rate:", "parts of MT",
// trailing semicolons); throws GrammarError with the byte offset of the
// first violation otherwise.
SftCompletion parse_sft_completion(const std::string& text);

// ── SFT example ──────────────────────────────────────────────────────

struct CompressionExample {
    std::string record_key;
    double rate = 1.0;
    std::vector<std::string> source_spans;  // span texts
    std::vector<std::string> target_spans;
    CompressedText compressed_source;
    CompressedText compressed_target;
    std::string prompt_text;
    std::string completion_text;
    std::uint64_t seed = 0;
};

// Samples a rate, compresses both sides with their gold spans protected,
// and renders the prompt/completion pair. `seed` is recorded verbatim.
CompressionExample build_sft_example(const SegmentRecord& record, Rng& rng, const RateSet& rates,
                                     std::uint64_t seed = 0);

// Same, at a fixed rate.
CompressionExample build_example_at_rate(const SegmentRecord& record, double rate, Rng& rng,
                                         std::uint64_t seed = 0);

std::string example_to_json(const CompressionExample& ex);

}  // namespace evalcomp
