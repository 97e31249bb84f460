#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace evalcomp {

enum class Severity { minor, major, critical, neutral };
enum class Side { source, target };

std::string to_string(Severity s);
std::string to_string(Side s);
Severity severity_from_string(std::string_view s);  // unknown -> neutral
Side side_from_string(std::string_view s);

// Character-offset error annotation. Offsets count Unicode codepoints and
// index into the text on `side`; `text` must equal that slice.
struct ErrorSpan {
    int start = 0;  // inclusive
    int end = 0;    // exclusive
    Severity severity = Severity::minor;
    std::string category;  // optional, e.g. "accuracy/mistranslation"
    std::string text;
    Side side = Side::target;

    friend bool operator==(const ErrorSpan&, const ErrorSpan&) = default;
};

// One (source, MT, reference, gold spans, human score) item of a corpus.
struct SegmentRecord {
    std::string lang_pair;  // "xx-yy"
    std::string system_id;
    std::string doc_id;
    int seg_id = 0;
    std::string source;
    std::string target;
    std::optional<std::string> reference;
    std::vector<ErrorSpan> spans;
    std::optional<double> human_score;

    std::string key() const;  // lang_pair:system_id:doc_id:seg_id

    friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

struct Corpus {
    std::vector<SegmentRecord> records;
    std::string provenance;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Returns an error description, or nullopt when the record satisfies all
// invariants (non-empty texts, spans in bounds with matching slices).
std::optional<std::string> validate(const SegmentRecord& record);

// Partition of record.spans by side, each list sorted by (start, end).
// Overlapping spans are kept as-is.
std::pair<std::vector<ErrorSpan>, std::vector<ErrorSpan>> extract_spans(const SegmentRecord& record);

// ── WMT-style TSV input ──────────────────────────────────────────────
//
// Expected header: system, domain, doc, doc_id, seg_id, rater, source,
// target, category, severity. Error spans are marked inline in the target
// column with <v>...</v>; rows whose category begins with "source" have the
// marked substring re-resolved against the source text.

enum class SidePolicy {
    category_prefix,  // category "source..." -> side=source
    always_target,
};

struct RowIssue {
    std::size_t row;  // 1-based line number in the stream
    std::string kind; // malformed_row | span_out_of_bounds | encoding_error | row_conflict
    std::string message;
};

struct TsvParseResult {
    Corpus corpus;
    std::vector<RowIssue> issues;
};

// Rows from several raters of the same (system, doc, seg) merge into one
// record with all spans, order-stable by (start, end). Failing rows are
// collected in `issues`, never silently dropped.
TsvParseResult parse_wmt_tsv(std::istream& in, const std::string& lang_pair,
                             SidePolicy side_policy = SidePolicy::category_prefix);

// ── canonical JSONL ──────────────────────────────────────────────────

std::string record_to_json(const SegmentRecord& record);
SegmentRecord record_from_json(const std::string& line);

void write_jsonl(std::ostream& out, const Corpus& corpus);
Corpus read_jsonl(std::istream& in, const std::string& provenance = "jsonl");

}  // namespace evalcomp
