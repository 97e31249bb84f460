#include "evalcomp/mqm_corpus.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"

namespace evalcomp {

using nlohmann::json;

std::string to_string(Severity s) {
    switch (s) {
        case Severity::minor: return "minor";
        case Severity::major: return "major";
        case Severity::critical: return "critical";
        case Severity::neutral: return "neutral";
    }
    return "neutral";
}

std::string to_string(Side s) {
    return s == Side::source ? "source" : "target";
}

Severity severity_from_string(std::string_view s) {
    std::string v = to_lower(trim(s));
    if (v == "minor") return Severity::minor;
    if (v == "major") return Severity::major;
    if (v == "critical") return Severity::critical;
    return Severity::neutral;
}

Side side_from_string(std::string_view s) {
    return to_lower(trim(s)) == "source" ? Side::source : Side::target;
}

std::string SegmentRecord::key() const {
    return lang_pair + ":" + system_id + ":" + doc_id + ":" + std::to_string(seg_id);
}

std::optional<std::string> validate(const SegmentRecord& record) {
    if (record.source.empty()) return "empty source";
    if (record.target.empty()) return "empty target";
    for (const auto& span : record.spans) {
        const std::string& text = span.side == Side::source ? record.source : record.target;
        const auto n = static_cast<int>(utf8::length(text));
        if (span.start < 0 || span.start > span.end || span.end > n)
            return "span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                   ") out of bounds for " + to_string(span.side) + " of length " + std::to_string(n);
        if (utf8::slice(text, span.start, span.end) != span.text)
            return "span text '" + span.text + "' does not match slice [" +
                   std::to_string(span.start) + "," + std::to_string(span.end) + ")";
    }
    return std::nullopt;
}

std::pair<std::vector<ErrorSpan>, std::vector<ErrorSpan>> extract_spans(const SegmentRecord& record) {
    std::vector<ErrorSpan> src, tgt;
    for (const auto& span : record.spans)
        (span.side == Side::source ? src : tgt).push_back(span);
    auto by_offsets = [](const ErrorSpan& a, const ErrorSpan& b) {
        return a.start != b.start ? a.start < b.start : a.end < b.end;
    };
    std::stable_sort(src.begin(), src.end(), by_offsets);
    std::stable_sort(tgt.begin(), tgt.end(), by_offsets);
    return {std::move(src), std::move(tgt)};
}

// ── TSV parsing ──────────────────────────────────────────────────────

namespace {

constexpr std::string_view kOpenMark = "<v>";
constexpr std::string_view kCloseMark = "</v>";

struct MarkedText {
    std::string clean;                      // text with markers removed
    std::vector<std::pair<int, int>> runs;  // codepoint offsets into clean
};

// Strips <v>...</v> markers and records the codepoint extents of each
// marked run. Returns nullopt on unbalanced markers.
std::optional<MarkedText> strip_markers(std::string_view text) {
    MarkedText out;
    std::string clean;
    clean.reserve(text.size());
    std::vector<int> open_stack;
    std::size_t i = 0;
    std::size_t cp = 0;
    while (i < text.size()) {
        if (text.substr(i).starts_with(kOpenMark)) {
            if (!open_stack.empty()) return std::nullopt;  // nested
            open_stack.push_back(static_cast<int>(cp));
            i += kOpenMark.size();
        } else if (text.substr(i).starts_with(kCloseMark)) {
            if (open_stack.empty()) return std::nullopt;
            out.runs.emplace_back(open_stack.back(), static_cast<int>(cp));
            open_stack.pop_back();
            i += kCloseMark.size();
        } else {
            std::size_t start = i;
            utf8::decode_at(text, i);
            clean.append(text.substr(start, i - start));
            ++cp;
        }
    }
    if (!open_stack.empty()) return std::nullopt;
    out.clean = std::move(clean);
    return out;
}

// First codepoint offset of `needle` in `haystack`, or -1.
int find_codepoint_offset(std::string_view haystack, std::string_view needle) {
    auto byte_pos = haystack.find(needle);
    if (byte_pos == std::string_view::npos) return -1;
    return static_cast<int>(utf8::length(haystack.substr(0, byte_pos)));
}

}  // namespace

TsvParseResult parse_wmt_tsv(std::istream& in, const std::string& lang_pair, SidePolicy side_policy) {
    TsvParseResult result;
    result.corpus.provenance = "wmt-tsv";

    std::string line;
    std::size_t row = 0;
    if (!std::getline(in, line))
        throw EncodingError("empty stream: missing header row");
    row = 1;

    // Merge key -> index into records, insertion-ordered output.
    std::map<std::string, std::size_t> index;

    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        if (!utf8::is_valid(line)) {
            result.issues.push_back({row, "encoding_error", "line is not valid UTF-8"});
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() != 10) {
            result.issues.push_back({row, "malformed_row",
                                     "expected 10 columns, got " + std::to_string(cols.size())});
            continue;
        }
        const std::string system_id(cols[0]);
        const std::string doc(cols[2]);
        const std::string seg_str(trim(cols[4]));
        const std::string rater(cols[5]);
        const std::string source_raw(cols[6]);
        const std::string target_raw(cols[7]);
        const std::string category(trim(cols[8]));
        const std::string severity_str(cols[9]);

        int seg_id = 0;
        try {
            seg_id = std::stoi(seg_str);
        } catch (const std::exception&) {
            result.issues.push_back({row, "malformed_row", "seg_id is not an integer: '" + seg_str + "'"});
            continue;
        }

        auto marked = strip_markers(target_raw);
        if (!marked) {
            result.issues.push_back({row, "malformed_row", "unbalanced <v>...</v> markers in target"});
            continue;
        }
        auto marked_src = strip_markers(source_raw);
        if (!marked_src) {
            result.issues.push_back({row, "malformed_row", "unbalanced <v>...</v> markers in source"});
            continue;
        }

        const std::string& source = marked_src->clean;
        const std::string& target = marked->clean;
        if (source.empty() || target.empty()) {
            result.issues.push_back({row, "malformed_row", "empty source or target"});
            continue;
        }

        // Build the row's spans.
        std::vector<ErrorSpan> row_spans;
        const Severity severity = severity_from_string(severity_str);
        const bool source_side = side_policy == SidePolicy::category_prefix &&
                                 to_lower(category).starts_with("source");
        bool bad_row = false;
        for (auto [s, e] : marked->runs) {
            ErrorSpan span;
            span.severity = severity;
            span.category = category;
            span.text = std::string(utf8::slice(target, s, e));
            if (source_side) {
                int off = find_codepoint_offset(source, span.text);
                if (off < 0) {
                    result.issues.push_back({row, "span_out_of_bounds",
                                             "source-category span '" + span.text +
                                             "' not found in source text"});
                    bad_row = true;
                    break;
                }
                span.side = Side::source;
                span.start = off;
                span.end = off + static_cast<int>(utf8::length(span.text));
            } else {
                span.side = Side::target;
                span.start = s;
                span.end = e;
            }
            row_spans.push_back(std::move(span));
        }
        // Spans marked directly in the source column keep side=source.
        for (auto [s, e] : marked_src->runs) {
            ErrorSpan span;
            span.severity = severity;
            span.category = category;
            span.text = std::string(utf8::slice(source, s, e));
            span.side = Side::source;
            span.start = s;
            span.end = e;
            row_spans.push_back(std::move(span));
        }
        if (bad_row) continue;

        const std::string key = lang_pair + ":" + system_id + ":" + doc + ":" + std::to_string(seg_id);
        auto it = index.find(key);
        if (it == index.end()) {
            SegmentRecord rec;
            rec.lang_pair = lang_pair;
            rec.system_id = system_id;
            rec.doc_id = doc;
            rec.seg_id = seg_id;
            rec.source = source;
            rec.target = target;
            rec.spans = std::move(row_spans);
            index.emplace(key, result.corpus.records.size());
            result.corpus.records.push_back(std::move(rec));
        } else {
            SegmentRecord& rec = result.corpus.records[it->second];
            if (rec.source != source || rec.target != target) {
                result.issues.push_back({row, "row_conflict",
                                         "rater '" + rater + "' disagrees on segment text for " + key});
                continue;
            }
            rec.spans.insert(rec.spans.end(), row_spans.begin(), row_spans.end());
        }

        if (auto err = validate(result.corpus.records[index[key]])) {
            // Roll the offending spans back so the record stays valid.
            SegmentRecord& rec = result.corpus.records[index[key]];
            for (std::size_t k = 0; k < row_spans.size(); ++k) rec.spans.pop_back();
            result.issues.push_back({row, "span_out_of_bounds", *err});
        }
    }

    // Stable span order within each record.
    for (auto& rec : result.corpus.records) {
        std::stable_sort(rec.spans.begin(), rec.spans.end(),
                         [](const ErrorSpan& a, const ErrorSpan& b) {
                             return a.start != b.start ? a.start < b.start : a.end < b.end;
                         });
    }
    return result;
}

// ── canonical JSONL ──────────────────────────────────────────────────

namespace {

json span_to_json(const ErrorSpan& s) {
    return json{{"start", s.start},       {"end", s.end},   {"severity", to_string(s.severity)},
                {"category", s.category}, {"text", s.text}, {"side", to_string(s.side)}};
}

ErrorSpan span_from_json(const json& j) {
    ErrorSpan s;
    s.start = j.at("start").get<int>();
    s.end = j.at("end").get<int>();
    s.severity = severity_from_string(j.at("severity").get<std::string>());
    s.category = j.value("category", "");
    s.text = j.at("text").get<std::string>();
    s.side = side_from_string(j.value("side", "target"));
    return s;
}

}  // namespace

std::string record_to_json(const SegmentRecord& r) {
    json j{{"lang_pair", r.lang_pair}, {"system_id", r.system_id}, {"doc_id", r.doc_id},
           {"seg_id", r.seg_id},       {"source", r.source},       {"target", r.target}};
    if (r.reference) j["reference"] = *r.reference;
    if (r.human_score) j["human_score"] = *r.human_score;
    j["spans"] = json::array();
    for (const auto& s : r.spans) j["spans"].push_back(span_to_json(s));
    return j.dump();
}

SegmentRecord record_from_json(const std::string& line) {
    json j = json::parse(line);
    SegmentRecord r;
    r.lang_pair = j.at("lang_pair").get<std::string>();
    r.system_id = j.at("system_id").get<std::string>();
    r.doc_id = j.at("doc_id").get<std::string>();
    r.seg_id = j.at("seg_id").get<int>();
    r.source = j.at("source").get<std::string>();
    r.target = j.at("target").get<std::string>();
    if (j.contains("reference")) r.reference = j.at("reference").get<std::string>();
    if (j.contains("human_score")) r.human_score = j.at("human_score").get<double>();
    for (const auto& js : j.value("spans", json::array())) r.spans.push_back(span_from_json(js));
    if (auto err = validate(r)) throw EncodingError("invalid record " + r.key() + ": " + *err);
    return r;
}

void write_jsonl(std::ostream& out, const Corpus& corpus) {
    for (const auto& r : corpus.records) out << record_to_json(r) << '\n';
}

Corpus read_jsonl(std::istream& in, const std::string& provenance) {
    Corpus corpus;
    corpus.provenance = provenance;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        corpus.records.push_back(record_from_json(line));
    }
    return corpus;
}

}  // namespace evalcomp
