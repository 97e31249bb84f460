#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "evalcomp/errors.hpp"
#include "evalcomp/mqm_corpus.hpp"
#include "evalcomp/util.hpp"
#include "support/synth.hpp"

using namespace evalcomp;

namespace {

const char* kHeader =
    "system\tdomain\tdoc\tdoc_id\tseg_id\trater\tsource\ttarget\tcategory\tseverity\n";

// The worked example from the compression walkthrough: two minor target
// spans at [4,14) and [178,179).
SegmentRecord walkthrough_record() {
    SegmentRecord rec;
    rec.lang_pair = "en-de";
    rec.system_id = "demo";
    rec.doc_id = "ted";
    rec.seg_id = 1;
    rec.source =
        "So they're crossing thousands of kilometers in a fraction of a second, and as they do "
        "so, they not only curve space, but they leave behind in their wake a ringing of space, "
        "an actual wave on space-time.";
    rec.target =
        "Sie überqueren also in Sekundenbruchteilen Tausende von Kilometern und krümmen dabei "
        "nicht nur den Raum, sondern hinterlassen auch ein Klingeln des Raums, eine tatsächliche "
        "Welle der Raumzeit.";
    rec.spans.push_back({4, 14, Severity::minor, "", "überqueren", Side::target});
    rec.spans.push_back({178, 179, Severity::minor, "", " ", Side::target});
    return rec;
}

}  // namespace

TEST_CASE("single well-formed row yields one record with one span") {
    std::istringstream in(std::string(kHeader) +
                          "sysA\tnews\tdoc1\t1\t5\trater1\tThe quick brown fox.\t"
                          "Der schnelle <v>braune</v> Fuchs.\taccuracy/mistranslation\tminor\n");
    auto result = parse_wmt_tsv(in, "en-de");
    CHECK(result.issues.empty());
    REQUIRE(result.corpus.records.size() == 1);
    const auto& rec = result.corpus.records[0];
    CHECK(rec.system_id == "sysA");
    CHECK(rec.doc_id == "doc1");
    CHECK(rec.seg_id == 5);
    CHECK(rec.target == "Der schnelle braune Fuchs.");
    REQUIRE(rec.spans.size() == 1);
    CHECK(rec.spans[0].start == 13);
    CHECK(rec.spans[0].end == 19);
    CHECK(rec.spans[0].text == "braune");
    CHECK(rec.spans[0].severity == Severity::minor);
    CHECK_FALSE(validate(rec).has_value());
}

TEST_CASE("source-category span that cannot be resolved is flagged with its row number") {
    std::istringstream in(std::string(kHeader) +
                          "sysA\tnews\tdoc1\t1\t5\trater1\tThe quick brown fox.\t"
                          "Der <v>blaue</v> Fuchs.\tsource error\tmajor\n");
    auto result = parse_wmt_tsv(in, "en-de");
    REQUIRE(result.issues.size() == 1);
    CHECK(result.issues[0].row == 2);
    CHECK(result.issues[0].kind == "span_out_of_bounds");
}

TEST_CASE("always_target keeps source-category spans on the target side") {
    const std::string row = std::string(kHeader) +
                            "sysA\tnews\tdoc1\t1\t5\trater1\tThe quick brown fox.\t"
                            "Der <v>schnelle</v> Fuchs.\tsource error\tmajor\n";
    std::istringstream strict(row);
    auto resolved = parse_wmt_tsv(strict, "en-de", SidePolicy::category_prefix);
    REQUIRE(resolved.issues.size() == 1);  // "schnelle" is not in the source

    std::istringstream lenient(row);
    auto kept = parse_wmt_tsv(lenient, "en-de", SidePolicy::always_target);
    CHECK(kept.issues.empty());
    REQUIRE(kept.corpus.records.size() == 1);
    REQUIRE(kept.corpus.records[0].spans.size() == 1);
    CHECK(kept.corpus.records[0].spans[0].side == Side::target);
}

TEST_CASE("three rows from two raters merge into one record, spans ordered by (start, end)") {
    std::istringstream in(
        std::string(kHeader) +
        "sysA\tnews\tdoc1\t1\t5\trater1\tThe quick brown fox.\t"
        "Der schnelle braune <v>Fuchs</v>.\taccuracy/mistranslation\tmajor\n"
        "sysA\tnews\tdoc1\t1\t5\trater2\tThe quick brown fox.\t"
        "Der schnelle <v>braune</v> Fuchs.\tfluency/grammar\tminor\n"
        "sysA\tnews\tdoc1\t1\t5\trater2\tThe quick brown fox.\t"
        "Der schnelle braune Fuchs.\tno-error\tno-error\n");
    auto result = parse_wmt_tsv(in, "en-de");
    CHECK(result.issues.empty());
    REQUIRE(result.corpus.records.size() == 1);
    const auto& rec = result.corpus.records[0];
    REQUIRE(rec.spans.size() == 2);
    CHECK(rec.spans[0].text == "braune");  // (13,19) sorts before (20,25)
    CHECK(rec.spans[1].text == "Fuchs");
    CHECK(rec.spans[0].severity == Severity::minor);
    CHECK(rec.spans[1].severity == Severity::major);
}

TEST_CASE("malformed rows are collected, not dropped silently") {
    std::istringstream in(std::string(kHeader) +
                          "only\tthree\tcolumns\n"
                          "sysA\tnews\tdoc1\t1\tx\trater1\tsrc?\ttgt?\tcat\tminor\n"
                          "sysA\tnews\tdoc1\t1\t5\trater1\tok source\t<v>unbalanced\tcat\tminor\n");
    auto result = parse_wmt_tsv(in, "en-de");
    CHECK(result.corpus.records.empty());
    REQUIRE(result.issues.size() == 3);
    CHECK(result.issues[0].kind == "malformed_row");
    CHECK(result.issues[0].row == 2);
    CHECK(result.issues[2].row == 4);
}

TEST_CASE("raters disagreeing on the segment text are flagged as conflicts") {
    std::istringstream in(std::string(kHeader) +
                          "sysA\tnews\tdoc1\t1\t5\trater1\tsame source\t"
                          "erste Fassung\tno-error\tno-error\n"
                          "sysA\tnews\tdoc1\t1\t5\trater2\tsame source\t"
                          "andere Fassung\tno-error\tno-error\n");
    auto result = parse_wmt_tsv(in, "en-de");
    REQUIRE(result.corpus.records.size() == 1);
    CHECK(result.corpus.records[0].target == "erste Fassung");
    REQUIRE(result.issues.size() == 1);
    CHECK(result.issues[0].kind == "row_conflict");
    CHECK(result.issues[0].row == 3);
}

TEST_CASE("unknown severity maps to neutral") {
    std::istringstream in(std::string(kHeader) +
                          "sysA\tnews\tdoc1\t1\t5\trater1\tsource text\t"
                          "<v>tgt</v> text\tother\tWeird-Severity\n");
    auto result = parse_wmt_tsv(in, "en-de");
    REQUIRE(result.corpus.records.size() == 1);
    REQUIRE(result.corpus.records[0].spans.size() == 1);
    CHECK(result.corpus.records[0].spans[0].severity == Severity::neutral);
}

TEST_CASE("extract_spans partitions by side and sorts by offsets") {
    SegmentRecord rec;
    rec.lang_pair = "en-de";
    rec.system_id = "s";
    rec.doc_id = "d";
    rec.seg_id = 1;
    rec.source = "alpha beta gamma";
    rec.target = "eins zwei drei";

    SUBCASE("no spans") {
        auto [src, tgt] = extract_spans(rec);
        CHECK(src.empty());
        CHECK(tgt.empty());
    }

    SUBCASE("one span per side") {
        rec.spans.push_back({5, 9, Severity::major, "", "zwei", Side::target});
        rec.spans.push_back({0, 5, Severity::minor, "", "alpha", Side::source});
        REQUIRE_FALSE(validate(rec).has_value());
        auto [src, tgt] = extract_spans(rec);
        REQUIRE(src.size() == 1);
        REQUIRE(tgt.size() == 1);
        CHECK(src[0].text == "alpha");
        CHECK(tgt[0].text == "zwei");
    }

    SUBCASE("concatenation is a permutation of record.spans") {
        rec.spans.push_back({10, 14, Severity::minor, "", "drei", Side::target});
        rec.spans.push_back({0, 4, Severity::major, "", "eins", Side::target});
        rec.spans.push_back({6, 10, Severity::minor, "", "beta", Side::source});
        auto [src, tgt] = extract_spans(rec);
        CHECK(src.size() + tgt.size() == rec.spans.size());
        CHECK(tgt[0].text == "eins");  // sorted by start
        CHECK(tgt[1].text == "drei");
        for (const auto& s : rec.spans) {
            const auto& list = s.side == Side::source ? src : tgt;
            CHECK(std::count(list.begin(), list.end(), s) == 1);
        }
    }
}

TEST_CASE("walkthrough record validates and extracts both target spans in order") {
    SegmentRecord rec = walkthrough_record();
    CHECK_FALSE(validate(rec).has_value());
    auto [src, tgt] = extract_spans(rec);
    CHECK(src.empty());
    REQUIRE(tgt.size() == 2);
    CHECK(tgt[0].text == "überqueren");
    CHECK(tgt[0].start == 4);
    CHECK(tgt[0].end == 14);
    CHECK(tgt[1].start == 178);
    CHECK(tgt[1].text == " ");
}

TEST_CASE("validate rejects spans that do not match their slice") {
    SegmentRecord rec = walkthrough_record();
    rec.spans[0].text = "anders";
    CHECK(validate(rec).has_value());
    rec = walkthrough_record();
    rec.spans[0].end = 9999;
    CHECK(validate(rec).has_value());
}

TEST_CASE("jsonl round-trip reproduces the corpus exactly") {
    Corpus corpus = testsupport::make_corpus(60, 911);
    for (const auto& rec : corpus.records) REQUIRE_FALSE(validate(rec).has_value());

    std::ostringstream out;
    write_jsonl(out, corpus);
    std::istringstream in(out.str());
    Corpus reloaded = read_jsonl(in, corpus.provenance);
    CHECK(reloaded == corpus);

    // Second serialization is byte-identical.
    std::ostringstream out2;
    write_jsonl(out2, reloaded);
    CHECK(out2.str() == out.str());
}

TEST_CASE("every parsed span matches the slice of the text on its side") {
    std::istringstream in(std::string(kHeader) +
                          "sysA\tnews\tdocX\t1\t1\tr1\tZürich is ünique.\t"
                          "<v>Zürich</v> ist <v>einzigartig</v>.\taccuracy\tminor\n"
                          "sysB\tnews\tdocX\t2\t2\tr1\tplain text here\t"
                          "schlicht <v>hier</v>\tfluency\tmajor\n");
    auto result = parse_wmt_tsv(in, "en-de");
    CHECK(result.issues.empty());
    for (const auto& rec : result.corpus.records) {
        for (const auto& span : rec.spans) {
            const std::string& text = span.side == Side::source ? rec.source : rec.target;
            CHECK(utf8::slice(text, span.start, span.end) == span.text);
        }
    }
}
