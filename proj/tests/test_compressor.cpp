#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "evalcomp/compressor.hpp"
#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"
#include "support/synth.hpp"

using namespace evalcomp;

TEST_CASE("tokenize_surface splits whitespace runs and edge punctuation") {
    CHECK(tokenize_surface("").empty());

    auto tokens = tokenize_surface("Hello, world!");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[0].text == "Hello");
    CHECK(tokens[1].text == ",");
    CHECK(tokens[2].text == "world");
    CHECK(tokens[3].text == "!");
    CHECK(tokens[0].char_start == 0);
    CHECK(tokens[0].char_end == 5);
    CHECK(tokens[1].char_start == 5);

    auto spaced = tokenize_surface("a  b");
    REQUIRE(spaced.size() == 2);
    CHECK(spaced[0].char_start == 0);
    CHECK(spaced[0].char_end == 1);
    CHECK(spaced[1].char_start == 3);
    CHECK(spaced[1].char_end == 4);
}

TEST_CASE("tokenize_surface keeps inner punctuation and splits stacked edges") {
    auto tokens = tokenize_surface("((don't))");
    REQUIRE(tokens.size() == 5);
    CHECK(tokens[0].text == "(");
    CHECK(tokens[1].text == "(");
    CHECK(tokens[2].text == "don't");
    CHECK(tokens[3].text == ")");
    CHECK(tokens[4].text == ")");
}

TEST_CASE("long CJK runs fall back to per-character tokens, long European words do not") {
    const std::string zh = "大众点评乌鲁木齐家居卖场频道提供";  // 16 codepoints
    CHECK(tokenize_surface(zh).size() == 16);

    CHECK(tokenize_surface("Sekundenbruchteilen").size() == 1);  // 19 codepoints, no CJK

    const std::string zh_short = "大众点评";  // under the threshold
    CHECK(tokenize_surface(zh_short).size() == 1);

    // Internal punctuation stays inside short runs per the splitter rule,
    // but per-character fallback isolates it in long ones.
    CHECK(tokenize_surface("地址，电话").size() == 1);  // 5 codepoints, below threshold
    auto long_run = tokenize_surface("大众点评乌鲁木齐家居卖场频道，电话");
    bool has_comma = false;
    for (const auto& t : long_run) has_comma = has_comma || t.text == "，";
    CHECK(has_comma);
    CHECK(long_run.size() == 17);
}

TEST_CASE("tokens are non-overlapping, ordered, and offsets slice the original") {
    const std::string text = "So they're crossing thousands of 高铁居然之家 kilometers, fast!";
    auto tokens = tokenize_surface(text);
    REQUIRE(!tokens.empty());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        CHECK(tokens[i].char_start < tokens[i].char_end);
        if (i) CHECK(tokens[i - 1].char_end <= tokens[i].char_start);
        CHECK(utf8::slice(text, tokens[i].char_start, tokens[i].char_end) == tokens[i].text);
    }
}

TEST_CASE("mark_protected flags exactly the overlapping tokens") {
    const std::string text = "eins zwei drei vier";
    auto tokens = tokenize_surface(text);
    REQUIRE(tokens.size() == 4);

    SUBCASE("no spans protects nothing") {
        mark_protected(tokens, {});
        for (const auto& t : tokens) CHECK_FALSE(t.is_protected);
    }

    SUBCASE("span exactly covering one token") {
        mark_protected(tokens, {{5, 9, Severity::minor, "", "zwei", Side::target}});
        CHECK_FALSE(tokens[0].is_protected);
        CHECK(tokens[1].is_protected);
        CHECK_FALSE(tokens[2].is_protected);
    }

    SUBCASE("span straddling a token boundary protects both") {
        // "wei dr" covers parts of tokens 1 and 2.
        mark_protected(tokens, {{6, 12, Severity::minor, "", "wei dr", Side::target}});
        CHECK(tokens[1].is_protected);
        CHECK(tokens[2].is_protected);
        CHECK_FALSE(tokens[0].is_protected);
        CHECK_FALSE(tokens[3].is_protected);
    }
}

TEST_CASE("compress_text at rate 1.0 keeps every token") {
    Rng rng(1);
    auto out = compress_text("Hello, world!", {}, 1.0, rng);
    CHECK(out.compressed == "Hello , world !");
    CHECK(out.achieved_rate == 1.0);
    CHECK(out.kept_token_indices.size() == 4);
}

TEST_CASE("protection dominates the requested rate") {
    const std::string text = "eins zwei drei";
    std::vector<ErrorSpan> spans = {{0, 14, Severity::major, "", "eins zwei drei", Side::target}};
    Rng rng(9);
    auto out = compress_text(text, spans, 0.3, rng);
    CHECK(out.compressed == "eins zwei drei");
    CHECK(out.achieved_rate == 1.0);
    CHECK(out.achieved_rate > out.requested_rate);
}

TEST_CASE("ten tokens, two protected, rate 0.5 keeps exactly five including both") {
    const std::string text = "t0 t1 t2 t3 t4 t5 t6 t7 t8 t9";
    std::vector<ErrorSpan> spans = {
        {6, 8, Severity::minor, "", "t2", Side::target},    // token 2
        {21, 23, Severity::minor, "", "t7", Side::target},  // token 7
    };
    Rng rng(1234);
    auto out = compress_text(text, spans, 0.5, rng);
    CHECK(out.kept_token_indices.size() == 5);
    CHECK(std::count(out.kept_token_indices.begin(), out.kept_token_indices.end(), 2) == 1);
    CHECK(std::count(out.kept_token_indices.begin(), out.kept_token_indices.end(), 7) == 1);
    CHECK(std::is_sorted(out.kept_token_indices.begin(), out.kept_token_indices.end()));

    Rng rng2(1234);
    auto again = compress_text(text, spans, 0.5, rng2);
    CHECK(again.compressed == out.compressed);
    CHECK(again.kept_token_indices == out.kept_token_indices);
}

TEST_CASE("compress_text rejects empty text") {
    Rng rng(1);
    CHECK_THROWS_AS(compress_text("", {}, 0.5, rng), EmptyTextError);
    CHECK_THROWS_AS(compress_text("   ", {}, 0.5, rng), EmptyTextError);
}

TEST_CASE("sample_rate draws uniformly from the rate set") {
    RateSet singleton{{1.0}};
    REQUIRE(singleton.valid());
    Rng rng(5);
    CHECK(sample_rate(rng, singleton) == 1.0);

    RateSet rates = RateSet::defaults();
    std::map<double, int> counts;
    Rng draw_rng(2025);
    const int n = 80'000;
    for (int i = 0; i < n; ++i) counts[sample_rate(draw_rng, rates)]++;
    // Binomial: mean 10000, sigma = sqrt(80000 * 1/8 * 7/8) ~ 93.5.
    const double sigma = std::sqrt(n * 0.125 * 0.875);
    for (double r : rates.rates) {
        CHECK(counts[r] > 10'000 - 3 * sigma);
        CHECK(counts[r] < 10'000 + 3 * sigma);
    }

    Rng a(77), b(77);
    for (int i = 0; i < 50; ++i) CHECK(sample_rate(a, rates) == sample_rate(b, rates));
}

TEST_CASE("rate set validation") {
    CHECK(RateSet::defaults().valid());
    CHECK_FALSE(RateSet{{}}.valid());
    CHECK_FALSE(RateSet{{0.5, 0.3, 1.0}}.valid());   // not increasing
    CHECK_FALSE(RateSet{{0.3, 0.5}}.valid());        // missing 1.0
    CHECK_FALSE(RateSet{{0.0, 1.0}}.valid());        // 0 is out of range
    CHECK_FALSE(RateSet{{0.3, 0.3, 1.0}}.valid());   // duplicates
}

TEST_CASE("build_sft_example renders None for spanless records") {
    SegmentRecord rec;
    rec.lang_pair = "en-de";
    rec.system_id = "s";
    rec.doc_id = "d";
    rec.seg_id = 1;
    rec.source = "one two three four five";
    rec.target = "eins zwei drei vier fünf";
    Rng rng(3);
    auto ex = build_sft_example(rec, rng, RateSet::defaults(), 3);
    CHECK(ex.completion_text.find("Quality-relevant parts of Source: None\n") != std::string::npos);
    CHECK(ex.completion_text.find("Quality-relevant parts of Translation: None\n") != std::string::npos);
    CHECK(ex.prompt_text ==
          "Compress the following MT input and output:\nSource:```one two three four five```\n"
          "MT:```eins zwei drei vier fünf```");
}

TEST_CASE("build_sft_example lists the span and keeps it verbatim in the compressed MT") {
    SegmentRecord rec;
    rec.lang_pair = "en-de";
    rec.system_id = "s";
    rec.doc_id = "d";
    rec.seg_id = 2;
    rec.source = "alpha beta gamma delta epsilon zeta eta theta";
    rec.target = "eins zwei drei vier fünf sechs sieben acht";
    rec.spans.push_back({10, 19, Severity::major, "accuracy/mistranslation", "drei vier", Side::target});
    REQUIRE_FALSE(validate(rec).has_value());

    Rng rng(17);
    auto ex = build_sft_example(rec, rng, RateSet{{0.3, 1.0}}, 17);
    CHECK(ex.target_spans.size() == 1);
    CHECK(ex.completion_text.find("Quality-relevant parts of Translation: [drei vier]") !=
          std::string::npos);
    CHECK(ex.compressed_target.compressed.find("drei vier") != std::string::npos);
}

TEST_CASE("sft completion round-trips through the parser") {
    Corpus corpus = testsupport::make_corpus(120, 4242);
    RateSet rates = RateSet::defaults();
    for (const auto& rec : corpus.records) {
        const std::uint64_t seed = derive_seed(4242, rec.key(), "sft");
        Rng rng(seed);
        auto ex = build_sft_example(rec, rng, rates, seed);
        SftCompletion parsed = parse_sft_completion(ex.completion_text);
        CHECK(parsed.rate == ex.rate);
        CHECK(parsed.source_spans == ex.source_spans);
        CHECK(parsed.target_spans == ex.target_spans);
        CHECK(parsed.compressed_source == ex.compressed_source.compressed);
        CHECK(parsed.compressed_target == ex.compressed_target.compressed);

        // render(parse(.)) is the identity on canonical completions.
        CHECK(render_sft_completion(parsed.rate, parsed.source_spans, parsed.target_spans,
                                    parsed.compressed_source, parsed.compressed_target) ==
              ex.completion_text);
    }
}

TEST_CASE("completion missing the Rate line reports offset 0") {
    try {
        parse_sft_completion("Quality-relevant parts of Source: None");
        FAIL("expected GrammarError");
    } catch (const GrammarError& e) {
        CHECK(e.offset == 0);
    }
}

TEST_CASE("model-generation walkthrough block parses with its label variants") {
    const std::string block =
        "Rate: 0.5\n"
        "\n"
        "Quality-relevant parts of Source: None\n"
        "\n"
        "Quality-relevant parts of MT: [Sie überqueren also in Sekundenbruchteilen Tausende von "
        "Kilometern];\n"
        "\n"
        "Compressed Source: ```thousands kilometers fraction of a second curve spaceringing of "
        "spacean actual wave```\n"
        "\n"
        "Compressed MT: ```Sie überqueren Sekundenbruchteilen Tausende von Kilometern krümmen "
        "nicht eine tatsächliche Welle```";
    SftCompletion parsed = parse_sft_completion(block);
    CHECK(parsed.rate == 0.5);
    CHECK(parsed.source_spans.empty());
    REQUIRE(parsed.target_spans.size() == 1);
    CHECK(parsed.target_spans[0] ==
          "Sie überqueren also in Sekundenbruchteilen Tausende von Kilometern");
    CHECK(parsed.compressed_source ==
          "thousands kilometers fraction of a second curve spaceringing of spacean actual wave");
    CHECK(parsed.compressed_target ==
          "Sie überqueren Sekundenbruchteilen Tausende von Kilometern krümmen nicht eine "
          "tatsächliche Welle");
}

TEST_CASE("multi-span lists parse back exactly") {
    auto text = render_sft_completion(0.4, {"a b", "c"}, {"x", "y z", "w"}, "src toks", "tgt toks");
    auto parsed = parse_sft_completion(text);
    CHECK(parsed.source_spans == std::vector<std::string>{"a b", "c"});
    CHECK(parsed.target_spans == std::vector<std::string>{"x", "y z", "w"});
}

TEST_CASE("randomized compressions preserve spans, counts, and determinism") {
    Rng meta(20240601);
    for (int iter = 0; iter < 300; ++iter) {
        SegmentRecord rec = testsupport::make_record(
            iter % 3 == 0 ? "zh-en" : (iter % 3 == 1 ? "en-ru" : "en-de"), "sysP", "docP", iter,
            777);
        auto [src_spans, tgt_spans] = extract_spans(rec);
        const RateSet rates = RateSet::defaults();
        const double rate = rates.rates[meta.uniform_below(rates.rates.size())];
        const std::uint64_t seed = meta.next_u64();

        Rng rng(seed);
        auto out = compress_text(rec.target, tgt_spans, rate, rng);

        auto tokens = tokenize_surface(rec.target);
        mark_protected(tokens, tgt_spans);
        std::size_t protected_count = 0;
        for (const auto& t : tokens) protected_count += t.is_protected ? 1 : 0;
        const auto keep_target =
            static_cast<std::size_t>(std::ceil(rate * static_cast<double>(tokens.size())));

        CHECK(out.kept_token_indices.size() == std::max(protected_count, keep_target));
        std::set<int> kept(out.kept_token_indices.begin(), out.kept_token_indices.end());
        CHECK(kept.size() == out.kept_token_indices.size());
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (tokens[i].is_protected) CHECK(kept.count(static_cast<int>(i)) == 1);

        Rng rng2(seed);
        auto again = compress_text(rec.target, tgt_spans, rate, rng2);
        CHECK(again.kept_token_indices == out.kept_token_indices);
        CHECK(again.compressed == out.compressed);
    }
}
