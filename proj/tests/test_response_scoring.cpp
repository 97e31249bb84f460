#include <doctest.h>

#include <string>

#include "evalcomp/prompt_kit.hpp"
#include "evalcomp/response_scoring.hpp"
#include "evalcomp/rng.hpp"

using namespace evalcomp;

namespace {

const SeverityWeights kDefaults{};

MqmScore classic_score(const std::string& reply) {
    return score_reply(reply, PromptKind::classic, kDefaults);
}

MqmScore lite_score(const std::string& reply) {
    return score_reply(reply, PromptKind::lite, kDefaults);
}

}  // namespace

TEST_CASE("the three stock classic replies parse and score -12, -11, -16") {
    const auto& fewshots = stock_fewshots();
    REQUIRE(fewshots.size() == 3);

    ParsedErrors first = parse_classic(fewshots[0].assistant_reply_classic);
    CHECK(first.valid);
    CHECK(first.critical.empty());
    REQUIRE(first.major.size() == 2);
    CHECK(first.major[0].category == "accuracy/mistranslation");
    CHECK(first.major[0].span_text == "involvement");
    CHECK(first.major[1].span_text == "the account holder");
    CHECK(first.minor.size() == 2);

    CHECK(classic_score(fewshots[0].assistant_reply_classic).value == -12.0);
    CHECK(classic_score(fewshots[1].assistant_reply_classic).value == -11.0);
    CHECK(classic_score(fewshots[2].assistant_reply_classic).value == -16.0);
}

TEST_CASE("the three stock lite replies score identically to the classic ones") {
    const auto& fewshots = stock_fewshots();
    ParsedErrors third = parse_lite_json(fewshots[2].assistant_reply_lite_json);
    CHECK(third.valid);
    REQUIRE(third.critical.size() == 1);
    CHECK(third.critical[0].category == "accuracy/addition");
    CHECK(third.critical[0].span_text == "of high-speed rail");
    CHECK(third.major.size() == 1);
    CHECK(third.minor.size() == 1);

    for (const auto& fs : fewshots) {
        CHECK(lite_score(fs.assistant_reply_lite_json).value ==
              classic_score(fs.assistant_reply_classic).value);
    }
}

TEST_CASE("no-error replies in both grammars are valid and score 0") {
    for (PromptKind kind : {PromptKind::classic, PromptKind::lite}) {
        MqmScore s = score_reply(canonical_no_error_reply(kind), kind, kDefaults);
        CHECK(s.valid);
        CHECK(s.value == 0.0);
    }
    ParsedErrors all_empty =
        parse_classic("Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error");
    CHECK(all_empty.valid);
    CHECK(all_empty.critical.empty());
    CHECK(all_empty.major.empty());
    CHECK(all_empty.minor.empty());

    ParsedErrors lite_empty = parse_lite_json(R"({"critical":["no-error"],"major":[],"minor":[]})");
    CHECK(lite_empty.valid);
    CHECK(lite_empty.critical.empty());
}

TEST_CASE("free-form refusals are invalid with empty lists") {
    ParsedErrors refusal = parse_classic("I cannot evaluate this translation, sorry.");
    CHECK_FALSE(refusal.valid);
    CHECK(refusal.critical.empty());
    CHECK(refusal.major.empty());
    CHECK(refusal.minor.empty());

    CHECK_FALSE(parse_lite_json("I refuse.").valid);
    CHECK_FALSE(parse_lite_json(R"({"critical": ["no-error"], "major":)").valid);  // truncated
    CHECK_FALSE(parse_lite_json(R"({"answer": 42})").valid);                       // wrong keys
    CHECK_FALSE(parse_lite_json(R"({"critical": [], "major": [], "minor": [7]})").valid);
}

TEST_CASE("lite parser tolerates a fenced code block wrapper") {
    ParsedErrors fenced = parse_lite_json(
        "```json\n{\"critical\": [\"no-error\"], \"major\": [{\"x\": \"y\"}], \"minor\": []}\n```");
    CHECK(fenced.valid);
    CHECK(fenced.major.size() == 1);
}

TEST_CASE("invalid replies score the configured fallback") {
    MqmScore fallback = score_reply("garbage", PromptKind::classic, kDefaults);
    CHECK_FALSE(fallback.valid);
    CHECK(fallback.value == -25.0);
    MqmScore custom = score_reply("garbage", PromptKind::classic, kDefaults, -10.0);
    CHECK(custom.value == -10.0);
}

TEST_CASE("the cap binds") {
    std::string many = "Critical:\n";
    for (int i = 0; i < 6; ++i) many += "accuracy/mistranslation - \"x\"\n";
    many += "Major:\nno-error\nMinor:\nno-error";
    MqmScore s = classic_score(many);
    CHECK(s.valid);
    CHECK(s.value == -25.0);  // min(25, 60)
    CHECK(s.penalty_breakdown.critical_count == 6);
}

TEST_CASE("duplicate identical entries each count") {
    const std::string reply =
        "Critical:\nno-error\nMajor:\nfluency/grammar - \"x\"\nfluency/grammar - \"x\"\n"
        "Minor:\nno-error";
    MqmScore s = classic_score(reply);
    CHECK(s.penalty_breakdown.major_count == 2);
    CHECK(s.value == -10.0);
}

TEST_CASE("appending an error never increases the score") {
    std::string base = "Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error";
    double prev = classic_score(base).value;
    std::string grown = "Critical:\nno-error\nMajor:\nno-error\nMinor:\n";
    for (int i = 0; i < 30; ++i) {
        grown += "fluency/grammar - \"e" + std::to_string(i) + "\"\n";
        double now = classic_score(grown).value;
        CHECK(now <= prev);
        CHECK(now >= -kDefaults.cap);
        CHECK(now <= 0.0);
        prev = now;
    }
}

TEST_CASE("case-insensitive headers and bare categories parse") {
    ParsedErrors mixed = parse_classic("CRITICAL:\nno-error\nmajor:\nomission\nMINOR:\nno-error");
    CHECK(mixed.valid);
    REQUIRE(mixed.major.size() == 1);
    CHECK(mixed.major[0].category == "omission");
    CHECK_FALSE(mixed.major[0].span_text.has_value());
}

TEST_CASE("duplicate headers invalidate the reply") {
    CHECK_FALSE(parse_classic("Critical:\nno-error\nCritical:\nno-error").valid);
}

TEST_CASE("parser totality under random bytes") {
    Rng rng(999);
    for (int iter = 0; iter < 2000; ++iter) {
        std::string junk;
        const std::size_t len = rng.uniform_below(120);
        for (std::size_t i = 0; i < len; ++i)
            junk += static_cast<char>(rng.uniform_below(256));
        ParsedErrors c = parse_classic(junk);
        ParsedErrors l = parse_lite_json(junk);
        if (!c.valid) {
            CHECK(c.critical.empty());
            CHECK(c.major.empty());
            CHECK(c.minor.empty());
        }
        if (!l.valid) CHECK(l.critical.empty());
    }
}

TEST_CASE("mqm_score invariant holds for parsed replies") {
    ParsedErrors errors;
    errors.valid = true;
    errors.minor.push_back({"a", "x"});
    errors.major.push_back({"b", "y"});
    errors.critical.push_back({"c", "z"});
    MqmScore s = mqm_score(errors, kDefaults);
    CHECK(s.value == -(1.0 + 5.0 + 10.0));
    CHECK(s.penalty_breakdown.minor_count == 1);
    CHECK(s.penalty_breakdown.major_count == 1);
    CHECK(s.penalty_breakdown.critical_count == 1);
}
