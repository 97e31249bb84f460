#include <doctest.h>

#include "evalcomp/errors.hpp"
#include "evalcomp/money.hpp"
#include "evalcomp/rng.hpp"
#include "evalcomp/util.hpp"

using namespace evalcomp;

TEST_CASE("utf8 codepoint offsets treat multibyte characters as one unit") {
    const std::string s = "Sie überqueren";
    CHECK(utf8::length(s) == 14);
    CHECK(utf8::slice(s, 4, 14) == "überqueren");
    CHECK(utf8::slice(s, 0, 3) == "Sie");
}

TEST_CASE("utf8 validation rejects malformed bytes") {
    CHECK(utf8::is_valid("plain ascii"));
    CHECK(utf8::is_valid("日本語 mixed"));
    CHECK_FALSE(utf8::is_valid("\xFF\xFE"));
    CHECK_FALSE(utf8::is_valid("trunc \xC3"));
    CHECK_FALSE(utf8::is_valid("\xC0\xAF"));  // overlong
}

TEST_CASE("format_double picks the shortest exact representation") {
    CHECK(format_double(0.3) == "0.3");
    CHECK(format_double(1.0) == "1.0");
    CHECK(format_double(0.45) == "0.45");
    CHECK(format_double(-2.5) == "-2.5");
    for (double v : {0.1, 0.7, 123.456, 1e-9, 3.141592653589793}) {
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("rng determinism and bounds") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u64();
        CHECK(va == b.next_u64());
        (void)c.next_u64();
    }
    Rng d(7);
    for (int i = 0; i < 1000; ++i) CHECK(d.uniform_below(13) < 13);
}

TEST_CASE("derived rng depends on key and purpose") {
    Rng a = derive_rng(1, "rec-1", "sft");
    Rng b = derive_rng(1, "rec-1", "sft");
    Rng c = derive_rng(1, "rec-2", "sft");
    Rng d = derive_rng(1, "rec-1", "eval");
    auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
    CHECK(va != d.next_u64());
}

TEST_CASE("money parses and formats exactly") {
    CHECK(Money::parse("10").micro == 10'000'000);
    CHECK(Money::parse("0.5").micro == 500'000);
    CHECK(Money::parse("-1.25").micro == -1'250'000);
    CHECK(Money::parse("720").str() == "720");
    CHECK(Money::parse("0.000001").str() == "0.000001");
    CHECK_THROWS_AS(Money::parse("abc"), ConfigError);
    CHECK_THROWS_AS(Money::parse("1.2.3"), ConfigError);
}

TEST_CASE("estimate_cost is exact decimal arithmetic") {
    CHECK(estimate_cost(72'000'000, Money::parse("10")) == Money::parse("720"));
    CHECK(estimate_cost(0, Money::parse("10")) == Money::parse("0"));
    CHECK(estimate_cost(1'500'000, Money::parse("10")) == Money::parse("15"));
    CHECK(estimate_cost(1, Money::parse("10")).micro == 10);  // 1 token at $10/M
}
