#pragma once

#include <cstdint>
#include <string>

namespace evalcomp {

// Exact decimal currency amount stored as integer micro-units. Cost
// arithmetic must be exact ($720 means $720, not $719.999...).
struct Money {
    std::int64_t micro = 0;

    static Money from_micro(std::int64_t m) { return Money{m}; }

    // Parses "10", "0.5", "-1.25"; at most 6 fractional digits.
    static Money parse(const std::string& text);

    // "720", "0.5", "1.053605"; trailing fractional zeros trimmed.
    std::string str() const;

    friend bool operator==(const Money&, const Money&) = default;
    friend auto operator<=>(const Money&, const Money&) = default;
};

// total_tokens / 1e6 * price_per_million, exact; rounds half away from
// zero at micro-unit resolution.
Money estimate_cost(std::int64_t total_tokens, Money price_per_million);

}  // namespace evalcomp
