#include "evalcomp/money.hpp"

#include <cctype>
#include <cstdlib>

#include "evalcomp/errors.hpp"

namespace evalcomp {

Money Money::parse(const std::string& text) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        neg = text[i] == '-';
        ++i;
    }
    std::int64_t whole = 0;
    bool any_digit = false;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        whole = whole * 10 + (text[i] - '0');
        any_digit = true;
    }
    std::int64_t frac = 0;
    if (i < text.size() && text[i] == '.') {
        ++i;
        int digits = 0;
        for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            if (digits < 6) {
                frac = frac * 10 + (text[i] - '0');
                ++digits;
            } else if (text[i] != '0') {
                throw ConfigError("currency value has more than 6 fractional digits: " + text);
            }
            any_digit = true;
        }
        while (digits < 6) {
            frac *= 10;
            ++digits;
        }
    }
    if (!any_digit || i != text.size())
        throw ConfigError("malformed currency value: '" + text + "'");
    std::int64_t micro = whole * 1'000'000 + frac;
    return Money{neg ? -micro : micro};
}

std::string Money::str() const {
    std::int64_t m = micro;
    std::string sign;
    if (m < 0) {
        sign = "-";
        m = -m;
    }
    std::string out = sign + std::to_string(m / 1'000'000);
    std::int64_t frac = m % 1'000'000;
    if (frac != 0) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(frac));
        std::string f(buf);
        while (!f.empty() && f.back() == '0') f.pop_back();
        out += "." + f;
    }
    return out;
}

Money estimate_cost(std::int64_t total_tokens, Money price_per_million) {
    __int128 num = static_cast<__int128>(total_tokens) * price_per_million.micro;
    __int128 den = 1'000'000;
    __int128 q = num / den;
    __int128 r = num % den;
    if (r < 0) r = -r;
    if (2 * r >= den) q += num >= 0 ? 1 : -1;
    return Money::from_micro(static_cast<std::int64_t>(q));
}

}  // namespace evalcomp
