#include "evalcomp/util.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace evalcomp {

namespace utf8 {

namespace {

// Returns the byte length of the sequence starting with `lead`, or 0 if
// `lead` is not a valid leading byte.
inline int seq_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return 2;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return 4;
    return 0;
}

}  // namespace

bool is_valid(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char lead = static_cast<unsigned char>(s[i]);
        int n = seq_len(lead);
        if (n == 0 || i + n > s.size()) return false;
        char32_t cp = 0;
        switch (n) {
            case 1: cp = lead; break;
            case 2: cp = lead & 0x1F; break;
            case 3: cp = lead & 0x0F; break;
            case 4: cp = lead & 0x07; break;
        }
        for (int k = 1; k < n; ++k) {
            unsigned char c = static_cast<unsigned char>(s[i + k]);
            if ((c & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (c & 0x3F);
        }
        // Reject overlong encodings, surrogates, out-of-range.
        static constexpr std::array<char32_t, 5> min_cp = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < min_cp[n]) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        if (cp > 0x10FFFF) return false;
        i += n;
    }
    return true;
}

std::size_t length(std::string_view s) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size();) {
        int k = seq_len(static_cast<unsigned char>(s[i]));
        i += k > 0 ? k : 1;
        ++n;
    }
    return n;
}

std::size_t byte_offset(std::string_view s, std::size_t cp_index) {
    std::size_t i = 0;
    for (std::size_t seen = 0; i < s.size() && seen < cp_index; ++seen) {
        int k = seq_len(static_cast<unsigned char>(s[i]));
        i += k > 0 ? k : 1;
    }
    return i;
}

std::string_view slice(std::string_view s, std::size_t cp_start, std::size_t cp_end) {
    std::size_t b = byte_offset(s, cp_start);
    std::size_t e = byte_offset(s, cp_end);
    if (e < b) e = b;
    return s.substr(b, e - b);
}

char32_t decode_at(std::string_view s, std::size_t& pos) {
    unsigned char lead = static_cast<unsigned char>(s[pos]);
    int n = seq_len(lead);
    if (n <= 1) {
        ++pos;
        return lead;
    }
    char32_t cp = lead & (0x7F >> n);
    for (int k = 1; k < n && pos + k < s.size(); ++k)
        cp = (cp << 6) | (static_cast<unsigned char>(s[pos + k]) & 0x3F);
    pos += n;
    return cp;
}

}  // namespace utf8

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::vector<std::string_view> split_lines(std::string_view s) {
    auto out = split(s, '\n');
    for (auto& line : out)
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    std::string out(buf);
    // Keep a fractional digit for integral values so rates render as "1.0".
    if (out.find_first_of(".eE") == std::string::npos) out += ".0";
    return out;
}

}  // namespace evalcomp
