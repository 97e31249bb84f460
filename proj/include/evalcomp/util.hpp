#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace evalcomp {

// ── UTF-8 ────────────────────────────────────────────────────────────
// All span offsets in this project count Unicode codepoints, not bytes.
namespace utf8 {

bool is_valid(std::string_view s);

// Number of codepoints in a valid UTF-8 string.
std::size_t length(std::string_view s);

// Byte offset of the codepoint with index `cp_index` (== s.size() when
// cp_index equals the codepoint count). cp_index past the end is clamped.
std::size_t byte_offset(std::string_view s, std::size_t cp_index);

// Substring [cp_start, cp_end) in codepoint coordinates.
std::string_view slice(std::string_view s, std::size_t cp_start, std::size_t cp_end);

// Decodes the codepoint starting at byte `pos`; advances `pos` past it.
// Input must be valid UTF-8.
char32_t decode_at(std::string_view s, std::size_t& pos);

}  // namespace utf8

// ── strings ──────────────────────────────────────────────────────────

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_lines(std::string_view s);

// Shortest decimal representation that parses back to exactly the same
// double; integral values keep one fractional digit ("1.0" not "1").
std::string format_double(double v);

// ── hashing ──────────────────────────────────────────────────────────

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace evalcomp
