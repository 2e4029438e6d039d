#pragma once
// String helpers shared across modules: case folding, tokenizing,
// whole-word search, RFC 3339 timestamps and a portable bounded RNG draw.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "factcache/error.hpp"

namespace factcache {

using Timestamp = std::chrono::system_clock::time_point;

namespace text {

// Bytes >= 0x80 count as word characters so UTF-8 names stay whole.
inline bool is_word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z');
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Lowercase maximal runs of word characters.
inline std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        if (is_word_char(c)) {
            current.push_back(ascii_lower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

inline bool starts_with_word_boundary(std::string_view s, std::size_t begin) {
    return begin == 0 || !is_word_char(s[begin - 1]) || !is_word_char(s[begin]);
}

inline bool ends_with_word_boundary(std::string_view s, std::size_t end) {
    return end == s.size() || !is_word_char(s[end]) || !is_word_char(s[end - 1]);
}

// First occurrence of `needle` in `haystack` not embedded in a longer word.
inline std::size_t find_whole_word(std::string_view haystack, std::string_view needle,
                                   std::size_t from = 0) {
    if (needle.empty()) return std::string_view::npos;
    for (auto pos = haystack.find(needle, from); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + 1)) {
        if (starts_with_word_boundary(haystack, pos) &&
            ends_with_word_boundary(haystack, pos + needle.size())) {
            return pos;
        }
    }
    return std::string_view::npos;
}

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

inline std::string replace_at(std::string_view s, std::size_t pos, std::size_t len,
                              std::string_view replacement) {
    std::string out;
    out.reserve(s.size() - len + replacement.size());
    out.append(s.substr(0, pos));
    out.append(replacement);
    out.append(s.substr(pos + len));
    return out;
}

// RFC 3339 with second precision in UTC, e.g. "2024-05-01T12:00:00Z".
inline std::string format_rfc3339(Timestamp t) {
    const std::time_t secs = std::chrono::system_clock::to_time_t(
        std::chrono::time_point_cast<std::chrono::seconds>(t));
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+hh:mm|-hh:mm)". Fractions are dropped.
inline Timestamp parse_rfc3339(std::string_view s) {
    auto fail = [&] { return Error(ErrorCode::ParseError, "bad RFC 3339 timestamp: " + std::string(s)); };
    auto digits = [&](std::size_t pos, std::size_t n) {
        if (pos + n > s.size()) throw fail();
        int v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (s[i] < '0' || s[i] > '9') throw fail();
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
        s[13] != ':' || s[16] != ':') {
        throw fail();
    }
    std::tm tm{};
    tm.tm_year = digits(0, 4) - 1900;
    tm.tm_mon = digits(5, 2) - 1;
    tm.tm_mday = digits(8, 2);
    tm.tm_hour = digits(11, 2);
    tm.tm_min = digits(14, 2);
    tm.tm_sec = digits(17, 2);
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
    long offset = 0;
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        const int sign = s[pos] == '+' ? 1 : -1;
        if (pos + 6 > s.size() || s[pos + 3] != ':') throw fail();
        offset = sign * (digits(pos + 1, 2) * 3600L + digits(pos + 4, 2) * 60L);
        pos += 6;
    } else {
        throw fail();
    }
    if (pos != s.size()) throw fail();
    const std::time_t secs = timegm(&tm) - offset;
    return std::chrono::system_clock::from_time_t(secs);
}

}  // namespace text

// Unbiased draw in [0, n). std::uniform_int_distribution is implementation
// defined, so seeded generation would not be byte-identical across toolchains.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return static_cast<std::size_t>(draw % bound);
}

}  // namespace factcache
