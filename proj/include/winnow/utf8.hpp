#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace winnow {
namespace utf8 {

constexpr uint32_t kInvalid = 0xFFFFFFFFu;

// Decodes the codepoint starting at s[pos]; advances pos past it.
// Returns kInvalid (and advances by one byte) on malformed input.
inline uint32_t decode(std::string_view s, size_t& pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return kInvalid;
    }
    if (pos + len > s.size()) {
        ++pos;
        return kInvalid;
    }
    for (int i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return kInvalid;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings and surrogate range.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
        ++pos;
        return kInvalid;
    }
    pos += len;
    return cp;
}

inline bool valid(std::string_view s) {
    size_t pos = 0;
    while (pos < s.size()) {
        if (decode(s, pos) == kInvalid) return false;
    }
    return true;
}

inline bool is_space(uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

inline bool is_ascii_alnum(uint32_t cp) {
    return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z');
}

// Word-ish codepoint for the statistical metrics: ASCII alphanumerics,
// and any non-ASCII codepoint that is not whitespace and not in the
// common punctuation blocks. Full Unicode categories are out of scope.
inline bool is_word_cp(uint32_t cp) {
    if (cp < 0x80) return is_ascii_alnum(cp);
    if (is_space(cp)) return false;
    if (cp == 0xAB || cp == 0xBB || cp == 0xB7) return false;    // « » ·
    if (cp >= 0x2010 && cp <= 0x2027) return false;              // dashes, quotes, …
    if (cp >= 0x2030 && cp <= 0x205E) return false;
    return true;
}

// ASCII + Latin-1 letters; sufficient for the French/English corpora here.
inline uint32_t to_lower(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

inline void append(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string lowercase(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    size_t pos = 0;
    while (pos < s.size()) {
        uint32_t cp = decode(s, pos);
        if (cp == kInvalid) cp = 0xFFFD;
        append(out, to_lower(cp));
    }
    return out;
}

// Splits on Unicode whitespace; empty tokens are dropped.
inline std::vector<std::string_view> split_words(std::string_view s) {
    std::vector<std::string_view> words;
    size_t pos = 0;
    size_t start = 0;
    bool in_word = false;
    while (pos < s.size()) {
        const size_t here = pos;
        uint32_t cp = decode(s, pos);
        const bool space = cp != kInvalid && is_space(cp);
        if (space && in_word) {
            words.push_back(s.substr(start, here - start));
            in_word = false;
        } else if (!space && !in_word) {
            start = here;
            in_word = true;
        }
    }
    if (in_word) words.push_back(s.substr(start));
    return words;
}

inline size_t count_codepoints(std::string_view s) {
    size_t n = 0;
    size_t pos = 0;
    while (pos < s.size()) {
        decode(s, pos);
        ++n;
    }
    return n;
}

} // namespace utf8
} // namespace winnow
