#ifndef SENTMTL_TEXT_HPP
#define SENTMTL_TEXT_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sentmtl::text {

/// Decodes one UTF-8 codepoint starting at `pos`; advances `pos` past it.
/// Malformed bytes are consumed one at a time and returned verbatim so that
/// arbitrary binary garbage still round-trips through the text utilities.
inline char32_t next_codepoint(std::string_view s, std::size_t& pos)
{
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    const unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    auto cont = [&](std::size_t i) {
        return i < s.size() && (byte(i) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(pos + 1)) {
        char32_t cp = (char32_t(b0 & 0x1F) << 6) | (byte(pos + 1) & 0x3F);
        pos += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(pos + 1) && cont(pos + 2)) {
        char32_t cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(byte(pos + 1) & 0x3F) << 6)
                      | (byte(pos + 2) & 0x3F);
        pos += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(pos + 1) && cont(pos + 2) && cont(pos + 3)) {
        char32_t cp = (char32_t(b0 & 0x07) << 18) | (char32_t(byte(pos + 1) & 0x3F) << 12)
                      | (char32_t(byte(pos + 2) & 0x3F) << 6) | (byte(pos + 3) & 0x3F);
        pos += 4;
        return cp;
    }
    ++pos;
    return b0;
}

/// Whitespace set used for trimming: ASCII whitespace plus the common
/// Unicode space separators (NBSP, ogham, en/em spaces, line/paragraph
/// separators, narrow NBSP, math space, ideographic space) and the BOM.
inline bool is_space(char32_t cp)
{
    switch (cp) {
        case U'\t':
        case U'\n':
        case U'\v':
        case U'\f':
        case U'\r':
        case U' ':
        case U'':
        case U' ':
        case U' ':
        case U' ':
        case U' ':
        case U' ':
        case U' ':
        case U'　':
        case U'﻿':
            return true;
        default:
            return cp >= U' ' && cp <= U' ';
    }
}

/// Trims leading and trailing whitespace (see is_space) from UTF-8 text.
inline std::string_view trim(std::string_view s)
{
    std::size_t begin = 0;
    while (begin < s.size()) {
        std::size_t next = begin;
        if (!is_space(next_codepoint(s, next))) break;
        begin = next;
    }
    // Scan forward from `begin`, remembering the end of the last
    // non-space codepoint; cheaper than decoding UTF-8 backwards.
    std::size_t end = begin;
    std::size_t pos = begin;
    while (pos < s.size()) {
        std::size_t next = pos;
        const char32_t cp = next_codepoint(s, next);
        if (!is_space(cp)) end = next;
        pos = next;
    }
    return s.substr(begin, end - begin);
}

inline bool is_blank(std::string_view s)
{
    return trim(s).empty();
}

inline std::string lower_ascii(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

/// Keeps the first `max_codepoints` codepoints of a UTF-8 string.
inline std::string_view truncate_codepoints(std::string_view s, std::size_t max_codepoints)
{
    std::size_t pos = 0;
    std::size_t count = 0;
    while (pos < s.size() && count < max_codepoints) {
        next_codepoint(s, pos);
        ++count;
    }
    return s.substr(0, pos);
}

inline std::size_t count_codepoints(std::string_view s)
{
    std::size_t pos = 0;
    std::size_t count = 0;
    while (pos < s.size()) {
        next_codepoint(s, pos);
        ++count;
    }
    return count;
}

inline std::string strip_utf8_bom(std::string value)
{
    if (value.size() >= 3 && static_cast<unsigned char>(value[0]) == 0xEF
        && static_cast<unsigned char>(value[1]) == 0xBB
        && static_cast<unsigned char>(value[2]) == 0xBF) {
        value.erase(0, 3);
    }
    return value;
}

}  // namespace sentmtl::text

#endif  // SENTMTL_TEXT_HPP
