#pragma once

// Minimal, locale-independent UTF-8 handling: decoding, simple lowercase folding,
// and the alphanumeric/whitespace classes used by the tokenizer and label
// canonicalization. Results never depend on the process locale.

#include <cstddef>
#include <string>
#include <string_view>

namespace lextag::unicode {

inline constexpr char32_t replacement = 0xFFFD;

/// Decodes one code point starting at `pos` and advances `pos`. Malformed
/// sequences consume one byte and yield U+FFFD.
[[nodiscard]] inline char32_t decode(std::string_view s, std::size_t &pos) noexcept {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    std::size_t len = 0;
    char32_t cp = 0;
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
        return replacement;
    }
    if (pos + len > s.size()) {
        ++pos;
        return replacement;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return replacement;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    // overlong forms and surrogates
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return replacement;
    }
    pos += len;
    return cp;
}

inline void append_utf8(std::string &out, char32_t cp) {
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

/// Simple (1:1) lowercase mapping for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
/// Code points outside those blocks map to themselves.
[[nodiscard]] constexpr char32_t to_lower(char32_t cp) noexcept {
    if (cp >= U'A' && cp <= U'Z') {
        return cp + 0x20;
    }
    if (cp < 0x80) {
        return cp;
    }
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
        return cp + 0x20;
    }
    if (cp >= 0x100 && cp <= 0x137) {
        return cp | 1;
    }
    if (cp >= 0x139 && cp <= 0x148) {
        return (cp & 1) ? cp + 1 : cp;
    }
    if (cp >= 0x14A && cp <= 0x177) {
        return cp | 1;
    }
    if (cp == 0x178) {
        return 0xFF;
    }
    if (cp >= 0x179 && cp <= 0x17E) {
        return (cp & 1) ? cp + 1 : cp;
    }
    if (cp == 0x386) {
        return 0x3AC;
    }
    if (cp >= 0x388 && cp <= 0x38A) {
        return cp + 0x25;
    }
    if (cp == 0x38C) {
        return 0x3CC;
    }
    if (cp == 0x38E || cp == 0x38F) {
        return cp + 0x3F;
    }
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) {
        return cp + 0x20;
    }
    if (cp >= 0x400 && cp <= 0x40F) {
        return cp + 0x50;
    }
    if (cp >= 0x410 && cp <= 0x42F) {
        return cp + 0x20;
    }
    return cp;
}

[[nodiscard]] constexpr bool is_space(char32_t cp) noexcept {
    return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
           (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
           cp == 0x3000;
}

/// Letters and digits. Outside Latin-1 this is approximated block-wise: code points in
/// punctuation, symbol, space, control and private-use blocks are separators; all
/// others count as word characters.
[[nodiscard]] constexpr bool is_alnum(char32_t cp) noexcept {
    if (cp < 0x80) {
        return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
    }
    if (cp < 0x100) {
        return cp == 0xAA || cp == 0xB5 || cp == 0xBA || (cp >= 0xC0 && cp != 0xD7 && cp != 0xF7);
    }
    if (cp == replacement || is_space(cp)) {
        return false;
    }
    if (cp >= 0x2000 && cp <= 0x2BFF) {  // general punctuation .. misc symbols and arrows
        return false;
    }
    if (cp >= 0x3000 && cp <= 0x303F) {  // CJK symbols and punctuation
        return false;
    }
    if (cp >= 0xD800 && cp <= 0xF8FF) {  // surrogates, private use
        return false;
    }
    if (cp >= 0xFE10 && cp <= 0xFE6F) {  // vertical forms, small forms
        return false;
    }
    if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
        (cp >= 0xFF5B && cp <= 0xFF65)) {
        return false;
    }
    if (cp >= 0x1F000 && cp <= 0x1FAFF) {  // emoji and pictographs
        return false;
    }
    return cp != 0x37E && cp != 0x387 && cp != 0x55D && cp != 0x589 && cp != 0x5BE && cp != 0x60C && cp != 0x61B &&
           cp != 0x61F && cp != 0x6D4;
}

}  // namespace lextag::unicode
