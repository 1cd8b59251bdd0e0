#pragma once

#include <string>
#include <string_view>

namespace condense::unicode {

/// Decodes UTF-8 into code points. Ill-formed sequences become U+FFFD.
std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

/// Unicode canonical composition (NFC).
std::string nfc(std::string_view utf8);

bool is_alnum(char32_t c);
bool is_upper(char32_t c);
bool is_digit(char32_t c);
/// Whitespace other than line breaks.
bool is_horizontal_space(char32_t c);
bool is_line_break(char32_t c);
bool is_space(char32_t c);

/// Simple (one-to-one) case folding.
char32_t fold(char32_t c);

}  // namespace condense::unicode
