#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace temario::utf8 {

/// Decodes UTF-8 into code points. Malformed sequences become U+FFFD.
std::u32string decode(std::string_view text);

std::string encode(char32_t cp);
std::string encode(std::u32string_view cps);

/// Splits into one UTF-8 string per code point.
std::vector<std::string> characters(std::string_view text);

std::size_t length(std::string_view text);

/// Simple case mapping for Latin, Greek and Cyrillic scripts.
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view text);

/// Letters and digits of the scripts we tokenize. Combining marks count as
/// word characters so decomposed accents stay inside their token.
bool is_word_char(char32_t cp);

bool is_space(char32_t cp);

}  // namespace temario::utf8
