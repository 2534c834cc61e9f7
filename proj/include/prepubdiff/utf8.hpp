#pragma once

#include <string>
#include <string_view>

namespace prepubdiff::utf8 {

inline constexpr char32_t kReplacement = U'�';

/// Decodes UTF-8 into code points. Malformed sequences become U+FFFD, one per
/// offending byte, so decoding never fails.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

/// Number of code points `decode` would produce.
std::size_t length(std::string_view bytes);

bool is_space(char32_t cp) noexcept;

/// Unicode simple lowercase mapping (falls back to ASCII when no UTF-8 locale
/// is available).
char32_t to_lower(char32_t cp) noexcept;
bool is_alnum(char32_t cp) noexcept;

}  // namespace prepubdiff::utf8
