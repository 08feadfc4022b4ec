#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace splitqa::utf8 {

// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD, one per
// offending byte, so the result is always defined.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

// Number of code points in a UTF-8 string.
std::size_t length(std::string_view bytes);

// Code-point substring [start, start + count), clamped to the string end.
std::string substr(std::string_view bytes, std::size_t start, std::size_t count);

// Simple (1:1) case folding. Covers ASCII, Latin-1, Latin Extended-A,
// Greek and Cyrillic; everything else maps to itself.
char32_t fold(char32_t cp);
std::u32string fold(std::u32string_view cps);
std::string fold(std::string_view bytes);

bool is_space(char32_t cp);
bool is_letter(char32_t cp);
bool is_digit(char32_t cp);
// Punctuation and symbols that the tokenizer detaches from words.
bool is_punct(char32_t cp);

std::string trim(std::string_view s);

}  // namespace splitqa::utf8
