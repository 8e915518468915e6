#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ccr {

// UTF-8 helpers. Lengths are counted in Unicode scalar values; an invalid
// byte counts as one unit so that counting never fails.

std::size_t char_count(std::string_view text);

/// Splits text into one string per code point (each a valid UTF-8 slice of the input).
std::vector<std::string> split_code_points(std::string_view text);

/// Byte offsets of each code point start, plus text.size() as a sentinel.
std::vector<std::size_t> code_point_offsets(std::string_view text);

/// Sentence-final marks: 。！？； and ASCII . ! ? ;
bool is_sentence_final(std::string_view code_point);

/// Closing quotes/brackets that stay attached to the preceding sentence end.
bool is_closing_mark(std::string_view code_point);

/// Splits text into sentences; concatenating the result reproduces the input.
std::vector<std::string> split_sentences(std::string_view text);

/// Whitespace tokens if the text contains ASCII whitespace, else one token per
/// non-space code point (the fallback for unsegmented CJK text).
std::vector<std::string> segment(std::string_view text);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t value);

}  // namespace ccr
