#include "ccr/text.hpp"

#include <array>
#include <cstdio>

namespace ccr {

namespace {

// Length in bytes of the code point starting at text[i]; 1 for invalid bytes.
std::size_t code_point_length(std::string_view text, std::size_t i) {
  const auto lead = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  if (lead >= 0xF0 && lead <= 0xF4) {
    len = 4;
  } else if (lead >= 0xE0) {
    len = (lead <= 0xEF) ? 3 : 1;
  } else if (lead >= 0xC2) {
    len = 2;
  }
  if (len == 1 || i + len > text.size()) return 1;
  for (std::size_t k = 1; k < len; ++k) {
    const auto cont = static_cast<unsigned char>(text[i + k]);
    if ((cont & 0xC0) != 0x80) return 1;
  }
  return len;
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::size_t char_count(std::string_view text) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < text.size(); i += code_point_length(text, i)) ++count;
  return count;
}

std::vector<std::size_t> code_point_offsets(std::string_view text) {
  std::vector<std::size_t> offsets;
  offsets.reserve(text.size() + 1);
  for (std::size_t i = 0; i < text.size(); i += code_point_length(text, i)) offsets.push_back(i);
  offsets.push_back(text.size());
  return offsets;
}

std::vector<std::string> split_code_points(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t len = code_point_length(text, i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

bool is_sentence_final(std::string_view cp) {
  static constexpr std::array<std::string_view, 8> marks = {"。", "！", "？", "；", ".", "!", "?", ";"};
  for (auto m : marks) {
    if (cp == m) return true;
  }
  return false;
}

bool is_closing_mark(std::string_view cp) {
  static constexpr std::array<std::string_view, 10> marks = {"」", "』", "”", "’", "）", "》", "\"", "'", ")", "】"};
  for (auto m : marks) {
    if (cp == m) return true;
  }
  return false;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  const auto offsets = code_point_offsets(text);
  const std::size_t n = offsets.size() - 1;
  std::size_t start = 0;
  std::size_t k = 0;
  while (k < n) {
    auto cp = text.substr(offsets[k], offsets[k + 1] - offsets[k]);
    ++k;
    if (!is_sentence_final(cp)) continue;
    // Absorb runs of terminators and closing marks, e.g. "。」" or "?!".
    while (k < n) {
      auto next = text.substr(offsets[k], offsets[k + 1] - offsets[k]);
      if (!is_sentence_final(next) && !is_closing_mark(next)) break;
      ++k;
    }
    sentences.emplace_back(text.substr(offsets[start], offsets[k] - offsets[start]));
    start = k;
  }
  if (start < n) sentences.emplace_back(text.substr(offsets[start]));
  return sentences;
}

std::vector<std::string> segment(std::string_view text) {
  std::vector<std::string> tokens;
  bool has_space = false;
  for (char c : text) {
    if (is_ascii_space(c)) {
      has_space = true;
      break;
    }
  }
  if (has_space) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_ascii_space(text[i])) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_ascii_space(text[j])) ++j;
      if (j > i) tokens.emplace_back(text.substr(i, j - i));
      i = j;
    }
    return tokens;
  }
  for (auto& cp : split_code_points(text)) tokens.push_back(std::move(cp));
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace ccr
