// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "deepbrowse/error.hpp"

namespace deepbrowse::text {

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline bool starts_with(std::string_view s, std::string_view prefix) noexcept {
  return s.substr(0, prefix.size()) == prefix;
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Collapses every whitespace run to one space and trims the ends.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

/// Matching key used for entity and answer comparisons: NFC, Unicode case
/// folding, then whitespace collapsing. Invalid UTF-8 is folded bytewise.
inline std::string match_key(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return collapse_whitespace(ascii_lower(s));
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString composed = nfc->normalize(u, status);
  composed.foldCase();
  icu::UnicodeString recomposed = nfc->normalize(composed, status);
  if (U_FAILURE(status)) return collapse_whitespace(ascii_lower(s));
  std::string out;
  recomposed.toUTF8String(out);
  return collapse_whitespace(out);
}

/// Case-insensitive, NFC-normalized, whitespace-normalized substring test.
inline bool contains_normalized(std::string_view haystack, std::string_view needle) {
  const std::string n = match_key(needle);
  if (n.empty()) return false;
  return match_key(haystack).find(n) != std::string::npos;
}

inline bool equals_normalized(std::string_view a, std::string_view b) { return match_key(a) == match_key(b); }

/// Lowercase alphanumeric word pieces (ASCII letters/digits; other bytes split).
inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> kStop = {
      "a",    "an",   "and",  "are",  "as",     "at",    "by",   "for",  "from", "has",  "have",
      "had",  "in",   "is",   "it",   "its",    "of",    "on",   "or",   "that", "the",  "this",
      "to",   "was",  "were", "what", "which",  "who",   "with", "entity", "find", "fact",
      "about", "page", "identify", "value", "information", "goal", "stating", "be", "up"};
  return kStop;
}

/// Content tokens: words() minus stopwords, deduplicated, sorted.
inline std::vector<std::string> content_tokens(std::string_view s) {
  std::set<std::string> uniq;
  for (auto& w : words(s)) {
    if (!stopwords().contains(w)) uniq.insert(std::move(w));
  }
  return {uniq.begin(), uniq.end()};
}

/// Rough whitespace-piece count; callers scale it into a token estimate.
inline std::size_t whitespace_pieces(std::string_view s) {
  std::size_t n = 0;
  bool in_piece = false;
  for (char c : s) {
    if (is_space(c)) {
      in_piece = false;
    } else if (!in_piece) {
      in_piece = true;
      ++n;
    }
  }
  return n;
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::io_error, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

/// FNV-1a, used to derive per-trajectory seeds from stable identifiers.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

inline std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) lines.emplace_back(s.substr(start));
      break;
    }
    lines.emplace_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace deepbrowse::text
