// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Slow, literal accept/reject recognizer for the response grammar. It shares
// no code with the production scanner: it counts tag occurrences, checks their
// positions and the whitespace between blocks, then validates the JSON body.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace deepbrowse::testing {

inline std::size_t count_occurrences(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + needle.size() <= s.size(); ++i) {
    if (s.substr(i, needle.size()) == needle) ++n;
  }
  return n;
}

inline bool only_whitespace(std::string_view s) {
  for (char c : s) {
    if (!(c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')) return false;
  }
  return true;
}

inline bool reference_accepts(std::string_view input) {
  std::size_t b = 0, e = input.size();
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (b < e && ws(input[b])) ++b;
  while (e > b && ws(input[e - 1])) --e;
  const std::string_view s = input.substr(b, e - b);

  if (count_occurrences(s, "<think>") != 1 || count_occurrences(s, "</think>") != 1) return false;
  const std::size_t tool_open = count_occurrences(s, "<tool_call>");
  const std::size_t tool_close = count_occurrences(s, "</tool_call>");
  const std::size_t ans_open = count_occurrences(s, "<answer>");
  const std::size_t ans_close = count_occurrences(s, "</answer>");
  const bool is_tool = tool_open == 1 && tool_close == 1 && ans_open == 0 && ans_close == 0;
  const bool is_answer = ans_open == 1 && ans_close == 1 && tool_open == 0 && tool_close == 0;
  if (!is_tool && !is_answer) return false;

  const std::string_view open = is_tool ? "<tool_call>" : "<answer>";
  const std::string_view close = is_tool ? "</tool_call>" : "</answer>";
  if (s.substr(0, 7) != "<think>") return false;
  if (s.size() < close.size() || s.substr(s.size() - close.size()) != close) return false;
  const std::size_t think_close = s.find("</think>");
  const std::size_t payload_open = s.find(open);
  if (think_close == std::string_view::npos || payload_open == std::string_view::npos) return false;
  if (payload_open < think_close + 8) return false;
  if (!only_whitespace(s.substr(think_close + 8, payload_open - think_close - 8))) return false;

  if (is_tool) {
    const std::size_t body_begin = payload_open + open.size();
    const std::size_t body_end = s.size() - close.size();
    if (body_end < body_begin) return false;
    auto j = nlohmann::json::parse(s.substr(body_begin, body_end - body_begin), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    if (!j.contains("name") || !j["name"].is_string()) return false;
    if (j.contains("arguments") && !j["arguments"].is_object()) return false;
  }
  return true;
}

/// Random tag soup biased toward near-valid responses.
class TagSequenceFuzzer {
 public:
  explicit TagSequenceFuzzer(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    if (pick(4) == 0) return mutate(valid());
    if (pick(3) == 0) return valid();
    std::string out;
    const int n = static_cast<int>(pick(9));
    for (int i = 0; i < n; ++i) out += piece();
    return out;
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::string piece() {
    static const std::vector<std::string> kPieces = {
        "<think>", "</think>", "<tool_call>", "</tool_call>", "<answer>", "</answer>", " ", "\n", "x",
        "reason", "<", ">", "</", "<thinking>", "{\"name\": \"text_search\", \"arguments\": {\"query\": \"q\"}}",
        "{\"name\": \"image_search\"}", "{\"name\": 3}", "not json", "{\"arguments\": {}}",
        "{\"name\": \"visit\", \"arguments\": []}", "Titanic", "\t"};
    return kPieces[pick(kPieces.size())];
  }

  std::string valid() {
    std::string ws[] = {"", " ", "\n", "\n\n", "\t "};
    std::string s = ws[pick(5)] + "<think>" + (pick(2) ? "plan" : "") + "</think>" + ws[pick(5)];
    if (pick(2)) {
      const char* bodies[] = {"{\"name\": \"image_search\", \"arguments\": {}}",
                              "{\"name\": \"text_search\", \"arguments\": {\"query\": \"a b\"}}", "{\"name\": \"visit\"}",
                              "\n{\"name\": \"x\", \"extra\": 1}\n"};
      s += std::string("<tool_call>") + bodies[pick(4)] + "</tool_call>";
    } else {
      s += std::string("<answer>") + (pick(2) ? "Yes." : "") + "</answer>";
    }
    return s + ws[pick(5)];
  }

  std::string mutate(std::string s) {
    const int edits = 1 + static_cast<int>(pick(3));
    for (int i = 0; i < edits; ++i) {
      const std::size_t pos = s.empty() ? 0 : pick(s.size() + 1);
      switch (pick(3)) {
        case 0: s.insert(pos, piece()); break;
        case 1:
          if (!s.empty() && pos < s.size()) s.erase(pos, 1 + pick(8));
          break;
        default: s.append(piece()); break;
      }
    }
    return s;
  }

  std::mt19937_64 rng_;
};

}  // namespace deepbrowse::testing
