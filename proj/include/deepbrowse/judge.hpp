// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/llm.hpp"
#include "deepbrowse/prompts.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse {

struct Judgment {
  std::optional<std::string> extracted_final_answer;  // nullopt is the None sentinel
  std::string reasoning;
  bool correct = false;
  int confidence = 100;
  bool indeterminate = false;  // judge output never parsed; counted as incorrect
  bool operator==(const Judgment&) const = default;
};

namespace judge_detail {

/// Strips markdown emphasis, list bullets and surrounding whitespace.
inline std::string_view strip_markup(std::string_view s) {
  for (;;) {
    const auto before = s.size();
    s = text::trim(s);
    while (!s.empty() && (s.front() == '*' || s.front() == '_' || s.front() == '#' || s.front() == '`')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == '*' || s.back() == '_' || s.back() == '`')) s.remove_suffix(1);
    if (s.size() >= 2 && s[0] == '-' && s[1] == ' ') s.remove_prefix(2);
    if (s.size() == before) return s;
  }
}

inline constexpr std::string_view kLabels[] = {"extracted_final_answer", "reasoning", "correct", "confidence"};

/// If `line` opens a labeled field, returns (label index, rest of line).
inline std::optional<std::pair<std::size_t, std::string>> match_label(std::string_view line) {
  std::string_view s = strip_markup(line);
  for (std::size_t i = 0; i < std::size(kLabels); ++i) {
    const auto& label = kLabels[i];
    if (s.size() < label.size() || text::ascii_lower(s.substr(0, label.size())) != label) continue;
    std::string_view rest = s.substr(label.size());
    while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.remove_prefix(1);
    if (rest.empty() || rest.front() != ':') continue;
    rest.remove_prefix(1);
    return std::make_pair(i, std::string(strip_markup(rest)));
  }
  return std::nullopt;
}

}  // namespace judge_detail

/// Extracts the four labeled fields. A field's value runs until the next
/// labeled line; the last occurrence of a label wins.
inline Judgment parse_judgment(std::string_view raw) {
  std::optional<std::string> fields[4];
  std::optional<std::size_t> current;
  for (const auto& line : text::split_lines(raw)) {
    if (auto m = judge_detail::match_label(line)) {
      current = m->first;
      fields[*current] = m->second;
    } else if (current) {
      auto& f = *fields[*current];
      const auto extra = judge_detail::strip_markup(line);
      if (!extra.empty()) f += (f.empty() ? "" : "\n") + std::string(extra);
    }
  }
  if (!fields[2]) throw Error(Errc::unparseable_judgment, "no 'correct' field in judge output");
  std::string verdict;
  for (char c : *fields[2]) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      verdict.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!verdict.empty()) {
      break;
    }
  }
  Judgment j;
  if (verdict == "yes") {
    j.correct = true;
  } else if (verdict != "no") {
    throw Error(Errc::unparseable_judgment, "'correct' field is neither yes nor no: " + *fields[2]);
  }
  if (fields[0]) {
    std::string v(judge_detail::strip_markup(*fields[0]));
    if (v.size() >= 2 && (v.front() == '\'' || v.front() == '"') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
    if (text::ascii_lower(v) != "none" && !v.empty()) j.extracted_final_answer = v;
  }
  if (fields[1]) j.reasoning = *fields[1];
  if (fields[3]) {
    const std::string& c = *fields[3];
    std::size_t i = 0;
    while (i < c.size() && !std::isdigit(static_cast<unsigned char>(c[i]))) ++i;
    if (i < c.size()) {
      long v = 0;
      while (i < c.size() && std::isdigit(static_cast<unsigned char>(c[i])) && v <= 1000) v = v * 10 + (c[i++] - '0');
      j.confidence = static_cast<int>(std::clamp<long>(v, 0, 100));
    }
  }
  return j;
}

/// Renders the judge template, queries the backend and parses the verdict.
/// One retry on an unparseable reply; after that the judgment is marked
/// indeterminate and counted as incorrect.
inline Judgment judge_answer(const PromptLibrary& prompts, std::string_view question, std::string_view response,
                             std::string_view gold_answer, LlmBackend& backend) {
  if (text::trim(gold_answer).empty()) throw Error(Errc::bad_arguments, "judge needs a non-empty gold answer");
  LlmRequest req;
  req.kind = PromptKind::judge;
  req.fields = {{"question", std::string(question)},
                {"response", std::string(response)},
                {"correct_answer", std::string(gold_answer)}};
  req.prompt = prompts.render(PromptId::judge, {{"{question}", std::string(question)},
                                                {"{response}", std::string(response)},
                                                {"{correct_answer}", std::string(gold_answer)}});
  std::string last_error;
  for (std::uint32_t attempt = 0; attempt < 2; ++attempt) {
    req.attempt = attempt;
    std::string reply;
    try {
      reply = backend.complete(req);
    } catch (const Error& e) {
      throw Error(Errc::judge_backend_failure, e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::judge_backend_failure, e.what());
    }
    try {
      return parse_judgment(reply);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  Judgment j;
  j.indeterminate = true;
  j.correct = false;
  j.reasoning = "indeterminate: " + last_error;
  return j;
}

/// Answer normalization for the scripted judge: casefold, collapse
/// whitespace, drop trailing punctuation.
inline std::string normalize_answer(std::string_view s) {
  std::string k = text::match_key(s);
  while (!k.empty() && std::string_view(".,;:!?\"'").find(k.back()) != std::string_view::npos) k.pop_back();
  while (!k.empty() && std::string_view("\"'").find(k.front()) != std::string_view::npos) k.erase(0, 1);
  return std::string(text::trim(k));
}

/// Deterministic stand-in judge: exact match after normalize_answer. It
/// answers in the judge template's field layout.
class ExactMatchJudge final : public LlmBackend {
 public:
  std::string complete(const LlmRequest& req) override {
    const auto response = field(req, "response");
    const auto gold = field(req, "correct_answer");
    const bool match = !normalize_answer(response).empty() && normalize_answer(response) == normalize_answer(gold);
    const std::string extracted = text::trim(response).empty() ? "None" : std::string(text::trim(response));
    return "extracted_final_answer: " + extracted + "\n" +
           "reasoning: normalized exact match " + (match ? "succeeded" : "failed") + ".\n" +
           "correct: " + (match ? "yes" : "no") + "\n" + "confidence: 100\n";
  }
  std::string identifier() const override { return "exact-match-judge"; }

 private:
  static std::string field(const LlmRequest& req, const char* key) {
    auto it = req.fields.find(key);
    if (it == req.fields.end()) throw Error(Errc::judge_backend_failure, std::string("judge request lacks ") + key);
    return it->second;
  }
};

inline Json to_json(const Judgment& j) {
  Json out = Json::object();
  out["extracted_final_answer"] = j.extracted_final_answer ? Json(*j.extracted_final_answer) : Json(nullptr);
  out["reasoning"] = j.reasoning;
  out["correct"] = j.correct;
  out["confidence"] = j.confidence;
  out["indeterminate"] = j.indeterminate;
  return out;
}

inline Judgment judgment_from_json(const Json& j) {
  Judgment out;
  out.extracted_final_answer = detail::optional_field<std::string>(j, "extracted_final_answer");
  out.reasoning = detail::require<std::string>(j, "reasoning");
  out.correct = detail::require<bool>(j, "correct");
  out.confidence = detail::require<int>(j, "confidence");
  out.indeterminate = j.value("indeterminate", false);
  return out;
}

}  // namespace deepbrowse
