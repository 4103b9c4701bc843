// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse {

enum class PromptId {
  system,
  judge,
  visit_summary,
  initial_qa,
  entity_selection,
  info_parsing,
  text_injection,
  image_entity_selection,
  image_injection,
  direct_answer,
  image_evaluation,
};

inline constexpr std::array<PromptId, 11> kAllPrompts = {
    PromptId::system,         PromptId::judge,          PromptId::visit_summary,
    PromptId::initial_qa,     PromptId::entity_selection, PromptId::info_parsing,
    PromptId::text_injection, PromptId::image_entity_selection, PromptId::image_injection,
    PromptId::direct_answer,  PromptId::image_evaluation};

constexpr std::string_view prompt_file(PromptId id) noexcept {
  switch (id) {
    case PromptId::system: return "system_prompt.txt";
    case PromptId::judge: return "judge.txt";
    case PromptId::visit_summary: return "visit_summary.txt";
    case PromptId::initial_qa: return "initial_qa.txt";
    case PromptId::entity_selection: return "entity_selection.txt";
    case PromptId::info_parsing: return "info_parsing.txt";
    case PromptId::text_injection: return "text_injection.txt";
    case PromptId::image_entity_selection: return "image_entity_selection.txt";
    case PromptId::image_injection: return "image_injection.txt";
    case PromptId::direct_answer: return "direct_answer.txt";
    case PromptId::image_evaluation: return "image_evaluation.txt";
  }
  return "";
}

inline constexpr std::string_view kToolSpecsFile = "tool_specs.jsonl";

using Substitutions = std::vector<std::pair<std::string, std::string>>;

/// Replaces placeholders in one left-to-right pass. Substituted values are
/// never rescanned, so a value that itself looks like a placeholder is inert.
inline std::string substitute(std::string_view tmpl, Substitutions subs) {
  std::sort(subs.begin(), subs.end(),
            [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool matched = false;
    for (const auto& [key, value] : subs) {
      if (!key.empty() && tmpl.compare(i, key.size(), key) == 0) {
        out += value;
        i += key.size();
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(tmpl[i++]);
  }
  return out;
}

#ifndef DEEPBROWSE_PROMPT_DIR
#define DEEPBROWSE_PROMPT_DIR "prompts"
#endif

/// Prompt directory: $DEEPBROWSE_PROMPTS if set, else the build-time default.
inline std::filesystem::path default_prompt_dir() {
  if (const char* env = std::getenv("DEEPBROWSE_PROMPTS"); env && *env) return env;
  return DEEPBROWSE_PROMPT_DIR;
}

/// The shipped template set, loaded once and then read-only.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& dir = default_prompt_dir()) {
    PromptLibrary lib;
    lib.dir_ = dir;
    for (auto id : kAllPrompts) {
      const auto path = dir / prompt_file(id);
      if (!std::filesystem::is_regular_file(path)) {
        throw Error(Errc::template_missing, "prompt template not found: " + path.string());
      }
      lib.templates_[id] = text::read_file(path);
    }
    const auto specs_path = dir / kToolSpecsFile;
    if (!std::filesystem::is_regular_file(specs_path)) {
      throw Error(Errc::template_missing, "tool specs not found: " + specs_path.string());
    }
    for (const auto& line : text::split_lines(text::read_file(specs_path))) {
      if (text::trim(line).empty()) continue;
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw Error(Errc::template_missing, "tool spec line is not a JSON object: " + line);
      }
      lib.tool_specs_.push_back(line);
    }
    return lib;
  }

  const std::string& raw(PromptId id) const { return templates_.at(id); }

  std::string render(PromptId id, Substitutions subs) const { return substitute(raw(id), std::move(subs)); }

  /// Tool specification blocks exactly as they appear in the system prompt.
  const std::vector<std::string>& tool_specs() const noexcept { return tool_specs_; }

  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// sha256 of every template file, keyed by file name, for run manifests.
  Json hashes() const {
    Json j = Json::object();
    for (auto id : kAllPrompts) j[std::string(prompt_file(id))] = text::sha256_hex(raw(id));
    std::string specs;
    for (const auto& s : tool_specs_) specs += s + "\n";
    j[std::string(kToolSpecsFile)] = text::sha256_hex(specs);
    return j;
  }

 private:
  std::filesystem::path dir_;
  std::map<PromptId, std::string> templates_;
  std::vector<std::string> tool_specs_;
};

}  // namespace deepbrowse
