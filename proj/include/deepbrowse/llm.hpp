// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepbrowse/error.hpp"

namespace deepbrowse {

/// Which shipped template produced a request. Scripted backends key off this;
/// network backends only see the rendered prompt.
enum class PromptKind {
  initial_qa,
  entity_selection,
  info_parsing,
  text_injection,
  image_entity_selection,
  image_injection,
  direct_answer,
  text_only_answer,
  image_evaluation,
  judge,
  visit_summary,
};

constexpr std::string_view to_string(PromptKind k) noexcept {
  switch (k) {
    case PromptKind::initial_qa: return "initial_qa";
    case PromptKind::entity_selection: return "entity_selection";
    case PromptKind::info_parsing: return "info_parsing";
    case PromptKind::text_injection: return "text_injection";
    case PromptKind::image_entity_selection: return "image_entity_selection";
    case PromptKind::image_injection: return "image_injection";
    case PromptKind::direct_answer: return "direct_answer";
    case PromptKind::text_only_answer: return "text_only_answer";
    case PromptKind::image_evaluation: return "image_evaluation";
    case PromptKind::judge: return "judge";
    case PromptKind::visit_summary: return "visit_summary";
  }
  return "";
}

struct SamplingParams {
  double temperature = 0.6;
  double top_p = 0.9;
  std::optional<double> presence_penalty;
  std::optional<std::size_t> max_tokens;
};

/// One single-turn completion request.
struct LlmRequest {
  PromptKind kind = PromptKind::direct_answer;
  std::string prompt;
  std::optional<std::string> image_ref;
  /// Unrendered template inputs, e.g. {"QUESTION": ...}.
  std::map<std::string, std::string> fields;
  SamplingParams sampling{0.0, 1.0, std::nullopt, std::nullopt};
  std::uint32_t attempt = 0;
};

/// Single-turn text completion. Throws Error(backend_failure) on transport or
/// provider failure. Must be callable concurrently.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const LlmRequest& request) = 0;
  virtual std::string identifier() const = 0;
};

struct ChatMessage {
  std::string role;  // system, user or assistant
  std::string content;
  std::optional<std::string> image_ref;
};

/// Context handed to the policy for one step of a rollout.
struct PolicyRequest {
  std::vector<ChatMessage> messages;
  SamplingParams sampling;
  std::string task_id;
  std::size_t sample_index = 0;
  std::size_t step = 0;
  std::uint64_t seed = 0;
};

/// The rollout policy: full message history in, raw response text out.
class PolicyBackend {
 public:
  virtual ~PolicyBackend() = default;
  virtual std::string respond(const PolicyRequest& request) = 0;
  virtual std::string identifier() const = 0;
};

}  // namespace deepbrowse
