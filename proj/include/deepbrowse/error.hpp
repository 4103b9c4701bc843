// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deepbrowse {

/// Every failure the library raises carries one of these codes so callers can
/// branch on the condition rather than on message text.
enum class Errc {
  // trajectory_core
  already_finalized,
  observation_mismatch,
  answer_missing,
  answer_on_non_answered,
  malformed_line,
  schema_version_mismatch,
  // response_grammar / prompts
  template_missing,
  empty_toolset,
  // tool_gateway
  empty_query,
  rate_limited,
  provider_error,
  no_task_image,
  fetch_failed,
  summarizer_failed,
  unknown_tool,
  bad_arguments,
  // sim_web
  bad_distribution,
  provenance_missing,
  // synthesis
  kb_unavailable,
  no_seeds_found,
  llm_parse_failure,
  empty_content,
  entity_not_in_question,
  entity_page_missing,
  transform_leaks_entity,
  no_image_available,
  critical_entity_unresolvable,
  backend_failure,
  insufficient_seeds,
  // judge
  unparseable_judgment,
  judge_backend_failure,
  // training_prep
  group_too_small,
  non_finite_input,
  shape_mismatch,
  missing_judgment,
  unanswered_trajectory,
  unjudged_group,
  // eval / config
  schema_error,
  empty_after_filter,
  bad_config,
  io_error,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::already_finalized: return "AlreadyFinalized";
    case Errc::observation_mismatch: return "ObservationMismatch";
    case Errc::answer_missing: return "AnswerMissing";
    case Errc::answer_on_non_answered: return "AnswerOnNonAnswered";
    case Errc::malformed_line: return "MalformedLine";
    case Errc::schema_version_mismatch: return "SchemaVersionMismatch";
    case Errc::template_missing: return "TemplateMissing";
    case Errc::empty_toolset: return "EmptyToolset";
    case Errc::empty_query: return "EmptyQuery";
    case Errc::rate_limited: return "RateLimited";
    case Errc::provider_error: return "ProviderError";
    case Errc::no_task_image: return "NoTaskImage";
    case Errc::fetch_failed: return "FetchFailed";
    case Errc::summarizer_failed: return "SummarizerFailed";
    case Errc::unknown_tool: return "UnknownTool";
    case Errc::bad_arguments: return "BadArguments";
    case Errc::bad_distribution: return "BadDistribution";
    case Errc::provenance_missing: return "ProvenanceMissing";
    case Errc::kb_unavailable: return "KbUnavailable";
    case Errc::no_seeds_found: return "NoSeedsFound";
    case Errc::llm_parse_failure: return "LlmParseFailure";
    case Errc::empty_content: return "EmptyContent";
    case Errc::entity_not_in_question: return "EntityNotInQuestion";
    case Errc::entity_page_missing: return "EntityPageMissing";
    case Errc::transform_leaks_entity: return "TransformLeaksEntity";
    case Errc::no_image_available: return "NoImageAvailable";
    case Errc::critical_entity_unresolvable: return "CriticalEntityUnresolvable";
    case Errc::backend_failure: return "BackendFailure";
    case Errc::insufficient_seeds: return "InsufficientSeeds";
    case Errc::unparseable_judgment: return "UnparseableJudgment";
    case Errc::judge_backend_failure: return "JudgeBackendFailure";
    case Errc::group_too_small: return "GroupTooSmall";
    case Errc::non_finite_input: return "NonFiniteInput";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::missing_judgment: return "MissingJudgment";
    case Errc::unanswered_trajectory: return "UnansweredTrajectory";
    case Errc::unjudged_group: return "UnjudgedGroup";
    case Errc::schema_error: return "SchemaError";
    case Errc::empty_after_filter: return "EmptyAfterFilter";
    case Errc::bad_config: return "BadConfig";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace deepbrowse
