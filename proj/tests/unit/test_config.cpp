// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cstdlib>

#include "deepbrowse/config.hpp"

using namespace deepbrowse;

namespace {

Errc code_of(const Json& j) {
  try {
    config_from_json(j);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("config accepted");
  return Errc::io_error;
}

}  // namespace

TEST_CASE("empty config gives the documented defaults", "[config]") {
  const Config c = config_from_json(Json::object());
  CHECK(c.policy == "oracle");
  CHECK(c.rollout.max_steps == 30);
  CHECK(c.rollout.max_prompt_tokens == 2048);
  CHECK(c.rollout.group_size == 8);
  CHECK(c.grpo.clip_epsilon == 0.2);
  CHECK(c.synth.n_tasks == 60);
  CHECK(c.synth.synthesis.mix.easy == 4);
  CHECK(c.world.n_entities == 200);
}

TEST_CASE("config sections override fields", "[config]") {
  const Json j = Json::parse(R"({
    "world": {"seed": 11, "n_entities": 80},
    "synthesis": {"mix": {"easy": 1, "medium": 1, "hard": 2}, "filter_mode": "short_circuit", "n_tasks": 12},
    "rollout": {"max_steps": 5, "top_p": 0.8, "presence_penalty": 1.1, "current_date": "2025-06-01"},
    "grpo": {"reduction": "token_sum", "kl_coef": 0.0},
    "eval": {"path": "bench.jsonl", "image_only": true, "sample_limit": 50},
    "policy": "noisy",
    "noise": {"correct": 1.0, "wrong": 0.0, "malformed": 0.0, "loop": 0.0},
    "tools": {"cache": "record", "cache_dir": "cache", "visit_summary_cap": 500}
  })");
  const Config c = config_from_json(j, "/base");
  CHECK(c.world.seed == 11);
  CHECK(c.world.n_entities == 80);
  CHECK(c.synth.synthesis.mix.hard == 2);
  CHECK(c.synth.synthesis.filter_mode == FilterMode::short_circuit);
  CHECK(c.rollout.max_steps == 5);
  CHECK(c.rollout.sampling.top_p == 0.8);
  CHECK(c.rollout.sampling.presence_penalty == 1.1);
  CHECK(c.grpo.reduction == TokenReduction::token_sum);
  CHECK(c.eval.path == std::filesystem::path("/base/bench.jsonl"));
  CHECK(c.eval.sample_limit == 50u);
  CHECK(c.policy == "noisy");
  CHECK(c.noise.correct == 1.0);
  CHECK(c.tool_cache == CacheMode::record);
  CHECK(c.tool_cache_dir == std::filesystem::path("/base/cache"));
  CHECK(c.visit_summary_cap == 500u);

  const Config again = config_from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());
}

TEST_CASE("config rejects unknown keys, bad types and bad values", "[config]") {
  CHECK(code_of(Json{{"colour", 1}}) == Errc::bad_config);
  CHECK(code_of(Json{{"rollout", Json{{"max_step", 3}}}}) == Errc::bad_config);
  CHECK(code_of(Json{{"rollout", Json{{"max_steps", "many"}}}}) == Errc::bad_config);
  CHECK(code_of(Json{{"rollout", Json{{"max_steps", 0}}}}) == Errc::bad_config);
  CHECK(code_of(Json{{"grpo", Json{{"clip_epsilon", 1.5}}}}) == Errc::bad_config);
  CHECK(code_of(Json{{"grpo", Json{{"reduction", "median"}}}}) == Errc::bad_config);
  CHECK(code_of(Json{{"policy", "psychic"}}) == Errc::bad_config);
  CHECK(code_of(Json{{"tools", Json{{"cache", "sometimes"}}}}) == Errc::bad_config);
  CHECK(code_of(Json{{"live", Json{{"api_key", "secret"}}}}) == Errc::bad_config);
}

TEST_CASE("credentials come from the environment only", "[config]") {
  ::setenv("DEEPBROWSE_SEARCH_KEYS", " k1, k2 ,,k3", 1);
  ::setenv("DEEPBROWSE_VISION_KEYS", "v1", 1);
  ::setenv("DEEPBROWSE_LLM_API_KEY", "sk-test", 1);
  Config c = load_config(std::nullopt);
  CHECK(c.live.search_keys == std::vector<std::string>{"k1", "k2", "k3"});
  CHECK(c.live.vision_keys == std::vector<std::string>{"v1"});
  CHECK(c.live.llm_api_key == "sk-test");
  CHECK(c.to_json().dump().find("sk-test") == std::string::npos);
  ::unsetenv("DEEPBROWSE_SEARCH_KEYS");
  ::unsetenv("DEEPBROWSE_VISION_KEYS");
  ::unsetenv("DEEPBROWSE_LLM_API_KEY");
}
