// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/prompts.hpp"
#include "deepbrowse/react.hpp"
#include "deepbrowse/sim_models.hpp"
#include "deepbrowse/sim_web.hpp"
#include "deepbrowse/synthesis.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/training.hpp"

namespace deepbrowse {

struct SynthesisRunConfig {
  SynthesisConfig synthesis;
  std::size_t n_tasks = 60;
  std::size_t planted_answer_leaks = 10;
  std::size_t planted_text_answerable = 10;
  double teacher_garbage_rate = 0.0;
};

struct EvalConfig {
  std::string benchmark = "sim";
  std::optional<std::filesystem::path> path;
  bool image_only = false;
  std::optional<std::size_t> sample_limit;
};

struct LiveConfig {
  std::string llm_base_url = "https://api.openai.com/v1";
  std::string policy_model;
  std::string teacher_model;
  std::string judge_model;
  std::string summarizer_model;
  std::string weak_lvlm_model;
  std::string weak_llm_model;
  std::string search_engine_id;
  std::size_t search_daily_budget = 10000;
  std::size_t vision_daily_budget = 10000;
  std::string kb_seeds_path;  // JSONL of SeedEntity rows exported from a knowledge-graph dump
  // Credentials; filled from the environment only.
  std::string llm_api_key;
  std::vector<std::string> search_keys;
  std::vector<std::string> vision_keys;
  std::string reader_key;
};

struct Config {
  std::filesystem::path prompts_dir = default_prompt_dir();
  sim::WorldParams world;
  SynthesisRunConfig synth;
  RolloutConfig rollout;
  GrpoConfig grpo;
  EvalConfig eval;
  std::string policy = "oracle";  // oracle, noisy, unknown, never_answer, live
  sim::NoiseMix noise;
  CacheMode tool_cache = CacheMode::off;
  std::filesystem::path tool_cache_dir;
  std::size_t visit_summary_cap = 2000;
  LiveConfig live;

  Json to_json() const {
    Json j = Json::object();
    j["prompts_dir"] = prompts_dir.string();
    j["world"] = world.to_json();
    const auto& s = synth.synthesis;
    j["synthesis"] = Json{{"max_sitelinks", s.max_sitelinks},
                          {"min_statements", s.min_statements},
                          {"retries", s.retries},
                          {"image_phrase", s.image_phrase},
                          {"strict_info_containment", s.strict_info_containment},
                          {"filter_mode", s.filter_mode == FilterMode::audit ? "audit" : "short_circuit"},
                          {"mix", Json{{"easy", s.mix.easy}, {"medium", s.mix.medium}, {"hard", s.mix.hard}}},
                          {"n_tasks", synth.n_tasks},
                          {"planted_answer_leaks", synth.planted_answer_leaks},
                          {"planted_text_answerable", synth.planted_text_answerable},
                          {"teacher_garbage_rate", synth.teacher_garbage_rate}};
    j["rollout"] = rollout.to_json();
    j["grpo"] = grpo.to_json();
    j["eval"] = Json{{"benchmark", eval.benchmark},
                     {"path", eval.path ? Json(eval.path->string()) : Json(nullptr)},
                     {"image_only", eval.image_only},
                     {"sample_limit", eval.sample_limit ? Json(*eval.sample_limit) : Json(nullptr)}};
    j["policy"] = policy;
    j["noise"] = Json{{"correct", noise.correct}, {"wrong", noise.wrong}, {"malformed", noise.malformed},
                      {"loop", noise.loop}};
    const char* modes[] = {"off", "memory", "record", "replay"};
    j["tools"] = Json{{"cache", modes[static_cast<int>(tool_cache)]},
                      {"cache_dir", tool_cache_dir.string()},
                      {"visit_summary_cap", visit_summary_cap}};
    j["live"] = Json{{"llm_base_url", live.llm_base_url},
                     {"policy_model", live.policy_model},
                     {"teacher_model", live.teacher_model},
                     {"judge_model", live.judge_model},
                     {"summarizer_model", live.summarizer_model},
                     {"weak_lvlm_model", live.weak_lvlm_model},
                     {"weak_llm_model", live.weak_llm_model},
                     {"search_engine_id", live.search_engine_id},
                     {"search_daily_budget", live.search_daily_budget},
                     {"vision_daily_budget", live.vision_daily_budget},
                     {"kb_seeds_path", live.kb_seeds_path}};
    return j;
  }
};

namespace config_detail {

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(Errc::bad_config, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items()) {
    if (!ok.contains(k)) throw Error(Errc::bad_config, "unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void get(const Json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::bad_config, where + "." + key + " has the wrong type");
  }
}

inline std::vector<std::string> split_csv(const char* s) {
  std::vector<std::string> out;
  if (!s) return out;
  std::string cur;
  for (const char* p = s;; ++p) {
    if (*p == ',' || *p == '\0') {
      auto t = text::trim(cur);
      if (!t.empty()) out.emplace_back(t);
      cur.clear();
      if (*p == '\0') break;
    } else {
      cur.push_back(*p);
    }
  }
  return out;
}

}  // namespace config_detail

/// Builds a Config from JSON. Paths are resolved against `base_dir`.
inline Config config_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  using config_detail::check_keys;
  using config_detail::get;
  check_keys(j, "config", {"prompts_dir", "world", "synthesis", "rollout", "grpo", "eval", "policy", "noise", "tools",
                           "live"});
  Config c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (auto it = j.find("prompts_dir"); it != j.end()) c.prompts_dir = resolve(it->get<std::string>());
  if (auto it = j.find("world"); it != j.end()) {
    check_keys(*it, "world", {"seed", "n_entities", "rarity_fraction", "rare_max_sitelinks", "rare_min_statements",
                              "rare_max_statements", "common_max_sitelinks", "common_min_statements",
                              "common_max_statements", "min_out_edges", "max_out_edges", "image_fraction",
                              "simple_image_fraction"});
    c.world = sim::WorldParams::from_json(*it);
  }
  if (auto it = j.find("synthesis"); it != j.end()) {
    check_keys(*it, "synthesis", {"max_sitelinks", "min_statements", "retries", "image_phrase",
                                  "strict_info_containment", "filter_mode", "mix", "n_tasks", "planted_answer_leaks",
                                  "planted_text_answerable", "teacher_garbage_rate"});
    auto& s = c.synth.synthesis;
    get(*it, "max_sitelinks", s.max_sitelinks, "synthesis");
    get(*it, "min_statements", s.min_statements, "synthesis");
    get(*it, "retries", s.retries, "synthesis");
    get(*it, "image_phrase", s.image_phrase, "synthesis");
    get(*it, "strict_info_containment", s.strict_info_containment, "synthesis");
    std::string mode;
    get(*it, "filter_mode", mode, "synthesis");
    if (mode == "short_circuit") {
      s.filter_mode = FilterMode::short_circuit;
    } else if (!mode.empty() && mode != "audit") {
      throw Error(Errc::bad_config, "synthesis.filter_mode must be audit or short_circuit");
    }
    if (auto m = it->find("mix"); m != it->end()) {
      check_keys(*m, "synthesis.mix", {"easy", "medium", "hard"});
      get(*m, "easy", s.mix.easy, "synthesis.mix");
      get(*m, "medium", s.mix.medium, "synthesis.mix");
      get(*m, "hard", s.mix.hard, "synthesis.mix");
    }
    get(*it, "n_tasks", c.synth.n_tasks, "synthesis");
    get(*it, "planted_answer_leaks", c.synth.planted_answer_leaks, "synthesis");
    get(*it, "planted_text_answerable", c.synth.planted_text_answerable, "synthesis");
    get(*it, "teacher_garbage_rate", c.synth.teacher_garbage_rate, "synthesis");
    if (s.retries == 0) throw Error(Errc::bad_config, "synthesis.retries must be positive");
  }
  if (auto it = j.find("rollout"); it != j.end()) {
    check_keys(*it, "rollout", {"max_steps", "trajectory_timeout", "max_prompt_tokens", "max_response_tokens",
                                "temperature", "top_p", "presence_penalty", "group_size", "current_date"});
    auto& r = c.rollout;
    get(*it, "max_steps", r.max_steps, "rollout");
    get(*it, "trajectory_timeout", r.trajectory_timeout, "rollout");
    get(*it, "max_prompt_tokens", r.max_prompt_tokens, "rollout");
    get(*it, "max_response_tokens", r.max_response_tokens, "rollout");
    get(*it, "temperature", r.sampling.temperature, "rollout");
    get(*it, "top_p", r.sampling.top_p, "rollout");
    double pp = 0;
    if (it->contains("presence_penalty") && !(*it)["presence_penalty"].is_null()) {
      get(*it, "presence_penalty", pp, "rollout");
      r.sampling.presence_penalty = pp;
    }
    get(*it, "group_size", r.group_size, "rollout");
    get(*it, "current_date", r.current_date, "rollout");
  }
  c.rollout.validate();
  if (auto it = j.find("grpo"); it != j.end()) {
    check_keys(*it, "grpo", {"group_size", "clip_epsilon", "kl_coef", "degenerate_std_epsilon", "reduction"});
    get(*it, "group_size", c.grpo.group_size, "grpo");
    get(*it, "clip_epsilon", c.grpo.clip_epsilon, "grpo");
    get(*it, "kl_coef", c.grpo.kl_coef, "grpo");
    get(*it, "degenerate_std_epsilon", c.grpo.degenerate_std_epsilon, "grpo");
    std::string red;
    get(*it, "reduction", red, "grpo");
    if (red == "token_sum") {
      c.grpo.reduction = TokenReduction::token_sum;
    } else if (!red.empty() && red != "token_mean") {
      throw Error(Errc::bad_config, "grpo.reduction must be token_mean or token_sum");
    }
  }
  c.grpo.validate();
  if (auto it = j.find("eval"); it != j.end()) {
    check_keys(*it, "eval", {"benchmark", "path", "image_only", "sample_limit"});
    get(*it, "benchmark", c.eval.benchmark, "eval");
    if (it->contains("path") && !(*it)["path"].is_null()) c.eval.path = resolve((*it)["path"].get<std::string>());
    get(*it, "image_only", c.eval.image_only, "eval");
    if (it->contains("sample_limit") && !(*it)["sample_limit"].is_null()) {
      std::size_t n = 0;
      get(*it, "sample_limit", n, "eval");
      c.eval.sample_limit = n;
    }
  }
  get(j, "policy", c.policy, "config");
  static const std::set<std::string> kPolicies = {"oracle", "noisy", "unknown", "never_answer", "live"};
  if (!kPolicies.contains(c.policy)) throw Error(Errc::bad_config, "unknown policy '" + c.policy + "'");
  if (auto it = j.find("noise"); it != j.end()) {
    check_keys(*it, "noise", {"correct", "wrong", "malformed", "loop"});
    get(*it, "correct", c.noise.correct, "noise");
    get(*it, "wrong", c.noise.wrong, "noise");
    get(*it, "malformed", c.noise.malformed, "noise");
    get(*it, "loop", c.noise.loop, "noise");
  }
  if (auto it = j.find("tools"); it != j.end()) {
    check_keys(*it, "tools", {"cache", "cache_dir", "visit_summary_cap"});
    std::string mode = "off";
    get(*it, "cache", mode, "tools");
    if (mode == "off") {
      c.tool_cache = CacheMode::off;
    } else if (mode == "memory") {
      c.tool_cache = CacheMode::memory;
    } else if (mode == "record") {
      c.tool_cache = CacheMode::record;
    } else if (mode == "replay") {
      c.tool_cache = CacheMode::replay;
    } else {
      throw Error(Errc::bad_config, "tools.cache must be off, memory, record or replay");
    }
    std::string dir;
    get(*it, "cache_dir", dir, "tools");
    if (!dir.empty()) c.tool_cache_dir = resolve(dir);
    get(*it, "visit_summary_cap", c.visit_summary_cap, "tools");
  }
  if (auto it = j.find("live"); it != j.end()) {
    check_keys(*it, "live", {"llm_base_url", "policy_model", "teacher_model", "judge_model", "summarizer_model",
                             "weak_lvlm_model", "weak_llm_model", "search_engine_id", "search_daily_budget",
                             "vision_daily_budget", "kb_seeds_path"});
    auto& l = c.live;
    get(*it, "llm_base_url", l.llm_base_url, "live");
    get(*it, "policy_model", l.policy_model, "live");
    get(*it, "teacher_model", l.teacher_model, "live");
    get(*it, "judge_model", l.judge_model, "live");
    get(*it, "summarizer_model", l.summarizer_model, "live");
    get(*it, "weak_lvlm_model", l.weak_lvlm_model, "live");
    get(*it, "weak_llm_model", l.weak_llm_model, "live");
    get(*it, "search_engine_id", l.search_engine_id, "live");
    get(*it, "search_daily_budget", l.search_daily_budget, "live");
    get(*it, "vision_daily_budget", l.vision_daily_budget, "live");
    std::string seeds;
    get(*it, "kb_seeds_path", seeds, "live");
    if (!seeds.empty()) l.kb_seeds_path = resolve(seeds).string();
  }
  return c;
}

/// Credentials come from the environment only.
inline void apply_environment(Config& c) {
  if (const char* k = std::getenv("DEEPBROWSE_LLM_API_KEY")) c.live.llm_api_key = k;
  c.live.search_keys = config_detail::split_csv(std::getenv("DEEPBROWSE_SEARCH_KEYS"));
  c.live.vision_keys = config_detail::split_csv(std::getenv("DEEPBROWSE_VISION_KEYS"));
  if (const char* k = std::getenv("DEEPBROWSE_READER_KEY")) c.live.reader_key = k;
}

inline Config load_config(const std::optional<std::filesystem::path>& path) {
  Config c;
  if (path) {
    Json j = Json::parse(text::read_file(*path), nullptr, false);
    if (j.is_discarded()) throw Error(Errc::bad_config, "config file is not valid JSON: " + path->string());
    c = config_from_json(j, path->parent_path());
  }
  apply_environment(c);
  return c;
}

}  // namespace deepbrowse
