// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/grammar.hpp"
#include "deepbrowse/llm.hpp"
#include "deepbrowse/prompts.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/tools.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse {

// ---------------------------------------------------------------------------
// Clocks and token estimation

class Clock {
 public:
  virtual ~Clock() = default;
  /// Seconds since an arbitrary epoch.
  virtual double now() = 0;
};

class SteadyClock final : public Clock {
 public:
  double now() override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
  }
};

/// Advances by `tick` seconds on every reading, so simulated runs record
/// reproducible wall times.
class LogicalClock final : public Clock {
 public:
  explicit LogicalClock(double tick = 1.0) : tick_(tick) {}
  double now() override { return t_ += tick_; }

 private:
  double tick_;
  double t_ = 0.0;
};

using ClockFactory = std::function<std::unique_ptr<Clock>()>;

inline ClockFactory steady_clocks() {
  return [] { return std::make_unique<SteadyClock>(); };
}
inline ClockFactory logical_clocks(double tick = 1.0) {
  return [tick] { return std::make_unique<LogicalClock>(tick); };
}

class TokenEstimator {
 public:
  virtual ~TokenEstimator() = default;
  virtual std::size_t count(std::string_view s) const = 0;
};

/// Whitespace pieces times 1.3, rounded up.
class WhitespaceEstimator final : public TokenEstimator {
 public:
  std::size_t count(std::string_view s) const override { return (text::whitespace_pieces(s) * 13 + 9) / 10; }
};

// ---------------------------------------------------------------------------
// Configuration

struct RolloutConfig {
  std::size_t max_steps = 30;
  double trajectory_timeout = 9000.0;  // seconds
  std::size_t max_prompt_tokens = 2048;
  std::size_t max_response_tokens = 28672;
  SamplingParams sampling;
  std::size_t group_size = 8;
  std::string current_date = "2025-01-01";

  void validate() const {
    if (max_steps == 0 || max_prompt_tokens == 0 || max_response_tokens == 0) {
      throw Error(Errc::bad_config, "rollout limits must be positive");
    }
    if (!(trajectory_timeout > 0)) throw Error(Errc::bad_config, "trajectory_timeout must be positive");
    if (group_size == 0) throw Error(Errc::bad_config, "group_size must be at least 1");
  }

  Json to_json() const {
    Json j = Json::object();
    j["max_steps"] = max_steps;
    j["trajectory_timeout"] = trajectory_timeout;
    j["max_prompt_tokens"] = max_prompt_tokens;
    j["max_response_tokens"] = max_response_tokens;
    j["temperature"] = sampling.temperature;
    j["top_p"] = sampling.top_p;
    j["presence_penalty"] = sampling.presence_penalty ? Json(*sampling.presence_penalty) : Json(nullptr);
    j["group_size"] = group_size;
    j["current_date"] = current_date;
    return j;
  }
};

inline std::uint64_t trajectory_seed(std::string_view task_id, std::size_t sample, std::uint64_t run_seed) {
  return text::fnv1a(std::string(task_id) + "#" + std::to_string(sample), run_seed);
}

// ---------------------------------------------------------------------------
// Single trajectory

struct RolloutServices {
  PolicyBackend& policy;
  ToolGateway& tools;
  const PromptLibrary& prompts;
  const TokenEstimator* tokens = nullptr;  // defaults to WhitespaceEstimator
};

namespace react_detail {

inline std::string span_detail(const FormatViolation& v) {
  std::string d(to_string(v.kind));
  if (v.span) d += " at bytes [" + std::to_string(v.span->begin) + ", " + std::to_string(v.span->end) + ")";
  return d;
}

inline std::string tool_name_of(const ToolInvocation& call) { return call.name.empty() ? "tool" : call.name; }

}  // namespace react_detail

/// Runs one ReAct episode. Every failure ends up as the trajectory's
/// termination; nothing is thrown for per-trajectory problems.
inline Trajectory run_trajectory(const Task& task, RolloutServices services, const RolloutConfig& config,
                                 std::uint64_t seed, std::size_t sample_index, Clock& clock) {
  static const WhitespaceEstimator kDefaultEstimator;
  const TokenEstimator& est = services.tokens ? *services.tokens : kDefaultEstimator;
  const double start = clock.now();
  TrajectoryBuilder builder(task.task_id);
  TokenAccounting tokens;
  auto finish = [&](Termination t, std::optional<std::string> answer, std::optional<std::string> detail) {
    return builder.finalize(t, std::move(answer), clock.now() - start, tokens, std::move(detail));
  };

  PolicyRequest req;
  req.sampling = config.sampling;
  req.task_id = task.task_id;
  req.sample_index = sample_index;
  req.seed = seed;
  req.messages.push_back({"system", render_system_prompt(services.prompts, config.current_date), std::nullopt});
  req.messages.push_back({"user", task.question_text, task.image_ref});
  std::size_t context = est.count(req.messages[0].content) + est.count(req.messages[1].content);
  tokens.prompt_tokens = context;
  if (context > config.max_prompt_tokens) {
    return finish(Termination::context_overflow, std::nullopt,
                  "initial prompt of " + std::to_string(context) + " tokens exceeds " +
                      std::to_string(config.max_prompt_tokens));
  }
  const TaskContext tool_ctx{task.task_id, task.image_ref};
  const std::size_t budget = config.max_prompt_tokens + config.max_response_tokens;

  for (std::size_t step = 0;; ++step) {
    if (builder.tool_call_count() >= config.max_steps) {
      return finish(Termination::step_limit, std::nullopt,
                    "reached " + std::to_string(config.max_steps) + " tool calls");
    }
    if (clock.now() - start > config.trajectory_timeout) {
      return finish(Termination::timeout, std::nullopt, "trajectory exceeded its time budget");
    }
    if (context > budget) {
      return finish(Termination::context_overflow, std::nullopt,
                    "context of " + std::to_string(context) + " tokens exceeds " + std::to_string(budget));
    }

    req.step = step;
    std::string response;
    try {
      response = services.policy.respond(req);
    } catch (const std::exception& e) {
      return finish(Termination::tool_error, std::nullopt, std::string("policy backend failed: ") + e.what());
    }
    const std::size_t rtok = est.count(response);
    tokens.response_tokens += rtok;
    if (rtok > config.max_response_tokens) {
      return finish(Termination::context_overflow, std::nullopt,
                    "response of " + std::to_string(rtok) + " tokens exceeds " +
                        std::to_string(config.max_response_tokens));
    }

    auto outcome = parse_response(response);
    if (const auto* v = std::get_if<FormatViolation>(&outcome)) {
      return finish(Termination::format_violation, std::nullopt, react_detail::span_detail(*v));
    }
    auto& parsed = std::get<ParsedResponse>(outcome);
    if (const auto* answer = std::get_if<FinalAnswer>(&parsed.payload)) {
      std::string text(text::trim(answer->text));
      builder.append_step(parsed.thought, FinalAnswer{text}, std::nullopt);
      return finish(Termination::answered, text, std::nullopt);
    }

    const auto& call = std::get<ToolInvocation>(parsed.payload);
    ToolResult result;
    bool fatal = false;
    std::string fatal_detail;
    try {
      result = services.tools.dispatch(call, tool_ctx);
    } catch (const Error& e) {
      result = ToolFailure{react_detail::tool_name_of(call), e.what()};
      if (e.code() == Errc::rate_limited) {
        fatal = true;
        fatal_detail = e.what();
      }
    } catch (const std::exception& e) {
      result = ToolFailure{react_detail::tool_name_of(call), e.what()};
      fatal = true;
      fatal_detail = e.what();
    }
    std::string observation = render_tool_response(result);
    const std::string assistant = render_assistant(parsed.thought, call);
    builder.append_step(parsed.thought, call, observation);
    if (fatal) return finish(Termination::tool_error, std::nullopt, fatal_detail);
    context += est.count(assistant) + est.count(observation);
    req.messages.push_back({"assistant", assistant, std::nullopt});
    req.messages.push_back({"tool", std::move(observation), std::nullopt});
  }
}

// ---------------------------------------------------------------------------
// Groups

inline bool in_loss(Termination t) noexcept {
  return t == Termination::answered || t == Termination::format_violation;
}

struct RolloutGroup {
  std::string task_id;
  std::vector<Trajectory> trajectories;
  std::optional<std::vector<double>> rewards;
  std::optional<std::vector<double>> advantages;
  std::vector<bool> validity;
};

/// Runs `group_size` trajectories for every task on `parallelism` worker
/// threads. Groups are delivered to `on_group` in task order, each as soon as
/// it and every earlier group are complete.
inline std::vector<RolloutGroup> run_group_batch(const std::vector<Task>& tasks, RolloutServices services,
                                                 const RolloutConfig& config, std::size_t parallelism,
                                                 std::uint64_t run_seed, ClockFactory clocks = steady_clocks(),
                                                 const std::function<void(const RolloutGroup&)>& on_group = {}) {
  config.validate();
  if (parallelism == 0) throw Error(Errc::bad_config, "parallelism must be at least 1");
  const std::size_t g = config.group_size;
  std::vector<RolloutGroup> groups(tasks.size());
  std::vector<std::size_t> done(tasks.size(), 0);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    groups[i].task_id = tasks[i].task_id;
    groups[i].trajectories.resize(g);
    groups[i].validity.resize(g);
  }
  std::mutex mu;
  std::size_t next_emit = 0;
  std::atomic<std::size_t> next_job{0};
  const std::size_t jobs = tasks.size() * g;

  auto worker = [&] {
    for (;;) {
      const std::size_t job = next_job.fetch_add(1);
      if (job >= jobs) return;
      const std::size_t t = job / g;
      const std::size_t s = job % g;
      auto clock = clocks();
      Trajectory traj = run_trajectory(tasks[t], services, config, trajectory_seed(tasks[t].task_id, s, run_seed), s,
                                       *clock);
      std::lock_guard lock(mu);
      groups[t].validity[s] = in_loss(traj.termination);
      groups[t].trajectories[s] = std::move(traj);
      ++done[t];
      while (next_emit < groups.size() && done[next_emit] == g) {
        if (on_group) on_group(groups[next_emit]);
        ++next_emit;
      }
    }
  };
  const std::size_t n_threads = std::min(parallelism, std::max<std::size_t>(jobs, 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Run manifest

struct ManifestInputs {
  std::string command;
  Json config;
  const PromptLibrary* prompts = nullptr;
  Json backends = Json::object();
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
};

inline Json make_manifest(const ManifestInputs& in) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["command"] = in.command;
  j["config"] = in.config;
  j["prompt_hashes"] = in.prompts ? in.prompts->hashes() : Json::object();
  j["backends"] = in.backends;
  j["seeds"] = Json{{"run_seed", in.seed}};
  j["parallelism"] = in.parallelism;
  return j;
}

}  // namespace deepbrowse
