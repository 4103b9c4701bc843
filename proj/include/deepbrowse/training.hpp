// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/grammar.hpp"
#include "deepbrowse/judge.hpp"
#include "deepbrowse/prompts.hpp"
#include "deepbrowse/react.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse {

// ---------------------------------------------------------------------------
// Rewards and advantages

inline double assign_reward(const Judgment& j) noexcept { return j.correct ? 1.0 : 0.0; }

/// 0 for anything that did not end in an answer, whatever the judgment says.
inline double assign_reward(const Trajectory& t, const std::optional<Judgment>& j) noexcept {
  if (!t.answered() || !j) return 0.0;
  return assign_reward(*j);
}

enum class TokenReduction { token_mean, token_sum };

struct GrpoConfig {
  std::size_t group_size = 8;
  double clip_epsilon = 0.2;
  double kl_coef = 0.001;
  double degenerate_std_epsilon = 1e-8;
  TokenReduction reduction = TokenReduction::token_mean;

  void validate() const {
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw Error(Errc::bad_config, "clip_epsilon must lie in (0, 1)");
    if (!(kl_coef >= 0.0)) throw Error(Errc::bad_config, "kl_coef must be non-negative");
    if (group_size < 2) throw Error(Errc::bad_config, "group_size must be at least 2 for advantages");
    if (!(degenerate_std_epsilon >= 0.0)) throw Error(Errc::bad_config, "degenerate_std_epsilon must be non-negative");
  }

  Json to_json() const {
    return Json{{"group_size", group_size},
                {"clip_epsilon", clip_epsilon},
                {"kl_coef", kl_coef},
                {"degenerate_std_epsilon", degenerate_std_epsilon},
                {"reduction", reduction == TokenReduction::token_mean ? "token_mean" : "token_sum"}};
  }
};

/// Group-normalized advantages with the population standard deviation.
/// Groups whose std falls below the degenerate threshold get all zeros.
inline std::vector<double> compute_advantages(const std::vector<double>& rewards, const GrpoConfig& config = {}) {
  if (rewards.size() < 2) {
    throw Error(Errc::group_too_small, "advantages need at least 2 rewards, got " + std::to_string(rewards.size()));
  }
  for (double r : rewards) {
    if (!std::isfinite(r)) throw Error(Errc::non_finite_input, "reward is not finite");
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd < config.degenerate_std_epsilon) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

/// Per-token KL estimate r - ln r - 1 with r = pi_ref / pi_theta.
inline double kl_estimate(double logp_ref, double logp_theta) {
  if (!std::isfinite(logp_ref) || !std::isfinite(logp_theta)) throw Error(Errc::non_finite_input, "log-prob is not finite");
  const double d = logp_ref - logp_theta;
  // expm1 keeps the r ~ 1 case exact: r - ln r - 1 = expm1(d) - d.
  return std::max(0.0, std::expm1(d) - d);
}

inline double clip(double x, double lo, double hi) noexcept { return std::min(std::max(x, lo), hi); }

/// min(rho A, clip(rho, 1-eps, 1+eps) A).
inline double clipped_surrogate(double rho, double advantage, double eps) noexcept {
  return std::min(rho * advantage, clip(rho, 1.0 - eps, 1.0 + eps) * advantage);
}

struct TokenRatioSeries {
  std::vector<double> logp_theta;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
  std::vector<bool> mask;  // true for response tokens that enter the loss
};

/// Clipped surrogate minus the KL penalty, reduced over masked tokens per
/// response and averaged over the group.
inline double grpo_objective(const std::vector<TokenRatioSeries>& group, const std::vector<double>& advantages,
                             const GrpoConfig& config = {}) {
  if (group.size() != advantages.size() || group.empty()) {
    throw Error(Errc::shape_mismatch, "group has " + std::to_string(group.size()) + " series but " +
                                          std::to_string(advantages.size()) + " advantages");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& s = group[i];
    const std::size_t n = s.logp_theta.size();
    if (s.logp_old.size() != n || s.logp_ref.size() != n || s.mask.size() != n) {
      throw Error(Errc::shape_mismatch, "series " + std::to_string(i) + " has unequal lengths");
    }
    if (!std::isfinite(advantages[i])) throw Error(Errc::non_finite_input, "advantage is not finite");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (!s.mask[t]) continue;
      if (!std::isfinite(s.logp_theta[t]) || !std::isfinite(s.logp_old[t])) {
        throw Error(Errc::non_finite_input, "log-prob is not finite");
      }
      const double rho = std::exp(s.logp_theta[t] - s.logp_old[t]);
      double term = clipped_surrogate(rho, advantages[i], config.clip_epsilon);
      if (config.kl_coef != 0.0) term -= config.kl_coef * kl_estimate(s.logp_ref[t], s.logp_theta[t]);
      sum += term;
      ++count;
    }
    if (count > 0) total += config.reduction == TokenReduction::token_mean ? sum / static_cast<double>(count) : sum;
  }
  return total / static_cast<double>(group.size());
}

// ---------------------------------------------------------------------------
// Rejection sampling

struct RejectionResult {
  std::vector<std::size_t> kept;               // indices into the input
  std::vector<std::optional<std::string>> reasons;  // nullopt for kept trajectories
};

/// Keeps trajectories that ended in an answer judged correct.
inline RejectionResult rejection_filter(const std::vector<Trajectory>& trajectories,
                                        const std::vector<std::optional<Judgment>>& judgments) {
  if (judgments.size() != trajectories.size()) {
    throw Error(Errc::missing_judgment, "expected " + std::to_string(trajectories.size()) + " judgment slots, got " +
                                            std::to_string(judgments.size()));
  }
  RejectionResult out;
  out.reasons.resize(trajectories.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& t = trajectories[i];
    if (!t.answered()) {
      out.reasons[i] = "not answered: " + std::string(to_string(t.termination));
      continue;
    }
    if (!judgments[i]) throw Error(Errc::missing_judgment, "answered trajectory " + t.task_id + " has no judgment");
    if (judgments[i]->indeterminate) {
      out.reasons[i] = "judgment indeterminate";
    } else if (!judgments[i]->correct) {
      out.reasons[i] = "judged incorrect";
    } else {
      out.kept.push_back(i);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SFT export

struct SftMessage {
  std::string role;  // system, user, assistant, tool
  std::string content;
  bool loss = false;
  std::optional<std::string> image;
  bool operator==(const SftMessage&) const = default;
};

struct SftExample {
  std::string task_id;
  std::vector<SftMessage> messages;
  bool operator==(const SftExample&) const = default;
};

/// Chat-format example for one answered trajectory. Only assistant turns
/// carry loss; the image rides on the first user turn.
inline SftExample build_sft_example(const Trajectory& t, const Task& task, const PromptLibrary& prompts,
                                    std::string_view current_date) {
  if (!t.answered()) {
    throw Error(Errc::unanswered_trajectory,
                "trajectory for " + t.task_id + " ended with " + std::string(to_string(t.termination)));
  }
  if (t.task_id != task.task_id) throw Error(Errc::shape_mismatch, "trajectory and task ids differ");
  SftExample ex;
  ex.task_id = t.task_id;
  ex.messages.push_back({"system", render_system_prompt(prompts, current_date), false, std::nullopt});
  ex.messages.push_back({"user", task.question_text, false, task.image_ref});
  for (const auto& s : t.steps) {
    ex.messages.push_back({"assistant", render_assistant(s.thought, s.action), true, std::nullopt});
    if (s.observation) ex.messages.push_back({"tool", *s.observation, false, std::nullopt});
  }
  return ex;
}

inline Json to_json(const SftExample& ex) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["task_id"] = ex.task_id;
  Json msgs = Json::array();
  for (const auto& m : ex.messages) {
    Json jm = Json::object();
    jm["role"] = m.role;
    jm["content"] = m.content;
    jm["loss"] = m.loss;
    if (m.image) jm["image"] = *m.image;
    msgs.push_back(std::move(jm));
  }
  j["messages"] = std::move(msgs);
  return j;
}

inline SftExample sft_example_from_json(const Json& j) {
  detail::check_schema_version(j);
  SftExample ex;
  ex.task_id = detail::require<std::string>(j, "task_id");
  if (!j.contains("messages") || !j["messages"].is_array()) throw Error(Errc::malformed_line, "messages missing");
  for (const auto& m : j["messages"]) {
    ex.messages.push_back({detail::require<std::string>(m, "role"), detail::require<std::string>(m, "content"),
                           detail::require<bool>(m, "loss"), detail::optional_field<std::string>(m, "image")});
  }
  return ex;
}

// ---------------------------------------------------------------------------
// RL batch

struct RlBatchItem {
  std::string task_id;
  std::string trajectory_ref;  // "<file>#<line>"
  double reward = 0.0;
  double advantage = 0.0;
  bool in_loss = true;
  bool operator==(const RlBatchItem&) const = default;
};

/// Judges each answered trajectory of a group and fills rewards/advantages.
/// On a judge backend failure the group stays unjudged.
inline std::vector<std::optional<Judgment>> judge_group(RolloutGroup& group, const Task& task,
                                                        const PromptLibrary& prompts, LlmBackend& judge,
                                                        const GrpoConfig& config) {
  std::vector<std::optional<Judgment>> judgments(group.trajectories.size());
  std::vector<double> rewards(group.trajectories.size(), 0.0);
  bool complete = true;
  for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
    const auto& t = group.trajectories[i];
    if (!t.answered()) continue;
    try {
      judgments[i] = judge_answer(prompts, task.question_text, *t.final_answer, task.gold_answer, judge);
      rewards[i] = assign_reward(t, judgments[i]);
    } catch (const Error& e) {
      if (e.code() != Errc::judge_backend_failure) throw;
      complete = false;
    }
  }
  if (complete) {
    group.rewards = rewards;
    group.advantages = group.trajectories.size() >= 2 ? compute_advantages(rewards, config)
                                                      : std::vector<double>(rewards.size(), 0.0);
  }
  return judgments;
}

/// Flattens judged groups into batch items. Advantages come from every
/// trajectory's reward; trajectories cut off by a limit or an error are kept
/// out of the loss.
inline std::vector<RlBatchItem> build_rl_batch(const std::vector<RolloutGroup>& groups, const GrpoConfig& config,
                                               const std::string& trajectory_file, std::size_t first_line = 1) {
  std::vector<RlBatchItem> out;
  std::size_t line = first_line;
  for (const auto& g : groups) {
    if (!g.rewards || g.rewards->size() != g.trajectories.size()) {
      throw Error(Errc::unjudged_group, "group for " + g.task_id + " has no rewards");
    }
    const auto adv = g.advantages && g.advantages->size() == g.trajectories.size()
                         ? *g.advantages
                         : compute_advantages(*g.rewards, config);
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
      out.push_back({g.task_id, trajectory_file + "#" + std::to_string(line++), (*g.rewards)[i], adv[i],
                     in_loss(g.trajectories[i].termination)});
    }
  }
  return out;
}

inline Json to_json(const RlBatchItem& item) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["task_id"] = item.task_id;
  j["trajectory_ref"] = item.trajectory_ref;
  j["reward"] = item.reward;
  j["advantage"] = item.advantage;
  j["in_loss"] = item.in_loss;
  return j;
}

inline RlBatchItem rl_batch_item_from_json(const Json& j) {
  detail::check_schema_version(j);
  return {detail::require<std::string>(j, "task_id"), detail::require<std::string>(j, "trajectory_ref"),
          detail::require<double>(j, "reward"), detail::require<double>(j, "advantage"),
          detail::require<bool>(j, "in_loss")};
}

}  // namespace deepbrowse
