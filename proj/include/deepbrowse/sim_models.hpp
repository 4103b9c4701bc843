// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic stand-ins for the knowledge base, the teacher and filter
// models, and rollout policies, all driven by a SimWorld.

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/grammar.hpp"
#include "deepbrowse/llm.hpp"
#include "deepbrowse/rng.hpp"
#include "deepbrowse/sim_web.hpp"
#include "deepbrowse/synthesis.hpp"
#include "deepbrowse/text.hpp"

namespace deepbrowse::sim {

class SimKbAdapter final : public KbAdapter {
 public:
  explicit SimKbAdapter(std::shared_ptr<const SimWorld> world) : world_(std::move(world)) {}

  std::vector<SeedEntity> query_seeds(std::size_t max_sitelinks, std::size_t min_statements,
                                      std::size_t limit) override {
    std::vector<SeedEntity> out;
    for (const auto& e : world_->entities()) {
      if (out.size() == limit) break;
      if (!world_->passes_gate(e, max_sitelinks, min_statements)) continue;
      out.push_back({e.entity_id, e.label, e.sitelinks, e.statements.size(), e.page_text});
    }
    return out;
  }

  std::optional<KbPage> page(std::string_view label) override {
    const SimEntity* e = world_->find_by_label(label);
    if (!e) return std::nullopt;
    return KbPage{e->entity_id, e->label, e->page_text};
  }

  std::optional<std::string> image_for(std::string_view label) override {
    const SimEntity* e = world_->find_by_label(label);
    return e ? e->image() : std::nullopt;
  }

  std::string identifier() const override { return "sim-kb:seed=" + std::to_string(world_->params().seed); }

 private:
  std::shared_ptr<const SimWorld> world_;
};

// ---------------------------------------------------------------------------
// Teacher

struct TeacherFaults {
  double garbage_rate = 0.0;  // chance that an attempt returns an unusable reply
  std::uint64_t seed = 0;
};

/// Scripted teacher model. It reads the template inputs from the request
/// fields, not the prompt text.
class ScriptedTeacher final : public LlmBackend {
 public:
  explicit ScriptedTeacher(std::shared_ptr<const SimWorld> world, TeacherFaults faults = {})
      : world_(std::move(world)), faults_(faults) {}

  std::string complete(const LlmRequest& req) override {
    calls_.fetch_add(1);
    if (faults_.garbage_rate > 0) {
      Rng rng(text::fnv1a(req.prompt + "#" + std::to_string(req.attempt), faults_.seed));
      if (rng.chance(faults_.garbage_rate)) return "I am not sure what you mean.";
    }
    switch (req.kind) {
      case PromptKind::initial_qa: return initial_qa(req);
      case PromptKind::entity_selection: return last_label(field(req, "TEXT"), false);
      case PromptKind::info_parsing: return info(field(req, "ENTITY"));
      case PromptKind::text_injection:
        return replace_label(field(req, "QUESTION"), field(req, "ENTITY"), "the entity that " + field(req, "INFORMATION"));
      case PromptKind::image_entity_selection: return last_label(field(req, "TEXT"), true);
      case PromptKind::image_injection:
        return replace_label(field(req, "QUESTION"), field(req, "ENTITY"), "the entity shown in the image");
      default: throw Error(Errc::backend_failure, "teacher cannot serve " + std::string(to_string(req.kind)));
    }
  }

  std::string identifier() const override { return "sim-teacher:seed=" + std::to_string(world_->params().seed); }
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  static std::string field(const LlmRequest& req, const char* key) {
    auto it = req.fields.find(key);
    if (it == req.fields.end()) throw Error(Errc::backend_failure, std::string("request lacks field ") + key);
    return it->second;
  }

  std::string initial_qa(const LlmRequest& req) const {
    const SimEntity* e = world_->find_by_label(field(req, "ENTITY"));
    if (!e || e->statements.empty() || e->statements.front().kind != StatementKind::literal) return "{}";
    const auto& s = e->statements.front();
    Json j = Json::object();
    j["question"] = "What is the " + s.predicate + " of " + e->label + "?";
    j["answer"] = s.object;
    return j.dump();
  }

  std::string last_label(const std::string& question, bool need_image) const {
    auto hits = world_->labels_in(question);
    for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
      if (!need_image || (*it)->image_descriptor) return (*it)->label;
    }
    return "";
  }

  /// "<forward phrase> <object label>" for the first forward fact whose
  /// object has an image.
  std::string info(const std::string& label) const {
    const SimEntity* e = world_->find_by_label(label);
    if (!e) return "";
    for (const auto& s : e->statements) {
      if (s.kind != StatementKind::forward) continue;
      const SimEntity* o = world_->find(s.object);
      if (o && o->image_descriptor) return s.predicate + " " + o->label;
    }
    return "";
  }

  static std::string replace_label(std::string question, const std::string& label, const std::string& with) {
    const auto pos = question.rfind(label);
    if (pos == std::string::npos) return question;
    return question.replace(pos, label.size(), with);
  }

  std::shared_ptr<const SimWorld> world_;
  TeacherFaults faults_;
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Filter models

/// Weak answerer. It knows only the questions registered in its memory and
/// says it does not know otherwise.
class WeakModel final : public LlmBackend {
 public:
  explicit WeakModel(std::string name) : name_(std::move(name)) {}

  void remember(std::string_view question, std::string answer) {
    std::lock_guard lock(mu_);
    memory_.insert_or_assign(text::match_key(question), std::move(answer));
  }

  void set_failing(bool failing) { failing_.store(failing); }

  std::string complete(const LlmRequest& req) override {
    if (failing_.load()) throw Error(Errc::backend_failure, name_ + " unavailable");
    auto it = req.fields.find("QUESTION");
    if (it == req.fields.end()) throw Error(Errc::backend_failure, name_ + " request lacks QUESTION");
    std::lock_guard lock(mu_);
    auto m = memory_.find(text::match_key(it->second));
    return m == memory_.end() ? "I don't know." : m->second;
  }

  std::string identifier() const override { return name_; }

 private:
  std::string name_;
  std::mutex mu_;
  std::unordered_map<std::string, std::string> memory_;
  std::atomic<bool> failing_{false};
};

/// Says "yes" (too simple) exactly for images the world marks as simple.
class SimImageJudge final : public LlmBackend {
 public:
  explicit SimImageJudge(std::shared_ptr<const SimWorld> world) : world_(std::move(world)) {}

  std::string complete(const LlmRequest& req) override {
    if (!req.image_ref) throw Error(Errc::backend_failure, "image judge needs an image");
    const SimEntity* e = world_->find_by_image(*req.image_ref);
    if (!e) throw Error(Errc::backend_failure, "unknown image " + *req.image_ref);
    return e->simple_image ? "yes" : "no";
  }
  std::string identifier() const override { return "sim-image-judge"; }

 private:
  std::shared_ptr<const SimWorld> world_;
};

// ---------------------------------------------------------------------------
// Oracle

/// Reference tool sequence for a synthesized task: one image search, one
/// visit per injected hop walking the chain back to the seed, then a visit to
/// the seed page for the asked attribute.
struct OraclePlan {
  std::string task_id;
  std::vector<ToolInvocation> calls;
  std::vector<std::string> goals;  // visit goals, aligned with calls[1..]
  std::string answer;
};

inline OraclePlan oracle_solve(const Task& task, const SynthesisRecord* record, const SimWorld& world) {
  if (!record || !task.provenance || record->record_id != *task.provenance) {
    throw Error(Errc::provenance_missing, "no synthesis record for task " + task.task_id);
  }
  if (!task.image_ref) throw Error(Errc::provenance_missing, "task " + task.task_id + " has no image");
  const SimEntity* seed = world.find(record->seed.entity_id);
  if (!seed) throw Error(Errc::provenance_missing, "seed " + record->seed.entity_id + " not in world");
  OraclePlan plan;
  plan.task_id = task.task_id;
  plan.answer = task.gold_answer;
  plan.calls.push_back({"image_search", Json::object()});
  for (auto it = record->rounds.rbegin(); it != record->rounds.rend(); ++it) {
    auto labels = world.labels_in(it->parsed_info);
    if (labels.empty()) throw Error(Errc::provenance_missing, "round info names no entity: " + it->parsed_info);
    const SimEntity* object = labels.back();
    const std::string phrase(text::trim(it->parsed_info.substr(0, it->parsed_info.rfind(object->label))));
    const auto rel = relation_index(phrase, false);
    if (!rel) throw Error(Errc::provenance_missing, "unknown relation '" + phrase + "'");
    const std::string goal(relations()[*rel].inverse);
    plan.goals.push_back(goal);
    plan.calls.push_back({"visit", Json{{"url", object->url()}, {"goal", goal}}});
  }
  const auto& first = seed->statements.front();
  plan.goals.push_back(first.predicate);
  plan.calls.push_back({"visit", Json{{"url", seed->url()}, {"goal", first.predicate}}});
  return plan;
}

namespace detail {

inline std::string last_observation(const PolicyRequest& req) {
  for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
    if (it->role == "tool") return it->content;
    if (it->role == "user") return it->content;
  }
  return "";
}

inline std::size_t assistant_turns(const PolicyRequest& req) {
  std::size_t n = 0;
  for (const auto& m : req.messages) n += m.role == "assistant" ? 1 : 0;
  return n;
}

inline std::string between(std::string_view s, std::string_view open, std::string_view close) {
  const auto a = s.find(open);
  if (a == std::string_view::npos) return "";
  const auto b = s.find(close, a + open.size());
  if (b == std::string_view::npos) return "";
  return std::string(s.substr(a + open.size(), b - a - open.size()));
}

/// URL in parentheses on the first line that mentions `phrase`.
inline std::string linked_url(std::string_view observation, std::string_view phrase) {
  for (const auto& line : text::split_lines(observation)) {
    if (line.find(phrase) == std::string::npos) continue;
    auto url = between(line, "(", ")");
    if (!url.empty()) return url;
  }
  return "";
}

/// Value after the last " is " on the line mentioning `attr`.
inline std::string stated_value(std::string_view observation, std::string_view attr) {
  for (const auto& line : text::split_lines(observation)) {
    if (line.find("The " + std::string(attr) + " of ") == std::string::npos) continue;
    const auto pos = line.rfind(" is ");
    if (pos == std::string::npos) continue;
    std::string v = line.substr(pos + 4);
    while (!v.empty() && v.back() == '.') v.pop_back();
    return v;
  }
  return "";
}

}  // namespace detail

class PlanBook {
 public:
  void add(OraclePlan plan) {
    auto id = plan.task_id;
    plans_.insert_or_assign(std::move(id), std::move(plan));
  }
  const OraclePlan* find(const std::string& task_id) const {
    auto it = plans_.find(task_id);
    return it == plans_.end() ? nullptr : &it->second;
  }
  std::size_t size() const noexcept { return plans_.size(); }

 private:
  std::map<std::string, OraclePlan> plans_;
};

/// Follows the oracle plan, taking every URL from the preceding observation,
/// and answers with the value read off the last page.
class OraclePolicy final : public PolicyBackend {
 public:
  explicit OraclePolicy(std::shared_ptr<const PlanBook> plans) : plans_(std::move(plans)) {}

  std::string respond(const PolicyRequest& req) override {
    const OraclePlan* plan = plans_->find(req.task_id);
    if (!plan) return render_assistant("No plan for this task.", FinalAnswer{"unknown"});
    return step(*plan, req, detail::assistant_turns(req), std::nullopt);
  }
  std::string identifier() const override { return "sim-oracle-policy"; }

  /// Response for turn `turn` of `plan`. `answer_override` replaces the final answer.
  static std::string step(const OraclePlan& plan, const PolicyRequest& req, std::size_t turn,
                          const std::optional<std::string>& answer_override) {
    const std::string obs = detail::last_observation(req);
    if (turn == 0) {
      return render_assistant("The image is the starting point. I will search for it.", plan.calls[0]);
    }
    if (turn < plan.calls.size()) {
      const std::string goal = plan.goals[turn - 1];
      std::string url = turn == 1 ? detail::between(obs, "[Page Link] ", " [Page Title]")
                                  : detail::linked_url(obs, plan.goals[turn - 2]);
      if (url.empty()) return render_assistant("I cannot find the next page.", FinalAnswer{"unknown"});
      return render_assistant("Next I read " + url + " looking for who " + goal + ".",
                              ToolInvocation{"visit", Json{{"url", url}, {"goal", goal}}});
    }
    if (answer_override) return render_assistant("I will give my answer.", FinalAnswer{*answer_override});
    auto value = detail::stated_value(obs, plan.goals.back());
    if (value.empty()) value = "unknown";
    return render_assistant("The page states the " + plan.goals.back() + ".", FinalAnswer{value});
  }

 private:
  std::shared_ptr<const PlanBook> plans_;
};

struct NoiseMix {
  double correct = 0.55;
  double wrong = 0.2;
  double malformed = 0.15;
  double loop = 0.1;
};

enum class Behavior { correct, wrong, malformed, loop };

/// Oracle with per-trajectory noise. The behavior is fixed by the request
/// seed, so every sample of a group is reproducible.
class NoisyOraclePolicy final : public PolicyBackend {
 public:
  NoisyOraclePolicy(std::shared_ptr<const PlanBook> plans, NoiseMix mix) : plans_(std::move(plans)), mix_(mix) {}

  Behavior behavior(std::uint64_t seed) const {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    double u = rng.uniform() * (mix_.correct + mix_.wrong + mix_.malformed + mix_.loop);
    if ((u -= mix_.correct) < 0) return Behavior::correct;
    if ((u -= mix_.wrong) < 0) return Behavior::wrong;
    if ((u -= mix_.malformed) < 0) return Behavior::malformed;
    return Behavior::loop;
  }

  std::string respond(const PolicyRequest& req) override {
    const OraclePlan* plan = plans_->find(req.task_id);
    if (!plan) return render_assistant("No plan.", FinalAnswer{"unknown"});
    const std::size_t turn = detail::assistant_turns(req);
    switch (behavior(req.seed)) {
      case Behavior::correct: return OraclePolicy::step(*plan, req, turn, std::nullopt);
      case Behavior::wrong: return OraclePolicy::step(*plan, req, turn, std::string("unknown"));
      case Behavior::malformed:
        if (turn + 1 < plan->calls.size()) return OraclePolicy::step(*plan, req, turn, std::nullopt);
        return "I think the answer is somewhere on that page.";
      case Behavior::loop:
        return render_assistant("Let me search again.",
                                ToolInvocation{"text_search", Json{{"query", "entity shown in the image"}}});
    }
    return "";
  }
  std::string identifier() const override { return "sim-noisy-oracle-policy"; }

 private:
  std::shared_ptr<const PlanBook> plans_;
  NoiseMix mix_;
};

/// Answers "unknown" at once.
class UnknownPolicy final : public PolicyBackend {
 public:
  std::string respond(const PolicyRequest&) override {
    return render_assistant("I cannot determine this.", FinalAnswer{"unknown"});
  }
  std::string identifier() const override { return "sim-unknown-policy"; }
};

/// Keeps searching and never answers.
class SearchForeverPolicy final : public PolicyBackend {
 public:
  std::string respond(const PolicyRequest& req) override {
    return render_assistant("Still looking.",
                            ToolInvocation{"text_search", Json{{"query", "clue " + std::to_string(req.step)}}});
  }
  std::string identifier() const override { return "sim-search-forever-policy"; }
};

}  // namespace deepbrowse::sim
