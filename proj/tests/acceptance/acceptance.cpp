// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   deepbrowse_acceptance <path-to-deepbrowse-cli>

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "deepbrowse/commands.hpp"
#include "support/case_trajectory.hpp"
#include "support/grammar_reference.hpp"
#include "support/grpo_reference.hpp"
#include "support/sim_fixture.hpp"

using namespace deepbrowse;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr std::size_t kFuzzCases = 10000;
constexpr double kGrammarSeconds = 10.0;
constexpr std::size_t kGrpoGroups = 1000;
constexpr double kMomentTol = 1e-9;
constexpr double kObjectiveRelTol = 1e-9;
constexpr double kKlZeroTol = 1e-12;
constexpr double kGrpoSeconds = 5.0;
constexpr double kPipelineSeconds = 120.0;
constexpr double kRolloutSeconds = 60.0;
constexpr double kClosedFormTol = 1e-12;

// Oracle values for rewards {1,1,1,1,1,1,0,0}: mean 3/4, population std
// sqrt(3)/4, so the advantages are 1/sqrt(3) and -sqrt(3).
constexpr double kAdvOne = 0.5773502691896258;
constexpr double kAdvZero = -1.7320508075688772;

const PromptLibrary& prompts() {
  static const PromptLibrary lib = PromptLibrary::load();
  return lib;
}

struct Check {
  bool ok = true;
  std::vector<std::string> failures;
  std::string summary;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (failures.size() < 5) failures.push_back(what);
    }
  }
};

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f s", s);
  return buf;
}

int g_failed = 0;

void run(int id, const std::string& name, double limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string timing = seconds(dt);
  if (limit_s > 0) {
    c.expect(dt < limit_s, "runtime " + seconds(dt) + " exceeds " + seconds(limit_s));
    timing += " < " + seconds(limit_s);
  }
  std::cout << (c.ok ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << c.summary << " (" << timing << ")"
            << std::endl;
  for (const auto& f : c.failures) std::cout << "        - " << f << std::endl;
  if (!c.ok) ++g_failed;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("deepbrowse_accept_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool accepts(std::string_view s) { return std::holds_alternative<ParsedResponse>(parse_response(s)); }

bool answer_matches(const Trajectory& t, const Task& task) {
  return t.answered() && normalize_answer(*t.final_answer) == normalize_answer(task.gold_answer);
}

std::size_t count_tool_steps(const std::vector<Trajectory>& ts) {
  std::size_t n = 0;
  for (const auto& t : ts) {
    for (const auto& s : t.steps) n += std::holds_alternative<ToolInvocation>(s.action) ? 1 : 0;
  }
  return n;
}

// Every corpus generated during the run, for the accounting check.
std::vector<std::pair<std::string, std::vector<Trajectory>>> g_corpora;

// ---------------------------------------------------------------------------
// 1. Grammar

void grammar(Check& c) {
  testing::TagSequenceFuzzer fuzz(20261016);
  std::size_t disagreements = 0, accepted = 0;
  for (std::size_t i = 0; i < kFuzzCases; ++i) {
    const std::string input = fuzz.next();
    const bool ours = accepts(input);
    accepted += ours ? 1 : 0;
    if (ours != testing::reference_accepts(input)) {
      ++disagreements;
      c.expect(false, "disagreement on: " + input);
    }
  }
  // One accept and one reject per rule class.
  struct Case {
    const char* rule;
    std::string input;
    bool accept;
  };
  const std::vector<Case> cases = {
      {"one think pair", "<think>plan</think><answer>Titanic</answer>", true},
      {"one think pair", "<think>a</think><think>b</think><answer>Titanic</answer>", false},
      {"tool_call xor answer", R"(<think>t</think><tool_call>{"name": "image_search", "arguments": {}}</tool_call>)",
       true},
      {"tool_call xor answer", R"(<think>t</think><tool_call>{"name": "visit"}</tool_call><answer>x</answer>)", false},
      {"closed tags in order", "\n<think>t</think>\n<answer>Yes.</answer>\n", true},
      {"closed tags in order", "<answer>x</answer><think>t</think>", false},
      {"single JSON tool call", R"(<think>t</think><tool_call>{"name": "text_search", "arguments": {"query": "q"}}</tool_call>)",
       true},
      {"single JSON tool call", "<think>t</think><tool_call>not json</tool_call>", false},
  };
  std::size_t rule_ok = 0;
  for (const auto& k : cases) {
    const bool got = accepts(k.input);
    const bool ref = testing::reference_accepts(k.input);
    c.expect(got == k.accept && ref == k.accept,
             std::string(k.rule) + (k.accept ? " accept" : " reject") + " case misjudged: " + k.input);
    rule_ok += got == k.accept ? 1 : 0;
  }
  c.summary = std::to_string(disagreements) + " disagreements on " + std::to_string(kFuzzCases) + " fuzzed (" +
              std::to_string(accepted) + " accepted); rule-class cases " + std::to_string(rule_ok) + "/" +
              std::to_string(cases.size());
}

// ---------------------------------------------------------------------------
// 2. GRPO numerics

void grpo(Check& c) {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> size(2, 16);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t nondegenerate = 0, degenerate = 0;
  double worst_mean = 0, worst_std = 0, worst_rel = 0;
  for (std::size_t g = 0; g < kGrpoGroups; ++g) {
    const int n = size(rng);
    std::vector<double> rewards(n);
    const int shape = static_cast<int>(g % 4);
    for (auto& r : rewards) {
      if (shape == 0) r = unit(rng) < 0.5 ? 1.0 : 0.0;
      if (shape == 1) r = unit(rng);
      if (shape == 2) r = 1.0;
      if (shape == 3) r = unit(rng) * 10.0 - 5.0;
    }
    if (shape == 0 && std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) {
      rewards[0] = 1.0 - rewards[0];
    }
    const auto adv = compute_advantages(rewards);
    if (shape == 2) {
      ++degenerate;
      for (double a : adv) c.expect(a == 0.0, "degenerate group gave a non-zero advantage");
    } else {
      ++nondegenerate;
      double mean = 0, var = 0;
      for (double a : adv) mean += a;
      mean /= n;
      for (double a : adv) var += (a - mean) * (a - mean);
      const double sd = std::sqrt(var / n);
      worst_mean = std::max(worst_mean, std::abs(mean));
      worst_std = std::max(worst_std, std::abs(sd - 1.0));
      c.expect(std::abs(mean) <= kMomentTol, "advantage mean off zero");
      c.expect(std::abs(sd - 1.0) <= kMomentTol, "advantage std off one");
    }

    // Objective against the probability-space reference.
    std::vector<TokenRatioSeries> series;
    std::vector<testing::RefSeries> ref;
    for (int i = 0; i < n; ++i) {
      const int len = 1 + static_cast<int>(unit(rng) * 12);
      TokenRatioSeries s;
      testing::RefSeries r;
      for (int t = 0; t < len; ++t) {
        const double lo = -4.0 * unit(rng) - 0.01;
        const double th = lo + (unit(rng) - 0.5) * 0.8;
        const double rf = lo + (unit(rng) - 0.5) * 0.4;
        const bool m = unit(rng) < 0.85;
        s.logp_old.push_back(lo);
        s.logp_theta.push_back(th);
        s.logp_ref.push_back(rf);
        s.mask.push_back(m);
        r.lp_old.push_back(lo);
        r.lp_theta.push_back(th);
        r.lp_ref.push_back(rf);
        r.mask.push_back(m);
      }
      series.push_back(std::move(s));
      ref.push_back(std::move(r));
    }
    for (auto reduction : {TokenReduction::token_mean, TokenReduction::token_sum}) {
      GrpoConfig cfg;
      cfg.reduction = reduction;
      const double ours = grpo_objective(series, adv, cfg);
      const double want = testing::ref_objective(ref, adv, cfg.clip_epsilon, cfg.kl_coef,
                                                 reduction == TokenReduction::token_mean);
      const double rel = std::abs(ours - want) / std::max(std::abs(want), 1e-300);
      worst_rel = std::max(worst_rel, want == 0.0 ? std::abs(ours) : rel);
      c.expect(want == 0.0 ? ours == 0.0 : rel <= kObjectiveRelTol, "objective differs from reference");
    }
  }
  // KL estimator: non-negative everywhere, zero at ratio one.
  std::uniform_real_distribution<double> lp(-30.0, 0.0);
  std::size_t kl_checked = 0;
  for (int i = 0; i < 100000; ++i) {
    const double a = lp(rng), b = lp(rng);
    c.expect(kl_estimate(a, b) >= 0.0, "negative KL estimate");
    c.expect(std::abs(kl_estimate(a, a)) <= kKlZeroTol, "KL at ratio 1 is not zero");
    kl_checked += 2;
  }
  for (double x : {0.0, -1e-300, -1e-12, -0.5, -700.0}) {
    c.expect(std::abs(kl_estimate(x, x)) <= kKlZeroTol, "KL at ratio 1 is not zero");
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%zu non-degenerate groups, max |mean| %.1e, max |std-1| %.1e; %zu degenerate all zero; "
                "objective max rel err %.1e; %zu KL evaluations >= 0",
                nondegenerate, worst_mean, worst_std, degenerate, worst_rel, kl_checked);
  c.summary = buf;
}

// ---------------------------------------------------------------------------
// 3. Clip

void clipping(Check& c) {
  const double a = clipped_surrogate(1.0, 1.0, 0.2);
  const double b = clipped_surrogate(1.5, 1.0, 0.2);
  c.expect(a == 1.0, "clipped_surrogate(1, 1) != 1");
  c.expect(b == 1.2, "clipped_surrogate(1.5, 1) != 1.2");
  std::ostringstream s;
  s.precision(17);
  s << "(rho=1, A=1) -> " << a << "; (rho=1.5, A=1) -> " << b;
  c.summary = s.str();
}

// ---------------------------------------------------------------------------
// 4. End-to-end sim pipeline

void pipeline(Check& c) {
  const auto dir = scratch("pipeline");
  cli::RunOptions o;
  o.log = nullptr;
  o.seed = 7;
  o.config.world.n_entities = 200;
  o.config.synth.n_tasks = 60;
  o.config.synth.planted_answer_leaks = 10;
  o.config.synth.planted_text_answerable = 10;
  o.config.synth.synthesis.mix = {4, 3, 3};

  cli::run_simgen(o, dir);
  const auto world = std::make_shared<const sim::SimWorld>(sim::SimWorld::load(dir / cli::files::kWorld));
  c.expect(world->entities().size() == 200, "world does not have 200 entities");
  cli::run_synth(o, {dir / cli::files::kWorld}, dir);
  const auto records = read_synthesis_records(dir / cli::files::kRecords);

  std::map<Difficulty, std::size_t> levels;
  std::size_t leaks = 0, leaks_rejected = 0, texts = 0, texts_rejected = 0, main = 0;
  std::vector<const SynthesisRecord*> kept;
  for (const auto& r : records) {
    auto rejected_by = [&](FilterCriterion k) {
      for (const auto& v : r.filter_verdicts) {
        if (v.criterion == k && v.rejected) return true;
      }
      return false;
    };
    if (r.plant == std::optional<std::string>("answer_leak")) {
      ++leaks;
      leaks_rejected += !r.kept && rejected_by(FilterCriterion::answer_leak);
    } else if (r.plant == std::optional<std::string>("text_answerable")) {
      ++texts;
      texts_rejected += !r.kept && rejected_by(FilterCriterion::text_only_answerable);
    } else {
      ++main;
      ++levels[r.final_task.difficulty];
      if (r.kept) kept.push_back(&r);
    }
  }
  c.expect(main == 60, "expected 60 synthesized tasks, got " + std::to_string(main));
  c.expect(levels[Difficulty::easy] == 24 && levels[Difficulty::medium] == 18 && levels[Difficulty::hard] == 18,
           "difficulty mix is not 24/18/18");
  c.expect(leaks == 10 && leaks_rejected == 10, "answer-leak plants not all rejected");
  c.expect(texts == 10 && texts_rejected == 10, "text-answerable plants not all rejected");
  c.expect(!kept.empty(), "no task survived filtering");

  // Kept tasks: plan length and execution.
  auto plans = std::make_shared<sim::PlanBook>();
  std::size_t plan_ok = 0, solved = 0;
  for (const auto* r : kept) {
    auto plan = sim::oracle_solve(r->final_task, r, *world);
    const bool len_ok = plan.calls.size() == r->rounds.size() + 2;
    plan_ok += len_ok;
    c.expect(len_ok, "plan length mismatch for " + r->final_task.task_id);
    plans->add(std::move(plan));
  }
  ToolGateway tools(std::make_shared<sim::SimToolBackend>(world));
  sim::OraclePolicy oracle(plans);
  ExactMatchJudge judge;
  std::vector<Trajectory> runs;
  for (const auto* r : kept) {
    LogicalClock clock;
    auto t = run_trajectory(r->final_task, RolloutServices{oracle, tools, prompts()}, RolloutConfig{}, 1, 0, clock);
    const auto j = judge_answer(prompts(), r->final_task.question_text, t.final_answer.value_or(""),
                                r->final_task.gold_answer, judge);
    const bool ok = t.answered() && j.correct && t.tool_call_count() == plans->find(r->final_task.task_id)->calls.size();
    solved += ok;
    c.expect(ok, "plan execution did not reach the gold answer for " + r->final_task.task_id);
    runs.push_back(std::move(t));
  }
  g_corpora.emplace_back("pipeline oracle runs", std::move(runs));
  c.summary = "60 tasks at 24/18/18; leak plants rejected " + std::to_string(leaks_rejected) + "/" +
              std::to_string(leaks) + ", text-answerable plants rejected " + std::to_string(texts_rejected) + "/" +
              std::to_string(texts) + "; kept " + std::to_string(kept.size()) + ", plan length ok " +
              std::to_string(plan_ok) + "/" + std::to_string(kept.size()) + ", plan reaches gold " +
              std::to_string(solved) + "/" + std::to_string(kept.size());
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// 5. Rollout engine

class CountingPolicy final : public PolicyBackend {
 public:
  explicit CountingPolicy(std::vector<std::string> script) : script_(std::move(script)) {}
  std::string respond(const PolicyRequest&) override { return script_.at(std::min(calls++, script_.size() - 1)); }
  std::string identifier() const override { return "counting"; }
  std::size_t calls = 0;

 private:
  std::vector<std::string> script_;
};

void rollout(Check& c) {
  auto f = testing::SimFixture::make(50);
  c.expect(f.tasks.size() == 50, "fixture has " + std::to_string(f.tasks.size()) + " tasks");
  ToolGateway tools(std::make_shared<sim::SimToolBackend>(f.world));
  ExactMatchJudge judge;
  sim::OraclePolicy oracle(f.plans);
  const auto report =
      evaluate("sim", f.tasks, EvalServices{{oracle, tools, prompts()}, judge}, RolloutConfig{}, 1, 5, logical_clocks());
  c.expect(report.accuracy == 1.0, "oracle accuracy below 1.0");
  std::size_t gold = 0;
  for (std::size_t i = 0; i < f.tasks.size(); ++i) gold += answer_matches(report.trajectories[i], f.tasks[i]);
  c.expect(gold == f.tasks.size(), "oracle final answers differ from gold");
  g_corpora.emplace_back("oracle eval", report.trajectories);

  sim::SearchForeverPolicy forever;
  std::vector<Trajectory> never;
  for (std::size_t i = 0; i < 5; ++i) {
    LogicalClock clock;
    never.push_back(run_trajectory(f.tasks[i], RolloutServices{forever, tools, prompts()}, RolloutConfig{}, 3, 0, clock));
    c.expect(never.back().termination == Termination::step_limit, "never-answering policy not stopped by step_limit");
    c.expect(never.back().tool_call_count() == 30, "never-answering policy made " +
                                                       std::to_string(never.back().tool_call_count()) + " tool calls");
  }
  g_corpora.emplace_back("never answering", never);

  const std::string good = render_assistant("look", ToolInvocation{"image_search", Json::object()});
  CountingPolicy first({"The answer is Paris.", good});
  CountingPolicy third({good, good, "<think>t</think><tool_call>{\"name\": 3}</tool_call>", good});
  LogicalClock c1, c2;
  const auto t1 = run_trajectory(f.tasks[0], RolloutServices{first, tools, prompts()}, RolloutConfig{}, 4, 0, c1);
  const auto t3 = run_trajectory(f.tasks[0], RolloutServices{third, tools, prompts()}, RolloutConfig{}, 4, 0, c2);
  c.expect(t1.termination == Termination::format_violation && first.calls == 1 && t1.tool_call_count() == 0,
           "malformed first response did not end the rollout at once");
  c.expect(t3.termination == Termination::format_violation && third.calls == 3 && t3.tool_call_count() == 2,
           "malformed third response did not end the rollout at once");
  g_corpora.emplace_back("format violations", std::vector<Trajectory>{t1, t3});

  c.summary = "oracle accuracy " + format_fixed(report.accuracy, 3) + " on " + std::to_string(f.tasks.size()) +
              " tasks; never-answering stops at " + std::to_string(never.front().tool_call_count()) +
              " tool calls (step_limit); malformed response ends after " + std::to_string(first.calls) + " and " +
              std::to_string(third.calls) + " policy calls with format_violation";
}

// ---------------------------------------------------------------------------
// 6. Rejection and SFT export

void rejection(Check& c) {
  auto f = testing::SimFixture::make(30, 11);
  ToolGateway tools(std::make_shared<sim::SimToolBackend>(f.world));
  sim::NoisyOraclePolicy noisy(f.plans, sim::NoiseMix{});
  ExactMatchJudge judge;
  RolloutConfig rc;
  rc.group_size = 4;
  const auto groups = run_group_batch(f.tasks, RolloutServices{noisy, tools, prompts()}, rc, 1, 9, logical_clocks());
  std::vector<Trajectory> trajs;
  std::vector<const Task*> task_of;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (const auto& t : groups[i].trajectories) {
      trajs.push_back(t);
      task_of.push_back(&f.tasks[i]);
    }
  }
  g_corpora.emplace_back("noisy groups", trajs);
  std::vector<std::optional<Judgment>> judgments;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    judgments.push_back(trajs[i].answered() ? std::optional(judge_answer(prompts(), task_of[i]->question_text,
                                                                         *trajs[i].final_answer,
                                                                         task_of[i]->gold_answer, judge))
                                            : std::nullopt);
  }
  const auto rej = rejection_filter(trajs, judgments);
  std::vector<std::size_t> expect;
  std::size_t answered = 0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    answered += trajs[i].answered();
    if (answer_matches(trajs[i], *task_of[i])) expect.push_back(i);
  }
  c.expect(rej.kept == expect, "kept set differs from answered and correct");
  c.expect(expect.size() > 0 && expect.size() < answered && answered < trajs.size(),
           "noisy corpus does not exercise every rejection path");

  std::size_t assistant_turns = 0, reparsed = 0;
  for (auto i : rej.kept) {
    const auto ex = sft_example_from_json(to_json(build_sft_example(trajs[i], *task_of[i], prompts(), rc.current_date)));
    std::size_t k = 0;
    for (const auto& m : ex.messages) {
      if (m.role != "assistant") continue;
      ++assistant_turns;
      const auto p = parse_response(m.content);
      const auto* pr = std::get_if<ParsedResponse>(&p);
      const bool same = pr && pr->thought == trajs[i].steps[k].thought && pr->payload == trajs[i].steps[k].action;
      reparsed += same;
      c.expect(same, "assistant turn does not re-parse to its step");
      ++k;
    }
  }

  ToolGateway echo(std::make_shared<testing::EchoBackend>());
  testing::ScriptedPolicy scripted(testing::case_responses());
  LogicalClock clock;
  const auto case_t =
      run_trajectory(testing::case_task(), RolloutServices{scripted, echo, prompts()}, RolloutConfig{}, 1, 0, clock);
  g_corpora.emplace_back("case rollout", std::vector<Trajectory>{case_t});
  const auto case_ex = build_sft_example(case_t, testing::case_task(), prompts(), "2025-01-01");
  std::size_t a = 0, tl = 0;
  for (const auto& m : case_ex.messages) {
    a += m.role == "assistant";
    tl += m.role == "tool";
  }
  c.expect(a == 8 && tl == 7, "case trajectory exported " + std::to_string(a) + "/" + std::to_string(tl));
  c.summary = "kept " + std::to_string(rej.kept.size()) + " of " + std::to_string(trajs.size()) + " (" +
              std::to_string(answered) + " answered), equal to answered and correct; " + std::to_string(reparsed) + "/" +
              std::to_string(assistant_turns) + " assistant turns re-parse; case exports " + std::to_string(a) +
              " assistant / " + std::to_string(tl) + " tool turns";
}

// ---------------------------------------------------------------------------
// 7. RL batch

/// Oracle for the first six samples, endless searching for the last two.
class SplitPolicy final : public PolicyBackend {
 public:
  SplitPolicy(PolicyBackend& good, PolicyBackend& bad) : good_(good), bad_(bad) {}
  std::string respond(const PolicyRequest& r) override { return r.sample_index < 6 ? good_.respond(r) : bad_.respond(r); }
  std::string identifier() const override { return "split"; }

 private:
  PolicyBackend& good_;
  PolicyBackend& bad_;
};

void rl_batch(Check& c) {
  auto f = testing::SimFixture::make(3, 5);
  ToolGateway tools(std::make_shared<sim::SimToolBackend>(f.world));
  sim::OraclePolicy oracle(f.plans);
  sim::SearchForeverPolicy forever;
  SplitPolicy split(oracle, forever);
  const std::vector<Task> one{f.tasks.front()};
  auto groups = run_group_batch(one, RolloutServices{split, tools, prompts()}, RolloutConfig{}, 1, 3, logical_clocks());
  RolloutGroup& g = groups.front();
  c.expect(g.trajectories.size() == 8, "group does not have 8 trajectories");
  g_corpora.emplace_back("rl group", g.trajectories);
  ExactMatchJudge judge;
  GrpoConfig cfg;
  judge_group(g, one.front(), prompts(), judge, cfg);
  const auto items = build_rl_batch(groups, cfg, "trajectories.jsonl");
  std::size_t out = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += items[i].in_loss ? 0 : 1;
    const double want = i < 6 ? kAdvOne : kAdvZero;
    c.expect(std::abs(items[i].advantage - want) <= kClosedFormTol, "advantage " + std::to_string(i) + " is " +
                                                                        std::to_string(items[i].advantage));
    c.expect(items[i].in_loss == (i < 6), "in_loss flag wrong for item " + std::to_string(i));
  }
  c.expect(items.size() == 8 && out == 2, "expected 8 items with exactly 2 out of the loss");
  // Over the six valid rewards alone the group would be degenerate.
  const auto valid_only = compute_advantages(std::vector<double>(6, 1.0), cfg);
  c.expect(std::all_of(valid_only.begin(), valid_only.end(), [](double a) { return a == 0.0; }),
           "valid-only advantages unexpectedly non-zero");
  std::ostringstream s;
  s.precision(16);
  s << items.size() << " items, " << out << " with in_loss=false; advantages " << items.front().advantage << " / "
    << items.back().advantage << " match 1/sqrt(3) / -sqrt(3) from all 8 rewards";
  c.summary = s.str();
}

// ---------------------------------------------------------------------------
// 8. Analytics

void analytics(Check& c) {
  const auto h = tool_call_histogram({testing::case_trajectory()});
  c.expect(h.totals.at("image_search") == 1 && h.totals.at("text_search") == 6 && h.totals.at("visit") == 0 &&
               h.total == 7,
           "case histogram is not {1, 6, 0}");
  std::size_t balanced = 0;
  for (const auto& [name, ts] : g_corpora) {
    const auto hh = tool_call_histogram(ts);
    std::size_t sum = 0;
    for (const auto& [tool, n] : hh.totals) sum += n;
    const bool ok = accounting_holds(hh, ts) && sum == count_tool_steps(ts) && hh.total == sum;
    balanced += ok;
    c.expect(ok, "accounting fails on corpus '" + name + "'");
  }
  c.expect(!g_corpora.empty(), "no generated corpora to check");
  c.summary = "case histogram {image_search:" + std::to_string(h.totals.at("image_search")) +
              ", text_search:" + std::to_string(h.totals.at("text_search")) +
              ", visit:" + std::to_string(h.totals.at("visit")) + "}; accounting holds on " +
              std::to_string(balanced) + "/" + std::to_string(g_corpora.size()) + " generated corpora";
}

// ---------------------------------------------------------------------------
// 9. Determinism

bool sh(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()) == 0; }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = text::read_file(e.path());
  return out;
}

void determinism(Check& c, const std::string& cli) {
  c.expect(!cli.empty() && fs::exists(cli), "CLI binary not given or missing");
  if (!c.ok) return;
  std::vector<std::map<std::string, std::string>> snaps;
  for (int run = 0; run < 2; ++run) {
    const auto d = scratch("determinism" + std::to_string(run));
    const std::string g = "'" + cli + "' --backend sim --seed 13 --parallelism 1 ";
    const std::string D = "'" + d.string() + "'";
    const std::vector<std::string> steps = {
        g + "simgen --out " + D,
        g + "synth --world " + D + "/world.json --out " + D,
        g + "rollout --policy noisy --tasks " + D + "/tasks.jsonl --world " + D + "/world.json --records " + D +
            "/synthesis_records.jsonl --out " + D,
        g + "rft --trajectories " + D + "/trajectories.jsonl --tasks " + D + "/tasks.jsonl --out " + D,
        g + "rl-prep --trajectories " + D + "/trajectories.jsonl --tasks " + D + "/tasks.jsonl --out " + D,
        g + "report --trajectories train=" + D + "/trajectories.jsonl --out " + D,
    };
    for (const auto& s : steps) c.expect(sh(s), "command failed: " + s);
    snaps.push_back(snapshot(d));
    fs::remove_all(d);
  }
  std::size_t same = 0, bytes = 0;
  c.expect(snaps[0].size() == snaps[1].size(), "runs produced different file sets");
  for (const auto& [name, body] : snaps[0]) {
    auto it = snaps[1].find(name);
    const bool eq = it != snaps[1].end() && it->second == body;
    same += eq;
    bytes += body.size();
    c.expect(eq, name + " differs between runs");
  }
  c.expect(snaps[0].size() >= 15, "pipeline produced only " + std::to_string(snaps[0].size()) + " files");
  c.summary = std::to_string(same) + "/" + std::to_string(snaps[0].size()) +
              " artifacts byte-identical across two runs (" + std::to_string(bytes) + " bytes)";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  run(1, "grammar conformance", kGrammarSeconds, grammar);
  run(2, "GRPO numerics", kGrpoSeconds, grpo);
  run(3, "clip behavior", 0, clipping);
  run(4, "end-to-end sim pipeline", kPipelineSeconds, pipeline);
  run(5, "rollout engine", kRolloutSeconds, rollout);
  run(6, "rejection and SFT export", 0, rejection);
  run(7, "RL batch rules", 0, rl_batch);
  run(8, "analytics", 0, analytics);
  run(9, "determinism", 0, [&](Check& c) { determinism(c, cli); });
  std::cout << (g_failed == 0 ? "ALL PASS" : std::to_string(g_failed) + " FAILED") << " (9 criteria)" << std::endl;
  return g_failed == 0 ? 0 : 1;
}
