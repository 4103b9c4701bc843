// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/judge.hpp"
#include "deepbrowse/react.hpp"
#include "deepbrowse/rng.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse {

struct BenchmarkSpec {
  std::string name;
  std::filesystem::path path;
  bool image_only_filter = false;
  std::optional<std::size_t> sample_limit;
  std::uint64_t seed = 0;
};

/// Loads a task file, applies the image filter and the seeded sample limit.
/// Sampled tasks keep their file order.
inline std::vector<Task> load_benchmark(const BenchmarkSpec& spec) {
  std::vector<Task> tasks;
  try {
    tasks = read_tasks(spec.path);
  } catch (const Error& e) {
    if (e.code() == Errc::io_error) throw;
    throw Error(Errc::schema_error, e.what());
  }
  if (spec.image_only_filter) {
    std::erase_if(tasks, [](const Task& t) { return !t.multimodal(); });
  }
  if (spec.sample_limit && *spec.sample_limit < tasks.size()) {
    std::vector<std::size_t> idx(tasks.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(idx);
    idx.resize(*spec.sample_limit);
    std::sort(idx.begin(), idx.end());
    std::vector<Task> sampled;
    for (auto i : idx) sampled.push_back(std::move(tasks[i]));
    tasks = std::move(sampled);
  }
  if (tasks.empty()) throw Error(Errc::empty_after_filter, "benchmark " + spec.name + " has no tasks after filtering");
  return tasks;
}

// ---------------------------------------------------------------------------
// Tool-call analytics

struct ToolHistogram {
  std::vector<std::string> task_ids;
  std::vector<std::map<std::string, std::size_t>> per_trajectory;
  std::map<std::string, std::size_t> totals;
  std::size_t total = 0;

  double mean(const std::string& tool) const {
    if (per_trajectory.empty()) return 0.0;
    auto it = totals.find(tool);
    return it == totals.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(per_trajectory.size());
  }

  /// tool -> (calls in one trajectory -> number of trajectories)
  std::map<std::string, std::map<std::size_t, std::size_t>> distribution() const {
    std::map<std::string, std::map<std::size_t, std::size_t>> d;
    for (const auto& [tool, _] : totals) {
      for (const auto& row : per_trajectory) ++d[tool][row.at(tool)];
    }
    return d;
  }
};

inline ToolHistogram tool_call_histogram(const std::vector<Trajectory>& trajectories) {
  ToolHistogram h;
  for (auto name : kToolNames) h.totals[std::string(name)] = 0;
  for (const auto& t : trajectories) {
    for (const auto& s : t.steps) {
      if (const auto* call = std::get_if<ToolInvocation>(&s.action)) h.totals.try_emplace(call->name, 0);
    }
  }
  for (const auto& t : trajectories) {
    std::map<std::string, std::size_t> row;
    for (const auto& [tool, _] : h.totals) row[tool] = 0;
    for (const auto& s : t.steps) {
      if (const auto* call = std::get_if<ToolInvocation>(&s.action)) {
        ++row[call->name];
        ++h.totals[call->name];
        ++h.total;
      }
    }
    h.task_ids.push_back(t.task_id);
    h.per_trajectory.push_back(std::move(row));
  }
  return h;
}

/// Sum of the histogram equals the number of tool steps.
inline bool accounting_holds(const ToolHistogram& h, const std::vector<Trajectory>& trajectories) {
  std::size_t steps = 0;
  for (const auto& t : trajectories) steps += t.tool_call_count();
  std::size_t sum = 0;
  for (const auto& [_, n] : h.totals) sum += n;
  return sum == steps && h.total == steps;
}

inline std::string histogram_csv(const ToolHistogram& h) {
  std::string out = "tool,calls_per_trajectory,trajectories\n";
  for (const auto& [tool, dist] : h.distribution()) {
    for (const auto& [calls, n] : dist) out += tool + "," + std::to_string(calls) + "," + std::to_string(n) + "\n";
  }
  return out;
}

inline std::string per_trajectory_csv(const ToolHistogram& h) {
  std::string out = "task_id";
  for (const auto& [tool, _] : h.totals) out += "," + tool;
  out += ",total\n";
  for (std::size_t i = 0; i < h.per_trajectory.size(); ++i) {
    out += h.task_ids[i];
    std::size_t sum = 0;
    for (const auto& [_, n] : h.per_trajectory[i]) {
      out += "," + std::to_string(n);
      sum += n;
    }
    out += "," + std::to_string(sum) + "\n";
  }
  return out;
}

inline Json to_json(const ToolHistogram& h) {
  Json j = Json::object();
  j["totals"] = Json::object();
  for (const auto& [tool, n] : h.totals) j["totals"][tool] = n;
  j["total"] = h.total;
  j["trajectories"] = h.per_trajectory.size();
  j["mean_per_trajectory"] = Json::object();
  for (const auto& [tool, _] : h.totals) j["mean_per_trajectory"][tool] = h.mean(tool);
  return j;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalRecord {
  std::string task_id;
  Termination termination = Termination::answered;
  std::optional<std::string> final_answer;
  std::optional<Judgment> judgment;
  bool correct = false;
  std::size_t tool_calls = 0;
};

struct EvalReport {
  std::string benchmark;
  std::size_t n_evaluated = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  std::map<std::string, std::size_t> termination_counts;
  ToolHistogram histogram;
  std::vector<EvalRecord> records;
  std::vector<Trajectory> trajectories;
};

struct EvalServices {
  RolloutServices rollout;
  LlmBackend& judge;
};

/// One rollout per task, judged against the gold answer. Per-task failures
/// become terminations or indeterminate judgments.
inline EvalReport evaluate(const std::string& benchmark, const std::vector<Task>& tasks, EvalServices services,
                           RolloutConfig config, std::size_t parallelism, std::uint64_t seed,
                           ClockFactory clocks = steady_clocks()) {
  config.group_size = 1;
  auto groups = run_group_batch(tasks, services.rollout, config, parallelism, seed, std::move(clocks));
  EvalReport report;
  report.benchmark = benchmark;
  for (auto t : kAllTerminations) report.termination_counts[std::string(to_string(t))] = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    Trajectory& traj = groups[i].trajectories.front();
    EvalRecord rec;
    rec.task_id = tasks[i].task_id;
    rec.termination = traj.termination;
    rec.final_answer = traj.final_answer;
    rec.tool_calls = traj.tool_call_count();
    if (traj.answered()) {
      try {
        rec.judgment = judge_answer(services.rollout.prompts, tasks[i].question_text, *traj.final_answer,
                                    tasks[i].gold_answer, services.judge);
      } catch (const Error& e) {
        Judgment j;
        j.indeterminate = true;
        j.reasoning = std::string("judge failed: ") + e.what();
        rec.judgment = j;
      }
      rec.correct = rec.judgment->correct && !rec.judgment->indeterminate;
    }
    ++report.termination_counts[std::string(to_string(traj.termination))];
    report.n_correct += rec.correct ? 1 : 0;
    report.records.push_back(std::move(rec));
    report.trajectories.push_back(std::move(traj));
  }
  report.n_evaluated = tasks.size();
  report.accuracy = tasks.empty() ? 0.0 : static_cast<double>(report.n_correct) / static_cast<double>(tasks.size());
  report.histogram = tool_call_histogram(report.trajectories);
  return report;
}

inline Json to_json(const EvalRecord& r) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["task_id"] = r.task_id;
  j["termination"] = to_string(r.termination);
  j["final_answer"] = r.final_answer ? Json(*r.final_answer) : Json(nullptr);
  j["judgment"] = r.judgment ? to_json(*r.judgment) : Json(nullptr);
  j["correct"] = r.correct;
  j["tool_calls"] = r.tool_calls;
  return j;
}

inline Json summary_json(const EvalReport& r) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["benchmark"] = r.benchmark;
  j["n_evaluated"] = r.n_evaluated;
  j["n_correct"] = r.n_correct;
  j["accuracy"] = r.accuracy;
  j["termination_counts"] = Json::object();
  for (const auto& [k, v] : r.termination_counts) j["termination_counts"][k] = v;
  j["tool_calls"] = to_json(r.histogram);
  return j;
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Markdown table comparing evaluation summaries, one row per stage.
inline std::string comparison_markdown(const std::vector<std::pair<std::string, Json>>& summaries) {
  std::string out = "| Run | Benchmark | Tasks | Accuracy (%) | answered | step_limit | format_violation | other | "
                    "image_search/traj | text_search/traj | visit/traj |\n";
  out += "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& [label, s] : summaries) {
    const auto& tc = s.at("termination_counts");
    std::size_t other = 0;
    for (const auto& [k, v] : tc.items()) {
      if (k != "answered" && k != "step_limit" && k != "format_violation") other += v.get<std::size_t>();
    }
    const auto& means = s.at("tool_calls").at("mean_per_trajectory");
    auto mean_of = [&](const char* tool) { return means.contains(tool) ? means.at(tool).get<double>() : 0.0; };
    out += "| " + label + " | " + s.at("benchmark").get<std::string>() + " | " +
           std::to_string(s.at("n_evaluated").get<std::size_t>()) + " | " +
           format_fixed(100.0 * s.at("accuracy").get<double>(), 1) + " | " +
           std::to_string(tc.value("answered", std::size_t{0})) + " | " +
           std::to_string(tc.value("step_limit", std::size_t{0})) + " | " +
           std::to_string(tc.value("format_violation", std::size_t{0})) + " | " + std::to_string(other) + " | " +
           format_fixed(mean_of("image_search"), 2) + " | " + format_fixed(mean_of("text_search"), 2) + " | " +
           format_fixed(mean_of("visit"), 2) + " |\n";
  }
  return out;
}

inline std::string report_markdown(const EvalReport& r) {
  std::string out = "# Evaluation: " + r.benchmark + "\n\n";
  out += comparison_markdown({{"eval", summary_json(r)}});
  out += "\n## Tool calls\n\n| Tool | Total | Mean per trajectory |\n|---|---:|---:|\n";
  for (const auto& [tool, n] : r.histogram.totals) {
    out += "| " + tool + " | " + std::to_string(n) + " | " + format_fixed(r.histogram.mean(tool), 2) + " |\n";
  }
  return out;
}

}  // namespace deepbrowse
