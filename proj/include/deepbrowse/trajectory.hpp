// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/text.hpp"

namespace deepbrowse {

/// Insertion-ordered JSON keeps every persisted line byte-stable.
using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class Difficulty { easy, medium, hard, benchmark };
enum class TaskSource { synthesized, external_benchmark };

constexpr std::string_view to_string(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
    case Difficulty::benchmark: return "benchmark";
  }
  return "easy";
}

constexpr std::string_view to_string(TaskSource s) noexcept {
  return s == TaskSource::synthesized ? "synthesized" : "external_benchmark";
}

inline std::optional<Difficulty> parse_difficulty(std::string_view s) {
  for (auto d : {Difficulty::easy, Difficulty::medium, Difficulty::hard, Difficulty::benchmark}) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

inline std::optional<TaskSource> parse_task_source(std::string_view s) {
  if (s == "synthesized") return TaskSource::synthesized;
  if (s == "external_benchmark") return TaskSource::external_benchmark;
  return std::nullopt;
}

/// Number of text-injection rounds for a difficulty level.
constexpr int injection_rounds(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::easy: return 1;
    case Difficulty::medium: return 3;
    case Difficulty::hard: return 5;
    case Difficulty::benchmark: return 10;
  }
  return 1;
}

struct Task {
  std::string task_id;
  std::string question_text;
  std::optional<std::string> image_ref;
  std::string gold_answer;
  Difficulty difficulty = Difficulty::easy;
  std::optional<std::string> provenance;  // synthesis record id
  TaskSource source = TaskSource::synthesized;

  bool multimodal() const noexcept { return image_ref.has_value(); }
  bool operator==(const Task&) const = default;
};

struct ToolInvocation {
  std::string name;
  Json arguments = Json::object();
  bool operator==(const ToolInvocation&) const = default;
};

struct FinalAnswer {
  std::string text;
  bool operator==(const FinalAnswer&) const = default;
};

using AgentAction = std::variant<ToolInvocation, FinalAnswer>;

inline bool is_tool_call(const AgentAction& a) noexcept { return std::holds_alternative<ToolInvocation>(a); }

struct StepRecord {
  std::size_t index = 0;
  std::string thought;
  AgentAction action;
  std::optional<std::string> observation;
  bool operator==(const StepRecord&) const = default;
};

enum class Termination { answered, format_violation, step_limit, timeout, context_overflow, tool_error };

constexpr std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::answered: return "answered";
    case Termination::format_violation: return "format_violation";
    case Termination::step_limit: return "step_limit";
    case Termination::timeout: return "timeout";
    case Termination::context_overflow: return "context_overflow";
    case Termination::tool_error: return "tool_error";
  }
  return "answered";
}

inline constexpr Termination kAllTerminations[] = {Termination::answered,         Termination::format_violation,
                                                   Termination::step_limit,       Termination::timeout,
                                                   Termination::context_overflow, Termination::tool_error};

inline std::optional<Termination> parse_termination(std::string_view s) {
  for (auto t : kAllTerminations) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

struct TokenAccounting {
  std::size_t prompt_tokens = 0;
  std::size_t response_tokens = 0;
  bool operator==(const TokenAccounting&) const = default;
};

/// A finalized ReAct episode. Only TrajectoryBuilder::finalize and
/// deserialize_trajectory produce these, so the termination invariants hold.
struct Trajectory {
  std::string task_id;
  std::vector<StepRecord> steps;
  Termination termination = Termination::answered;
  std::optional<std::string> final_answer;
  double wall_time = 0.0;
  std::optional<TokenAccounting> token_accounting;
  std::optional<std::string> termination_detail;

  std::size_t tool_call_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : steps) n += is_tool_call(s.action) ? 1 : 0;
    return n;
  }
  bool answered() const noexcept { return termination == Termination::answered; }
  bool operator==(const Trajectory&) const = default;
};

/// Checks every structural invariant of a finalized trajectory; throws
/// MalformedLine describing the first one that fails.
inline void validate_trajectory(const Trajectory& t) {
  auto fail = [](const std::string& why) { throw Error(Errc::malformed_line, why); };
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (s.index != i) fail("step indices are not contiguous from 0");
    const bool tool = is_tool_call(s.action);
    if (tool != s.observation.has_value()) fail("observation presence does not match action kind");
    if (!tool && i + 1 != t.steps.size()) fail("final answer is not the last step");
  }
  const bool last_is_answer = !t.steps.empty() && !is_tool_call(t.steps.back().action);
  const bool answered = t.termination == Termination::answered;
  if (answered != t.final_answer.has_value() || answered != last_is_answer) {
    fail("termination, final_answer and last step disagree");
  }
  if (answered && std::get<FinalAnswer>(t.steps.back().action).text != *t.final_answer) {
    fail("final_answer differs from the answer step");
  }
}

/// Single-owner builder for one in-flight trajectory.
class TrajectoryBuilder {
 public:
  explicit TrajectoryBuilder(std::string task_id) : task_id_(std::move(task_id)) {}

  TrajectoryBuilder& append_step(std::string thought, AgentAction action, std::optional<std::string> observation) {
    if (finalized_ || has_answer()) throw Error(Errc::already_finalized, "trajectory already ended");
    if (is_tool_call(action) != observation.has_value()) {
      throw Error(Errc::observation_mismatch,
                  is_tool_call(action) ? "tool call requires an observation" : "final answer takes no observation");
    }
    steps_.push_back(StepRecord{steps_.size(), std::move(thought), std::move(action), std::move(observation)});
    return *this;
  }

  Trajectory finalize(Termination termination, std::optional<std::string> final_answer, double wall_time = 0.0,
                      std::optional<TokenAccounting> tokens = std::nullopt,
                      std::optional<std::string> detail = std::nullopt) {
    if (finalized_) throw Error(Errc::already_finalized, "finalize called twice");
    if (termination == Termination::answered) {
      if (!final_answer) throw Error(Errc::answer_missing, "answered termination without final answer");
      if (!has_answer() || std::get<FinalAnswer>(steps_.back().action).text != *final_answer) {
        throw Error(Errc::answer_missing, "answered termination requires a matching final answer step");
      }
    } else if (final_answer || has_answer()) {
      throw Error(Errc::answer_on_non_answered,
                  std::string("termination ") + std::string(to_string(termination)) + " cannot carry an answer");
    }
    finalized_ = true;
    Trajectory t{task_id_, std::move(steps_), termination, std::move(final_answer), wall_time, tokens,
                 std::move(detail)};
    steps_.clear();
    return t;
  }

  const std::vector<StepRecord>& steps() const noexcept { return steps_; }
  std::size_t tool_call_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : steps_) n += is_tool_call(s.action) ? 1 : 0;
    return n;
  }
  bool finalized() const noexcept { return finalized_; }

 private:
  bool has_answer() const noexcept { return !steps_.empty() && !is_tool_call(steps_.back().action); }

  std::string task_id_;
  std::vector<StepRecord> steps_;
  bool finalized_ = false;
};

// ---------------------------------------------------------------------------
// JSON encoding

namespace detail {

template <typename T>
T require(const Json& j, const char* key, Errc code = Errc::malformed_line) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(code, std::string("missing field '") + key + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(code, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key, Errc code = Errc::malformed_line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(code, std::string("field '") + key + "' has the wrong type");
  }
}

inline Json parse_line(std::string_view line, Errc code = Errc::malformed_line) {
  Json j = Json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(code, "line is not a JSON object");
  return j;
}

inline void check_schema_version(const Json& j) {
  if (auto v = j.find("schema_version"); v != j.end() && *v != kSchemaVersion) {
    throw Error(Errc::schema_version_mismatch, "unsupported schema_version " + v->dump());
  }
}

}  // namespace detail

inline Json action_to_json(const AgentAction& action) {
  Json j = Json::object();
  if (const auto* call = std::get_if<ToolInvocation>(&action)) {
    j["type"] = "tool_call";
    j["name"] = call->name;
    j["arguments"] = call->arguments;
  } else {
    j["type"] = "answer";
    j["text"] = std::get<FinalAnswer>(action).text;
  }
  return j;
}

inline AgentAction action_from_json(const Json& j) {
  const auto type = detail::require<std::string>(j, "type");
  if (type == "tool_call") {
    ToolInvocation call{detail::require<std::string>(j, "name"), Json::object()};
    if (auto it = j.find("arguments"); it != j.end()) {
      if (!it->is_object()) throw Error(Errc::malformed_line, "tool arguments must be an object");
      call.arguments = *it;
    }
    return call;
  }
  if (type == "answer") return FinalAnswer{detail::require<std::string>(j, "text")};
  throw Error(Errc::schema_version_mismatch, "unknown action type '" + type + "'");
}

inline Json to_json(const Trajectory& t) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["task_id"] = t.task_id;
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    Json step = Json::object();
    step["index"] = s.index;
    step["thought"] = s.thought;
    step["action"] = action_to_json(s.action);
    if (s.observation) step["observation"] = *s.observation;
    steps.push_back(std::move(step));
  }
  j["steps"] = std::move(steps);
  j["termination"] = to_string(t.termination);
  if (t.final_answer) j["final_answer"] = *t.final_answer;
  if (t.termination_detail) j["termination_detail"] = *t.termination_detail;
  j["wall_time"] = t.wall_time;
  if (t.token_accounting) {
    j["token_accounting"] = Json{{"prompt_tokens", t.token_accounting->prompt_tokens},
                                 {"response_tokens", t.token_accounting->response_tokens}};
  }
  return j;
}

inline Trajectory trajectory_from_json(const Json& j) {
  detail::check_schema_version(j);
  Trajectory t;
  t.task_id = detail::require<std::string>(j, "task_id");
  const auto termination = detail::require<std::string>(j, "termination");
  auto parsed = parse_termination(termination);
  if (!parsed) throw Error(Errc::schema_version_mismatch, "unknown termination '" + termination + "'");
  t.termination = *parsed;
  auto steps = j.find("steps");
  if (steps == j.end() || !steps->is_array()) throw Error(Errc::malformed_line, "missing steps array");
  for (const auto& s : *steps) {
    if (!s.is_object()) throw Error(Errc::malformed_line, "step is not an object");
    StepRecord rec;
    rec.index = detail::require<std::size_t>(s, "index");
    rec.thought = detail::require<std::string>(s, "thought");
    auto action = s.find("action");
    if (action == s.end() || !action->is_object()) throw Error(Errc::malformed_line, "step without action");
    rec.action = action_from_json(*action);
    rec.observation = detail::optional_field<std::string>(s, "observation");
    t.steps.push_back(std::move(rec));
  }
  t.final_answer = detail::optional_field<std::string>(j, "final_answer");
  t.termination_detail = detail::optional_field<std::string>(j, "termination_detail");
  t.wall_time = detail::require<double>(j, "wall_time");
  if (auto tok = j.find("token_accounting"); tok != j.end() && !tok->is_null()) {
    t.token_accounting = TokenAccounting{detail::require<std::size_t>(*tok, "prompt_tokens"),
                                         detail::require<std::size_t>(*tok, "response_tokens")};
  }
  validate_trajectory(t);
  return t;
}

/// Compact one-line encoding; invalid UTF-8 bytes become U+FFFD instead of
/// aborting the write.
inline std::string dump_line(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

inline std::string serialize(const Trajectory& t) { return dump_line(to_json(t)); }

inline Trajectory deserialize_trajectory(std::string_view line) {
  return trajectory_from_json(detail::parse_line(line));
}

inline Json to_json(const Task& t) {
  Json j = Json::object();
  j["task_id"] = t.task_id;
  j["question_text"] = t.question_text;
  if (t.image_ref) j["image_ref"] = *t.image_ref;
  j["gold_answer"] = t.gold_answer;
  j["difficulty"] = to_string(t.difficulty);
  j["source"] = to_string(t.source);
  if (t.provenance) j["provenance"] = *t.provenance;
  return j;
}

inline Task task_from_json(const Json& j, Errc code = Errc::malformed_line) {
  detail::check_schema_version(j);
  Task t;
  t.task_id = detail::require<std::string>(j, "task_id", code);
  t.question_text = detail::require<std::string>(j, "question_text", code);
  t.image_ref = detail::optional_field<std::string>(j, "image_ref", code);
  t.gold_answer = detail::require<std::string>(j, "gold_answer", code);
  const auto difficulty = detail::optional_field<std::string>(j, "difficulty", code).value_or("benchmark");
  auto d = parse_difficulty(difficulty);
  if (!d) throw Error(Errc::schema_version_mismatch, "unknown difficulty '" + difficulty + "'");
  t.difficulty = *d;
  const auto source = detail::optional_field<std::string>(j, "source", code).value_or("external_benchmark");
  auto s = parse_task_source(source);
  if (!s) throw Error(Errc::schema_version_mismatch, "unknown source '" + source + "'");
  t.source = *s;
  t.provenance = detail::optional_field<std::string>(j, "provenance", code);
  if (t.source == TaskSource::synthesized && t.gold_answer.empty()) {
    throw Error(code, "synthesized task " + t.task_id + " has an empty gold answer");
  }
  return t;
}

inline std::string serialize(const Task& t) { return dump_line(to_json(t)); }

inline Task deserialize_task(std::string_view line) { return task_from_json(detail::parse_line(line)); }

// ---------------------------------------------------------------------------
// JSONL files

struct JsonlLine {
  std::size_t number = 0;  // 1-based
  std::string text;
};

/// Non-blank lines of a JSONL file with their 1-based line numbers.
inline std::vector<JsonlLine> read_jsonl_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::vector<JsonlLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    out.push_back({n, line});
  }
  return out;
}

/// Streams JSON objects one per line; the file is truncated on open.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(Errc::io_error, "cannot write " + path.string());
  }

  void write(const Json& j) { out_ << dump_line(j) << '\n'; }
  void write_line(std::string_view line) { out_ << line << '\n'; }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

template <typename T, typename Encode>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items, Encode encode) {
  JsonlWriter w(path);
  for (const auto& item : items) w.write(encode(item));
}

inline std::vector<Task> read_tasks(const std::filesystem::path& path) {
  std::vector<Task> tasks;
  for (const auto& line : read_jsonl_lines(path)) {
    try {
      tasks.push_back(deserialize_task(line.text));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return tasks;
}

inline std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
  std::vector<Trajectory> out;
  for (const auto& line : read_jsonl_lines(path)) {
    try {
      out.push_back(deserialize_trajectory(line.text));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace deepbrowse
