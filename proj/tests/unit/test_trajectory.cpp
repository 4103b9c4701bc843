// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "deepbrowse/trajectory.hpp"
#include "support/generators.hpp"

using namespace deepbrowse;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected deepbrowse::Error");
  return Errc::io_error;
}

}  // namespace

TEST_CASE("append_step assigns contiguous indices", "[trajectory]") {
  TrajectoryBuilder b("t1");
  b.append_step("look at the image", ToolInvocation{"image_search", Json::object()}, "<tool_response>\nx\n</tool_response>");
  REQUIRE(b.steps().size() == 1);
  CHECK(b.steps()[0].index == 0);
  b.append_step("search", ToolInvocation{"text_search", Json{{"query", "q"}}}, "obs");
  b.append_step("search again", ToolInvocation{"text_search", Json{{"query", "r"}}}, "obs");
  b.append_step("done", FinalAnswer{"Titanic"}, std::nullopt);
  REQUIRE(b.steps().size() == 4);
  CHECK(b.steps()[3].index == 3);
  CHECK(std::get<FinalAnswer>(b.steps()[3].action).text == "Titanic");
}

TEST_CASE("append_step rejects observation mismatches", "[trajectory]") {
  TrajectoryBuilder b("t1");
  CHECK(code_of([&] { b.append_step("t", FinalAnswer{"x"}, std::string("x")); }) == Errc::observation_mismatch);
  CHECK(code_of([&] { b.append_step("t", ToolInvocation{"visit", Json::object()}, std::nullopt); }) ==
        Errc::observation_mismatch);
  CHECK(b.steps().empty());
}

TEST_CASE("nothing may follow a final answer", "[trajectory]") {
  TrajectoryBuilder b("t1");
  b.append_step("t", FinalAnswer{"x"}, std::nullopt);
  CHECK(code_of([&] { b.append_step("t", FinalAnswer{"y"}, std::nullopt); }) == Errc::already_finalized);
  auto t = b.finalize(Termination::answered, "x");
  CHECK(code_of([&] { b.append_step("t", ToolInvocation{"visit", {}}, "o"); }) == Errc::already_finalized);
  CHECK(code_of([&] { b.finalize(Termination::answered, "x"); }) == Errc::already_finalized);
  CHECK(t.final_answer == "x");
}

TEST_CASE("finalize enforces the termination invariants", "[trajectory]") {
  SECTION("answered with matching answer") {
    TrajectoryBuilder b("easy-1");
    b.append_step("t", ToolInvocation{"image_search", Json::object()}, "o");
    b.append_step("t", FinalAnswer{"Fayette County"}, std::nullopt);
    auto t = b.finalize(Termination::answered, "Fayette County", 1.5);
    CHECK(t.answered());
    CHECK(t.tool_call_count() == 1);
    CHECK_NOTHROW(validate_trajectory(t));
  }
  SECTION("step_limit without answer") {
    TrajectoryBuilder b("t");
    b.append_step("t", ToolInvocation{"visit", Json::object()}, "o");
    auto t = b.finalize(Termination::step_limit, std::nullopt);
    CHECK_FALSE(t.final_answer);
    CHECK_NOTHROW(validate_trajectory(t));
  }
  SECTION("answered without answer") {
    TrajectoryBuilder b("t");
    b.append_step("t", FinalAnswer{"x"}, std::nullopt);
    CHECK(code_of([&] { b.finalize(Termination::answered, std::nullopt); }) == Errc::answer_missing);
  }
  SECTION("answered but last step is a tool call") {
    TrajectoryBuilder b("t");
    b.append_step("t", ToolInvocation{"visit", Json::object()}, "o");
    CHECK(code_of([&] { b.finalize(Termination::answered, "x"); }) == Errc::answer_missing);
  }
  SECTION("answer carried by a non-answered record") {
    TrajectoryBuilder b("t");
    CHECK(code_of([&] { b.finalize(Termination::timeout, "x"); }) == Errc::answer_on_non_answered);
    TrajectoryBuilder c("t");
    c.append_step("t", FinalAnswer{"x"}, std::nullopt);
    CHECK(code_of([&] { c.finalize(Termination::tool_error, std::nullopt); }) == Errc::answer_on_non_answered);
  }
}

TEST_CASE("random trajectories round-trip byte-stably", "[trajectory][property]") {
  std::mt19937_64 rng(20260101);
  for (int i = 0; i < 1000; ++i) {
    const Trajectory t = testing::random_trajectory(rng);
    const std::string line = serialize(t);
    const Trajectory back = deserialize_trajectory(line);
    REQUIRE(back == t);
    REQUIRE(serialize(back) == line);
    REQUIRE(line.find('\n') == std::string::npos);
  }
}

TEST_CASE("field order is fixed", "[trajectory]") {
  TrajectoryBuilder b("t9");
  b.append_step("think", FinalAnswer{"a"}, std::nullopt);
  auto t = b.finalize(Termination::answered, "a", 0.25, TokenAccounting{3, 4});
  CHECK(serialize(t) ==
        R"({"schema_version":1,"task_id":"t9","steps":[{"index":0,"thought":"think","action":{"type":"answer","text":"a"}}],)"
        R"("termination":"answered","final_answer":"a","wall_time":0.25,"token_accounting":{"prompt_tokens":3,"response_tokens":4}})");
}

TEST_CASE("deserialize rejects bad lines", "[trajectory]") {
  const std::string ok = R"({"schema_version":1,"task_id":"t","steps":[],"termination":"timeout","wall_time":1.0})";
  CHECK_NOTHROW(deserialize_trajectory(ok));
  CHECK(code_of([] { deserialize_trajectory("not json"); }) == Errc::malformed_line);
  CHECK(code_of([] {
          deserialize_trajectory(R"({"schema_version":1,"task_id":"t","steps":[],"termination":"exploded","wall_time":1})");
        }) == Errc::schema_version_mismatch);
  CHECK(code_of([] {
          deserialize_trajectory(R"({"schema_version":7,"task_id":"t","steps":[],"termination":"timeout","wall_time":1})");
        }) == Errc::schema_version_mismatch);
  CHECK(code_of([] {
          deserialize_trajectory(R"({"schema_version":1,"task_id":"t","steps":[],"termination":"answered","wall_time":1})");
        }) == Errc::malformed_line);
  CHECK(code_of([] {
          deserialize_trajectory(
              R"({"schema_version":1,"task_id":"t","steps":[{"index":1,"thought":"","action":{"type":"tool_call","name":"visit","arguments":{}},"observation":"o"}],"termination":"timeout","wall_time":1})");
        }) == Errc::malformed_line);
  CHECK(code_of([] {
          deserialize_trajectory(
              R"({"schema_version":1,"task_id":"t","steps":[{"index":0,"thought":"","action":{"type":"tool_call","name":"visit","arguments":{}}}],"termination":"timeout","wall_time":1})");
        }) == Errc::malformed_line);
}

TEST_CASE("tasks round-trip and validate", "[trajectory]") {
  Task t{"q-1", "What is shown?", std::string("https://sim.web/images/x.jpg"), "A1", Difficulty::hard,
         std::string("rec-1"), TaskSource::synthesized};
  CHECK(deserialize_task(serialize(t)) == t);
  CHECK(t.multimodal());
  CHECK(code_of([] {
          deserialize_task(R"({"task_id":"x","question_text":"q","gold_answer":"","difficulty":"easy","source":"synthesized"})");
        }) == Errc::malformed_line);
  CHECK(code_of([] {
          deserialize_task(R"({"task_id":"x","question_text":"q","gold_answer":"a","difficulty":"extreme","source":"synthesized"})");
        }) == Errc::schema_version_mismatch);
}

TEST_CASE("JSONL files skip blank lines and report line numbers", "[trajectory]") {
  const auto dir = std::filesystem::temp_directory_path() / "deepbrowse_traj_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "tasks.jsonl";
  text::write_file(path,
                   R"({"task_id":"a","question_text":"q","gold_answer":"g"})"
                   "\n\n"
                   R"({"task_id":"b","question_text":"q","gold_answer":"g","difficulty":"easy","source":"synthesized"})"
                   "\n");
  auto tasks = read_tasks(path);
  REQUIRE(tasks.size() == 2);
  CHECK(tasks[0].difficulty == Difficulty::benchmark);
  CHECK(tasks[0].source == TaskSource::external_benchmark);
  text::write_file(path, "{\"task_id\":\"a\",\"question_text\":\"q\",\"gold_answer\":\"g\"}\n{oops\n");
  try {
    read_tasks(path);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}
