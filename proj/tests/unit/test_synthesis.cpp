// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include "deepbrowse/sim_models.hpp"
#include "deepbrowse/synthesis.hpp"

using namespace deepbrowse;
using namespace deepbrowse::sim;

namespace {

std::shared_ptr<const SimWorld> world() {
  static const auto w = std::make_shared<const SimWorld>(SimWorld::generate(WorldParams{}));
  return w;
}

const PromptLibrary& prompts() {
  static const PromptLibrary lib = PromptLibrary::load();
  return lib;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected deepbrowse::Error");
  return Errc::io_error;
}

struct Harness {
  SimKbAdapter kb{world()};
  ScriptedTeacher teacher{world()};
  SynthesisContext ctx{prompts(), teacher, kb, SynthesisConfig{}};
};

/// Replies from a fixed script regardless of the request.
class ScriptLlm final : public LlmBackend {
 public:
  explicit ScriptLlm(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const LlmRequest&) override { return replies_.at(std::min(n_++, replies_.size() - 1)); }
  std::string identifier() const override { return "script"; }
  std::size_t calls() const { return n_; }

 private:
  std::vector<std::string> replies_;
  std::size_t n_ = 0;
};

class EmptyKb final : public KbAdapter {
 public:
  std::vector<SeedEntity> query_seeds(std::size_t, std::size_t, std::size_t) override { return {}; }
  std::optional<KbPage> page(std::string_view) override { return std::nullopt; }
  std::optional<std::string> image_for(std::string_view) override { return std::nullopt; }
  std::string identifier() const override { return "empty"; }
};

}  // namespace

TEST_CASE("seed selection honours the rarity gate", "[synthesis]") {
  Harness h;
  auto seeds = select_seeds(h.kb, 10, 20, SIZE_MAX);
  CHECK(seeds.size() == 100);
  for (const auto& s : seeds) {
    CHECK(s.sitelinks <= 10);
    CHECK(s.statements >= 20);
  }
  CHECK(select_seeds(h.kb, 10, 20, 3).size() == 3);
  CHECK(code_of([&] { select_seeds(h.kb, 0, 1000000000, 10); }) == Errc::no_seeds_found);
  EmptyKb empty;
  CHECK(code_of([&] { select_seeds(empty, 10, 20, 10); }) == Errc::no_seeds_found);
}

TEST_CASE("initial QA pairs never contain their answer", "[synthesis]") {
  Harness h;
  for (const auto& s : select_seeds(h.kb, 10, 20, 20)) {
    const auto qa = generate_initial_qa(s, h.ctx);
    CHECK_FALSE(text::contains_normalized(qa.question, qa.answer));
    CHECK(text::contains_normalized(qa.question, s.label));
  }
  SeedEntity blank{"E1", "Blank", 0, 20, "   "};
  CHECK(code_of([&] { generate_initial_qa(blank, h.ctx); }) == Errc::empty_content);
}

TEST_CASE("initial QA retries exactly R times on unparseable replies", "[synthesis]") {
  Harness h;
  ScriptLlm bad({"not json at all"});
  SynthesisContext ctx{prompts(), bad, h.kb, SynthesisConfig{}};
  const auto seed = select_seeds(h.kb, 10, 20, 1).front();
  CHECK(code_of([&] { generate_initial_qa(seed, ctx); }) == Errc::llm_parse_failure);
  CHECK(bad.calls() == 3);

  ScriptLlm late({"nope", "{\"question\": \"Who?\", \"answer\": \"x1\"}"});
  SynthesisContext ctx2{prompts(), late, h.kb, SynthesisConfig{}};
  CHECK(generate_initial_qa(seed, ctx2).answer == "x1");
}

TEST_CASE("a text injection hides the entity and keeps the new information", "[synthesis]") {
  Harness h;
  std::size_t checked = 0;
  for (const auto& s : select_seeds(h.kb, 10, 20, 40)) {
    const auto qa = generate_initial_qa(s, h.ctx);
    InjectionRound r;
    try {
      r = inject_text_round(qa.question, 0, h.ctx);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::llm_parse_failure);  // seed without an imaged successor
      continue;
    }
    ++checked;
    CHECK(r.selected_entity == s.label);
    CHECK_FALSE(text::contains_normalized(r.question_after, r.selected_entity));
    CHECK(text::contains_normalized(r.question_after, r.parsed_info));
    CHECK(r.question_before == qa.question);
  }
  CHECK(checked > 20);
}

TEST_CASE("an injection that leaks the entity fails after R attempts", "[synthesis]") {
  Harness h;
  const auto seed = select_seeds(h.kb, 10, 20, 1).front();
  ScriptLlm leaky({seed.label, "some fact", "What is it about " + seed.label + "?"});
  SynthesisContext ctx{prompts(), leaky, h.kb, SynthesisConfig{}};
  CHECK(code_of([&] { inject_text_round("What is the height of " + seed.label + "?", 0, ctx); }) ==
        Errc::transform_leaks_entity);

  ScriptLlm absent({"Somebody Else"});
  SynthesisContext ctx2{prompts(), absent, h.kb, SynthesisConfig{}};
  CHECK(code_of([&] { inject_text_round("What is the height of " + seed.label + "?", 0, ctx2); }) ==
        Errc::entity_not_in_question);
  CHECK(absent.calls() == 3);
}

TEST_CASE("synthesized tasks carry the chain and an image", "[synthesis]") {
  Harness h;
  std::size_t made = 0;
  for (const auto& s : select_seeds(h.kb, 10, 20, SIZE_MAX)) {
    try {
      auto rec = synthesize_task(s, Difficulty::medium, h.ctx, "t" + std::to_string(made), "r" + std::to_string(made));
      ++made;
      CHECK(rec.rounds.size() == 3);
      REQUIRE(rec.final_task.image_ref.has_value());
      CHECK(rec.final_task.provenance == rec.record_id);
      CHECK(rec.final_task.gold_answer == rec.initial.answer);
      CHECK(text::contains_normalized(rec.final_task.question_text, "shown in the image"));
      CHECK_FALSE(text::contains_normalized(rec.final_task.question_text, rec.final_task.gold_answer));
      for (const auto& r : rec.rounds) CHECK_FALSE(text::contains_normalized(rec.final_task.question_text, r.selected_entity));
      CHECK(synthesis_record_from_json(to_json(rec)) == rec);
      const auto plan = oracle_solve(rec.final_task, &rec, *world());
      CHECK(plan.calls.size() == rec.rounds.size() + 2);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::llm_parse_failure);
    }
  }
  CHECK(made >= 10);
}

TEST_CASE("difficulty mix splits 60 tasks 24/18/18", "[synthesis]") {
  const auto c = DifficultyMix{}.counts(60);
  CHECK(c[0].second == 24);
  CHECK(c[1].second == 18);
  CHECK(c[2].second == 18);
  const auto d = DifficultyMix{}.counts(7);
  CHECK(d[0].second + d[1].second + d[2].second == 7);
}

TEST_CASE("filters catch planted negatives and quarantine on backend failure", "[synthesis]") {
  Harness h;
  WeakModel lvlm("weak-lvlm"), llm("weak-llm");
  SimImageJudge image_judge(world());
  ExactMatchJudge judge;
  FilterBackends fb{lvlm, llm, image_judge, judge};
  SynthesisRecord rec;
  for (const auto& s : select_seeds(h.kb, 10, 20, SIZE_MAX)) {
    try {
      rec = synthesize_task(s, Difficulty::easy, h.ctx, "t", "r");
    } catch (const Error&) {
      continue;
    }
    if (!world()->find_by_image(*rec.final_task.image_ref)->simple_image) break;
  }
  auto clean = filter_task(rec, fb, prompts());
  CHECK(clean.kept);
  CHECK(clean.verdicts.size() == 4);

  auto leak = plant_answer_leak(rec);
  auto out = filter_task(leak, fb, prompts());
  CHECK_FALSE(out.kept);
  CHECK(out.verdicts[3].criterion == FilterCriterion::answer_leak);
  CHECK(out.verdicts[3].rejected);

  llm.remember(rec.final_task.question_text, rec.final_task.gold_answer);
  out = filter_task(rec, fb, prompts());
  CHECK_FALSE(out.kept);
  CHECK(out.verdicts[1].rejected);

  lvlm.set_failing(true);
  out = filter_task(rec, fb, prompts());
  CHECK(out.quarantined);
  CHECK_FALSE(out.kept);
  CHECK(out.verdicts[0].indeterminate);

  out = filter_task(leak, fb, prompts(), FilterMode::short_circuit);
  REQUIRE(out.verdicts.size() == 1);
  CHECK(out.verdicts[0].rejected);
}
