// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/judge.hpp"
#include "deepbrowse/llm.hpp"
#include "deepbrowse/prompts.hpp"
#include "deepbrowse/rng.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse {

struct SeedEntity {
  std::string entity_id;
  std::string label;
  std::size_t sitelinks = 0;
  std::size_t statements = 0;
  std::string page_content;
  bool operator==(const SeedEntity&) const = default;
};

struct QaPair {
  std::string question;
  std::string answer;
  bool operator==(const QaPair&) const = default;
};

struct InjectionRound {
  std::size_t round_index = 0;
  std::string selected_entity;
  std::string parsed_info;
  std::string question_before;
  std::string question_after;
  bool operator==(const InjectionRound&) const = default;
};

enum class FilterCriterion { lvlm_direct_answerable, text_only_answerable, image_too_simple, answer_leak };

constexpr std::string_view to_string(FilterCriterion c) noexcept {
  switch (c) {
    case FilterCriterion::lvlm_direct_answerable: return "lvlm_direct_answerable";
    case FilterCriterion::text_only_answerable: return "text_only_answerable";
    case FilterCriterion::image_too_simple: return "image_too_simple";
    case FilterCriterion::answer_leak: return "answer_leak";
  }
  return "";
}

inline FilterCriterion parse_filter_criterion(std::string_view s) {
  for (auto c : {FilterCriterion::lvlm_direct_answerable, FilterCriterion::text_only_answerable,
                 FilterCriterion::image_too_simple, FilterCriterion::answer_leak}) {
    if (to_string(c) == s) return c;
  }
  throw Error(Errc::schema_version_mismatch, "unknown filter criterion '" + std::string(s) + "'");
}

struct FilterVerdict {
  FilterCriterion criterion;
  bool rejected = false;
  std::string evidence;
  bool indeterminate = false;
  bool operator==(const FilterVerdict&) const = default;
};

struct SynthesisRecord {
  std::string record_id;
  SeedEntity seed;
  QaPair initial;
  std::vector<InjectionRound> rounds;
  std::optional<std::string> image_entity;
  Task final_task;
  std::vector<FilterVerdict> filter_verdicts;
  bool kept = false;
  bool quarantined = false;
  std::optional<std::string> plant;  // "answer_leak" or "text_answerable" for planted negatives
  bool operator==(const SynthesisRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Knowledge base

struct KbPage {
  std::string entity_id;
  std::string label;
  std::string content;
};

/// Entity metadata and page source (Wikidata/Wikipedia dump, or the sim world).
class KbAdapter {
 public:
  virtual ~KbAdapter() = default;
  /// Entities with sitelinks <= max_sitelinks and statements >= min_statements.
  /// Throws Error(kb_unavailable) if the store cannot be queried.
  virtual std::vector<SeedEntity> query_seeds(std::size_t max_sitelinks, std::size_t min_statements,
                                              std::size_t limit) = 0;
  virtual std::optional<KbPage> page(std::string_view entity_label) = 0;
  virtual std::optional<std::string> image_for(std::string_view entity_label) = 0;
  virtual std::string identifier() const = 0;
};

struct DifficultyMix {
  std::size_t easy = 4;
  std::size_t medium = 3;
  std::size_t hard = 3;

  /// Per-level counts for n tasks by largest remainder, ties to the easier level.
  std::vector<std::pair<Difficulty, std::size_t>> counts(std::size_t n) const {
    const std::size_t w[3] = {easy, medium, hard};
    const std::size_t total = easy + medium + hard;
    if (total == 0) throw Error(Errc::bad_config, "difficulty mix has zero weight");
    std::size_t c[3];
    std::size_t assigned = 0;
    std::vector<std::pair<std::size_t, std::size_t>> rem;
    for (int i = 0; i < 3; ++i) {
      c[i] = n * w[i] / total;
      assigned += c[i];
      rem.emplace_back(n * w[i] % total, static_cast<std::size_t>(i));
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++c[rem[k].second];
    return {{Difficulty::easy, c[0]}, {Difficulty::medium, c[1]}, {Difficulty::hard, c[2]}};
  }
};

enum class FilterMode { audit, short_circuit };

struct SynthesisConfig {
  std::size_t max_sitelinks = 10;
  std::size_t min_statements = 20;
  std::size_t retries = 3;
  std::string image_phrase = "shown in the image";
  bool strict_info_containment = true;
  FilterMode filter_mode = FilterMode::audit;
  DifficultyMix mix;
};

struct SynthesisContext {
  const PromptLibrary& prompts;
  LlmBackend& teacher;
  KbAdapter& kb;
  SynthesisConfig config;
};

namespace synth_detail {

inline std::string clean_reply(std::string_view s) {
  std::string_view t = text::trim(s);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) t = text::trim(t.substr(1, t.size() - 2));
  return std::string(t);
}

inline std::optional<QaPair> parse_qa_json(std::string_view reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
  Json j = Json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto q = j.find("question");
  auto a = j.find("answer");
  if (q == j.end() || a == j.end() || !q->is_string()) return std::nullopt;
  std::string answer = a->is_string() ? a->get<std::string>() : (a->is_number() ? a->dump() : "");
  QaPair qa{std::string(text::trim(q->get<std::string>())), std::string(text::trim(answer))};
  if (qa.question.empty() || qa.answer.empty()) return std::nullopt;
  return qa;
}

inline std::string call(SynthesisContext& ctx, PromptKind kind, PromptId id,
                        std::vector<std::pair<std::string, std::string>> fields, std::uint32_t attempt,
                        std::optional<std::string> image = std::nullopt) {
  LlmRequest req;
  req.kind = kind;
  req.attempt = attempt;
  req.image_ref = std::move(image);
  Substitutions subs;
  for (auto& [k, v] : fields) {
    subs.emplace_back("[" + k + "]", v);
    req.fields.emplace(k, v);
  }
  req.prompt = ctx.prompts.render(id, std::move(subs));
  try {
    return ctx.teacher.complete(req);
  } catch (const Error& e) {
    if (e.code() == Errc::backend_failure) throw;
    throw Error(Errc::backend_failure, e.what());
  } catch (const std::exception& e) {
    throw Error(Errc::backend_failure, e.what());
  }
}

}  // namespace synth_detail

// ---------------------------------------------------------------------------
// Operations

inline std::vector<SeedEntity> select_seeds(KbAdapter& kb, std::size_t max_sitelinks, std::size_t min_statements,
                                            std::size_t limit) {
  std::vector<SeedEntity> out;
  for (auto& s : kb.query_seeds(max_sitelinks, min_statements, limit)) {
    if (s.sitelinks <= max_sitelinks && s.statements >= min_statements) out.push_back(std::move(s));
    if (out.size() == limit) break;
  }
  if (out.empty()) {
    throw Error(Errc::no_seeds_found, "no entity with sitelinks <= " + std::to_string(max_sitelinks) +
                                          " and statements >= " + std::to_string(min_statements));
  }
  return out;
}

inline QaPair generate_initial_qa(const SeedEntity& seed, SynthesisContext& ctx) {
  if (text::trim(seed.page_content).empty()) throw Error(Errc::empty_content, "seed " + seed.label + " has no page content");
  for (std::uint32_t attempt = 0; attempt < ctx.config.retries; ++attempt) {
    const auto reply = synth_detail::call(ctx, PromptKind::initial_qa, PromptId::initial_qa,
                                          {{"PAGE CONTENT", seed.page_content}, {"ENTITY", seed.label}}, attempt);
    auto qa = synth_detail::parse_qa_json(reply);
    if (qa && !text::contains_normalized(qa->question, qa->answer)) return *qa;
  }
  throw Error(Errc::llm_parse_failure,
              "initial QA for " + seed.label + " unparseable after " + std::to_string(ctx.config.retries) + " attempts");
}

inline InjectionRound inject_text_round(std::string_view question, std::size_t round_index, SynthesisContext& ctx) {
  if (text::trim(question).empty()) throw Error(Errc::bad_arguments, "cannot inject into an empty question");
  InjectionRound round;
  round.round_index = round_index;
  round.question_before = std::string(question);

  for (std::uint32_t attempt = 0;; ++attempt) {
    if (attempt == ctx.config.retries) {
      throw Error(Errc::entity_not_in_question, "no selected entity occurs in: " + std::string(question));
    }
    auto entity = synth_detail::clean_reply(synth_detail::call(ctx, PromptKind::entity_selection,
                                                               PromptId::entity_selection,
                                                               {{"TEXT", std::string(question)}}, attempt));
    if (!entity.empty() && text::contains_normalized(question, entity)) {
      round.selected_entity = std::move(entity);
      break;
    }
  }

  auto page = ctx.kb.page(round.selected_entity);
  if (!page || text::trim(page->content).empty()) {
    throw Error(Errc::entity_page_missing, "no page for entity " + round.selected_entity);
  }

  for (std::uint32_t attempt = 0;; ++attempt) {
    if (attempt == ctx.config.retries) {
      throw Error(Errc::llm_parse_failure, "no usable information parsed for " + round.selected_entity);
    }
    auto info = synth_detail::clean_reply(synth_detail::call(
        ctx, PromptKind::info_parsing, PromptId::info_parsing,
        {{"TEXT", page->content}, {"ENTITY", round.selected_entity}}, attempt));
    if (!info.empty() && info.find('\n') == std::string::npos) {
      round.parsed_info = std::move(info);
      break;
    }
  }

  for (std::uint32_t attempt = 0;; ++attempt) {
    if (attempt == ctx.config.retries) {
      throw Error(Errc::transform_leaks_entity,
                  "transformed question still names '" + round.selected_entity + "' or drops the injected info");
    }
    auto rewritten = synth_detail::clean_reply(synth_detail::call(
        ctx, PromptKind::text_injection, PromptId::text_injection,
        {{"QUESTION", std::string(question)}, {"ENTITY", round.selected_entity}, {"INFORMATION", round.parsed_info}},
        attempt));
    const bool hides = !rewritten.empty() && !text::contains_normalized(rewritten, round.selected_entity);
    const bool keeps = !ctx.config.strict_info_containment || text::contains_normalized(rewritten, round.parsed_info);
    if (hides && keeps) {
      round.question_after = std::move(rewritten);
      return round;
    }
  }
}

struct ImageInjection {
  std::string question;
  std::string image_ref;
  std::string image_entity;
};

inline ImageInjection inject_image(std::string_view question, SynthesisContext& ctx) {
  if (text::trim(question).empty()) throw Error(Errc::bad_arguments, "cannot inject into an empty question");
  std::string entity;
  std::optional<std::string> image;
  bool any_in_question = false;
  std::vector<std::string> tried;
  for (std::uint32_t attempt = 0; attempt < ctx.config.retries && !image; ++attempt) {
    std::string excluded;
    for (const auto& t : tried) excluded += (excluded.empty() ? "" : "|") + t;
    auto candidate = synth_detail::clean_reply(synth_detail::call(
        ctx, PromptKind::image_entity_selection, PromptId::image_entity_selection,
        {{"TEXT", std::string(question)}, {"EXCLUDE", excluded}}, attempt));
    if (candidate.empty() || !text::contains_normalized(question, candidate)) continue;
    any_in_question = true;
    tried.push_back(candidate);
    image = ctx.kb.image_for(candidate);
    if (image) entity = std::move(candidate);
  }
  if (!any_in_question) {
    throw Error(Errc::critical_entity_unresolvable, "no critical entity found in: " + std::string(question));
  }
  if (!image) throw Error(Errc::no_image_available, "no image for any selected entity");

  for (std::uint32_t attempt = 0; attempt < ctx.config.retries; ++attempt) {
    auto rewritten = synth_detail::clean_reply(synth_detail::call(
        ctx, PromptKind::image_injection, PromptId::image_injection,
        {{"QUESTION", std::string(question)}, {"ENTITY", entity}}, attempt, image));
    if (!rewritten.empty() && !text::contains_normalized(rewritten, entity) &&
        text::contains_normalized(rewritten, ctx.config.image_phrase)) {
      return ImageInjection{std::move(rewritten), *image, entity};
    }
  }
  throw Error(Errc::transform_leaks_entity, "image injection did not hide '" + entity + "'");
}

/// Full chain for one seed. Errors keep their code and name the failing stage.
inline SynthesisRecord synthesize_task(const SeedEntity& seed, Difficulty level, SynthesisContext& ctx,
                                       std::string task_id, std::string record_id) {
  auto staged = [](const std::string& stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.code(), stage + ": " + e.what());
    }
  };
  SynthesisRecord rec;
  rec.record_id = std::move(record_id);
  rec.seed = seed;
  rec.initial = staged("initial_qa", [&] { return generate_initial_qa(seed, ctx); });
  std::string question = rec.initial.question;
  const int rounds = injection_rounds(level);
  for (int r = 0; r < rounds; ++r) {
    auto round = staged("text_injection round " + std::to_string(r + 1),
                        [&] { return inject_text_round(question, static_cast<std::size_t>(r), ctx); });
    question = round.question_after;
    rec.rounds.push_back(std::move(round));
  }
  auto img = staged("image_injection", [&] { return inject_image(question, ctx); });
  rec.image_entity = img.image_entity;
  rec.final_task = Task{std::move(task_id), img.question, img.image_ref, rec.initial.answer, level, rec.record_id,
                        TaskSource::synthesized};
  return rec;
}

// ---------------------------------------------------------------------------
// Filtering

struct FilterBackends {
  LlmBackend& weak_lvlm;
  LlmBackend& weak_llm;
  LlmBackend& image_judge;
  LlmBackend& judge;
};

struct FilterOutcome {
  std::vector<FilterVerdict> verdicts;
  bool kept = false;
  bool quarantined = false;
};

inline FilterOutcome filter_task(const SynthesisRecord& record, FilterBackends backends, const PromptLibrary& prompts,
                                 FilterMode mode = FilterMode::audit) {
  const Task& task = record.final_task;
  auto ask = [&](LlmBackend& backend, PromptKind kind, PromptId id, Substitutions subs,
                 std::optional<std::string> image) {
    LlmRequest req;
    req.kind = kind;
    req.image_ref = std::move(image);
    for (const auto& [k, v] : subs) req.fields.emplace(k.substr(1, k.size() - 2), v);
    req.prompt = prompts.render(id, std::move(subs));
    return backend.complete(req);
  };
  auto answered_correctly = [&](FilterCriterion c, LlmBackend& model, PromptKind kind,
                                std::optional<std::string> image) {
    FilterVerdict v{c, false, "", false};
    const auto reply = ask(model, kind, PromptId::direct_answer, {{"[QUESTION]", task.question_text}}, image);
    const Judgment j = judge_answer(prompts, task.question_text, reply, task.gold_answer, backends.judge);
    if (j.indeterminate) {
      v.indeterminate = true;
      v.evidence = "judge output unparseable for reply: " + reply;
      return v;
    }
    v.rejected = j.correct;
    v.evidence = std::string(j.correct ? "answered correctly: " : "did not answer: ") + std::string(text::trim(reply));
    return v;
  };

  auto evaluate = [&](FilterCriterion c) -> FilterVerdict {
    try {
      switch (c) {
        case FilterCriterion::lvlm_direct_answerable:
          return answered_correctly(c, backends.weak_lvlm, PromptKind::direct_answer, task.image_ref);
        case FilterCriterion::text_only_answerable:
          return answered_correctly(c, backends.weak_llm, PromptKind::text_only_answer, std::nullopt);
        case FilterCriterion::image_too_simple: {
          if (!task.image_ref) return FilterVerdict{c, false, "task has no image", false};
          const auto reply = ask(backends.image_judge, PromptKind::image_evaluation, PromptId::image_evaluation, {},
                                 task.image_ref);
          const auto ws = text::words(reply);
          const std::string word = ws.empty() ? std::string() : ws.front();
          if (word == "yes") return FilterVerdict{c, true, "image judged simple", false};
          if (word == "no") return FilterVerdict{c, false, "image judged complex", false};
          return FilterVerdict{c, false, "unrecognized image verdict: " + reply, true};
        }
        case FilterCriterion::answer_leak: {
          const bool leak = text::contains_normalized(task.question_text, task.gold_answer);
          return FilterVerdict{c, leak, leak ? "answer appears in question" : "answer absent from question", false};
        }
      }
    } catch (const Error& e) {
      return FilterVerdict{c, false, std::string("backend failure: ") + e.what(), true};
    } catch (const std::exception& e) {
      return FilterVerdict{c, false, std::string("backend failure: ") + e.what(), true};
    }
    return FilterVerdict{c, false, "", true};
  };

  std::vector<FilterCriterion> order = {FilterCriterion::lvlm_direct_answerable, FilterCriterion::text_only_answerable,
                                        FilterCriterion::image_too_simple, FilterCriterion::answer_leak};
  if (mode == FilterMode::short_circuit) {
    order = {FilterCriterion::answer_leak, FilterCriterion::lvlm_direct_answerable,
             FilterCriterion::text_only_answerable, FilterCriterion::image_too_simple};
  }
  FilterOutcome out;
  for (auto c : order) {
    out.verdicts.push_back(evaluate(c));
    const auto& v = out.verdicts.back();
    if (v.indeterminate) out.quarantined = true;
    if (mode == FilterMode::short_circuit && (v.rejected || v.indeterminate)) break;
  }
  bool rejected = false;
  for (const auto& v : out.verdicts) rejected = rejected || v.rejected;
  out.kept = !rejected && !out.quarantined;
  return out;
}

inline void apply_filter(SynthesisRecord& rec, const FilterOutcome& f) {
  rec.filter_verdicts = f.verdicts;
  rec.kept = f.kept;
  rec.quarantined = f.quarantined;
}

// ---------------------------------------------------------------------------
// Planted negatives for filter validation

/// Copy of `rec` whose question ends by stating the answer.
inline SynthesisRecord plant_answer_leak(SynthesisRecord rec) {
  rec.record_id += "-leak";
  rec.final_task.task_id += "-leak";
  rec.final_task.provenance = rec.record_id;
  rec.final_task.question_text += " (It is " + rec.final_task.gold_answer + ".)";
  rec.plant = "answer_leak";
  return rec;
}

inline SynthesisRecord mark_text_answerable(SynthesisRecord rec) {
  rec.plant = "text_answerable";
  return rec;
}

// ---------------------------------------------------------------------------
// Datasets

struct SynthesisFailure {
  std::string seed_id;
  Difficulty level;
  std::string code;
  std::string message;
};

struct SynthesisRun {
  std::vector<SynthesisRecord> records;
  std::vector<SynthesisFailure> failures;
  std::vector<std::string> unused_seed_ids;
};

inline std::string format_index(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

/// Synthesizes tasks at the requested per-level counts. Seeds are shuffled
/// with `seed`; a seed that fails is logged and the slot moves on to the next.
inline SynthesisRun synthesize_levels(SynthesisContext& ctx, std::vector<SeedEntity> seeds,
                                      const std::vector<std::pair<Difficulty, std::size_t>>& plan, std::uint64_t seed,
                                      const std::string& id_prefix) {
  Rng rng(seed);
  rng.shuffle(seeds);
  SynthesisRun run;
  std::size_t next = 0;
  std::size_t made = 0;
  for (const auto& [level, count] : plan) {
    for (std::size_t k = 0; k < count; ++k) {
      for (;;) {
        if (next == seeds.size()) {
          throw Error(Errc::insufficient_seeds, "ran out of seeds after " + std::to_string(made) + " tasks");
        }
        const SeedEntity& s = seeds[next++];
        const std::string idx = format_index(made);
        try {
          run.records.push_back(synthesize_task(s, level, ctx, id_prefix + "-" + std::string(to_string(level)) + "-" + idx,
                                                "rec-" + id_prefix + "-" + idx));
          ++made;
          break;
        } catch (const Error& e) {
          if (e.code() == Errc::backend_failure) throw;
          run.failures.push_back({s.entity_id, level, std::string(to_string(e.code())), e.what()});
        }
      }
    }
  }
  for (std::size_t i = next; i < seeds.size(); ++i) run.unused_seed_ids.push_back(seeds[i].entity_id);
  return run;
}

/// Benchmark-level tasks from seeds outside the training set; keeps only
/// tasks that pass every filter.
inline SynthesisRun build_benchmark(SynthesisContext& ctx, FilterBackends filters, std::size_t n_tasks,
                                    const std::set<std::string>& training_seed_ids, std::uint64_t seed) {
  auto seeds = select_seeds(ctx.kb, ctx.config.max_sitelinks, ctx.config.min_statements, SIZE_MAX);
  std::vector<SeedEntity> eligible;
  for (auto& s : seeds) {
    if (!training_seed_ids.contains(s.entity_id)) eligible.push_back(std::move(s));
  }
  Rng rng(seed);
  rng.shuffle(eligible);
  SynthesisRun run;
  std::size_t made = 0;
  for (std::size_t i = 0; i < eligible.size() && run.records.size() < n_tasks; ++i) {
    const auto& s = eligible[i];
    const std::string idx = format_index(made);
    try {
      auto rec = synthesize_task(s, Difficulty::benchmark, ctx, "bench-" + idx, "rec-bench-" + idx);
      ++made;
      apply_filter(rec, filter_task(rec, filters, ctx.prompts, ctx.config.filter_mode));
      if (rec.kept) {
        run.records.push_back(std::move(rec));
      } else {
        run.failures.push_back({s.entity_id, Difficulty::benchmark, "Filtered", "rejected by filters"});
      }
    } catch (const Error& e) {
      if (e.code() == Errc::backend_failure) throw;
      run.failures.push_back({s.entity_id, Difficulty::benchmark, std::string(to_string(e.code())), e.what()});
    }
  }
  if (run.records.size() < n_tasks) {
    throw Error(Errc::insufficient_seeds, "benchmark reached " + std::to_string(run.records.size()) + " of " +
                                              std::to_string(n_tasks) + " tasks");
  }
  return run;
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const FilterVerdict& v) {
  return Json{{"criterion", to_string(v.criterion)},
              {"rejected", v.rejected},
              {"evidence", v.evidence},
              {"indeterminate", v.indeterminate}};
}

inline Json to_json(const SynthesisRecord& r) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["record_id"] = r.record_id;
  j["seed"] = Json{{"entity_id", r.seed.entity_id},
                   {"label", r.seed.label},
                   {"sitelinks", r.seed.sitelinks},
                   {"statements", r.seed.statements},
                   {"page_content", r.seed.page_content}};
  j["initial"] = Json{{"question", r.initial.question}, {"answer", r.initial.answer}};
  Json rounds = Json::array();
  for (const auto& x : r.rounds) {
    rounds.push_back(Json{{"round_index", x.round_index},
                          {"selected_entity", x.selected_entity},
                          {"parsed_info", x.parsed_info},
                          {"question_before", x.question_before},
                          {"question_after", x.question_after}});
  }
  j["rounds"] = std::move(rounds);
  j["image_entity"] = r.image_entity ? Json(*r.image_entity) : Json(nullptr);
  j["final_task"] = to_json(r.final_task);
  Json verdicts = Json::array();
  for (const auto& v : r.filter_verdicts) verdicts.push_back(to_json(v));
  j["filter_verdicts"] = std::move(verdicts);
  j["kept"] = r.kept;
  j["quarantined"] = r.quarantined;
  if (r.plant) j["plant"] = *r.plant;
  return j;
}

inline SynthesisRecord synthesis_record_from_json(const Json& j) {
  detail::check_schema_version(j);
  SynthesisRecord r;
  try {
    r.record_id = j.at("record_id").get<std::string>();
    const auto& s = j.at("seed");
    r.seed = SeedEntity{s.at("entity_id").get<std::string>(), s.at("label").get<std::string>(),
                        s.at("sitelinks").get<std::size_t>(), s.at("statements").get<std::size_t>(),
                        s.at("page_content").get<std::string>()};
    r.initial = QaPair{j.at("initial").at("question").get<std::string>(), j.at("initial").at("answer").get<std::string>()};
    for (const auto& x : j.at("rounds")) {
      r.rounds.push_back({x.at("round_index").get<std::size_t>(), x.at("selected_entity").get<std::string>(),
                          x.at("parsed_info").get<std::string>(), x.at("question_before").get<std::string>(),
                          x.at("question_after").get<std::string>()});
    }
    if (!j.at("image_entity").is_null()) r.image_entity = j.at("image_entity").get<std::string>();
    r.final_task = task_from_json(j.at("final_task"));
    for (const auto& v : j.at("filter_verdicts")) {
      r.filter_verdicts.push_back({parse_filter_criterion(v.at("criterion").get<std::string>()),
                                   v.at("rejected").get<bool>(), v.at("evidence").get<std::string>(),
                                   v.at("indeterminate").get<bool>()});
    }
    r.kept = j.at("kept").get<bool>();
    r.quarantined = j.at("quarantined").get<bool>();
    if (auto it = j.find("plant"); it != j.end()) r.plant = it->get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_line, std::string("synthesis record: ") + e.what());
  }
  return r;
}

inline std::vector<SynthesisRecord> read_synthesis_records(const std::filesystem::path& path) {
  std::vector<SynthesisRecord> out;
  for (const auto& line : read_jsonl_lines(path)) {
    try {
      out.push_back(synthesis_record_from_json(detail::parse_line(line.text)));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace deepbrowse
