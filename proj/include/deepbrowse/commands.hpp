// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Pipeline stages behind the command line. Each stage reads its inputs,
// writes fixed-name artifacts into an output directory together with a run
// manifest, and returns a short JSON summary.

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "deepbrowse/config.hpp"
#include "deepbrowse/eval.hpp"
#include "deepbrowse/judge.hpp"
#include "deepbrowse/kb_dump.hpp"
#include "deepbrowse/live_backends.hpp"
#include "deepbrowse/react.hpp"
#include "deepbrowse/sim_models.hpp"
#include "deepbrowse/sim_web.hpp"
#include "deepbrowse/synthesis.hpp"
#include "deepbrowse/training.hpp"

namespace deepbrowse::cli {

namespace files {
inline constexpr const char* kWorld = "world.json";
inline constexpr const char* kRecords = "synthesis_records.jsonl";
inline constexpr const char* kFilterReport = "filter_report.jsonl";
inline constexpr const char* kTasks = "tasks.jsonl";
inline constexpr const char* kFailures = "synthesis_failures.jsonl";
inline constexpr const char* kTrajectories = "trajectories.jsonl";
inline constexpr const char* kJudgments = "judgments.jsonl";
inline constexpr const char* kSft = "sft_dataset.jsonl";
inline constexpr const char* kRlJudgments = "rl_judgments.jsonl";
inline constexpr const char* kRlBatch = "rl_batch.jsonl";
inline constexpr const char* kEvalRecords = "eval_records.jsonl";
inline constexpr const char* kEvalTrajectories = "eval_trajectories.jsonl";
inline constexpr const char* kEvalSummary = "eval_summary.json";
inline constexpr const char* kEvalReport = "eval_report.md";
inline constexpr const char* kReport = "report.md";
}  // namespace files

using HttpFactory = std::function<std::shared_ptr<live::HttpClient>()>;

struct RunOptions {
  Config config;
  BackendKind backend = BackendKind::simulated;
  std::optional<std::uint64_t> seed;
  std::size_t parallelism = 1;
  HttpFactory http;
  std::ostream* log = &std::cerr;

  std::uint64_t run_seed() const { return seed.value_or(1); }
};

namespace detail {

inline void note(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << '\n';
}

inline std::shared_ptr<live::HttpClient> http(const RunOptions& o) {
  if (!o.http) throw Error(Errc::bad_config, "live backend needs an HTTP transport");
  auto h = o.http();
  if (!h) throw Error(Errc::bad_config, "HTTP transport factory returned nothing");
  return h;
}

inline std::shared_ptr<live::ChatModel> chat(const RunOptions& o, const std::string& model, const char* role) {
  if (model.empty()) throw Error(Errc::bad_config, std::string("live.") + role + " is not set");
  return std::make_shared<live::ChatModel>(http(o),
                                           live::ChatEndpoint{o.config.live.llm_base_url, model, o.config.live.llm_api_key});
}

inline std::shared_ptr<const sim::SimWorld> load_world(const std::optional<std::filesystem::path>& path) {
  if (!path) throw Error(Errc::bad_config, "the sim backend needs --world");
  return std::make_shared<const sim::SimWorld>(sim::SimWorld::load(*path));
}

inline Json input_hashes(const std::vector<std::filesystem::path>& inputs) {
  Json j = Json::object();
  for (const auto& p : inputs) j[p.filename().string()] = text::sha256_hex(text::read_file(p));
  return j;
}

inline void write_manifest(const std::filesystem::path& out_dir, const std::string& stage, const RunOptions& o,
                           const PromptLibrary* prompts, Json backends, std::uint64_t seed,
                           const std::vector<std::filesystem::path>& inputs) {
  Json m = make_manifest({stage, o.config.to_json(), prompts, std::move(backends), seed, o.parallelism});
  m["backend"] = to_string(o.backend);
  m["inputs"] = input_hashes(inputs);
  text::write_file(out_dir / (stage + "_manifest.json"), m.dump(2) + "\n");
}

inline ClockFactory clocks_for(const RunOptions& o) {
  return o.backend == BackendKind::live ? steady_clocks() : logical_clocks();
}

inline std::map<std::string, Task> index_tasks(const std::vector<Task>& tasks) {
  std::map<std::string, Task> out;
  for (const auto& t : tasks) out.emplace(t.task_id, t);
  return out;
}

inline const Task& task_for(const std::map<std::string, Task>& tasks, const std::string& id) {
  auto it = tasks.find(id);
  if (it == tasks.end()) throw Error(Errc::bad_arguments, "trajectory names unknown task " + id);
  return it->second;
}

struct NumberedTrajectory {
  std::size_t line = 0;
  Trajectory trajectory;
};

inline std::vector<NumberedTrajectory> read_numbered(const std::filesystem::path& path) {
  std::vector<NumberedTrajectory> out;
  for (const auto& line : read_jsonl_lines(path)) {
    try {
      out.push_back({line.number, deserialize_trajectory(line.text)});
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Shared backends

/// Tool gateway for the selected backend.
inline std::shared_ptr<ToolGateway> make_tools(const RunOptions& o, const PromptLibrary& prompts,
                                               std::shared_ptr<const sim::SimWorld> world) {
  GatewayOptions gopts{o.config.visit_summary_cap};
  std::shared_ptr<ToolCache> cache;
  if (o.config.tool_cache != CacheMode::off && o.backend != BackendKind::recorded) {
    cache = std::make_shared<ToolCache>(o.config.tool_cache, o.config.tool_cache_dir);
  }
  switch (o.backend) {
    case BackendKind::simulated:
      if (!world) throw Error(Errc::bad_config, "the sim backend needs --world");
      return std::make_shared<ToolGateway>(std::make_shared<sim::SimToolBackend>(world), gopts, cache);
    case BackendKind::recorded:
      if (o.config.tool_cache_dir.empty()) throw Error(Errc::bad_config, "recorded backend needs tools.cache_dir");
      return std::make_shared<ToolGateway>(std::make_shared<ReplayBackend>(o.config.tool_cache_dir), gopts);
    case BackendKind::live: {
      const auto& l = o.config.live;
      if (l.search_keys.empty()) throw Error(Errc::bad_config, "DEEPBROWSE_SEARCH_KEYS is not set");
      if (l.vision_keys.empty()) throw Error(Errc::bad_config, "DEEPBROWSE_VISION_KEYS is not set");
      std::shared_ptr<LlmBackend> summarizer = detail::chat(o, l.summarizer_model, "summarizer_model");
      live::WebToolsConfig wc;
      wc.search_engine_id = l.search_engine_id;
      wc.reader_key = l.reader_key;
      auto backend = std::make_shared<live::WebToolBackend>(
          detail::http(o), wc, std::make_shared<KeyPool>(l.search_keys, l.search_daily_budget),
          std::make_shared<KeyPool>(l.vision_keys, l.vision_daily_budget), summarizer, prompts);
      return std::make_shared<ToolGateway>(backend, gopts, cache);
    }
  }
  throw Error(Errc::bad_config, "unsupported backend");
}

/// Oracle plans for every task that has a synthesis record.
inline std::shared_ptr<sim::PlanBook> make_plans(const std::vector<Task>& tasks,
                                                 const std::vector<SynthesisRecord>& records,
                                                 const sim::SimWorld& world) {
  std::map<std::string, const SynthesisRecord*> by_id;
  for (const auto& r : records) by_id[r.record_id] = &r;
  auto plans = std::make_shared<sim::PlanBook>();
  for (const auto& t : tasks) {
    const SynthesisRecord* rec = nullptr;
    if (t.provenance) {
      auto it = by_id.find(*t.provenance);
      if (it != by_id.end()) rec = it->second;
    }
    plans->add(sim::oracle_solve(t, rec, world));
  }
  return plans;
}

inline std::shared_ptr<PolicyBackend> make_policy(const RunOptions& o, const std::vector<Task>& tasks,
                                                  const std::optional<std::filesystem::path>& records_path,
                                                  const std::shared_ptr<const sim::SimWorld>& world) {
  const auto& kind = o.config.policy;
  if (kind == "live") return detail::chat(o, o.config.live.policy_model, "policy_model");
  if (kind == "unknown") return std::make_shared<sim::UnknownPolicy>();
  if (kind == "never_answer") return std::make_shared<sim::SearchForeverPolicy>();
  if (!records_path) throw Error(Errc::bad_config, "policy '" + kind + "' needs --records");
  if (!world) throw Error(Errc::bad_config, "policy '" + kind + "' needs --world");
  auto plans = make_plans(tasks, read_synthesis_records(*records_path), *world);
  if (kind == "oracle") return std::make_shared<sim::OraclePolicy>(plans);
  return std::make_shared<sim::NoisyOraclePolicy>(plans, o.config.noise);
}

inline std::shared_ptr<LlmBackend> make_judge(const RunOptions& o) {
  if (o.backend == BackendKind::live) return detail::chat(o, o.config.live.judge_model, "judge_model");
  return std::make_shared<ExactMatchJudge>();
}

// ---------------------------------------------------------------------------
// simgen

inline Json run_simgen(const RunOptions& o, const std::filesystem::path& out_dir) {
  sim::WorldParams p = o.config.world;
  if (o.seed) p.seed = *o.seed;
  const auto world = sim::SimWorld::generate(p);
  std::filesystem::create_directories(out_dir);
  world.save(out_dir / files::kWorld);
  detail::write_manifest(out_dir, "simgen", o, nullptr, Json{{"world", "sim"}}, p.seed, {});
  std::size_t seeds = 0;
  for (const auto& e : world.entities()) {
    seeds += world.passes_gate(e, o.config.synth.synthesis.max_sitelinks, o.config.synth.synthesis.min_statements);
  }
  return Json{{"entities", world.entities().size()}, {"seed_eligible", seeds}, {"world_seed", p.seed}};
}

// ---------------------------------------------------------------------------
// synth

struct SynthInputs {
  std::optional<std::filesystem::path> world;
};

inline Json filter_report_line(const SynthesisRecord& r) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["record_id"] = r.record_id;
  j["task_id"] = r.final_task.task_id;
  j["plant"] = r.plant ? Json(*r.plant) : Json(nullptr);
  j["kept"] = r.kept;
  j["quarantined"] = r.quarantined;
  Json v = Json::array();
  for (const auto& x : r.filter_verdicts) v.push_back(to_json(x));
  j["verdicts"] = std::move(v);
  return j;
}

inline Json run_synth(const RunOptions& o, const SynthInputs& in, const std::filesystem::path& out_dir) {
  const auto prompts = PromptLibrary::load(o.config.prompts_dir);
  const auto& sc = o.config.synth;
  const std::uint64_t seed = o.run_seed();

  std::shared_ptr<const sim::SimWorld> world;
  std::unique_ptr<KbAdapter> kb;
  std::shared_ptr<LlmBackend> teacher, weak_lvlm, weak_llm, image_judge, judge;
  std::shared_ptr<sim::WeakModel> sim_weak_llm;
  if (o.backend == BackendKind::live) {
    const auto& l = o.config.live;
    if (l.kb_seeds_path.empty()) throw Error(Errc::bad_config, "live synthesis needs live.kb_seeds_path");
    kb = std::make_unique<JsonlKbAdapter>(l.kb_seeds_path);
    teacher = detail::chat(o, l.teacher_model, "teacher_model");
    weak_lvlm = detail::chat(o, l.weak_lvlm_model, "weak_lvlm_model");
    weak_llm = detail::chat(o, l.weak_llm_model, "weak_llm_model");
    image_judge = detail::chat(o, l.teacher_model, "teacher_model");
    judge = detail::chat(o, l.judge_model, "judge_model");
  } else {
    world = detail::load_world(in.world);
    kb = std::make_unique<sim::SimKbAdapter>(world);
    teacher = std::make_shared<sim::ScriptedTeacher>(world, sim::TeacherFaults{sc.teacher_garbage_rate, seed});
    weak_lvlm = std::make_shared<sim::WeakModel>("sim-weak-lvlm");
    sim_weak_llm = std::make_shared<sim::WeakModel>("sim-weak-llm");
    weak_llm = sim_weak_llm;
    image_judge = std::make_shared<sim::SimImageJudge>(world);
    judge = std::make_shared<ExactMatchJudge>();
  }

  SynthesisContext ctx{prompts, *teacher, *kb, sc.synthesis};
  auto seeds = select_seeds(*kb, sc.synthesis.max_sitelinks, sc.synthesis.min_statements, SIZE_MAX);
  detail::note(o, "synth: " + std::to_string(seeds.size()) + " eligible seeds");
  auto run = synthesize_levels(ctx, seeds, sc.synthesis.mix.counts(sc.n_tasks), seed, "syn");
  std::vector<SynthesisRecord> records = std::move(run.records);
  std::vector<SynthesisFailure> failures = std::move(run.failures);

  // Planted negatives come from seeds the main run never touched.
  std::size_t text_plants = sc.planted_text_answerable;
  if (text_plants && !sim_weak_llm) {
    detail::note(o, "synth: text-answerable plants need the sim weak model; skipping them");
    text_plants = 0;
  }
  const std::size_t n_plants = sc.planted_answer_leaks + text_plants;
  if (n_plants) {
    std::set<std::string> unused(run.unused_seed_ids.begin(), run.unused_seed_ids.end());
    std::vector<SeedEntity> rest;
    for (const auto& s : seeds) {
      if (unused.contains(s.entity_id)) rest.push_back(s);
    }
    auto planted = synthesize_levels(ctx, rest, sc.synthesis.mix.counts(n_plants), seed + 1, "plant");
    for (auto& f : planted.failures) failures.push_back(std::move(f));
    for (std::size_t i = 0; i < planted.records.size(); ++i) {
      if (i < sc.planted_answer_leaks) {
        records.push_back(plant_answer_leak(std::move(planted.records[i])));
      } else {
        auto rec = mark_text_answerable(std::move(planted.records[i]));
        sim_weak_llm->remember(rec.final_task.question_text, rec.final_task.gold_answer);
        records.push_back(std::move(rec));
      }
    }
  }

  const FilterBackends fb{*weak_lvlm, *weak_llm, *image_judge, *judge};
  std::size_t kept = 0, quarantined = 0, plants_rejected = 0, plants = 0;
  for (auto& r : records) {
    apply_filter(r, filter_task(r, fb, prompts, sc.synthesis.filter_mode));
    if (r.plant) {
      ++plants;
      plants_rejected += r.kept ? 0 : 1;
    } else {
      kept += r.kept ? 1 : 0;
    }
    quarantined += r.quarantined ? 1 : 0;
  }

  std::filesystem::create_directories(out_dir);
  write_jsonl(out_dir / files::kRecords, records, [](const SynthesisRecord& r) { return to_json(r); });
  write_jsonl(out_dir / files::kFilterReport, records, filter_report_line);
  {
    JsonlWriter w(out_dir / files::kTasks);
    for (const auto& r : records) {
      if (r.kept && !r.plant) w.write(to_json(r.final_task));
    }
  }
  write_jsonl(out_dir / files::kFailures, failures, [](const SynthesisFailure& f) {
    return Json{{"schema_version", kSchemaVersion},
                {"seed_id", f.seed_id},
                {"level", to_string(f.level)},
                {"code", f.code},
                {"message", f.message}};
  });
  std::vector<std::filesystem::path> inputs;
  if (in.world) inputs.push_back(*in.world);
  detail::write_manifest(out_dir, "synth", o, &prompts,
                         Json{{"kb", kb->identifier()},
                              {"teacher", teacher->identifier()},
                              {"weak_lvlm", weak_lvlm->identifier()},
                              {"weak_llm", weak_llm->identifier()},
                              {"image_judge", image_judge->identifier()},
                              {"judge", judge->identifier()}},
                         seed, inputs);
  return Json{{"synthesized", sc.n_tasks}, {"kept", kept},         {"quarantined", quarantined},
              {"planted", plants},         {"planted_rejected", plants_rejected}, {"failures", failures.size()}};
}

// ---------------------------------------------------------------------------
// rollout

struct RolloutInputs {
  std::filesystem::path tasks;
  std::optional<std::filesystem::path> world;
  std::optional<std::filesystem::path> records;
};

inline Json run_rollout(const RunOptions& o, const RolloutInputs& in, const std::filesystem::path& out_dir) {
  const auto prompts = PromptLibrary::load(o.config.prompts_dir);
  const auto tasks = read_tasks(in.tasks);
  std::shared_ptr<const sim::SimWorld> world;
  if (in.world) world = detail::load_world(in.world);
  auto tools = make_tools(o, prompts, world);
  auto policy = make_policy(o, tasks, in.records, world);

  std::filesystem::create_directories(out_dir);
  JsonlWriter w(out_dir / files::kTrajectories);
  std::map<std::string, std::size_t> terminations;
  std::size_t n = 0;
  run_group_batch(tasks, RolloutServices{*policy, *tools, prompts}, o.config.rollout, o.parallelism, o.run_seed(),
                  detail::clocks_for(o), [&](const RolloutGroup& g) {
                    for (const auto& t : g.trajectories) {
                      w.write_line(serialize(t));
                      ++terminations[std::string(to_string(t.termination))];
                      ++n;
                    }
                    w.flush();
                  });
  w.flush();
  std::vector<std::filesystem::path> inputs{in.tasks};
  if (in.world) inputs.push_back(*in.world);
  if (in.records) inputs.push_back(*in.records);
  detail::write_manifest(out_dir, "rollout", o, &prompts,
                         Json{{"policy", policy->identifier()}, {"tools", tools->identifier()}}, o.run_seed(), inputs);
  Json term = Json::object();
  for (const auto& [k, v] : terminations) term[k] = v;
  return Json{{"tasks", tasks.size()}, {"trajectories", n}, {"terminations", term}};
}

// ---------------------------------------------------------------------------
// rft

struct TrainingInputs {
  std::filesystem::path trajectories;
  std::filesystem::path tasks;
};

inline Judgment judge_or_indeterminate(const PromptLibrary& prompts, const Task& task, const std::string& answer,
                                       LlmBackend& judge) {
  try {
    return judge_answer(prompts, task.question_text, answer, task.gold_answer, judge);
  } catch (const Error& e) {
    Judgment j;
    j.indeterminate = true;
    j.reasoning = std::string("judge failed: ") + e.what();
    return j;
  }
}

inline Json run_rft(const RunOptions& o, const TrainingInputs& in, const std::filesystem::path& out_dir) {
  const auto prompts = PromptLibrary::load(o.config.prompts_dir);
  const auto tasks = detail::index_tasks(read_tasks(in.tasks));
  const auto numbered = detail::read_numbered(in.trajectories);
  auto judge = make_judge(o);
  const std::string ref_file = in.trajectories.filename().string();

  std::vector<Trajectory> trajs;
  std::vector<std::optional<Judgment>> judgments;
  for (const auto& nt : numbered) {
    const Task& task = detail::task_for(tasks, nt.trajectory.task_id);
    trajs.push_back(nt.trajectory);
    judgments.push_back(nt.trajectory.answered()
                            ? std::optional(judge_or_indeterminate(prompts, task, *nt.trajectory.final_answer, *judge))
                            : std::nullopt);
  }
  const auto rej = rejection_filter(trajs, judgments);
  std::vector<bool> kept(trajs.size(), false);
  for (auto i : rej.kept) kept[i] = true;

  std::filesystem::create_directories(out_dir);
  {
    JsonlWriter w(out_dir / files::kJudgments);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      Json j = Json::object();
      j["schema_version"] = kSchemaVersion;
      j["task_id"] = trajs[i].task_id;
      j["trajectory_ref"] = ref_file + "#" + std::to_string(numbered[i].line);
      j["termination"] = to_string(trajs[i].termination);
      j["judgment"] = judgments[i] ? to_json(*judgments[i]) : Json(nullptr);
      j["kept"] = static_cast<bool>(kept[i]);
      j["reason"] = rej.reasons[i] ? Json(*rej.reasons[i]) : Json(nullptr);
      w.write(j);
    }
  }
  {
    JsonlWriter w(out_dir / files::kSft);
    for (auto i : rej.kept) {
      w.write(to_json(build_sft_example(trajs[i], detail::task_for(tasks, trajs[i].task_id), prompts,
                                        o.config.rollout.current_date)));
    }
  }
  detail::write_manifest(out_dir, "rft", o, &prompts, Json{{"judge", judge->identifier()}}, o.run_seed(),
                         {in.trajectories, in.tasks});
  return Json{{"trajectories", trajs.size()}, {"kept", rej.kept.size()}};
}

// ---------------------------------------------------------------------------
// rl-prep

inline Json run_rl_prep(const RunOptions& o, const TrainingInputs& in, const std::filesystem::path& out_dir) {
  const auto prompts = PromptLibrary::load(o.config.prompts_dir);
  const auto tasks = detail::index_tasks(read_tasks(in.tasks));
  const auto numbered = detail::read_numbered(in.trajectories);
  auto judge = make_judge(o);
  const std::string ref_file = in.trajectories.filename().string();
  const GrpoConfig& grpo = o.config.grpo;

  std::filesystem::create_directories(out_dir);
  JsonlWriter batch(out_dir / files::kRlBatch);
  JsonlWriter jw(out_dir / files::kRlJudgments);
  std::size_t groups = 0, items = 0, excluded = 0, skipped = 0;
  for (std::size_t i = 0; i < numbered.size();) {
    // A group is a run of consecutive trajectories for one task.
    RolloutGroup g;
    g.task_id = numbered[i].trajectory.task_id;
    std::vector<std::size_t> lines;
    for (; i < numbered.size() && numbered[i].trajectory.task_id == g.task_id; ++i) {
      g.trajectories.push_back(numbered[i].trajectory);
      g.validity.push_back(in_loss(numbered[i].trajectory.termination));
      lines.push_back(numbered[i].line);
    }
    if (g.trajectories.size() != grpo.group_size) {
      detail::note(o, "rl-prep: group for " + g.task_id + " has " + std::to_string(g.trajectories.size()) +
                          " trajectories, expected " + std::to_string(grpo.group_size));
    }
    const auto judgments = judge_group(g, detail::task_for(tasks, g.task_id), prompts, *judge, grpo);
    for (std::size_t k = 0; k < g.trajectories.size(); ++k) {
      jw.write(Json{{"schema_version", kSchemaVersion},
                    {"task_id", g.task_id},
                    {"trajectory_ref", ref_file + "#" + std::to_string(lines[k])},
                    {"termination", to_string(g.trajectories[k].termination)},
                    {"judgment", judgments[k] ? to_json(*judgments[k]) : Json(nullptr)}});
    }
    if (!g.rewards) {
      detail::note(o, "rl-prep: judge unavailable for " + g.task_id + "; group left out");
      ++skipped;
      continue;
    }
    ++groups;
    auto group_items = build_rl_batch({g}, grpo, ref_file);
    for (std::size_t k = 0; k < group_items.size(); ++k) {
      // Blank lines in the input can break consecutive numbering.
      RlBatchItem& it = group_items[k];
      it.trajectory_ref = ref_file + "#" + std::to_string(lines[k]);
      batch.write(to_json(it));
      ++items;
      excluded += it.in_loss ? 0 : 1;
    }
  }
  batch.flush();
  jw.flush();
  detail::write_manifest(out_dir, "rl-prep", o, &prompts, Json{{"judge", judge->identifier()}}, o.run_seed(),
                         {in.trajectories, in.tasks});
  return Json{{"groups", groups}, {"items", items}, {"not_in_loss", excluded}, {"skipped_groups", skipped}};
}

// ---------------------------------------------------------------------------
// eval

struct EvalInputs {
  std::optional<std::filesystem::path> tasks;  // overrides eval.path
  std::optional<std::filesystem::path> world;
  std::optional<std::filesystem::path> records;
};

inline Json run_eval(const RunOptions& o, const EvalInputs& in, const std::filesystem::path& out_dir) {
  const auto prompts = PromptLibrary::load(o.config.prompts_dir);
  const auto& ec = o.config.eval;
  const auto path = in.tasks ? in.tasks : ec.path;
  if (!path) throw Error(Errc::bad_config, "eval needs --tasks or eval.path");
  const auto tasks = load_benchmark(BenchmarkSpec{ec.benchmark, *path, ec.image_only, ec.sample_limit, o.run_seed()});
  std::shared_ptr<const sim::SimWorld> world;
  if (in.world) world = detail::load_world(in.world);
  auto tools = make_tools(o, prompts, world);
  auto policy = make_policy(o, tasks, in.records, world);
  auto judge = make_judge(o);
  const auto report = evaluate(ec.benchmark, tasks, EvalServices{{*policy, *tools, prompts}, *judge},
                               o.config.rollout, o.parallelism, o.run_seed(), detail::clocks_for(o));

  std::filesystem::create_directories(out_dir);
  write_jsonl(out_dir / files::kEvalRecords, report.records, [](const EvalRecord& r) { return to_json(r); });
  write_jsonl(out_dir / files::kEvalTrajectories, report.trajectories, [](const Trajectory& t) { return to_json(t); });
  const Json summary = summary_json(report);
  text::write_file(out_dir / files::kEvalSummary, summary.dump(2) + "\n");
  text::write_file(out_dir / files::kEvalReport, report_markdown(report));
  std::vector<std::filesystem::path> inputs{*path};
  if (in.world) inputs.push_back(*in.world);
  if (in.records) inputs.push_back(*in.records);
  detail::write_manifest(out_dir, "eval", o, &prompts,
                         Json{{"policy", policy->identifier()}, {"tools", tools->identifier()},
                              {"judge", judge->identifier()}},
                         o.run_seed(), inputs);
  return Json{{"benchmark", ec.benchmark}, {"n_evaluated", report.n_evaluated}, {"accuracy", report.accuracy}};
}

// ---------------------------------------------------------------------------
// report

struct LabeledPath {
  std::string label;
  std::filesystem::path path;
};

/// Parses "label=path"; a bare path is labeled with its stem.
inline LabeledPath parse_labeled(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) {
    std::filesystem::path p(arg);
    return {p.stem().string(), p};
  }
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

struct ReportInputs {
  std::vector<LabeledPath> trajectories;
  std::vector<LabeledPath> summaries;
};

inline Json run_report(const RunOptions& o, const ReportInputs& in, const std::filesystem::path& out_dir) {
  if (in.trajectories.empty() && in.summaries.empty()) {
    throw Error(Errc::bad_arguments, "report needs --trajectories or --summary inputs");
  }
  std::filesystem::create_directories(out_dir);
  std::string md = "# Run report\n\n";
  Json out = Json::object();
  std::vector<std::filesystem::path> inputs;
  bool all_balanced = true;
  if (!in.trajectories.empty()) {
    md += "## Tool calls\n\n| Corpus | Trajectories | Answered | image_search | text_search | visit | Total | "
          "image_search/traj | Accounting |\n|---|---:|---:|---:|---:|---:|---:|---:|---|\n";
    for (const auto& [label, path] : in.trajectories) {
      const auto trajs = read_trajectories(path);
      inputs.push_back(path);
      const auto h = tool_call_histogram(trajs);
      const bool ok = accounting_holds(h, trajs);
      all_balanced = all_balanced && ok;
      std::size_t answered = 0;
      for (const auto& t : trajs) answered += t.answered() ? 1 : 0;
      text::write_file(out_dir / ("histogram_" + label + ".csv"), histogram_csv(h));
      text::write_file(out_dir / ("per_trajectory_" + label + ".csv"), per_trajectory_csv(h));
      md += "| " + label + " | " + std::to_string(trajs.size()) + " | " + std::to_string(answered) + " | " +
            std::to_string(h.totals.at("image_search")) + " | " + std::to_string(h.totals.at("text_search")) + " | " +
            std::to_string(h.totals.at("visit")) + " | " + std::to_string(h.total) + " | " +
            format_fixed(h.mean("image_search"), 2) + " | " + (ok ? "ok" : "MISMATCH") + " |\n";
      out[label] = to_json(h);
    }
  }
  if (!in.summaries.empty()) {
    std::vector<std::pair<std::string, Json>> rows;
    for (const auto& [label, path] : in.summaries) {
      inputs.push_back(path);
      Json s = Json::parse(text::read_file(path), nullptr, false);
      if (s.is_discarded()) throw Error(Errc::schema_error, path.string() + " is not JSON");
      rows.emplace_back(label, std::move(s));
    }
    md += "\n## Evaluation\n\n" + comparison_markdown(rows);
  }
  text::write_file(out_dir / files::kReport, md);
  detail::write_manifest(out_dir, "report", o, nullptr, Json::object(), o.run_seed(), inputs);
  return Json{{"histograms", out}, {"accounting_holds", all_balanced}};
}

}  // namespace deepbrowse::cli
