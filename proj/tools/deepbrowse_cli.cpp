// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "deepbrowse/commands.hpp"
#include "deepbrowse/http_transport.hpp"

namespace {

using deepbrowse::cli::RunOptions;
namespace fs = std::filesystem;

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deepbrowse: multimodal browsing agent data and evaluation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string backend = "sim";
  std::optional<std::uint64_t> seed;
  std::size_t parallelism = 1;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--backend", backend, "Backend: live, sim or recorded")
      ->check(CLI::IsMember({"live", "sim", "recorded"}));
  app.add_option("--seed", seed, "Run seed");
  app.add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);

  std::string out_dir, world, records, tasks, trajectories, policy;
  std::vector<std::string> report_trajs, report_summaries;

  auto* simgen = app.add_subcommand("simgen", "Generate a simulated world");
  simgen->add_option("--out", out_dir, "Output directory")->required();

  auto* synth = app.add_subcommand("synth", "Synthesize and filter tasks");
  synth->add_option("--world", world, "World file (sim backend)");
  synth->add_option("--out", out_dir, "Output directory")->required();

  auto* rollout = app.add_subcommand("rollout", "Generate grouped trajectories");
  rollout->add_option("--tasks", tasks, "tasks.jsonl")->required()->check(CLI::ExistingFile);
  rollout->add_option("--world", world, "World file (sim backend)");
  rollout->add_option("--records", records, "synthesis_records.jsonl for oracle policies");
  rollout->add_option("--policy", policy, "Override the configured policy");
  rollout->add_option("--out", out_dir, "Output directory")->required();

  auto* rft = app.add_subcommand("rft", "Judge, rejection-filter and export SFT data");
  rft->add_option("--trajectories", trajectories, "trajectories.jsonl")->required()->check(CLI::ExistingFile);
  rft->add_option("--tasks", tasks, "tasks.jsonl")->required()->check(CLI::ExistingFile);
  rft->add_option("--out", out_dir, "Output directory")->required();

  auto* rl = app.add_subcommand("rl-prep", "Judge groups and export the RL batch");
  rl->add_option("--trajectories", trajectories, "trajectories.jsonl")->required()->check(CLI::ExistingFile);
  rl->add_option("--tasks", tasks, "tasks.jsonl")->required()->check(CLI::ExistingFile);
  rl->add_option("--out", out_dir, "Output directory")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate on a benchmark");
  ev->add_option("--tasks", tasks, "Benchmark JSONL (overrides eval.path)");
  ev->add_option("--world", world, "World file (sim backend)");
  ev->add_option("--records", records, "synthesis_records.jsonl for oracle policies");
  ev->add_option("--policy", policy, "Override the configured policy");
  ev->add_option("--out", out_dir, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Tool-call histograms and stage comparisons");
  report->add_option("--trajectories", report_trajs, "Trajectory files, as label=path or path");
  report->add_option("--summary", report_summaries, "Eval summaries, as label=path or path");
  report->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    RunOptions o;
    o.config = deepbrowse::load_config(opt_path(config_path));
    if (!policy.empty()) {
      deepbrowse::Json patch = o.config.to_json();
      patch["policy"] = policy;
      auto env = o.config.live;
      o.config = deepbrowse::config_from_json(patch);
      o.config.live = env;
    }
    o.backend = deepbrowse::parse_backend_kind(backend);
    o.seed = seed;
    o.parallelism = parallelism;
    o.http = [] { return std::make_shared<deepbrowse::live::HttplibClient>(); };

    const fs::path out(out_dir);
    deepbrowse::Json summary;
    if (*simgen) {
      summary = deepbrowse::cli::run_simgen(o, out);
    } else if (*synth) {
      summary = deepbrowse::cli::run_synth(o, {opt_path(world)}, out);
    } else if (*rollout) {
      summary = deepbrowse::cli::run_rollout(o, {tasks, opt_path(world), opt_path(records)}, out);
    } else if (*rft) {
      summary = deepbrowse::cli::run_rft(o, {trajectories, tasks}, out);
    } else if (*rl) {
      summary = deepbrowse::cli::run_rl_prep(o, {trajectories, tasks}, out);
    } else if (*ev) {
      summary = deepbrowse::cli::run_eval(o, {opt_path(tasks), opt_path(world), opt_path(records)}, out);
    } else {
      deepbrowse::cli::ReportInputs in;
      for (const auto& s : report_trajs) in.trajectories.push_back(deepbrowse::cli::parse_labeled(s));
      for (const auto& s : report_summaries) in.summaries.push_back(deepbrowse::cli::parse_labeled(s));
      summary = deepbrowse::cli::run_report(o, in, out);
    }
    std::cout << summary.dump() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
