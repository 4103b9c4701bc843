// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0

// Builds a small synthetic world, synthesizes tasks, rolls out a noisy
// policy and prints the resulting rejection and RL numbers.

#include <filesystem>
#include <iostream>

#include "deepbrowse/commands.hpp"

namespace fs = std::filesystem;
using namespace deepbrowse;

int main() {
  const fs::path dir = fs::temp_directory_path() / "deepbrowse_sample_pipeline";
  fs::remove_all(dir);
  fs::create_directories(dir);

  cli::RunOptions o;
  o.seed = 3;
  o.config.synth.n_tasks = 12;
  o.config.synth.planted_answer_leaks = 2;
  o.config.synth.planted_text_answerable = 2;
  o.config.policy = "noisy";

  cli::run_simgen(o, dir);
  const Json synth = cli::run_synth(o, {dir / cli::files::kWorld}, dir);
  const Json roll = cli::run_rollout(
      o, {dir / cli::files::kTasks, dir / cli::files::kWorld, dir / cli::files::kRecords}, dir);
  const Json rft = cli::run_rft(o, {dir / cli::files::kTrajectories, dir / cli::files::kTasks}, dir);
  const Json rl = cli::run_rl_prep(o, {dir / cli::files::kTrajectories, dir / cli::files::kTasks}, dir);

  std::cout << "synth:   " << synth.dump() << "\n"
            << "rollout: " << roll.dump() << "\n"
            << "rft:     " << rft.dump() << "\n"
            << "rl-prep: " << rl.dump() << "\n"
            << "artifacts in " << dir.string() << "\n";
}
