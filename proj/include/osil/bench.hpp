#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "osil/config.hpp"
#include "osil/executor.hpp"
#include "osil/recipes.hpp"

namespace osil {

/// The offline part of a task, produced once per recipe and shared by every
/// trial: recorded demo, decomposition with keyframes, extracted plan.
struct PreparedTask {
  TaskRecipe recipe;
  Demonstration demo;
  std::vector<Subtask> subtasks;
  TaskPlan plan;
};

/// Records the demo and decomposes it. The offline annotator answers the
/// prompts unless the config names a VLM endpoint.
PreparedTask prepare_task(TaskRecipe recipe, const TaskConfig& config);

struct TrialOutcome {
  std::uint64_t seed = 0;
  bool success = false;
  std::vector<int> iterations;  // alignment iterations per attempted subtask
  std::string failure_stage;    // first failing stage, "" when none
};

/// One perturbed execution of a prepared task, with the full per-subtask
/// report. Fully deterministic in (task, config, trial_seed) apart from the
/// wall-time field; trials never share mutable state, so they can run on
/// any thread.
RunReport trial_report(const PreparedTask& task, const TaskConfig& config,
                       std::uint64_t trial_seed);

/// trial_report reduced to what the benchmark tables need.
TrialOutcome run_trial(const PreparedTask& task, const TaskConfig& config,
                       std::uint64_t trial_seed);

struct RecipeBench {
  std::string recipe;
  std::vector<std::string> subtask_names;
  std::vector<TrialOutcome> trials;  // ordered by the recipe's seed list
};

/// Runs every seed of the recipe, fanned out over `threads` workers
/// (0 = hardware concurrency). Results are collected in seed order, so the
/// thread count never changes the output.
RecipeBench bench_recipe(const PreparedTask& task, const TaskConfig& config,
                         int threads);

/// Recipe names of the "multistep" and "singlestep" suites.
std::vector<std::string> suite_recipes(const std::string& suite);

/// Runs a suite (multistep, singlestep, or registration) and writes its CSV
/// files into out_dir. Every file starts with a config-hash comment line and
/// contains nothing nondeterministic. Returns the paths written. Progress
/// lines go to `log` when given.
std::vector<std::string> run_suite(const std::string& suite,
                                   const TaskConfig& config,
                                   const std::string& out_dir,
                                   std::ostream* log = nullptr);

}  // namespace osil
