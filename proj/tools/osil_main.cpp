#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "osil/bench.hpp"
#include "osil/config.hpp"
#include "osil/error.hpp"
#include "osil/recipes.hpp"
#include "osil/trajectory.hpp"

namespace {

osil::TaskRecipe resolve_recipe(const std::string& arg) {
  if (std::filesystem::exists(arg)) return osil::load_recipe_file(arg);
  return osil::load_builtin_recipe(arg);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw osil::Error(osil::ErrorCode::IoError, "cannot write " + path);
  }
  out << j.dump(2) << "\n";
}

nlohmann::json subtasks_to_json(const std::vector<osil::Subtask>& subtasks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const osil::Subtask& s : subtasks) {
    nlohmann::json j{{"description", s.description},
                     {"align_start", s.align_start},
                     {"align_end", s.align_end},
                     {"exec_start", s.exec_start},
                     {"exec_end", s.exec_end}};
    if (s.keyframe) j["keyframe"] = *s.keyframe;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-shot imitation pipeline on the kinematic RGB-D simulator"};
  app.require_subcommand(1);

  std::string config_path, backend, endpoint, recipe_arg, out_arg, suite;
  std::uint64_t seed = 0, trial_seed = 1;
  int threads = 0;
  double fps = 5.0;

  CLI::Option* config_opt =
      app.add_option("--config", config_path, "JSON config file");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "master seed");
  CLI::Option* backend_opt = app.add_option(
      "--backend", backend, "correspondence backend (oracle or zncc)");
  CLI::Option* endpoint_opt = app.add_option(
      "--vlm-endpoint", endpoint,
      "annotation service URL; without it the offline annotator runs");
  CLI::Option* threads_opt =
      app.add_option("--threads", threads, "benchmark worker threads");

  CLI::App* record = app.add_subcommand("record", "record a demonstration");
  record->add_option("--recipe", recipe_arg, "recipe name or file")
      ->required();
  record->add_option("--out", out_arg, "archive directory")->required();
  record->add_option("--fps", fps, "recording rate, default 5");

  CLI::App* decompose =
      app.add_subcommand("decompose", "split a demo into subtasks");
  decompose->add_option("--recipe", recipe_arg, "recipe name or file")
      ->required();
  decompose->add_option("--out", out_arg, "subtask JSON path");

  CLI::App* plan = app.add_subcommand("plan", "extract the task plan");
  plan->add_option("--recipe", recipe_arg, "recipe name or file")->required();
  plan->add_option("--out", out_arg, "plan summary JSON path");

  CLI::App* run = app.add_subcommand("run", "one perturbed execution");
  run->add_option("--recipe", recipe_arg, "recipe name or file")->required();
  run->add_option("--trial-seed", trial_seed, "trial seed, default 1");
  run->add_option("--out", out_arg, "run report JSON path");

  CLI::App* bench = app.add_subcommand("bench", "run a benchmark suite");
  bench
      ->add_option("--suite", suite,
                   "multistep, singlestep, or registration")
      ->required();
  bench->add_option("--out-dir", out_arg, "output directory")
      ->default_val("bench_out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    osil::TaskConfig config;
    if (config_opt->count()) config = osil::load_config_file(config_path);
    if (const char* env = std::getenv("OSIL_VLM_ENDPOINT")) {
      config.vlm_endpoint = env;
    }
    if (seed_opt->count()) config.seed = seed;
    if (backend_opt->count()) config.backend = backend;
    if (endpoint_opt->count()) config.vlm_endpoint = endpoint;
    if (threads_opt->count()) config.threads = threads;

    if (*record) {
      const osil::TaskRecipe recipe = resolve_recipe(recipe_arg);
      const osil::Demonstration demo = osil::record_demo(recipe, fps);
      osil::save_demo_archive(out_arg, demo);
      std::cout << "recorded " << demo.step_count() << " steps ("
                << demo.duration() << "s) to " << out_arg << "\n";
      return 0;
    }

    if (*decompose || *plan) {
      const osil::PreparedTask task =
          osil::prepare_task(resolve_recipe(recipe_arg), config);
      for (std::size_t i = 0; i < task.subtasks.size(); ++i) {
        const osil::Subtask& s = task.subtasks[i];
        std::cout << "subtask " << (i + 1) << ": '" << s.description
                  << "' align [" << s.align_start << ", " << s.align_end
                  << "] exec [" << s.exec_start << ", " << s.exec_end
                  << "] keyframe " << (s.keyframe ? *s.keyframe : -1);
        if (*plan) {
          std::cout << " ("
                    << task.plan.subtasks[i].controls.actions.size()
                    << " replay actions)";
        }
        std::cout << "\n";
      }
      if (!out_arg.empty()) {
        write_json(out_arg,
                   {{"config", osil::config_hash_hex(config)},
                    {"recipe", task.recipe.name},
                    {"subtasks", subtasks_to_json(task.subtasks)}});
        std::cout << "wrote " << out_arg << "\n";
      }
      return 0;
    }

    if (*run) {
      const osil::PreparedTask task =
          osil::prepare_task(resolve_recipe(recipe_arg), config);
      const osil::RunReport report =
          osil::trial_report(task, config, trial_seed);
      for (const osil::SubtaskReport& s : report.subtasks) {
        std::cout << "subtask '" << s.description << "': "
                  << (s.converged ? "aligned" : "not aligned") << " in "
                  << s.iterations << " iterations";
        if (s.e_t) std::cout << ", e_t " << *s.e_t << " m";
        if (s.e_r) std::cout << ", e_r " << *s.e_r << " deg";
        if (!s.failure_stage.empty()) {
          std::cout << " [failed: " << s.failure_stage << "]";
        }
        std::cout << "\n";
      }
      std::cout << (report.success ? "task succeeded" : "task failed")
                << "\n";
      if (!out_arg.empty()) {
        write_json(out_arg, {{"config", osil::config_hash_hex(config)},
                             {"report", osil::run_report_to_json(report)}});
        std::cout << "wrote " << out_arg << "\n";
      }
      return report.success ? 0 : 1;
    }

    if (*bench) {
      const std::vector<std::string> files =
          osil::run_suite(suite, config, out_arg, &std::cout);
      for (const std::string& f : files) std::cout << "wrote " << f << "\n";
      return 0;
    }
  } catch (const osil::Error& e) {
    std::cerr << "error (" << osil::error_code_name(e.code()) << "): "
              << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
