#include "osil/bench.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <thread>

#include "osil/decompose.hpp"
#include "osil/error.hpp"
#include "osil/rng.hpp"
#include "osil/sim_state.hpp"
#include "osil/vlm.hpp"

namespace osil {

namespace {

std::unique_ptr<vlm::VlmClient> make_client(const Demonstration& demo,
                                            const TaskRecipe& recipe,
                                            const TaskConfig& config) {
  if (config.vlm_endpoint.empty()) {
    return std::make_unique<MockVlmClient>(demo, recipe.scene);
  }
  return std::make_unique<vlm::HttpVlmClient>(config.vlm_endpoint, demo);
}

std::uint64_t trial_key(const TaskConfig& config, const std::string& recipe,
                        std::uint64_t trial_seed) {
  return mix_seed(config.seed, trial_seed,
                  fnv1a(recipe.data(), recipe.size()));
}

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

PreparedTask prepare_task(TaskRecipe recipe, const TaskConfig& config) {
  PreparedTask task;
  task.recipe = std::move(recipe);
  task.demo = record_demo(task.recipe);

  const auto client = make_client(task.demo, task.recipe, config);
  task.subtasks = decompose_demo(task.demo, *client);
  for (Subtask& subtask : task.subtasks) {
    subtask.keyframe = select_keyframe(task.demo, subtask, *client);
  }

  InstanceMaskProvider masks(task.demo.sim_objects);
  task.plan = build_plan(task.demo, task.subtasks, masks, config.align,
                         &task.recipe.scene);
  return task;
}

RunReport trial_report(const PreparedTask& task, const TaskConfig& config,
                       std::uint64_t trial_seed) {
  const std::uint64_t key = trial_key(config, task.recipe.name, trial_seed);

  sim::World world = task.recipe.scene;
  world.ee_pose = task.recipe.home;
  world.gripper_width = task.recipe.scene.gripper_width;
  world.depth_noise_sigma = config.depth_noise_sigma;
  world = sim::perturb(world, task.recipe.perturbation.translation,
                       task.recipe.perturbation.rotation_deg, key);
  world.rng_seed = mix_seed(key, 3);

  ExecuteConfig exec{config.align, config.gicp, config.ransac, false};
  exec.align.seed = mix_seed(key, 1);
  exec.ransac.seed = mix_seed(key, 2);

  const auto backend = make_backend(config.backend, config.zncc);
  InstanceMaskProvider masks(task.recipe.scene);
  const SuccessPredicate success =
      make_success_predicate(task.recipe.success_spec, task.recipe.scene);

  return execute(task.plan, std::move(world), *backend, masks, exec, success);
}

TrialOutcome run_trial(const PreparedTask& task, const TaskConfig& config,
                       std::uint64_t trial_seed) {
  const RunReport report = trial_report(task, config, trial_seed);
  TrialOutcome out;
  out.seed = trial_seed;
  out.success = report.success;
  for (const SubtaskReport& s : report.subtasks) {
    out.iterations.push_back(s.iterations);
    if (out.failure_stage.empty() && !s.failure_stage.empty()) {
      out.failure_stage = s.failure_stage;
    }
  }
  return out;
}

RecipeBench bench_recipe(const PreparedTask& task, const TaskConfig& config,
                         int threads) {
  RecipeBench bench;
  bench.recipe = task.recipe.name;
  for (const PlannedSubtask& s : task.plan.subtasks) {
    bench.subtask_names.push_back(s.bundle.description);
  }

  const std::vector<std::uint64_t>& seeds = task.recipe.seeds;
  bench.trials.resize(seeds.size());
  if (seeds.empty()) return bench;

  unsigned workers = threads > 0
                         ? static_cast<unsigned>(threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      bench.trials[i] = run_trial(task, config, seeds[i]);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return bench;
}

std::vector<std::string> suite_recipes(const std::string& suite) {
  if (suite == "multistep") {
    return {"stack_blocks", "sort_fruits", "tea_prep", "wipe"};
  }
  if (suite == "singlestep") {
    return {"pick", "press", "knock", "flip"};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown suite '" + suite + "'");
}

namespace {

std::ofstream open_csv(const std::string& path, const TaskConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "# config " << config_hash_hex(config) << "\n";
  return out;
}

void write_task_suite(const std::string& suite, const TaskConfig& config,
                      const std::string& out_dir,
                      std::vector<std::string>* written, std::ostream* log) {
  std::vector<RecipeBench> results;
  for (const std::string& name : suite_recipes(suite)) {
    if (log) *log << "  " << name << ": preparing\n" << std::flush;
    PreparedTask task = prepare_task(load_builtin_recipe(name), config);
    RecipeBench bench = bench_recipe(task, config, config.threads);
    if (log) {
      int ok = 0;
      for (const TrialOutcome& t : bench.trials) ok += t.success ? 1 : 0;
      *log << "  " << name << ": " << ok << "/" << bench.trials.size()
           << " trials succeeded\n"
           << std::flush;
    }
    results.push_back(std::move(bench));
  }

  const std::string success_path = out_dir + "/" + suite + "_success.csv";
  std::ofstream success = open_csv(success_path, config);
  success << "recipe,trials,successes,success_rate\n";
  for (const RecipeBench& r : results) {
    int ok = 0;
    for (const TrialOutcome& t : r.trials) ok += t.success ? 1 : 0;
    const double rate =
        r.trials.empty() ? 0.0 : static_cast<double>(ok) / r.trials.size();
    success << r.recipe << "," << r.trials.size() << "," << ok << ","
            << fmt(rate) << "\n";
  }
  written->push_back(success_path);

  // Iteration statistics come from successful trials only; failed trials
  // abort mid-task and would drag the means toward their failure point.
  const std::string iter_path = out_dir + "/" + suite + "_iterations.csv";
  std::ofstream iters = open_csv(iter_path, config);
  iters << "recipe,subtask,description,mean_iterations,std_iterations,"
           "successful_trials\n";
  for (const RecipeBench& r : results) {
    for (std::size_t s = 0; s < r.subtask_names.size(); ++s) {
      double sum = 0.0, sumsq = 0.0;
      int n = 0;
      for (const TrialOutcome& t : r.trials) {
        if (!t.success || s >= t.iterations.size()) continue;
        sum += t.iterations[s];
        sumsq += static_cast<double>(t.iterations[s]) * t.iterations[s];
        ++n;
      }
      iters << r.recipe << "," << (s + 1) << "," << r.subtask_names[s] << ",";
      if (n == 0) {
        iters << "-,-,0\n";
        continue;
      }
      const double mean = sum / n;
      const double var = n > 1 ? (sumsq - n * mean * mean) / (n - 1) : 0.0;
      iters << fmt(mean) << "," << fmt(std::sqrt(std::max(0.0, var))) << ","
            << n << "\n";
    }
  }
  written->push_back(iter_path);
}

void write_registration_suite(const TaskConfig& config,
                              const std::string& out_dir,
                              std::vector<std::string>* written,
                              std::ostream* log) {
  // Frame-pair estimation accuracy: the scene is perturbed under a fixed
  // camera and the recovered camera delta is compared with ground truth.
  // Depth noise stays off so backend quality is the only variable.
  TaskConfig clean = config;
  clean.depth_noise_sigma = 0.0;

  std::vector<RegistrationCase> cases;
  std::size_t index = 0;
  for (const std::string& name : suite_recipes("singlestep")) {
    if (log) *log << "  case " << name << "\n" << std::flush;
    PreparedTask task = prepare_task(load_builtin_recipe(name), clean);
    const PlannedSubtask& first = task.plan.subtasks.front();

    RegistrationCase c;
    c.name = name;
    c.description = first.bundle.description;
    c.source = sim::world_at_step(task.recipe.scene, task.demo,
                                  first.keyframe_step);
    c.source.depth_noise_sigma = 0.0;
    c.target = sim::perturb(c.source, 0.03, 10.0,
                            mix_seed(clean.seed, index++, 0xCA5Eull));
    cases.push_back(std::move(c));
  }

  const auto oracle = make_backend("oracle", clean.zncc);
  const auto zncc = make_backend("zncc", clean.zncc);
  const std::vector<const FeatureBackend*> backends = {oracle.get(),
                                                       zncc.get()};
  AlignConfig align = clean.align;
  align.seed = mix_seed(clean.seed, 0xCA5Eull, 1);
  RansacConfig ransac = clean.ransac;
  ransac.seed = mix_seed(clean.seed, 0xCA5Eull, 2);

  const std::vector<PoseEvalRow> rows =
      evaluate_pose_estimation(cases, backends, align, clean.gicp, ransac);

  const std::string path = out_dir + "/registration_errors.csv";
  std::ofstream out = open_csv(path, config);
  out << "case,backend,e_t_m,e_r_deg\n";
  for (const PoseEvalRow& row : rows) {
    out << row.case_name << "," << row.backend << ",";
    if (row.ok) {
      out << fmt(row.e_t, "%.6f") << "," << fmt(row.e_r, "%.6f") << "\n";
    } else {
      out << "-,-\n";
    }
  }
  written->push_back(path);
}

}  // namespace

std::vector<std::string> run_suite(const std::string& suite,
                                   const TaskConfig& config,
                                   const std::string& out_dir,
                                   std::ostream* log) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  if (suite == "registration") {
    write_registration_suite(config, out_dir, &written, log);
  } else {
    write_task_suite(suite, config, out_dir, &written, log);
  }
  return written;
}

}  // namespace osil
