#include "osil/config.hpp"

#include <cstdio>
#include <fstream>

#include "osil/error.hpp"
#include "osil/rng.hpp"

namespace osil {

namespace {

void check_keys(const nlohmann::json& j, const char* where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (key == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("config: unknown key '") + key + "' in " +
                      where);
    }
  }
}

}  // namespace

TaskConfig config_from_json(const nlohmann::json& j, const TaskConfig& base) {
  TaskConfig c = base;
  check_keys(j, "root",
             {"backend", "seed", "vlm_endpoint", "depth_noise_sigma",
              "threads", "align", "gicp", "ransac", "zncc"});
  c.backend = j.value("backend", c.backend);
  c.seed = j.value("seed", c.seed);
  c.vlm_endpoint = j.value("vlm_endpoint", c.vlm_endpoint);
  c.depth_noise_sigma = j.value("depth_noise_sigma", c.depth_noise_sigma);
  c.threads = j.value("threads", c.threads);
  if (j.contains("align")) {
    const auto& a = j.at("align");
    check_keys(a, "align",
               {"tau", "max_steps", "step_scale", "keypoint_count", "seed"});
    c.align.tau = a.value("tau", c.align.tau);
    c.align.max_steps = a.value("max_steps", c.align.max_steps);
    c.align.step_scale = a.value("step_scale", c.align.step_scale);
    c.align.keypoint_count = a.value("keypoint_count", c.align.keypoint_count);
    c.align.seed = a.value("seed", c.align.seed);
  }
  if (j.contains("gicp")) {
    const auto& g = j.at("gicp");
    check_keys(g, "gicp",
               {"max_iterations", "convergence_eps", "correspondence_max_dist",
                "covariance_k", "plane_epsilon"});
    c.gicp.max_iterations = g.value("max_iterations", c.gicp.max_iterations);
    c.gicp.convergence_eps = g.value("convergence_eps", c.gicp.convergence_eps);
    c.gicp.correspondence_max_dist =
        g.value("correspondence_max_dist", c.gicp.correspondence_max_dist);
    c.gicp.covariance_k = g.value("covariance_k", c.gicp.covariance_k);
    c.gicp.plane_epsilon = g.value("plane_epsilon", c.gicp.plane_epsilon);
  }
  if (j.contains("ransac")) {
    const auto& r = j.at("ransac");
    check_keys(r, "ransac",
               {"hypotheses", "sample_size", "inlier_threshold",
                "min_inlier_fraction", "seed"});
    c.ransac.hypotheses = r.value("hypotheses", c.ransac.hypotheses);
    c.ransac.sample_size = r.value("sample_size", c.ransac.sample_size);
    c.ransac.inlier_threshold =
        r.value("inlier_threshold", c.ransac.inlier_threshold);
    c.ransac.min_inlier_fraction =
        r.value("min_inlier_fraction", c.ransac.min_inlier_fraction);
    c.ransac.seed = r.value("seed", c.ransac.seed);
  }
  if (j.contains("zncc")) {
    const auto& z = j.at("zncc");
    check_keys(z, "zncc", {"patch", "score_min", "valid_depth_only"});
    c.zncc.patch = z.value("patch", c.zncc.patch);
    c.zncc.score_min = z.value("score_min", c.zncc.score_min);
    c.zncc.valid_depth_only = z.value("valid_depth_only", c.zncc.valid_depth_only);
  }
  return c;
}

TaskConfig load_config_file(const std::string& path, const TaskConfig& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError,
                "config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, base);
}

nlohmann::json config_to_json(const TaskConfig& c) {
  return nlohmann::json{
      {"backend", c.backend},
      {"seed", c.seed},
      {"vlm_endpoint", c.vlm_endpoint},
      {"depth_noise_sigma", c.depth_noise_sigma},
      {"threads", c.threads},
      {"align",
       {{"tau", c.align.tau},
        {"max_steps", c.align.max_steps},
        {"step_scale", c.align.step_scale},
        {"keypoint_count", c.align.keypoint_count},
        {"seed", c.align.seed}}},
      {"gicp",
       {{"max_iterations", c.gicp.max_iterations},
        {"convergence_eps", c.gicp.convergence_eps},
        {"correspondence_max_dist", c.gicp.correspondence_max_dist},
        {"covariance_k", c.gicp.covariance_k},
        {"plane_epsilon", c.gicp.plane_epsilon}}},
      {"ransac",
       {{"hypotheses", c.ransac.hypotheses},
        {"sample_size", c.ransac.sample_size},
        {"inlier_threshold", c.ransac.inlier_threshold},
        {"min_inlier_fraction", c.ransac.min_inlier_fraction},
        {"seed", c.ransac.seed}}},
      {"zncc",
       {{"patch", c.zncc.patch},
        {"score_min", c.zncc.score_min},
        {"valid_depth_only", c.zncc.valid_depth_only}}}};
}

std::uint64_t config_hash(const TaskConfig& config) {
  const std::string dump = config_to_json(config).dump();
  return fnv1a(dump.data(), dump.size());
}

std::string config_hash_hex(const TaskConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

}  // namespace osil
