#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "osil/alignment.hpp"
#include "osil/correspond.hpp"
#include "osil/gicp.hpp"

namespace osil {

/// Everything the pipeline needs to run a task, with working defaults.
/// Sources override each other as: defaults < config file < environment
/// (OSIL_VLM_ENDPOINT) < command-line flags.
struct TaskConfig {
  std::string backend = "oracle";  // correspondence backend name
  std::uint64_t seed = 0;          // master seed; trial seeds mix into it
  std::string vlm_endpoint;        // empty runs the offline annotator
  double depth_noise_sigma = 0.002;  // runtime depth noise (demos use 0)
  int threads = 0;                   // benchmark workers; 0 = hardware
  AlignConfig align;
  GicpConfig gicp;
  RansacConfig ransac;
  ZnccConfig zncc;
};

/// Applies a partial JSON document on top of `base`. Unknown keys throw
/// InvalidArgument so typos never silently fall back to defaults.
TaskConfig config_from_json(const nlohmann::json& j,
                            const TaskConfig& base = {});

TaskConfig load_config_file(const std::string& path,
                            const TaskConfig& base = {});

/// Canonical JSON form (every field, keys sorted). config_hash is the
/// FNV-1a of its dump; it stamps every output file so results can be traced
/// back to the exact configuration.
nlohmann::json config_to_json(const TaskConfig& config);
std::uint64_t config_hash(const TaskConfig& config);
std::string config_hash_hex(const TaskConfig& config);

}  // namespace osil
