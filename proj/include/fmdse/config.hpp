#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdse/mapping.hpp"
#include "fmdse/metrics.hpp"
#include "fmdse/model.hpp"
#include "fmdse/sim.hpp"
#include "fmdse/violations.hpp"

namespace fmdse {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fuzzed parameter grid for the trace-generation workflow. Each listed
// parameter gets values_per_parameter values drawn from its range; runs
// cover the full cross product.
struct FuzzConfig {
  std::vector<std::string> parameters = {"num_nodes", "iteration_duration",
                                         "failure_chance"};
  int values_per_parameter = 3;
  int num_nodes_lo = 4;
  int num_nodes_hi = 20;
  double iteration_lo_ms = 10.0;
  double iteration_hi_ms = 30.0;
  double failure_lo = 0.0;
  double failure_hi = 1.0;
};

struct WorkflowConfig {
  int budget = 4;       // conformance loop iterations
  int walk_traces = 10; // model walks per iteration
  int walk_depth = 1000;
  std::string store_path;  // empty: environment override or default file
  bool all_violations = false;
  int jobs = 1;  // worker threads for the fuzz grid
};

// Model sizing for workflows that start from the abstract side.
struct ModelSection {
  int nodes = 4;
  std::vector<std::int64_t> stakes;  // empty means one per node
  int byzantine_count = 1;
};

struct HarnessConfig {
  SimConfig sim;
  FuzzConfig fuzz;
  ModelSection model;
  MappingTable mapping = MappingTable::defaults();
  WorkflowConfig workflow;
  std::vector<std::string> metrics = all_metric_names();
  std::string seeded_violation;  // empty or a violation id from the registry

  // Model configuration for walks and replays: model sizing plus the bounds
  // shared with the simulator, with any model-side seeded defect applied.
  ModelConfig walk_model_config() const;
  ViolationFlags impl_flags() const { return impl_flags_for(seeded_violation); }
  nlohmann::json to_json() const;
  std::string config_id() const;
};

void validate_harness_config(const HarnessConfig& cfg);

HarnessConfig default_harness_config();
HarnessConfig harness_config_from_json(const nlohmann::json& j);
HarnessConfig load_config_file(const std::string& path);

}  // namespace fmdse
