#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdse/trace.hpp"
#include "fmdse/violations.hpp"

namespace fmdse {

// Performance counters for one simulator run. Latency figures are reported
// in milliseconds of virtual time; tps counts distinct committed vertices
// per virtual second.
struct MetricsRecord {
  double ttf_mean_ms = 0.0;
  double ttf_p50_ms = 0.0;
  double ttf_p99_ms = 0.0;
  double tps = 0.0;
  std::int64_t vertex_count = 0;
  std::int64_t round_reached = 0;
  std::int64_t equivocations_seen = 0;
  std::int64_t crashes = 0;
  std::int64_t committed_vertices = 0;
  std::int64_t duration_us = 0;

  bool operator==(const MetricsRecord&) const = default;
};

// Known metric names, in report order.
const std::vector<std::string>& all_metric_names();
bool is_metric_name(const std::string& name);

// Serializes the record keeping only the enabled metrics.
nlohmann::json metrics_to_json(const MetricsRecord& m,
                               const std::vector<std::string>& enabled);

// Helper shared by the simulator and the reconstruction below: nearest-rank
// percentile over an unsorted sample set.
double percentile_nearest_rank(std::vector<double> samples, double pct);

// Rebuilds the full metrics record from a concrete trace alone. The trace
// carries vertex content and virtual timestamps in its action parameters;
// node identities and genesis placement come from the configured node count
// plus any admission step found in the trace.
MetricsRecord metrics_from_concrete_trace(const Trace& concrete, int num_nodes,
                                          ViolationFlags flags);

}  // namespace fmdse
