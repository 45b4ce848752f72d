#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdse/config.hpp"
#include "fmdse/mapping.hpp"
#include "fmdse/model.hpp"
#include "fmdse/sim.hpp"
#include "fmdse/trace_store.hpp"

namespace fmdse {

// Discrepancy taxonomy: the model rejects an observed trace (TypeI), the
// implementation cannot execute or diverges from a model trace (TypeII), or
// a safety property fails on the running system (Prop).
enum class ViolationClass { TypeI, TypeII, Prop };

std::string violation_class_name(ViolationClass c);

ViolationClass classify_abstraction_failure(const SafetyFinding& safety,
                                            const AcceptResult& accept);
ViolationClass classify_replay_failure(const ReplayResult& replay);

struct ViolationReport {
  ViolationClass cls = ViolationClass::TypeI;
  std::string workflow;  // "I" or "II"
  std::size_t step = 0;
  std::string summary;
  std::string detail;
  std::string combo_desc;  // workflow I: the fuzzed parameter values
  std::uint64_t seed = 0;
  Trace evidence;  // abstract trace
  std::string evidence_hash;

  nlohmann::json to_json() const;
};

struct GridCombo {
  SimConfig sim;
  std::size_t index = 0;
  std::string desc;
};

// Draws values_per_parameter values for every fuzzed parameter (in listed
// order) from the iteration seed, then expands the full cross product in
// lexicographic order. Fuzzing num_nodes re-derives number_faulty as the
// largest f with 3f < n.
std::vector<GridCombo> expand_grid(const HarnessConfig& cfg,
                                   std::uint64_t iteration_seed);

struct WorkflowStats {
  int runs = 0;
  int new_traces = 0;
  int duplicates = 0;
  int retries = 0;
};

struct WorkflowOutcome {
  std::vector<ViolationReport> violations;
  WorkflowStats stats;
  bool exhausted = false;
};

// Trace generation: free-runs the simulator over the fuzz grid, checks the
// safety properties live and the abstracted trace against the model, and
// inserts fresh trace hashes as one batch. Stops the batch at the first
// violation unless all_violations is set.
WorkflowOutcome run_workflow_one(const HarnessConfig& cfg, TraceStore& store,
                                 std::uint64_t iteration_seed, bool all_violations);

// Model exploration: random-walks the model, skips trace hashes already in
// the store (bounded retries per slot), and replays fresh traces in the
// implementation.
WorkflowOutcome run_workflow_two(const HarnessConfig& cfg, TraceStore& store,
                                 std::uint64_t iteration_seed, bool all_violations);

struct IterationReport {
  int index = 0;
  std::string workflow;
  WorkflowStats stats;
  int violations = 0;
  bool exhausted = false;
};

struct ConfTestReport {
  std::vector<IterationReport> iterations;
  std::vector<ViolationReport> violations;
  std::size_t store_initial = 0;
  std::size_t store_final = 0;
  bool exhausted = false;

  bool any_violation() const { return !violations.empty(); }
  nlohmann::json to_json(const HarnessConfig& cfg) const;
};

// The conformance loop: alternates the two workflows against a shared trace
// store, starting with trace generation, until the budget is spent, coverage
// is exhausted, or a violation is found (with all_violations, the loop keeps
// going and reports everything).
ConfTestReport conf_test(const HarnessConfig& cfg, TraceStore& store);

}  // namespace fmdse
