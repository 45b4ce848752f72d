#pragma once

#include <string>
#include <vector>

namespace fmdse {

struct ModelConfig;

// Implementation-side defect switches. At most one is ever set; all are
// inert by default and leave the correct code paths untouched when false.
struct ViolationFlags {
  bool zero_indexed_rounds = false;     // rounds and genesis numbered from 0
  bool double_count_duplicates = false; // duplicate deliveries count toward quorum
  bool no_reconfigure_support = false;  // node admission not implemented
  bool shuffled_linearization = false;  // per-node shuffled block order
  bool election_underflow = false;      // unsigned wrap in the leader index
  bool no_future_buffering = false;     // future-round vertices taken immediately
  bool stale_parent_view = false;       // vertex built from the previous tick's view
  bool no_equivocation_support = false; // conflicting vertex overwrites the slot

  bool any() const {
    return zero_indexed_rounds || double_count_duplicates || no_reconfigure_support ||
           shuffled_linearization || election_underflow || no_future_buffering ||
           stale_parent_view || no_equivocation_support;
  }
};

// Catalog of the ten seeded defects the harness can reproduce on demand.
// site marks where the fix belongs, expected_class the discrepancy category
// the conformance loop reports, and min_workflow the smallest fuzz
// configuration (grid values/batches, or traces/depth) that exposed it.
struct SeededViolation {
  std::string id;              // "V1" .. "V10"
  std::string site;            // "model" | "implementation" | "simulator"
  std::string expected_class;  // "type-I" | "type-II" | "prop"
  std::string min_workflow;
  std::string description;
};

const std::vector<SeededViolation>& violation_registry();
const SeededViolation* find_violation(const std::string& id);

// Translates a violation id into the defect switches. Empty and model-side
// ids yield pristine flags; unknown ids throw std::invalid_argument.
ViolationFlags impl_flags_for(const std::string& id);

// Model-side defects (V2, V4) toggle flags on the model config instead.
void apply_model_violation(ModelConfig& cfg, const std::string& id);

}  // namespace fmdse
