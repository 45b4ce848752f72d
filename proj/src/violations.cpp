#include "fmdse/violations.hpp"

#include <stdexcept>

#include "fmdse/model.hpp"

namespace fmdse {

const std::vector<SeededViolation>& violation_registry() {
  static const std::vector<SeededViolation> kRegistry = {
      {"V1", "model", "type-I", "3 values, 1 batch",
       "Rounds indexed from 0 instead of 1 in the model or implementation; the "
       "disagreement starts at the genesis placement and every digest after it."},
      {"V2", "model", "type-I", "3 values, 1 batch",
       "Wave-to-round arithmetic off by one: the model looks for the wave leader "
       "in round 2w instead of 2w-1, so commits observed in traces are rejected."},
      {"V3", "implementation", "type-I", "3 values, 2 batches",
       "Duplicate deliveries are counted twice toward the round quorum and "
       "re-incorporated, producing a receive step the model refuses."},
      {"V4", "model", "type-I", "3 values, 1 batch",
       "The model digests undecided leader slots as explicit placeholders, so "
       "every state digest disagrees with the implementation projection."},
      {"V5", "implementation", "type-II", "10 traces, depth 1000",
       "Node admission is unimplemented: model walks that reconfigure produce an "
       "action the implementation cannot execute."},
      {"V6", "implementation", "prop", "3 values, 2 batches",
       "Committed blocks are linearized in a node-local shuffled order, breaking "
       "block digest agreement between honest nodes."},
      {"V7", "implementation", "type-I", "3 values, 1 batch",
       "Leader election computes (w-2) mod n on an unsigned index, so wave 1 "
       "elects the wrong leader and the first commit diverges."},
      {"V8", "implementation", "type-I", "3 values, 1 batch",
       "Vertices from future rounds are incorporated immediately instead of "
       "buffered, which surfaces once an admitted node catches up."},
      {"V9", "implementation", "type-I", "3 values, 1 batch",
       "New vertices reference the parent row as it looked on the previous timer "
       "tick, so the created vertex disagrees with the current view."},
      {"V10", "implementation", "type-II", "10 traces, depth 1000",
       "Equivocation is treated as impossible: conflicting vertices overwrite "
       "the slot and deliberate duplicate creation is unsupported."},
  };
  return kRegistry;
}

const SeededViolation* find_violation(const std::string& id) {
  for (const auto& v : violation_registry()) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

ViolationFlags impl_flags_for(const std::string& id) {
  ViolationFlags f;
  if (id.empty()) return f;
  if (id == "V1") {
    f.zero_indexed_rounds = true;
  } else if (id == "V3") {
    f.double_count_duplicates = true;
  } else if (id == "V5") {
    f.no_reconfigure_support = true;
  } else if (id == "V6") {
    f.shuffled_linearization = true;
  } else if (id == "V7") {
    f.election_underflow = true;
  } else if (id == "V8") {
    f.no_future_buffering = true;
  } else if (id == "V9") {
    f.stale_parent_view = true;
  } else if (id == "V10") {
    f.no_equivocation_support = true;
  } else if (id != "V2" && id != "V4") {
    throw std::invalid_argument("unknown seeded violation id: " + id);
  }
  return f;
}

void apply_model_violation(ModelConfig& cfg, const std::string& id) {
  if (id == "V2") {
    cfg.wave_off_by_one = true;
  } else if (id == "V4") {
    cfg.sentinel_leaders = true;
  }
}

}  // namespace fmdse
