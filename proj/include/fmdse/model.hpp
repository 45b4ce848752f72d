#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fmdse/abstract_state.hpp"
#include "fmdse/actions.hpp"
#include "fmdse/trace.hpp"

namespace fmdse {

struct ModelConfig {
  std::vector<std::string> node_set;   // fixed ordering; leader rotation follows it
  std::vector<std::int64_t> stakes;    // parallel to node_set, all positive
  std::vector<std::string> byzantine;  // subset of node_set
  Round round_bound = 30;
  Round reconfigure_round = 10;
  bool reconfigure_enabled = true;

  // Seeded specification-side defects. Exactly one may be active.
  bool wave_off_by_one = false;    // waves ignore the genesis round
  bool sentinel_leaders = false;   // digests carry slots for undecided waves
};

// Throws std::invalid_argument on inconsistent configs (duplicate ids,
// non-positive stakes, byzantine stake not strictly below one third, ...).
void validate_model_config(const ModelConfig& cfg);

// Minimal integer threshold t with 3t > 2 * total stake. Fixed at init; the
// node admitted by Reconfigure never changes it.
std::int64_t quorum_stake(const ModelConfig& cfg);
bool is_quorum(const ModelConfig& cfg, std::int64_t stake_sum);

// Round-robin over the configured node list, stake-independent. Waves are
// 1-indexed; an admitted node never leads.
std::string elect_leader(Wave w, const ModelConfig& cfg);

// Wave w spans rounds (leader_round, leader_round + 1).
Round leader_round(Wave w, const ModelConfig& cfg);

struct VertexRecord {
  std::string creator;
  Round round = 0;
  std::vector<std::string> parents;  // sorted refs
  std::int64_t salt = 0;
};

struct ModelState {
  AbstractState abs;
  // Bookkeeping outside the digested state.
  std::map<std::string, VertexRecord> vertices;  // ref -> record
  std::map<std::pair<std::string, Round>, std::vector<std::string>> created;
  std::vector<bool> pending_create;  // aligned with abs.nodes
  std::map<std::string, std::int64_t> stake_by_id;  // includes admitted node
  bool reconfigured = false;

  std::int64_t stake_of(const std::string& id) const;
  const std::vector<std::string>* variants(const std::string& creator, Round r) const;
};

ModelState model_init(const ModelConfig& cfg);

// Empty string when the action's precondition holds in s; otherwise a reason.
std::string action_guard(const ModelState& s, const ModelConfig& cfg, const Action& a);

inline constexpr int kTouchedNone = -1;
inline constexpr int kTouchedAll = -2;

struct ApplyResult {
  bool ok = false;
  std::string error;
  int touched_node = kTouchedNone;
};

// Guard check plus in-place transition. The state is unchanged on failure.
ApplyResult apply_action(ModelState& s, const ModelConfig& cfg, const Action& a);

// All enabled actions in canonical enumeration order (stable across runs).
std::vector<Action> enabled_actions(const ModelState& s, const ModelConfig& cfg);

// Uniform random walk over enabled actions: n traces, each stopping at depth
// d or when nothing is enabled. Traces carry post_state snapshots.
std::vector<Trace> model_random_walk(const ModelConfig& cfg, int n, int d,
                                     std::uint64_t seed);

enum class RejectKind {
  None,
  InitDigestMismatch,
  GuardFailure,
  DigestMismatch,
};

struct AcceptResult {
  bool accepted = false;
  RejectKind kind = RejectKind::None;
  std::size_t step = 0;  // 0 = init, otherwise 1-based step index
  std::string detail;
  std::string expected_digest;
  std::string got_digest;
};

// Replays an abstract trace from the initial state, rejecting on the first
// disabled action or digest mismatch. Throws on malformed input.
AcceptResult accept_trace(const ModelConfig& cfg, const Trace& t);

struct InvariantReport {
  bool leader_consistency = true;
  bool leader_monotonicity = true;
  bool dag_consistency = true;
  std::optional<std::size_t> violation_step;
  std::string detail;

  bool all_hold() const {
    return leader_consistency && leader_monotonicity && dag_consistency;
  }
};

// Safety check over every post state of t. States come from embedded
// post_state fields when present, otherwise from replaying the actions.
InvariantReport check_invariants(const ModelConfig& cfg, const Trace& t);

// Evaluates the three safety clauses on one state; used both by the model
// checker and by the simulator's live monitor.
InvariantReport check_state_invariants(const AbstractState& s);

std::string model_config_id(const ModelConfig& cfg);

}  // namespace fmdse
