#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fmdse/abstract_state.hpp"
#include "fmdse/violations.hpp"

namespace fmdse {

// Concrete DAG vertex. The id is content-derived, so equal content implies
// equal id on every node.
struct Vertex {
  std::string id;
  std::string creator;
  Round round = 0;
  std::vector<std::string> parents;  // sorted ascending
  std::int64_t salt = 0;
};

Vertex make_vertex(const std::string& creator, Round round,
                   std::vector<std::string> parents, std::int64_t salt);

struct CommitRecord {
  Wave wave = 0;
  std::string leader_id;
  std::vector<std::string> order;  // linearized vertex ids, leader last or inside
  std::string block_digest;
  std::int64_t time_us = 0;
};

std::string block_digest_for(Wave wave, const std::vector<std::string>& order);

// Deterministic linearization of the leader's uncovered causal history,
// sorted by (round, creator index, vertex id). Used by live nodes and by the
// trace-based metrics reconstruction so both sides agree on coverage.
std::vector<std::string> linearize_history(
    const std::string& leader_id,
    const std::function<const Vertex*(const std::string&)>& resolve,
    const std::function<int(const std::string&)>& creator_index,
    const std::unordered_set<std::string>& covered);

enum class DeliverKind {
  Incorporated,
  Buffered,
  DuplicateIgnored,
  DuplicateDoubleCounted,
  ConflictIgnored,
  ConflictReplaced,
  Rejected,
};

struct DeliverOutcome {
  DeliverKind kind = DeliverKind::Rejected;
  std::string detail;
};

// One protocol participant. The node holds only protocol state; scheduling,
// transport, logging and fault injection live in the simulator, which calls
// these entry points either from its event loop or from a trace replayer.
class ConsensusNode {
 public:
  // ids/stakes cover every node this one knows at construction (an admitted
  // node is built with itself appended); election_count pins leader election
  // to the initially configured prefix on every node.
  ConsensusNode(int index, std::vector<std::string> ids,
                std::vector<std::int64_t> stakes, std::size_t election_count,
                std::int64_t threshold, Round round_bound, ViolationFlags flags);

  const std::string& id() const { return ids_[static_cast<std::size_t>(index_)]; }
  int index() const { return index_; }
  Round current_round() const { return round_; }
  Round genesis_round() const { return genesis_round_; }
  bool pending_create() const { return pending_create_; }
  const Vertex& genesis() const { return genesis_; }
  const std::vector<CommitRecord>& commits() const { return commits_; }
  std::int64_t equivocations_seen() const { return equivocations_seen_; }
  std::int64_t rejected_count() const { return rejected_count_; }
  std::size_t buffered_count() const;
  std::size_t peer_count() const { return ids_.size(); }
  const std::vector<std::string>& peer_ids() const { return ids_; }

  // Stake accumulated at the node's current round (test and guard surface).
  std::int64_t counted_stake_at(Round r) const;

  bool can_advance() const;
  // Moves to the next round and arms vertex creation. Returns false when the
  // quorum, bound, or pending-create guard refuses.
  bool advance();
  // Builds and self-incorporates the armed vertex. Empty when not armed.
  std::optional<Vertex> create_pending();

  DeliverOutcome deliver(const Vertex& v);
  // Incorporates buffered vertices that became eligible, in (round, creator)
  // order, and returns them for logging.
  std::vector<Vertex> drain_buffer();

  // Commits the next wave if its leader and support quorum are present.
  std::optional<CommitRecord> try_commit_next(std::int64_t now_us);
  Wave next_wave() const { return static_cast<Wave>(commits_.size()) + 1; }
  std::string leader_for_wave(Wave w) const;
  Round leader_round_for_wave(Wave w) const;

  // Duplicates the node's own vertex at round r with a bumped salt. Empty when
  // unsupported or when the node has not created at r.
  std::optional<Vertex> make_equivocation(Round r);

  bool supports_reconfigure() const { return !flags_.no_reconfigure_support; }
  bool supports_equivocation() const { return !flags_.no_equivocation_support; }
  void admit_peer(const std::string& id, std::int64_t stake);

  // Records the view used by stale-parent vertex creation; the simulator
  // calls this at the end of each timer tick.
  void end_tick_snapshot();

  const Vertex* find_seen(const std::string& id) const;
  const Vertex* slot(Round r, int creator_idx) const;
  // Abstract projection of the node-local DAG and commit list.
  NodeView view_snapshot() const;

 private:
  struct SlotKey {
    Round round;
    int creator;
    bool operator<(const SlotKey& o) const {
      if (round != o.round) return round < o.round;
      return creator < o.creator;
    }
  };

  int creator_index_of(const std::string& creator) const;
  void incorporate(const Vertex& v);
  std::vector<std::string> linearize_for_commit(Wave w, const std::string& leader_id);

  int index_;
  std::vector<std::string> ids_;
  std::vector<std::int64_t> stakes_;
  std::size_t election_count_;
  std::int64_t threshold_;
  Round round_bound_;
  ViolationFlags flags_;

  Round genesis_round_;
  Round round_;
  bool pending_create_ = false;
  Vertex genesis_;

  std::map<SlotKey, Vertex> dag_;
  std::map<SlotKey, Vertex> buffer_;
  std::map<Round, std::int64_t> counted_stake_;
  std::unordered_map<std::string, Vertex> seen_;
  std::unordered_set<std::string> delivered_ids_;
  std::unordered_set<std::string> covered_;
  std::vector<CommitRecord> commits_;
  std::int64_t equivocations_seen_ = 0;
  std::int64_t rejected_count_ = 0;
  std::set<Round> equivocated_rounds_;

  // Stale-view bookkeeping: the parent row of the node's round as it looked
  // when the previous tick ended.
  Round stale_row_round_ = -1;
  std::map<int, Vertex> stale_row_;
};

}  // namespace fmdse
