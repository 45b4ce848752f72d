#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fmdse/digest.hpp"

namespace fmdse {

using Round = std::int64_t;
using Wave = std::int64_t;

std::string node_id_for_index(int index);

// One node's view of the protocol: its current round, the vertices it has
// incorporated per (round, creator), and its committed leader sequence.
struct NodeView {
  std::string id;
  Round round = 1;
  // round -> creator index -> vertex ref. Only populated slots are stored.
  std::map<Round, std::map<int, std::string>> dag;
  // (wave, leader vertex ref), waves contiguous from 1.
  std::vector<std::pair<Wave, std::string>> leaders;

  const std::string* ref_at(Round r, int creator) const;
};

struct AbstractState {
  std::vector<NodeView> nodes;      // configured order; admitted node appended
  std::vector<std::string> faulty;  // ids, in configured order

  int node_index(const std::string& id) const;  // -1 when unknown
  bool is_faulty(const std::string& id) const;
};

// Content-addressed vertex identity, shared by the abstract machine and the
// running implementation. parents must be sorted ascending.
std::string vertex_ref(const std::string& creator, Round round,
                       const std::vector<std::string>& parents, std::int64_t salt);

// Canonical state digest: per-node chunks serialized with keys ascending and
// hashed, then combined with the node list and faulty set. sentinel_leaders
// renders one leader slot per elapsed wave, with a placeholder for waves not
// yet decided, instead of only the committed entries.
std::string node_chunk_bytes(const NodeView& n, bool sentinel_leaders);
std::string state_digest(const AbstractState& s, bool sentinel_leaders = false);

// Incremental digest helper: recomputes only chunks invalidated since the
// last call. The caller owns the state and reports which nodes changed.
class StateDigester {
 public:
  explicit StateDigester(bool sentinel_leaders = false)
      : sentinel_leaders_(sentinel_leaders) {}

  void invalidate(std::size_t node_index);
  void invalidate_all() { chunks_.clear(); }
  std::string digest(const AbstractState& s);

 private:
  bool sentinel_leaders_;
  std::vector<std::optional<std::string>> chunks_;
};

}  // namespace fmdse
