#include "fmdse/consensus.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "fmdse/digest.hpp"
#include "fmdse/rng.hpp"

namespace fmdse {

Vertex make_vertex(const std::string& creator, Round round,
                   std::vector<std::string> parents, std::int64_t salt) {
  std::sort(parents.begin(), parents.end());
  Vertex v;
  v.creator = creator;
  v.round = round;
  v.parents = std::move(parents);
  v.salt = salt;
  v.id = vertex_ref(v.creator, v.round, v.parents, v.salt);
  return v;
}

std::string block_digest_for(Wave wave, const std::vector<std::string>& order) {
  Sha256Stream h;
  h.update("blk1|");
  h.update(std::to_string(wave));
  for (const auto& id : order) {
    h.update("|");
    h.update(id);
  }
  return h.finish_hex();
}

std::vector<std::string> linearize_history(
    const std::string& leader_id,
    const std::function<const Vertex*(const std::string&)>& resolve,
    const std::function<int(const std::string&)>& creator_index,
    const std::unordered_set<std::string>& covered) {
  std::vector<std::string> stack{leader_id};
  std::unordered_set<std::string> visited;
  std::vector<const Vertex*> collected;
  while (!stack.empty()) {
    std::string id = std::move(stack.back());
    stack.pop_back();
    if (covered.count(id) || visited.count(id)) continue;
    visited.insert(id);
    const Vertex* v = resolve(id);
    // A reference the node cannot resolve lies outside its local view; the
    // block covers only the visible portion of the leader's history.
    if (v == nullptr) continue;
    collected.push_back(v);
    for (const auto& p : v->parents) stack.push_back(p);
  }
  std::sort(collected.begin(), collected.end(),
            [&](const Vertex* a, const Vertex* b) {
              if (a->round != b->round) return a->round < b->round;
              int ca = creator_index(a->creator);
              int cb = creator_index(b->creator);
              if (ca != cb) return ca < cb;
              return a->id < b->id;
            });
  std::vector<std::string> order;
  order.reserve(collected.size());
  for (const Vertex* v : collected) order.push_back(v->id);
  return order;
}

ConsensusNode::ConsensusNode(int index, std::vector<std::string> ids,
                             std::vector<std::int64_t> stakes,
                             std::size_t election_count, std::int64_t threshold,
                             Round round_bound, ViolationFlags flags)
    : index_(index),
      ids_(std::move(ids)),
      stakes_(std::move(stakes)),
      election_count_(election_count),
      threshold_(threshold),
      round_bound_(round_bound),
      flags_(flags) {
  if (index_ < 0 || static_cast<std::size_t>(index_) >= ids_.size()) {
    throw std::invalid_argument("node index out of range");
  }
  if (ids_.size() != stakes_.size()) {
    throw std::invalid_argument("ids and stakes must have equal length");
  }
  if (election_count_ == 0 || election_count_ > ids_.size()) {
    throw std::invalid_argument("election count out of range");
  }
  genesis_round_ = flags_.zero_indexed_rounds ? 0 : 1;
  round_ = genesis_round_;
  genesis_ = make_vertex(id(), genesis_round_, {}, 0);
  incorporate(genesis_);
  delivered_ids_.insert(genesis_.id);
}

std::size_t ConsensusNode::buffered_count() const { return buffer_.size(); }

std::int64_t ConsensusNode::counted_stake_at(Round r) const {
  auto it = counted_stake_.find(r);
  return it == counted_stake_.end() ? 0 : it->second;
}

int ConsensusNode::creator_index_of(const std::string& creator) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == creator) return static_cast<int>(i);
  }
  return -1;
}

bool ConsensusNode::can_advance() const {
  if (pending_create_) return false;
  if (round_ >= round_bound_) return false;
  return counted_stake_at(round_) >= threshold_;
}

bool ConsensusNode::advance() {
  if (!can_advance()) return false;
  round_ += 1;
  pending_create_ = true;
  return true;
}

std::optional<Vertex> ConsensusNode::create_pending() {
  if (!pending_create_) return std::nullopt;
  Round parent_round = round_ - 1;
  std::vector<std::string> parents;
  if (flags_.stale_parent_view && stale_row_round_ == parent_round) {
    for (const auto& [ci, v] : stale_row_) {
      (void)ci;
      parents.push_back(v.id);
    }
  } else {
    auto it = dag_.lower_bound(SlotKey{parent_round, 0});
    for (; it != dag_.end() && it->first.round == parent_round; ++it) {
      parents.push_back(it->second.id);
    }
  }
  Vertex v = make_vertex(id(), round_, std::move(parents), 0);
  pending_create_ = false;
  incorporate(v);
  delivered_ids_.insert(v.id);
  return v;
}

DeliverOutcome ConsensusNode::deliver(const Vertex& v) {
  // Structural validation: content-derived id, plausible round, genesis
  // shape. Anything else is dropped without touching state.
  std::vector<std::string> sorted_parents = v.parents;
  std::sort(sorted_parents.begin(), sorted_parents.end());
  if (v.id != vertex_ref(v.creator, v.round, sorted_parents, v.salt)) {
    ++rejected_count_;
    return {DeliverKind::Rejected, "id does not match content"};
  }
  if (v.round < genesis_round_) {
    ++rejected_count_;
    return {DeliverKind::Rejected, "round below genesis"};
  }
  if ((v.round == genesis_round_) != v.parents.empty()) {
    ++rejected_count_;
    return {DeliverKind::Rejected, "parent list malformed for round"};
  }
  int ci = creator_index_of(v.creator);
  if (ci < 0) {
    ++rejected_count_;
    return {DeliverKind::Rejected, "unknown creator"};
  }

  if (delivered_ids_.count(v.id)) {
    if (flags_.double_count_duplicates) {
      counted_stake_[v.round] += stakes_[static_cast<std::size_t>(ci)];
      return {DeliverKind::DuplicateDoubleCounted, ""};
    }
    return {DeliverKind::DuplicateIgnored, ""};
  }

  SlotKey key{v.round, ci};
  auto in_dag = dag_.find(key);
  auto in_buf = buffer_.find(key);
  if ((in_dag != dag_.end() && in_dag->second.id != v.id) ||
      (in_buf != buffer_.end() && in_buf->second.id != v.id)) {
    seen_.emplace(v.id, v);
    delivered_ids_.insert(v.id);
    if (flags_.no_equivocation_support) {
      // Conflicts are assumed impossible: the newcomer clobbers the slot and
      // its stake is counted again.
      if (in_dag != dag_.end()) {
        in_dag->second = v;
        counted_stake_[v.round] += stakes_[static_cast<std::size_t>(ci)];
        return {DeliverKind::ConflictReplaced, ""};
      }
      in_buf->second = v;
      return {DeliverKind::ConflictReplaced, "buffered slot replaced"};
    }
    ++equivocations_seen_;
    return {DeliverKind::ConflictIgnored, ""};
  }

  if (!flags_.no_future_buffering && v.round > round_ + 1) {
    buffer_.emplace(key, v);
    seen_.emplace(v.id, v);
    delivered_ids_.insert(v.id);
    return {DeliverKind::Buffered, ""};
  }

  incorporate(v);
  delivered_ids_.insert(v.id);
  return {DeliverKind::Incorporated, ""};
}

void ConsensusNode::incorporate(const Vertex& v) {
  int ci = creator_index_of(v.creator);
  SlotKey key{v.round, ci};
  auto [it, fresh] = dag_.emplace(key, v);
  (void)it;
  if (fresh) {
    counted_stake_[v.round] += stakes_[static_cast<std::size_t>(ci)];
  }
  seen_.emplace(v.id, v);
}

std::vector<Vertex> ConsensusNode::drain_buffer() {
  std::vector<Vertex> drained;
  auto it = buffer_.begin();
  while (it != buffer_.end()) {
    if (it->first.round <= round_ + 1) {
      drained.push_back(it->second);
      incorporate(it->second);
      it = buffer_.erase(it);
    } else {
      ++it;
    }
  }
  return drained;
}

std::string ConsensusNode::leader_for_wave(Wave w) const {
  std::size_t li;
  if (flags_.election_underflow) {
    li = static_cast<std::size_t>(static_cast<std::uint64_t>(w) - 2) % election_count_;
  } else {
    li = static_cast<std::size_t>(w - 1) % election_count_;
  }
  return ids_[li];
}

Round ConsensusNode::leader_round_for_wave(Wave w) const {
  return genesis_round_ + 2 * (w - 1);
}

std::optional<CommitRecord> ConsensusNode::try_commit_next(std::int64_t now_us) {
  Wave w = next_wave();
  Round lr = leader_round_for_wave(w);
  std::string leader = leader_for_wave(w);
  int li = creator_index_of(leader);
  const Vertex* lv = slot(lr, li);
  if (lv == nullptr) return std::nullopt;

  std::int64_t support = 0;
  auto it = dag_.lower_bound(SlotKey{lr + 1, 0});
  for (; it != dag_.end() && it->first.round == lr + 1; ++it) {
    const Vertex& sv = it->second;
    if (std::find(sv.parents.begin(), sv.parents.end(), lv->id) != sv.parents.end()) {
      support += stakes_[static_cast<std::size_t>(it->first.creator)];
    }
  }
  if (support < threshold_) return std::nullopt;

  CommitRecord rec;
  rec.wave = w;
  rec.leader_id = lv->id;
  rec.order = linearize_for_commit(w, lv->id);
  rec.block_digest = block_digest_for(w, rec.order);
  rec.time_us = now_us;
  for (const auto& vid : rec.order) covered_.insert(vid);
  commits_.push_back(rec);
  return rec;
}

std::vector<std::string> ConsensusNode::linearize_for_commit(
    Wave w, const std::string& leader_id) {
  auto resolve = [this](const std::string& vid) { return find_seen(vid); };
  auto cidx = [this](const std::string& creator) { return creator_index_of(creator); };
  std::vector<std::string> order = linearize_history(leader_id, resolve, cidx, covered_);
  if (flags_.shuffled_linearization && order.size() > 1) {
    Rng rng(mix_seed(0x6c696e736866ULL + static_cast<std::uint64_t>(index_) * 1009ULL,
                     static_cast<std::uint64_t>(w)));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      auto j = static_cast<std::size_t>(
          rng.next_int(0, static_cast<std::int64_t>(i)));
      std::swap(order[i], order[j]);
    }
  }
  return order;
}

std::optional<Vertex> ConsensusNode::make_equivocation(Round r) {
  if (flags_.no_equivocation_support) return std::nullopt;
  if (equivocated_rounds_.count(r)) return std::nullopt;
  const Vertex* own = slot(r, index_);
  if (own == nullptr) return std::nullopt;
  Vertex twin = make_vertex(id(), r, own->parents, own->salt + 1);
  equivocated_rounds_.insert(r);
  seen_.emplace(twin.id, twin);
  return twin;
}

void ConsensusNode::admit_peer(const std::string& peer_id, std::int64_t stake) {
  if (creator_index_of(peer_id) >= 0) {
    throw std::invalid_argument("peer already known: " + peer_id);
  }
  ids_.push_back(peer_id);
  stakes_.push_back(stake);
}

void ConsensusNode::end_tick_snapshot() {
  stale_row_round_ = round_;
  stale_row_.clear();
  auto it = dag_.lower_bound(SlotKey{round_, 0});
  for (; it != dag_.end() && it->first.round == round_; ++it) {
    stale_row_.emplace(it->first.creator, it->second);
  }
}

const Vertex* ConsensusNode::find_seen(const std::string& vid) const {
  auto it = seen_.find(vid);
  return it == seen_.end() ? nullptr : &it->second;
}

const Vertex* ConsensusNode::slot(Round r, int creator_idx) const {
  auto it = dag_.find(SlotKey{r, creator_idx});
  return it == dag_.end() ? nullptr : &it->second;
}

NodeView ConsensusNode::view_snapshot() const {
  NodeView view;
  view.id = id();
  view.round = round_;
  for (const auto& [key, v] : dag_) {
    view.dag[key.round][key.creator] = v.id;
  }
  for (const auto& rec : commits_) {
    view.leaders.emplace_back(rec.wave, rec.leader_id);
  }
  return view;
}

}  // namespace fmdse
