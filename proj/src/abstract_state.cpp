#include "fmdse/abstract_state.hpp"

#include <algorithm>
#include <cassert>

namespace fmdse {

std::string node_id_for_index(int index) { return "P" + std::to_string(index + 1); }

const std::string* NodeView::ref_at(Round r, int creator) const {
  auto rit = dag.find(r);
  if (rit == dag.end()) return nullptr;
  auto cit = rit->second.find(creator);
  if (cit == rit->second.end()) return nullptr;
  return &cit->second;
}

int AbstractState::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return int(i);
  }
  return -1;
}

bool AbstractState::is_faulty(const std::string& id) const {
  return std::find(faulty.begin(), faulty.end(), id) != faulty.end();
}

std::string vertex_ref(const std::string& creator, Round round,
                       const std::vector<std::string>& parents, std::int64_t salt) {
  assert(std::is_sorted(parents.begin(), parents.end()));
  std::string buf = "vx1|";
  buf += creator;
  buf += '|';
  buf += std::to_string(round);
  buf += '|';
  for (const auto& p : parents) {
    buf += p;
    buf += ',';
  }
  buf += '|';
  buf += std::to_string(salt);
  return sha256_hex(buf);
}

std::string node_chunk_bytes(const NodeView& n, bool sentinel_leaders) {
  std::string buf = "n=";
  buf += n.id;
  buf += ";r=";
  buf += std::to_string(n.round);
  buf += ";d={";
  for (const auto& [round, row] : n.dag) {
    buf += std::to_string(round);
    buf += ':';
    for (const auto& [creator, ref] : row) {
      buf += std::to_string(creator);
      buf += '=';
      buf += ref;
      buf += ';';
    }
  }
  buf += "};L={";
  if (sentinel_leaders) {
    // One slot per wave the node has lived through, decided or not.
    const Wave elapsed = n.round / 2;
    for (Wave w = 1; w <= elapsed; ++w) {
      buf += std::to_string(w);
      buf += ':';
      if (std::size_t(w) <= n.leaders.size() && n.leaders[w - 1].first == w) {
        buf += n.leaders[w - 1].second;
      } else {
        buf += '-';
      }
      buf += ';';
    }
    for (const auto& [w, ref] : n.leaders) {
      if (w > elapsed) {
        buf += std::to_string(w);
        buf += ':';
        buf += ref;
        buf += ';';
      }
    }
  } else {
    for (const auto& [w, ref] : n.leaders) {
      buf += std::to_string(w);
      buf += ':';
      buf += ref;
      buf += ';';
    }
  }
  buf += '}';
  return buf;
}

std::string state_digest(const AbstractState& s, bool sentinel_leaders) {
  StateDigester d(sentinel_leaders);
  return d.digest(s);
}

void StateDigester::invalidate(std::size_t node_index) {
  if (node_index < chunks_.size()) chunks_[node_index].reset();
}

std::string StateDigester::digest(const AbstractState& s) {
  chunks_.resize(s.nodes.size());
  Sha256Stream h;
  h.update("st1|N=");
  for (const auto& n : s.nodes) {
    h.update(n.id);
    h.update(",");
  }
  h.update("|F=");
  for (const auto& f : s.faulty) {
    h.update(f);
    h.update(",");
  }
  h.update("|");
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    if (!chunks_[i].has_value()) {
      chunks_[i] = sha256_hex(node_chunk_bytes(s.nodes[i], sentinel_leaders_));
    }
    h.update(*chunks_[i]);
    h.update("|");
  }
  return h.finish_hex();
}

}  // namespace fmdse
