#include "fmdse/model.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "fmdse/rng.hpp"

namespace fmdse {

namespace {

std::int64_t total_stake(const ModelConfig& cfg) {
  return std::accumulate(cfg.stakes.begin(), cfg.stakes.end(), std::int64_t(0));
}

std::int64_t byzantine_stake(const ModelConfig& cfg) {
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < cfg.node_set.size(); ++i) {
    if (std::find(cfg.byzantine.begin(), cfg.byzantine.end(), cfg.node_set[i]) !=
        cfg.byzantine.end()) {
      sum += cfg.stakes[i];
    }
  }
  return sum;
}

// Stake held by p at round r, counting each creator slot once.
std::int64_t row_stake(const ModelState& s, int p_idx, Round r) {
  const auto& view = s.abs.nodes[p_idx];
  auto rit = view.dag.find(r);
  if (rit == view.dag.end()) return 0;
  std::int64_t sum = 0;
  for (const auto& [creator, ref] : rit->second) {
    (void)ref;
    sum += s.stake_of(s.abs.nodes[creator].id);
  }
  return sum;
}

// Stake of round-sr vertices in p's view whose parent set contains leader_ref.
std::int64_t support_stake(const ModelState& s, int p_idx, const std::string& leader_ref,
                           Round sr) {
  const auto& view = s.abs.nodes[p_idx];
  auto rit = view.dag.find(sr);
  if (rit == view.dag.end()) return 0;
  std::int64_t sum = 0;
  for (const auto& [creator, ref] : rit->second) {
    const auto& rec = s.vertices.at(ref);
    if (std::binary_search(rec.parents.begin(), rec.parents.end(), leader_ref)) {
      sum += s.stake_of(s.abs.nodes[creator].id);
    }
  }
  return sum;
}

void add_vertex(ModelState& s, const std::string& creator, Round r,
                std::vector<std::string> parents, std::int64_t salt, const std::string& ref) {
  s.vertices[ref] = VertexRecord{creator, r, std::move(parents), salt};
  s.created[{creator, r}].push_back(ref);
}

}  // namespace

void validate_model_config(const ModelConfig& cfg) {
  if (cfg.node_set.empty()) throw std::invalid_argument("model config: empty node set");
  if (cfg.node_set.size() != cfg.stakes.size()) {
    throw std::invalid_argument("model config: stakes must match node set");
  }
  std::set<std::string> seen;
  for (const auto& id : cfg.node_set) {
    if (id.empty()) throw std::invalid_argument("model config: empty node id");
    if (!seen.insert(id).second) {
      throw std::invalid_argument("model config: duplicate node id " + id);
    }
  }
  for (const auto st : cfg.stakes) {
    if (st <= 0) throw std::invalid_argument("model config: stakes must be positive");
  }
  for (const auto& b : cfg.byzantine) {
    if (seen.count(b) == 0) {
      throw std::invalid_argument("model config: byzantine node " + b + " not in node set");
    }
  }
  // Strictly below one third; equality is already unsound.
  if (3 * byzantine_stake(cfg) >= total_stake(cfg)) {
    throw std::invalid_argument("model config: byzantine stake must be under one third");
  }
  if (cfg.round_bound < 2) throw std::invalid_argument("model config: round bound too small");
  if (cfg.reconfigure_round < 1) {
    throw std::invalid_argument("model config: reconfigure round must be positive");
  }
  if (cfg.wave_off_by_one && cfg.sentinel_leaders) {
    throw std::invalid_argument("model config: violation flags are mutually exclusive");
  }
}

std::int64_t quorum_stake(const ModelConfig& cfg) {
  return (2 * total_stake(cfg)) / 3 + 1;
}

bool is_quorum(const ModelConfig& cfg, std::int64_t stake_sum) {
  return stake_sum >= quorum_stake(cfg);
}

std::string elect_leader(Wave w, const ModelConfig& cfg) {
  if (w < 1) throw std::invalid_argument("elect_leader: waves are 1-indexed");
  return cfg.node_set[std::size_t(w - 1) % cfg.node_set.size()];
}

Round leader_round(Wave w, const ModelConfig& cfg) {
  // Wave w normally spans rounds (2w-1, 2w); the off-by-one defect drops the
  // genesis round from wave 1 and shifts every wave up by one round.
  return 2 * w - 1 + (cfg.wave_off_by_one ? 1 : 0);
}

std::int64_t ModelState::stake_of(const std::string& id) const {
  auto it = stake_by_id.find(id);
  if (it == stake_by_id.end()) throw std::runtime_error("unknown node in stake lookup: " + id);
  return it->second;
}

const std::vector<std::string>* ModelState::variants(const std::string& creator, Round r) const {
  auto it = created.find({creator, r});
  if (it == created.end()) return nullptr;
  return &it->second;
}

ModelState model_init(const ModelConfig& cfg) {
  validate_model_config(cfg);
  ModelState s;
  for (std::size_t i = 0; i < cfg.node_set.size(); ++i) {
    NodeView view;
    view.id = cfg.node_set[i];
    view.round = 1;
    const std::string genesis = vertex_ref(view.id, 1, {}, 0);
    view.dag[1][int(i)] = genesis;
    s.abs.nodes.push_back(std::move(view));
    add_vertex(s, cfg.node_set[i], 1, {}, 0, genesis);
    s.stake_by_id[cfg.node_set[i]] = cfg.stakes[i];
  }
  for (const auto& id : cfg.node_set) {
    if (std::find(cfg.byzantine.begin(), cfg.byzantine.end(), id) != cfg.byzantine.end()) {
      s.abs.faulty.push_back(id);
    }
  }
  s.pending_create.assign(cfg.node_set.size(), false);
  return s;
}

std::string action_guard(const ModelState& s, const ModelConfig& cfg, const Action& a) {
  const std::int64_t threshold = quorum_stake(cfg);

  if (a.kind == kNextRound) {
    const int p = s.abs.node_index(a.str("p"));
    if (p < 0) return "unknown node " + a.str("p");
    if (s.pending_create[p]) return "vertex creation pending for current round";
    const auto& view = s.abs.nodes[p];
    if (view.round >= cfg.round_bound) return "round bound reached";
    if (row_stake(s, p, view.round) < threshold) return "no quorum at current round";
    return "";
  }

  if (a.kind == kCreateVertex) {
    const int p = s.abs.node_index(a.str("p"));
    if (p < 0) return "unknown node " + a.str("p");
    if (!s.pending_create[p]) return "no round advance pending creation";
    return "";
  }

  if (a.kind == kReceiveVertex) {
    const int p = s.abs.node_index(a.str("p"));
    const int q = s.abs.node_index(a.str("q"));
    if (p < 0) return "unknown node " + a.str("p");
    if (q < 0) return "unknown node " + a.str("q");
    if (p == q) return "node cannot receive its own vertex";
    const Round r = a.num("r");
    if (r < 1) return "rounds are 1-indexed";
    const auto* vars = s.variants(a.str("q"), r);
    const std::string v = a.str("v");
    if (vars == nullptr || std::find(vars->begin(), vars->end(), v) == vars->end()) {
      return "vertex does not exist in sender's view";
    }
    if (s.abs.nodes[p].ref_at(r, q) != nullptr) return "vertex already incorporated";
    if (r > s.abs.nodes[p].round + 1) {
      return "future round: own ancestor for round " + std::to_string(r - 1) + " not created";
    }
    return "";
  }

  if (a.kind == kCommitLeader) {
    const int p = s.abs.node_index(a.str("p"));
    if (p < 0) return "unknown node " + a.str("p");
    const Wave w = a.num("w");
    if (w < 1) return "waves are 1-indexed";
    const auto& view = s.abs.nodes[p];
    const Wave next = view.leaders.empty() ? 1 : view.leaders.back().first + 1;
    if (w != next) {
      return "commit out of order: next committable wave is " + std::to_string(next);
    }
    const std::string leader = elect_leader(w, cfg);
    const int leader_idx = s.abs.node_index(leader);
    const Round lr = leader_round(w, cfg);
    const std::string* lref = view.ref_at(lr, leader_idx);
    if (lref == nullptr) return "leader vertex for wave " + std::to_string(w) + " not in view";
    if (support_stake(s, p, *lref, lr + 1) < threshold) {
      return "supporters of leader vertex lack quorum stake";
    }
    return "";
  }

  if (a.kind == kEquivocate) {
    const std::string p = a.str("p");
    if (s.abs.node_index(p) < 0) return "unknown node " + p;
    if (std::find(cfg.byzantine.begin(), cfg.byzantine.end(), p) == cfg.byzantine.end()) {
      return "only byzantine nodes equivocate";
    }
    const Round r = a.num("r");
    if (r < 1) return "rounds are 1-indexed";
    const auto* vars = s.variants(p, r);
    if (vars == nullptr) return "no vertex at that round yet";
    if (vars->size() != 1) return "already equivocated at that round";
    return "";
  }

  if (a.kind == kReconfigure) {
    if (!cfg.reconfigure_enabled) return "reconfiguration disabled";
    if (s.reconfigured) return "reconfiguration already happened";
    for (const auto& n : s.abs.nodes) {
      if (n.round < cfg.reconfigure_round) {
        return "node " + n.id + " has not reached the reconfiguration round";
      }
    }
    return "";
  }

  return "unknown abstract action kind '" + a.kind + "'";
}

ApplyResult apply_action(ModelState& s, const ModelConfig& cfg, const Action& a) {
  if (std::string err = validate_abstract_action(a); !err.empty()) {
    return {false, err, kTouchedNone};
  }
  if (std::string err = action_guard(s, cfg, a); !err.empty()) {
    return {false, err, kTouchedNone};
  }

  if (a.kind == kNextRound) {
    const int p = s.abs.node_index(a.str("p"));
    s.abs.nodes[p].round += 1;
    s.pending_create[p] = true;
    return {true, "", p};
  }

  if (a.kind == kCreateVertex) {
    const int p = s.abs.node_index(a.str("p"));
    auto& view = s.abs.nodes[p];
    const Round r = view.round;
    std::vector<std::string> parents;
    if (auto rit = view.dag.find(r - 1); rit != view.dag.end()) {
      for (const auto& [creator, ref] : rit->second) {
        (void)creator;
        parents.push_back(ref);
      }
    }
    std::sort(parents.begin(), parents.end());
    const std::string ref = vertex_ref(view.id, r, parents, 0);
    add_vertex(s, view.id, r, std::move(parents), 0, ref);
    view.dag[r][p] = ref;
    s.pending_create[p] = false;
    return {true, "", p};
  }

  if (a.kind == kReceiveVertex) {
    const int p = s.abs.node_index(a.str("p"));
    const int q = s.abs.node_index(a.str("q"));
    s.abs.nodes[p].dag[a.num("r")][q] = a.str("v");
    return {true, "", p};
  }

  if (a.kind == kCommitLeader) {
    const int p = s.abs.node_index(a.str("p"));
    const Wave w = a.num("w");
    const int leader_idx = s.abs.node_index(elect_leader(w, cfg));
    const std::string ref = *s.abs.nodes[p].ref_at(leader_round(w, cfg), leader_idx);
    s.abs.nodes[p].leaders.emplace_back(w, ref);
    return {true, "", p};
  }

  if (a.kind == kEquivocate) {
    const std::string pid = a.str("p");
    const Round r = a.num("r");
    const auto& vars = *s.variants(pid, r);
    const VertexRecord first = s.vertices.at(vars.front());
    const auto salt = std::int64_t(vars.size());
    const std::string ref = vertex_ref(pid, r, first.parents, salt);
    add_vertex(s, pid, r, first.parents, salt, ref);
    // The equivocating node's own view keeps the original vertex, so the
    // digested state is untouched; only the deliverable set grows.
    return {true, "", kTouchedNone};
  }

  assert(a.kind == kReconfigure);
  const int idx = int(s.abs.nodes.size());
  NodeView view;
  view.id = node_id_for_index(idx);
  view.round = 1;
  const std::string genesis = vertex_ref(view.id, 1, {}, 0);
  view.dag[1][idx] = genesis;
  s.abs.nodes.push_back(std::move(view));
  add_vertex(s, s.abs.nodes.back().id, 1, {}, 0, genesis);
  s.stake_by_id[s.abs.nodes.back().id] = 1;
  s.pending_create.push_back(false);
  s.reconfigured = true;
  return {true, "", kTouchedAll};
}

std::vector<Action> enabled_actions(const ModelState& s, const ModelConfig& cfg) {
  std::vector<Action> out;
  auto consider = [&](Action a) {
    if (action_guard(s, cfg, a).empty()) out.push_back(std::move(a));
  };

  for (std::size_t pi = 0; pi < s.abs.nodes.size(); ++pi) {
    const auto& view = s.abs.nodes[pi];
    const std::string& p = view.id;
    consider(make_action(kNextRound, {{"p", p}}));
    consider(make_action(kCreateVertex, {{"p", p}}));
    const Wave next_wave = view.leaders.empty() ? 1 : view.leaders.back().first + 1;
    consider(make_action(kCommitLeader, {{"p", p}, {"w", next_wave}}));
    if (std::find(cfg.byzantine.begin(), cfg.byzantine.end(), p) != cfg.byzantine.end()) {
      for (Round r = 1; r <= view.round; ++r) {
        if (const auto* vars = s.variants(p, r); vars != nullptr && vars->size() == 1) {
          consider(make_action(kEquivocate, {{"p", p}, {"r", r}}));
        }
      }
    }
    for (std::size_t qi = 0; qi < s.abs.nodes.size(); ++qi) {
      if (qi == pi) continue;
      const std::string& q = s.abs.nodes[qi].id;
      const Round max_r = std::min(view.round + 1, s.abs.nodes[qi].round);
      for (Round r = 1; r <= max_r; ++r) {
        if (view.ref_at(r, int(qi)) != nullptr) continue;
        if (const auto* vars = s.variants(q, r); vars != nullptr) {
          for (const auto& v : *vars) {
            consider(make_action(kReceiveVertex, {{"p", p}, {"q", q}, {"r", r}, {"v", v}}));
          }
        }
      }
    }
  }
  consider(make_action(kReconfigure, {}));
  return out;
}

std::vector<Trace> model_random_walk(const ModelConfig& cfg, int n, int d, std::uint64_t seed) {
  validate_model_config(cfg);
  if (d < 1) throw std::invalid_argument("model_random_walk: depth must be at least 1");
  if (n < 0) throw std::invalid_argument("model_random_walk: trace count must be non-negative");

  std::vector<Trace> traces;
  traces.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t walk_seed = mix_seed(seed, std::uint64_t(i));
    Rng rng(walk_seed);
    ModelState s = model_init(cfg);
    StateDigester digester(cfg.sentinel_leaders);

    Trace t;
    t.meta.source = "model";
    t.meta.seed = walk_seed;
    t.meta.config_id = model_config_id(cfg);
    t.init_digest = digester.digest(s.abs);

    for (int step = 0; step < d; ++step) {
      std::vector<Action> enabled = enabled_actions(s, cfg);
      if (enabled.empty()) break;
      const std::size_t pick = rng.next_int(0, enabled.size() - 1);
      Action a = enabled[pick];
      const ApplyResult res = apply_action(s, cfg, a);
      assert(res.ok);
      if (res.touched_node == kTouchedAll) {
        digester.invalidate_all();
      } else if (res.touched_node >= 0) {
        digester.invalidate(std::size_t(res.touched_node));
      }
      TraceStep ts;
      ts.action = std::move(a);
      ts.post_digest = digester.digest(s.abs);
      ts.post_state = state_to_json(s.abs);
      t.steps.push_back(std::move(ts));
    }
    if (!t.steps.empty()) traces.push_back(std::move(t));
  }
  return traces;
}

AcceptResult accept_trace(const ModelConfig& cfg, const Trace& t) {
  validate_model_config(cfg);
  if (t.steps.empty()) throw std::invalid_argument("accept_trace: trace has no steps");
  for (const auto& step : t.steps) {
    if (std::string err = validate_abstract_action(step.action); !err.empty()) {
      throw std::invalid_argument("accept_trace: malformed trace: " + err);
    }
    if (!looks_like_digest(step.post_digest)) {
      throw std::invalid_argument("accept_trace: malformed trace: bad post_digest");
    }
  }

  ModelState s = model_init(cfg);
  StateDigester digester(cfg.sentinel_leaders);
  AcceptResult r;
  r.expected_digest = digester.digest(s.abs);
  if (r.expected_digest != t.init_digest) {
    r.kind = RejectKind::InitDigestMismatch;
    r.step = 0;
    r.got_digest = t.init_digest;
    r.detail = "initial state digest does not match the model's initial state";
    return r;
  }

  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const TraceStep& step = t.steps[i];
    const ApplyResult res = apply_action(s, cfg, step.action);
    if (!res.ok) {
      r.kind = RejectKind::GuardFailure;
      r.step = i + 1;
      r.detail = canonical_action(step.action) + " not enabled: " + res.error;
      return r;
    }
    if (res.touched_node == kTouchedAll) {
      digester.invalidate_all();
    } else if (res.touched_node >= 0) {
      digester.invalidate(std::size_t(res.touched_node));
    }
    const std::string expect = digester.digest(s.abs);
    if (expect != step.post_digest) {
      r.kind = RejectKind::DigestMismatch;
      r.step = i + 1;
      r.expected_digest = expect;
      r.got_digest = step.post_digest;
      r.detail = "successor state digest mismatch after " + canonical_action(step.action);
      return r;
    }
  }
  r.accepted = true;
  r.kind = RejectKind::None;
  return r;
}

InvariantReport check_state_invariants(const AbstractState& s) {
  InvariantReport rep;

  for (const auto& n : s.nodes) {
    for (std::size_t i = 1; i < n.leaders.size(); ++i) {
      if (n.leaders[i].first <= n.leaders[i - 1].first) {
        rep.leader_monotonicity = false;
        rep.detail = "node " + n.id + " committed waves out of order";
        return rep;
      }
    }
  }

  for (std::size_t a = 0; a < s.nodes.size(); ++a) {
    if (s.is_faulty(s.nodes[a].id)) continue;
    std::map<Wave, std::string> wa(s.nodes[a].leaders.begin(), s.nodes[a].leaders.end());
    for (std::size_t b = a + 1; b < s.nodes.size(); ++b) {
      if (s.is_faulty(s.nodes[b].id)) continue;
      for (const auto& [w, ref] : s.nodes[b].leaders) {
        auto it = wa.find(w);
        if (it != wa.end() && it->second != ref) {
          rep.leader_consistency = false;
          rep.detail = "nodes " + s.nodes[a].id + " and " + s.nodes[b].id +
                       " committed different leader vertices for wave " + std::to_string(w);
          return rep;
        }
      }
    }
  }

  // Honest creators must look identical in every view that has them.
  for (std::size_t ci = 0; ci < s.nodes.size(); ++ci) {
    if (s.is_faulty(s.nodes[ci].id)) continue;
    std::map<Round, std::string> seen;
    for (const auto& n : s.nodes) {
      for (const auto& [r, row] : n.dag) {
        auto it = row.find(int(ci));
        if (it == row.end()) continue;
        auto [sit, inserted] = seen.try_emplace(r, it->second);
        if (!inserted && sit->second != it->second) {
          rep.dag_consistency = false;
          rep.detail = "honest creator " + s.nodes[ci].id + " appears with different vertices at round " +
                       std::to_string(r);
          return rep;
        }
      }
    }
  }
  return rep;
}

InvariantReport check_invariants(const ModelConfig& cfg, const Trace& t) {
  validate_model_config(cfg);
  bool all_states = !t.steps.empty();
  for (const auto& step : t.steps) {
    if (!step.post_state.has_value()) {
      all_states = false;
      break;
    }
  }

  InvariantReport rep;
  if (all_states) {
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const AbstractState s = state_from_json(*t.steps[i].post_state);
      InvariantReport one = check_state_invariants(s);
      if (!one.all_hold()) {
        one.violation_step = i + 1;
        return one;
      }
    }
    return rep;
  }

  ModelState s = model_init(cfg);
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const ApplyResult res = apply_action(s, cfg, t.steps[i].action);
    if (!res.ok) {
      rep.detail = "replay stopped at step " + std::to_string(i + 1) + ": " + res.error;
      break;
    }
    InvariantReport one = check_state_invariants(s.abs);
    if (!one.all_hold()) {
      one.violation_step = i + 1;
      return one;
    }
  }
  return rep;
}

std::string model_config_id(const ModelConfig& cfg) {
  nlohmann::json j = {
      {"nodes", cfg.node_set},
      {"stakes", cfg.stakes},
      {"byzantine", cfg.byzantine},
      {"round_bound", cfg.round_bound},
      {"reconfigure_round", cfg.reconfigure_round},
      {"reconfigure_enabled", cfg.reconfigure_enabled},
      {"wave_off_by_one", cfg.wave_off_by_one},
      {"sentinel_leaders", cfg.sentinel_leaders},
  };
  return sha256_hex(j.dump()).substr(0, 12);
}

}  // namespace fmdse
