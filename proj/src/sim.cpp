#include "fmdse/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fmdse/actions.hpp"

namespace fmdse {

std::int64_t ms_to_us(double ms) { return std::llround(ms * 1000.0); }

void validate_sim_config(const SimConfig& cfg) {
  if (cfg.num_nodes < 1) {
    throw std::invalid_argument("num_nodes must be at least 1");
  }
  if (cfg.number_faulty < 0 || 3 * cfg.number_faulty >= cfg.num_nodes) {
    if (cfg.number_faulty != 0) {
      throw std::invalid_argument("number_faulty must satisfy 3f < num_nodes");
    }
  }
  if (cfg.vertex_production_rate < 0.0 || cfg.vertex_production_rate > 100.0) {
    throw std::invalid_argument("vertex_production_rate must lie in [0, 100]");
  }
  if (cfg.failure_chance < 0.0 || cfg.failure_chance > 1.0) {
    throw std::invalid_argument("failure_chance must lie in [0, 1]");
  }
  if (cfg.message_send_delay_ms < 0.0 || cfg.message_receive_delay_ms < 0.0) {
    throw std::invalid_argument("message delays must be non-negative");
  }
  if (cfg.iteration_duration_ms <= 0.0) {
    throw std::invalid_argument("iteration_duration_ms must be positive");
  }
  if (cfg.round_bound < 1) {
    throw std::invalid_argument("round_bound must be at least 1");
  }
  if (cfg.max_virtual_time_ms <= 0.0) {
    throw std::invalid_argument("max_virtual_time_ms must be positive");
  }
  if (cfg.reconfigure_round < 1) {
    throw std::invalid_argument("reconfigure_round must be at least 1");
  }
  if (!cfg.stakes.empty()) {
    if (cfg.stakes.size() != static_cast<std::size_t>(cfg.num_nodes)) {
      throw std::invalid_argument("stakes must be empty or one entry per node");
    }
    for (auto s : cfg.stakes) {
      if (s < 1) throw std::invalid_argument("stakes must be positive");
    }
  }
}

ModelConfig derive_model_config(const SimConfig& cfg) {
  ModelConfig m;
  for (int i = 0; i < cfg.num_nodes; ++i) {
    m.node_set.push_back(node_id_for_index(i));
  }
  if (cfg.stakes.empty()) {
    m.stakes.assign(static_cast<std::size_t>(cfg.num_nodes), 1);
  } else {
    m.stakes = cfg.stakes;
  }
  for (int i = 0; i < cfg.number_faulty; ++i) {
    m.byzantine.push_back(node_id_for_index(i));
  }
  m.round_bound = cfg.round_bound;
  m.reconfigure_round = cfg.reconfigure_round;
  m.reconfigure_enabled = cfg.reconfigure_enabled;
  return m;
}

namespace {

std::string join_parents(const std::vector<std::string>& parents) {
  std::string out;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (i > 0) out += ',';
    out += parents[i];
  }
  return out;
}

}  // namespace

Simulator::Simulator(SimConfig cfg, ViolationFlags flags, FaultPlan plan)
    : Simulator(std::move(cfg), flags, std::move(plan), false) {}

Simulator Simulator::driver(SimConfig cfg, ViolationFlags flags) {
  return Simulator(std::move(cfg), flags, FaultPlan{}, true);
}

Simulator::Simulator(SimConfig cfg, ViolationFlags flags, FaultPlan plan,
                     bool driver_mode)
    : cfg_(std::move(cfg)),
      flags_(flags),
      plan_(std::move(plan)),
      driver_mode_(driver_mode),
      rng_(cfg_.seed) {
  validate_sim_config(cfg_);
  delay_us_ = ms_to_us(cfg_.message_send_delay_ms + cfg_.message_receive_delay_ms);
  iteration_us_ = ms_to_us(cfg_.iteration_duration_ms);
  init_nodes();
}

void Simulator::init_nodes() {
  std::vector<std::string> ids;
  std::vector<std::int64_t> stakes;
  for (int i = 0; i < cfg_.num_nodes; ++i) ids.push_back(node_id_for_index(i));
  stakes = cfg_.stakes.empty()
               ? std::vector<std::int64_t>(static_cast<std::size_t>(cfg_.num_nodes), 1)
               : cfg_.stakes;
  std::int64_t total = 0;
  for (auto s : stakes) total += s;
  threshold_ = (2 * total) / 3 + 1;

  for (int i = 0; i < cfg_.num_nodes; ++i) {
    nodes_.push_back(std::make_unique<ConsensusNode>(
        i, ids, stakes, static_cast<std::size_t>(cfg_.num_nodes), threshold_,
        cfg_.round_bound, flags_));
  }
  crashed_.assign(nodes_.size(), false);
  tokens_.assign(nodes_.size(), 0.0);
  last_tick_us_.assign(nodes_.size(), 0);

  for (int i = 0; i < cfg_.number_faulty; ++i) {
    abs_.faulty.push_back(node_id_for_index(i));
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ConsensusNode& n = *nodes_[i];
    NodeView nv;
    nv.id = n.id();
    nv.round = n.current_round();
    nv.dag[n.genesis_round()][static_cast<int>(i)] = n.genesis().id;
    abs_.nodes.push_back(std::move(nv));
    register_vertex(n.genesis(), 0);
    observe_first_ref(static_cast<int>(i), n.genesis_round(), n.genesis().id);
  }

  trace_.meta.source = "simulator";
  trace_.meta.seed = cfg_.seed;
  trace_.meta.config_id = model_config_id(derive_model_config(cfg_));
  digester_.invalidate_all();
  trace_.init_digest = digester_.digest(abs_);

  if (!driver_mode_) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      schedule(0, EventType::Timer, static_cast<int>(i));
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (i == j) continue;
        schedule(delay_us_, EventType::Deliver, static_cast<int>(j),
                 nodes_[i]->genesis());
      }
    }
  }
}

int Simulator::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i]->id() == id) return static_cast<int>(i);
  }
  return -1;
}

void Simulator::schedule(std::int64_t time, EventType type, int node, Vertex vertex) {
  if (time < now_) throw std::logic_error("event scheduled in the past");
  Event ev;
  ev.time = time;
  ev.seq = seq_counter_++;
  ev.type = type;
  ev.node = node;
  ev.vertex = std::move(vertex);
  queue_.push(std::move(ev));
}

void Simulator::register_vertex(const Vertex& v, std::int64_t t_us) {
  if (registry_.count(v.id)) return;
  registry_.emplace(v.id, RegEntry{v, t_us});
  registry_order_.push_back(v.id);
}

const Vertex* Simulator::registered_vertex(const std::string& ref) const {
  auto it = registry_.find(ref);
  return it == registry_.end() ? nullptr : &it->second.vertex;
}

void Simulator::log_step(Action a, int touched_node) {
  if (touched_node == kTouchedAll) {
    digester_.invalidate_all();
  } else if (touched_node >= 0) {
    digester_.invalidate(touched_node);
  }
  last_logged_us_ = std::max(last_logged_us_, a.num("t_us"));
  TraceStep step;
  step.action = std::move(a);
  step.post_digest = digester_.digest(abs_);
  trace_.steps.push_back(std::move(step));
}

void Simulator::observe_first_ref(int creator_idx, Round r, const std::string& ref) {
  const std::string& creator = nodes_[static_cast<std::size_t>(creator_idx)]->id();
  if (abs_.is_faulty(creator)) return;
  auto key = std::make_pair(creator_idx, r);
  auto it = first_ref_.find(key);
  if (it == first_ref_.end()) {
    first_ref_.emplace(key, ref);
  } else if (it->second != ref && safety_.ok) {
    safety_.ok = false;
    safety_.property = "dag_consistency";
    safety_.step = trace_.steps.size();
    safety_.detail = "honest creator " + creator + " holds two vertices at round " +
                     std::to_string(r);
  }
}

void Simulator::observe_commit(int node_idx, const CommitRecord& rec) {
  const auto& node = *nodes_[static_cast<std::size_t>(node_idx)];
  if (rec.wave !=
      static_cast<Wave>(abs_.nodes[static_cast<std::size_t>(node_idx)].leaders.size())) {
    if (safety_.ok) {
      safety_.ok = false;
      safety_.property = "leader_monotonicity";
      safety_.step = trace_.steps.size();
      safety_.detail = node.id() + " committed wave " + std::to_string(rec.wave) +
                       " out of order";
    }
    return;
  }
  if (abs_.is_faulty(node.id())) return;
  auto it = wave_commits_.find(rec.wave);
  if (it == wave_commits_.end()) {
    wave_commits_.emplace(rec.wave, std::make_pair(rec.leader_id, rec.block_digest));
    return;
  }
  if (!safety_.ok) return;
  if (it->second.first != rec.leader_id) {
    safety_.ok = false;
    safety_.property = "leader_consistency";
    safety_.step = trace_.steps.size();
    safety_.detail = "wave " + std::to_string(rec.wave) +
                     " committed with two different leader vertices";
  } else if (it->second.second != rec.block_digest) {
    safety_.ok = false;
    safety_.property = "block_consistency";
    safety_.step = trace_.steps.size();
    safety_.detail = "wave " + std::to_string(rec.wave) +
                     " committed with two different block digests";
  }
}

void Simulator::record_coverage(const CommitRecord& rec, std::int64_t t_us) {
  std::vector<std::string> fresh;
  for (const auto& ref : rec.order) {
    if (covered_global_.insert(ref).second) fresh.push_back(ref);
  }
  std::sort(fresh.begin(), fresh.end(),
            [this](const std::string& a, const std::string& b) {
              const RegEntry& ra = registry_.at(a);
              const RegEntry& rb = registry_.at(b);
              if (ra.vertex.round != rb.vertex.round) {
                return ra.vertex.round < rb.vertex.round;
              }
              int ca = node_index(ra.vertex.creator);
              int cb = node_index(rb.vertex.creator);
              if (ca != cb) return ca < cb;
              return a < b;
            });
  for (const auto& ref : fresh) {
    double sample =
        static_cast<double>(t_us - registry_.at(ref).t_us) / 1000.0;
    ttf_samples_.push_back(sample);
    ttf_sum_ += sample;
  }
}

void Simulator::auto_commit(int node_idx, std::int64_t t_us) {
  auto& node = *nodes_[static_cast<std::size_t>(node_idx)];
  while (auto rec = node.try_commit_next(t_us)) {
    abs_.nodes[static_cast<std::size_t>(node_idx)]
        .leaders.emplace_back(rec->wave, rec->leader_id);
    log_step(make_action(kImplCommitLeader,
                         {{"p", node.id()},
                          {"w", rec->wave},
                          {"v", rec->leader_id},
                          {"b", rec->block_digest},
                          {"n", static_cast<std::int64_t>(rec->order.size())},
                          {"t_us", t_us}}),
             node_idx);
    observe_commit(node_idx, *rec);
    record_coverage(*rec, t_us);
  }
}

void Simulator::broadcast(int from_idx, const Vertex& v, std::int64_t t_us,
                          const std::vector<int>& targets) {
  log_step(make_action(kImplBroadcast, {{"p", nodes_[static_cast<std::size_t>(from_idx)]->id()},
                                        {"r", v.round},
                                        {"v", v.id},
                                        {"t_us", t_us}}),
           kTouchedNone);
  for (int j : targets) {
    schedule(t_us + delay_us_, EventType::Deliver, j, v);
    if (flags_.double_count_duplicates && rng_.next_unit() < 0.02) {
      schedule(t_us + delay_us_, EventType::Deliver, j, v);
    }
  }
}

void Simulator::apply_deliver_outcome(int node_idx, const Vertex& v,
                                      const DeliverOutcome& outcome,
                                      std::int64_t t_us) {
  auto& node = *nodes_[static_cast<std::size_t>(node_idx)];
  const std::string& p = node.id();
  switch (outcome.kind) {
    case DeliverKind::Incorporated:
    case DeliverKind::ConflictReplaced: {
      int ci = node_index(v.creator);
      abs_.nodes[static_cast<std::size_t>(node_idx)].dag[v.round][ci] = v.id;
      log_step(make_action(kImplIncorporate, {{"p", p},
                                              {"q", v.creator},
                                              {"r", v.round},
                                              {"v", v.id},
                                              {"t_us", t_us}}),
               node_idx);
      observe_first_ref(ci, v.round, v.id);
      if (!driver_mode_) auto_commit(node_idx, t_us);
      break;
    }
    case DeliverKind::DuplicateDoubleCounted:
      log_step(make_action(kImplIncorporate, {{"p", p},
                                              {"q", v.creator},
                                              {"r", v.round},
                                              {"v", v.id},
                                              {"t_us", t_us}}),
               kTouchedNone);
      if (!driver_mode_) auto_commit(node_idx, t_us);
      break;
    case DeliverKind::Buffered:
      log_step(make_action(kImplBufferVertex, {{"p", p},
                                               {"q", v.creator},
                                               {"r", v.round},
                                               {"v", v.id},
                                               {"t_us", t_us}}),
               kTouchedNone);
      break;
    case DeliverKind::DuplicateIgnored:
      log_step(make_action(kImplDuplicateDrop, {{"p", p},
                                                {"q", v.creator},
                                                {"r", v.round},
                                                {"v", v.id},
                                                {"t_us", t_us}}),
               kTouchedNone);
      break;
    case DeliverKind::ConflictIgnored:
      ++equivocations_detected_;
      log_step(make_action(kImplEquivocationDetected, {{"p", p},
                                                       {"q", v.creator},
                                                       {"r", v.round},
                                                       {"v", v.id},
                                                       {"t_us", t_us}}),
               kTouchedNone);
      break;
    case DeliverKind::Rejected:
      log_step(make_action(kImplRejectVertex, {{"p", p},
                                               {"q", v.creator},
                                               {"r", v.round},
                                               {"v", v.id},
                                               {"t_us", t_us}}),
               kTouchedNone);
      break;
  }
}

void Simulator::process_timer(int node_idx, std::int64_t t_us) {
  if (crashed_[static_cast<std::size_t>(node_idx)]) return;
  auto& node = *nodes_[static_cast<std::size_t>(node_idx)];

  if (abs_.is_faulty(node.id())) {
    if (rng_.next_unit() < cfg_.failure_chance) {
      crashed_[static_cast<std::size_t>(node_idx)] = true;
      ++crashes_;
      log_step(make_action(kImplCrash, {{"p", node.id()}, {"t_us", t_us}}),
               kTouchedNone);
      return;
    }
  }

  double dt_sec =
      static_cast<double>(t_us - last_tick_us_[static_cast<std::size_t>(node_idx)]) /
      1'000'000.0;
  last_tick_us_[static_cast<std::size_t>(node_idx)] = t_us;
  double cap = std::max(1.0, cfg_.vertex_production_rate);
  tokens_[static_cast<std::size_t>(node_idx)] =
      std::min(cap, tokens_[static_cast<std::size_t>(node_idx)] +
                        cfg_.vertex_production_rate * dt_sec);

  if (tokens_[static_cast<std::size_t>(node_idx)] >= 1.0 && node.can_advance()) {
    tokens_[static_cast<std::size_t>(node_idx)] -= 1.0;
    node.advance();
    abs_.nodes[static_cast<std::size_t>(node_idx)].round = node.current_round();
    log_step(make_action(kImplAdvanceRound, {{"p", node.id()},
                                             {"r", node.current_round()},
                                             {"t_us", t_us}}),
             node_idx);
    auto v = node.create_pending();
    if (v) {
      register_vertex(*v, t_us);
      abs_.nodes[static_cast<std::size_t>(node_idx)].dag[v->round][node_idx] = v->id;
      log_step(make_action(kImplCreateVertex, {{"p", node.id()},
                                               {"r", v->round},
                                               {"v", v->id},
                                               {"parents", join_parents(v->parents)},
                                               {"t_us", t_us}}),
               node_idx);
      observe_first_ref(node_idx, v->round, v->id);

      std::optional<Vertex> twin;
      for (const auto& [pid, pr] : plan_.equivocations) {
        if (pid == node.id() && pr == v->round) {
          twin = node.make_equivocation(v->round);
          break;
        }
      }
      if (twin) {
        register_vertex(*twin, t_us);
        log_step(make_action(kImplEquivocate, {{"p", node.id()},
                                               {"r", twin->round},
                                               {"v", twin->id},
                                               {"t_us", t_us}}),
                 kTouchedNone);
      }

      std::vector<int> peers;
      for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (static_cast<int>(j) != node_idx) peers.push_back(static_cast<int>(j));
      }
      if (twin) {
        std::vector<int> half_a(peers.begin(), peers.begin() + peers.size() / 2);
        std::vector<int> half_b(peers.begin() + peers.size() / 2, peers.end());
        broadcast(node_idx, *v, t_us, half_a);
        broadcast(node_idx, *twin, t_us, half_b);
      } else {
        broadcast(node_idx, *v, t_us, peers);
      }

      for (const Vertex& d : node.drain_buffer()) {
        int ci = node_index(d.creator);
        abs_.nodes[static_cast<std::size_t>(node_idx)].dag[d.round][ci] = d.id;
        log_step(make_action(kImplIncorporate, {{"p", node.id()},
                                                {"q", d.creator},
                                                {"r", d.round},
                                                {"v", d.id},
                                                {"t_us", t_us}}),
                 node_idx);
        observe_first_ref(ci, d.round, d.id);
      }
      auto_commit(node_idx, t_us);
    }
  }

  schedule(t_us + iteration_us_, EventType::Timer, node_idx);
  node.end_tick_snapshot();
}

// Messages carry their causal history: a vertex that references bodies the
// receiver has never held (an equivocator withholds one variant from part of
// the network) delivers those ancestors first, so every committer can
// linearize the same leader history.
void Simulator::ensure_ancestors(int node_idx, const Vertex& v, std::int64_t t_us) {
  auto& node = *nodes_[static_cast<std::size_t>(node_idx)];
  for (const auto& ref : v.parents) {
    if (node.find_seen(ref) != nullptr) continue;
    const Vertex* body = registered_vertex(ref);
    if (body == nullptr) continue;
    ensure_ancestors(node_idx, *body, t_us);
    DeliverOutcome outcome = node.deliver(*body);
    apply_deliver_outcome(node_idx, *body, outcome, t_us);
  }
}

void Simulator::process_deliver(int node_idx, const Vertex& v, std::int64_t t_us) {
  if (crashed_[static_cast<std::size_t>(node_idx)]) return;
  ensure_ancestors(node_idx, v, t_us);
  DeliverOutcome outcome = nodes_[static_cast<std::size_t>(node_idx)]->deliver(v);
  apply_deliver_outcome(node_idx, v, outcome, t_us);
}

void Simulator::process_reconfigure(std::int64_t t_us) {
  reconfigure_done_ = true;
  int new_idx = static_cast<int>(nodes_.size());
  std::string new_id = node_id_for_index(new_idx);

  std::vector<std::string> ids = nodes_[0]->peer_ids();
  ids.push_back(new_id);
  std::vector<std::int64_t> stakes =
      cfg_.stakes.empty()
          ? std::vector<std::int64_t>(static_cast<std::size_t>(cfg_.num_nodes), 1)
          : cfg_.stakes;
  stakes.push_back(1);

  for (auto& n : nodes_) n->admit_peer(new_id, 1);
  nodes_.push_back(std::make_unique<ConsensusNode>(
      new_idx, ids, stakes, static_cast<std::size_t>(cfg_.num_nodes), threshold_,
      cfg_.round_bound, flags_));
  crashed_.push_back(false);
  tokens_.push_back(0.0);
  last_tick_us_.push_back(t_us);

  const ConsensusNode& nn = *nodes_.back();
  std::vector<std::string> catch_up = registry_order_;
  register_vertex(nn.genesis(), t_us);

  NodeView nv;
  nv.id = new_id;
  nv.round = nn.current_round();
  nv.dag[nn.genesis_round()][new_idx] = nn.genesis().id;
  abs_.nodes.push_back(std::move(nv));
  log_step(make_action(kImplReconfigureAdd, {{"p", new_id}, {"t_us", t_us}}),
           kTouchedAll);
  observe_first_ref(new_idx, nn.genesis_round(), nn.genesis().id);

  std::vector<int> peers;
  for (int j = 0; j < new_idx; ++j) peers.push_back(j);
  broadcast(new_idx, nn.genesis(), t_us, peers);

  // The admitted node hears the full history in creation order.
  for (const auto& ref : catch_up) {
    schedule(t_us + delay_us_, EventType::Deliver, new_idx, registry_.at(ref).vertex);
  }
  schedule(t_us + iteration_us_, EventType::Timer, new_idx);
}

void Simulator::maybe_schedule_reconfigure() {
  if (driver_mode_ || reconfigure_done_ || reconfigure_scheduled_) return;
  if (!cfg_.reconfigure_enabled || flags_.no_reconfigure_support) return;
  for (const auto& n : nodes_) {
    if (n->current_round() < cfg_.reconfigure_round) return;
  }
  reconfigure_scheduled_ = true;
  schedule(now_, EventType::Reconfigure, -1);
}

bool Simulator::stop_reached() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!crashed_[i] && nodes_[i]->current_round() < cfg_.round_bound) return false;
  }
  return true;
}

SimRun Simulator::run() {
  if (driver_mode_) throw std::logic_error("driver-mode simulator cannot free-run");
  const std::int64_t cap = ms_to_us(cfg_.max_virtual_time_ms);
  while (!queue_.empty()) {
    if (stop_reached()) break;
    Event ev = queue_.top();
    if (ev.time > cap) break;
    queue_.pop();
    now_ = ev.time;
    ++events_processed_;
    switch (ev.type) {
      case EventType::Timer:
        process_timer(ev.node, now_);
        break;
      case EventType::Deliver:
        process_deliver(ev.node, ev.vertex, now_);
        break;
      case EventType::Reconfigure:
        process_reconfigure(now_);
        break;
    }
    maybe_schedule_reconfigure();
  }
  SimRun out;
  out.trace = std::move(trace_);
  out.metrics = finalize_metrics();
  out.safety = safety_;
  out.events = events_processed_;
  out.end_time_us = now_;
  return out;
}

MetricsRecord Simulator::finalize_metrics() const {
  MetricsRecord m;
  m.vertex_count = static_cast<std::int64_t>(registry_order_.size());
  m.committed_vertices = static_cast<std::int64_t>(covered_global_.size());
  Round max_round = 0;
  for (const auto& n : nodes_) max_round = std::max(max_round, n->current_round());
  m.round_reached = max_round;
  m.equivocations_seen = equivocations_detected_;
  m.crashes = crashes_;
  m.duration_us = last_logged_us_;
  if (!ttf_samples_.empty()) {
    m.ttf_mean_ms = ttf_sum_ / static_cast<double>(ttf_samples_.size());
    m.ttf_p50_ms = percentile_nearest_rank(ttf_samples_, 50.0);
    m.ttf_p99_ms = percentile_nearest_rank(ttf_samples_, 99.0);
  }
  if (m.duration_us > 0) {
    m.tps = static_cast<double>(m.committed_vertices) /
            (static_cast<double>(m.duration_us) / 1'000'000.0);
  }
  return m;
}

std::string Simulator::current_digest() { return digester_.digest(abs_); }

DriveResult Simulator::drive_advance(const std::string& p) {
  int idx = node_index(p);
  if (idx < 0) return {false, "unknown node " + p};
  auto& node = *nodes_[static_cast<std::size_t>(idx)];
  if (!node.can_advance()) {
    std::string why = node.pending_create() ? "vertex creation pending"
                      : node.current_round() >= cfg_.round_bound
                          ? "round bound reached"
                          : "round quorum not reached";
    return {false, why};
  }
  node.advance();
  abs_.nodes[static_cast<std::size_t>(idx)].round = node.current_round();
  log_step(make_action(kImplAdvanceRound, {{"p", p},
                                           {"r", node.current_round()},
                                           {"t_us", ++driver_clock_}}),
           idx);
  return {true, ""};
}

DriveResult Simulator::drive_create(const std::string& p) {
  int idx = node_index(p);
  if (idx < 0) return {false, "unknown node " + p};
  auto& node = *nodes_[static_cast<std::size_t>(idx)];
  auto v = node.create_pending();
  if (!v) return {false, "no pending vertex creation"};
  std::int64_t t = ++driver_clock_;
  register_vertex(*v, t);
  abs_.nodes[static_cast<std::size_t>(idx)].dag[v->round][idx] = v->id;
  log_step(make_action(kImplCreateVertex, {{"p", p},
                                           {"r", v->round},
                                           {"v", v->id},
                                           {"parents", join_parents(v->parents)},
                                           {"t_us", t}}),
           idx);
  observe_first_ref(idx, v->round, v->id);
  return {true, ""};
}

DriveResult Simulator::drive_deliver(const std::string& p, const std::string& ref) {
  int idx = node_index(p);
  if (idx < 0) return {false, "unknown node " + p};
  auto it = registry_.find(ref);
  if (it == registry_.end()) return {false, "vertex " + ref + " was never produced"};
  DeliverOutcome outcome = nodes_[static_cast<std::size_t>(idx)]->deliver(it->second.vertex);
  apply_deliver_outcome(idx, it->second.vertex, outcome, ++driver_clock_);
  return {true, ""};
}

DriveResult Simulator::drive_commit(const std::string& p, Wave w) {
  int idx = node_index(p);
  if (idx < 0) return {false, "unknown node " + p};
  auto& node = *nodes_[static_cast<std::size_t>(idx)];
  if (w != node.next_wave()) {
    return {false, "wave " + std::to_string(w) + " is not the next wave"};
  }
  std::int64_t t = ++driver_clock_;
  auto rec = node.try_commit_next(t);
  if (!rec) return {false, "leader vertex or support quorum missing"};
  abs_.nodes[static_cast<std::size_t>(idx)].leaders.emplace_back(rec->wave, rec->leader_id);
  log_step(make_action(kImplCommitLeader,
                       {{"p", p},
                        {"w", rec->wave},
                        {"v", rec->leader_id},
                        {"b", rec->block_digest},
                        {"n", static_cast<std::int64_t>(rec->order.size())},
                        {"t_us", t}}),
           idx);
  observe_commit(idx, *rec);
  record_coverage(*rec, t);
  return {true, ""};
}

DriveResult Simulator::drive_equivocate(const std::string& p, Round r) {
  int idx = node_index(p);
  if (idx < 0) return {false, "unknown node " + p};
  auto& node = *nodes_[static_cast<std::size_t>(idx)];
  auto twin = node.make_equivocation(r);
  if (!twin) {
    return {false, node.supports_equivocation()
                       ? "no single vertex to duplicate at round " + std::to_string(r)
                       : "equivocation unsupported by this build"};
  }
  std::int64_t t = ++driver_clock_;
  register_vertex(*twin, t);
  log_step(make_action(kImplEquivocate,
                       {{"p", p}, {"r", r}, {"v", twin->id}, {"t_us", t}}),
           kTouchedNone);
  return {true, ""};
}

DriveResult Simulator::drive_reconfigure() {
  if (flags_.no_reconfigure_support) {
    return {false, "reconfigure unsupported by this build"};
  }
  if (reconfigure_done_) return {false, "a node was already admitted"};
  reconfigure_done_ = true;
  int new_idx = static_cast<int>(nodes_.size());
  std::string new_id = node_id_for_index(new_idx);
  std::vector<std::string> ids = nodes_[0]->peer_ids();
  ids.push_back(new_id);
  std::vector<std::int64_t> stakes =
      cfg_.stakes.empty()
          ? std::vector<std::int64_t>(static_cast<std::size_t>(cfg_.num_nodes), 1)
          : cfg_.stakes;
  stakes.push_back(1);
  for (auto& n : nodes_) n->admit_peer(new_id, 1);
  nodes_.push_back(std::make_unique<ConsensusNode>(
      new_idx, ids, stakes, static_cast<std::size_t>(cfg_.num_nodes), threshold_,
      cfg_.round_bound, flags_));
  crashed_.push_back(false);
  tokens_.push_back(0.0);
  last_tick_us_.push_back(0);
  const ConsensusNode& nn = *nodes_.back();
  std::int64_t t = ++driver_clock_;
  register_vertex(nn.genesis(), t);
  NodeView nv;
  nv.id = new_id;
  nv.round = nn.current_round();
  nv.dag[nn.genesis_round()][new_idx] = nn.genesis().id;
  abs_.nodes.push_back(std::move(nv));
  log_step(make_action(kImplReconfigureAdd, {{"p", new_id}, {"t_us", t}}),
           kTouchedAll);
  observe_first_ref(new_idx, nn.genesis_round(), nn.genesis().id);
  return {true, ""};
}

SimRun simulate(const SimConfig& cfg, const ViolationFlags& flags,
                const FaultPlan& plan) {
  Simulator sim(cfg, flags, plan);
  return sim.run();
}

}  // namespace fmdse
