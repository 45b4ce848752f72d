#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fmdse/abstract_state.hpp"
#include "fmdse/consensus.hpp"
#include "fmdse/metrics.hpp"
#include "fmdse/model.hpp"
#include "fmdse/rng.hpp"
#include "fmdse/trace.hpp"
#include "fmdse/violations.hpp"

namespace fmdse {

// Discrete-event simulation parameters. Virtual time is kept in integer
// microseconds; every *_ms knob is converted once at startup.
struct SimConfig {
  int num_nodes = 4;
  int number_faulty = 1;
  double vertex_production_rate = 100.0;  // vertices per second per node
  double failure_chance = 0.0;            // crash probability per faulty node per tick
  double message_send_delay_ms = 5.0;
  double message_receive_delay_ms = 5.0;
  double iteration_duration_ms = 20.0;
  std::uint64_t seed = 1;
  Round round_bound = 30;
  double max_virtual_time_ms = 60'000.0;
  Round reconfigure_round = 10;
  bool reconfigure_enabled = true;
  std::vector<std::int64_t> stakes;  // empty means one per node
};

void validate_sim_config(const SimConfig& cfg);

// The model configuration a simulator run is checked against: same node
// identities, stakes, fault budget, and bounds.
ModelConfig derive_model_config(const SimConfig& cfg);

std::int64_t ms_to_us(double ms);

// Scheduled byzantine behavior for free runs: each entry duplicates the
// node's vertex right after creation at the given round and sends the two
// variants to disjoint halves of the peers.
struct FaultPlan {
  std::vector<std::pair<std::string, Round>> equivocations;
};

struct SafetyFinding {
  bool ok = true;
  std::string property;  // leader_consistency | leader_monotonicity |
                         // dag_consistency | block_consistency
  std::size_t step = 0;  // 1-based concrete trace step where detected
  std::string detail;
};

struct SimRun {
  Trace trace;  // concrete actions with virtual timestamps
  MetricsRecord metrics;
  SafetyFinding safety;
  std::uint64_t events = 0;
  std::int64_t end_time_us = 0;
};

struct DriveResult {
  bool ok = false;
  std::string detail;
};

// Deterministic single-threaded simulator. Two operating modes share the
// node logic and differ only in wiring: free runs drive nodes from timer and
// delivery events with automatic broadcast and commit, while driver mode
// exposes one entry point per protocol step so a trace replayer can schedule
// everything itself (no auto-commit, no auto-delivery).
class Simulator {
 public:
  // Free-run mode.
  Simulator(SimConfig cfg, ViolationFlags flags, FaultPlan plan);
  SimRun run();

  // Driver mode.
  static Simulator driver(SimConfig cfg, ViolationFlags flags);

  DriveResult drive_advance(const std::string& p);
  DriveResult drive_create(const std::string& p);
  DriveResult drive_deliver(const std::string& p, const std::string& ref);
  DriveResult drive_commit(const std::string& p, Wave w);
  DriveResult drive_equivocate(const std::string& p, Round r);
  DriveResult drive_reconfigure();

  std::string current_digest();
  const AbstractState& abstract_view() const { return abs_; }
  const Trace& trace() const { return trace_; }
  const std::string& init_digest() const { return trace_.init_digest; }
  const ConsensusNode& node(std::size_t i) const { return *nodes_.at(i); }
  std::size_t node_count() const { return nodes_.size(); }
  const Vertex* registered_vertex(const std::string& ref) const;

 private:
  enum class EventType { Timer, Deliver, Reconfigure };

  struct Event {
    std::int64_t time = 0;
    std::uint64_t seq = 0;
    EventType type = EventType::Timer;
    int node = -1;
    Vertex vertex;
  };

  struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  Simulator(SimConfig cfg, ViolationFlags flags, FaultPlan plan, bool driver_mode);

  void init_nodes();
  int node_index(const std::string& id) const;
  void schedule(std::int64_t time, EventType type, int node, Vertex vertex = {});
  void register_vertex(const Vertex& v, std::int64_t t_us);
  void log_step(Action a, int touched_node);
  void observe_first_ref(int creator_idx, Round r, const std::string& ref);
  void observe_commit(int node_idx, const CommitRecord& rec);
  void record_coverage(const CommitRecord& rec, std::int64_t t_us);
  void apply_deliver_outcome(int node_idx, const Vertex& v,
                             const DeliverOutcome& outcome, std::int64_t t_us);
  void ensure_ancestors(int node_idx, const Vertex& v, std::int64_t t_us);
  void auto_commit(int node_idx, std::int64_t t_us);
  void broadcast(int from_idx, const Vertex& v, std::int64_t t_us,
                 const std::vector<int>& targets);
  void process_timer(int node_idx, std::int64_t t_us);
  void process_deliver(int node_idx, const Vertex& v, std::int64_t t_us);
  void process_reconfigure(std::int64_t t_us);
  void maybe_schedule_reconfigure();
  bool stop_reached() const;
  std::int64_t next_time_us() { return driver_mode_ ? ++driver_clock_ : now_; }
  MetricsRecord finalize_metrics() const;

  SimConfig cfg_;
  ViolationFlags flags_;
  FaultPlan plan_;
  bool driver_mode_ = false;

  std::vector<std::unique_ptr<ConsensusNode>> nodes_;
  std::vector<bool> crashed_;
  std::vector<double> tokens_;
  std::vector<std::int64_t> last_tick_us_;
  std::int64_t threshold_ = 0;
  std::int64_t delay_us_ = 0;
  std::int64_t iteration_us_ = 0;

  AbstractState abs_;
  StateDigester digester_{false};
  Trace trace_;
  Rng rng_;

  struct RegEntry {
    Vertex vertex;
    std::int64_t t_us = 0;
  };
  std::unordered_map<std::string, RegEntry> registry_;
  std::vector<std::string> registry_order_;

  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  std::uint64_t seq_counter_ = 0;
  std::int64_t now_ = 0;
  std::uint64_t events_processed_ = 0;
  std::int64_t driver_clock_ = 0;

  bool reconfigure_done_ = false;
  bool reconfigure_scheduled_ = false;

  SafetyFinding safety_;
  std::map<std::pair<int, Round>, std::string> first_ref_;
  std::map<Wave, std::pair<std::string, std::string>> wave_commits_;

  std::unordered_set<std::string> covered_global_;
  std::vector<double> ttf_samples_;
  double ttf_sum_ = 0.0;
  std::int64_t equivocations_detected_ = 0;
  std::int64_t crashes_ = 0;
  std::int64_t last_logged_us_ = 0;
};

// Convenience wrapper used by the workflows: run one free simulation.
SimRun simulate(const SimConfig& cfg, const ViolationFlags& flags,
                const FaultPlan& plan = {});

}  // namespace fmdse
