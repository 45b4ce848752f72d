#include "fmdse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "fmdse/actions.hpp"
#include "fmdse/consensus.hpp"

namespace fmdse {

const std::vector<std::string>& all_metric_names() {
  static const std::vector<std::string> kNames = {
      "ttf", "tps", "vertex_count", "round_reached", "equivocations_seen", "crashes"};
  return kNames;
}

bool is_metric_name(const std::string& name) {
  const auto& names = all_metric_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

nlohmann::json metrics_to_json(const MetricsRecord& m,
                               const std::vector<std::string>& enabled) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& name : enabled) {
    if (name == "ttf") {
      out["ttf"] = {{"mean_ms", m.ttf_mean_ms},
                    {"p50_ms", m.ttf_p50_ms},
                    {"p99_ms", m.ttf_p99_ms}};
    } else if (name == "tps") {
      out["tps"] = m.tps;
    } else if (name == "vertex_count") {
      out["vertex_count"] = m.vertex_count;
    } else if (name == "round_reached") {
      out["round_reached"] = m.round_reached;
    } else if (name == "equivocations_seen") {
      out["equivocations_seen"] = m.equivocations_seen;
    } else if (name == "crashes") {
      out["crashes"] = m.crashes;
    } else {
      throw std::invalid_argument("unknown metric name: " + name);
    }
  }
  return out;
}

double percentile_nearest_rank(std::vector<double> samples, double pct) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  auto rank = static_cast<std::size_t>(
      std::ceil(pct / 100.0 * static_cast<double>(samples.size())));
  if (rank < 1) rank = 1;
  if (rank > samples.size()) rank = samples.size();
  return samples[rank - 1];
}

namespace {

std::vector<std::string> split_parents(const std::string& joined) {
  std::vector<std::string> out;
  if (joined.empty()) return out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = joined.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(joined.substr(start));
      break;
    }
    out.push_back(joined.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

struct KnownVertex {
  std::string creator;
  Round round = 0;
  std::vector<std::string> parents;
  std::int64_t created_us = 0;
};

}  // namespace

MetricsRecord metrics_from_concrete_trace(const Trace& concrete, int num_nodes,
                                          ViolationFlags flags) {
  if (num_nodes < 1) throw std::invalid_argument("num_nodes must be positive");
  Round genesis_round = flags.zero_indexed_rounds ? 0 : 1;

  std::vector<std::string> ids;
  std::map<std::string, Round> node_round;
  std::unordered_map<std::string, KnownVertex> registry;
  // First vertex observed per (creator, round); equivocation twins copy its
  // parent list.
  std::map<std::pair<std::string, Round>, std::string> first_by_slot;

  auto register_vertex = [&](const std::string& ref, const std::string& creator,
                             Round round, std::vector<std::string> parents,
                             std::int64_t t_us) {
    if (registry.count(ref)) return;
    registry[ref] = KnownVertex{creator, round, std::move(parents), t_us};
    first_by_slot.emplace(std::make_pair(creator, round), ref);
  };

  auto add_node = [&](const std::string& id, std::int64_t t_us) {
    ids.push_back(id);
    node_round[id] = genesis_round;
    Vertex g = make_vertex(id, genesis_round, {}, 0);
    register_vertex(g.id, id, genesis_round, {}, t_us);
  };

  for (int i = 0; i < num_nodes; ++i) add_node(node_id_for_index(i), 0);

  auto creator_index = [&](const std::string& creator) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == creator) return static_cast<int>(i);
    }
    return -1;
  };

  MetricsRecord m;
  std::map<std::string, std::unordered_set<std::string>> covered_by_node;
  std::unordered_set<std::string> covered_global;
  // Materialized vertices with stable addresses for the linearizer.
  std::unordered_map<std::string, Vertex> vcache;
  std::vector<double> ttf_samples;
  double ttf_sum = 0.0;
  std::int64_t duration = 0;

  for (const auto& step : concrete.steps) {
    const Action& a = step.action;
    if (a.has("t_us")) duration = std::max(duration, a.num("t_us"));

    if (a.kind == kImplAdvanceRound) {
      node_round[a.str("p")] = a.num("r");
    } else if (a.kind == kImplCreateVertex) {
      register_vertex(a.str("v"), a.str("p"), a.num("r"),
                      split_parents(a.str("parents")), a.num("t_us"));
    } else if (a.kind == kImplEquivocate) {
      auto it = first_by_slot.find(std::make_pair(a.str("p"), a.num("r")));
      std::vector<std::string> parents;
      if (it != first_by_slot.end()) {
        parents = registry.at(it->second).parents;
      }
      register_vertex(a.str("v"), a.str("p"), a.num("r"), std::move(parents),
                      a.num("t_us"));
    } else if (a.kind == kImplReconfigureAdd) {
      add_node(a.str("p"), a.num("t_us"));
    } else if (a.kind == kImplEquivocationDetected) {
      m.equivocations_seen += 1;
    } else if (a.kind == kImplCrash) {
      m.crashes += 1;
    } else if (a.kind == kImplCommitLeader) {
      const std::string node = a.str("p");
      const std::string leader = a.str("v");
      auto resolve = [&](const std::string& ref) -> const Vertex* {
        auto cit = vcache.find(ref);
        if (cit != vcache.end()) return &cit->second;
        auto vit = registry.find(ref);
        if (vit == registry.end()) return nullptr;
        Vertex v;
        v.id = ref;
        v.creator = vit->second.creator;
        v.round = vit->second.round;
        v.parents = vit->second.parents;
        return &vcache.emplace(ref, std::move(v)).first->second;
      };
      auto& covered = covered_by_node[node];
      std::vector<std::string> order =
          linearize_history(leader, resolve, creator_index, covered);
      std::int64_t t = a.num("t_us");
      for (const auto& ref : order) {
        covered.insert(ref);
        if (covered_global.insert(ref).second) {
          double sample =
              static_cast<double>(t - registry.at(ref).created_us) / 1000.0;
          ttf_samples.push_back(sample);
          ttf_sum += sample;
        }
      }
    }
  }

  m.vertex_count = static_cast<std::int64_t>(registry.size());
  m.committed_vertices = static_cast<std::int64_t>(covered_global.size());
  m.duration_us = duration;
  Round max_round = genesis_round;
  for (const auto& [id, r] : node_round) {
    (void)id;
    max_round = std::max(max_round, r);
  }
  m.round_reached = max_round;
  if (!ttf_samples.empty()) {
    m.ttf_mean_ms = ttf_sum / static_cast<double>(ttf_samples.size());
    m.ttf_p50_ms = percentile_nearest_rank(ttf_samples, 50.0);
    m.ttf_p99_ms = percentile_nearest_rank(ttf_samples, 99.0);
  }
  if (duration > 0) {
    m.tps = static_cast<double>(covered_global.size()) /
            (static_cast<double>(duration) / 1'000'000.0);
  }
  return m;
}

}  // namespace fmdse
