#include "fmdse/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fmdse/digest.hpp"

namespace fmdse {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& section,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      std::string where = section.empty() ? key : section + "." + key;
      throw ConfigError("unknown config key '" + where + "'");
    }
  }
}

std::int64_t as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) {
    throw ConfigError("config key '" + where + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError("config key '" + where + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) {
    throw ConfigError("config key '" + where + "' must be a number");
  }
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) {
    throw ConfigError("config key '" + where + "' must be a boolean");
  }
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) {
    throw ConfigError("config key '" + where + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<std::int64_t> as_stake_list(const json& v, const std::string& where) {
  if (!v.is_array()) {
    throw ConfigError("config key '" + where + "' must be an array");
  }
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_int(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void parse_sim(const json& j, SimConfig& sim) {
  reject_unknown_keys(j, "sim",
                      {"num_nodes", "number_faulty", "vertex_production_rate",
                       "failure_chance", "message_send_delay_ms",
                       "message_receive_delay_ms", "iteration_duration_ms", "seed",
                       "round_bound", "max_virtual_time_ms", "reconfigure_round",
                       "reconfigure_enabled", "stakes"});
  if (j.count("num_nodes")) sim.num_nodes = static_cast<int>(as_int(j["num_nodes"], "sim.num_nodes"));
  if (j.count("number_faulty")) {
    sim.number_faulty = static_cast<int>(as_int(j["number_faulty"], "sim.number_faulty"));
  }
  if (j.count("vertex_production_rate")) {
    sim.vertex_production_rate = as_double(j["vertex_production_rate"], "sim.vertex_production_rate");
  }
  if (j.count("failure_chance")) {
    sim.failure_chance = as_double(j["failure_chance"], "sim.failure_chance");
  }
  if (j.count("message_send_delay_ms")) {
    sim.message_send_delay_ms = as_double(j["message_send_delay_ms"], "sim.message_send_delay_ms");
  }
  if (j.count("message_receive_delay_ms")) {
    sim.message_receive_delay_ms =
        as_double(j["message_receive_delay_ms"], "sim.message_receive_delay_ms");
  }
  if (j.count("iteration_duration_ms")) {
    sim.iteration_duration_ms = as_double(j["iteration_duration_ms"], "sim.iteration_duration_ms");
  }
  if (j.count("seed")) sim.seed = as_u64(j["seed"], "sim.seed");
  if (j.count("round_bound")) sim.round_bound = as_int(j["round_bound"], "sim.round_bound");
  if (j.count("max_virtual_time_ms")) {
    sim.max_virtual_time_ms = as_double(j["max_virtual_time_ms"], "sim.max_virtual_time_ms");
  }
  if (j.count("reconfigure_round")) {
    sim.reconfigure_round = as_int(j["reconfigure_round"], "sim.reconfigure_round");
  }
  if (j.count("reconfigure_enabled")) {
    sim.reconfigure_enabled = as_bool(j["reconfigure_enabled"], "sim.reconfigure_enabled");
  }
  if (j.count("stakes")) sim.stakes = as_stake_list(j["stakes"], "sim.stakes");
}

void parse_range_int(const json& v, const std::string& where, int& lo, int& hi) {
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError("config key '" + where + "' must be a [lo, hi] pair");
  }
  lo = static_cast<int>(as_int(v[0], where + "[0]"));
  hi = static_cast<int>(as_int(v[1], where + "[1]"));
}

void parse_range_double(const json& v, const std::string& where, double& lo, double& hi) {
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError("config key '" + where + "' must be a [lo, hi] pair");
  }
  lo = as_double(v[0], where + "[0]");
  hi = as_double(v[1], where + "[1]");
}

void parse_fuzz(const json& j, FuzzConfig& fuzz) {
  reject_unknown_keys(j, "fuzz",
                      {"parameters", "values_per_parameter", "num_nodes_range",
                       "iteration_duration_ms_range", "failure_chance_range"});
  if (j.count("parameters")) {
    const json& p = j["parameters"];
    if (!p.is_array()) throw ConfigError("config key 'fuzz.parameters' must be an array");
    fuzz.parameters.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      fuzz.parameters.push_back(
          as_string(p[i], "fuzz.parameters[" + std::to_string(i) + "]"));
    }
  }
  if (j.count("values_per_parameter")) {
    fuzz.values_per_parameter =
        static_cast<int>(as_int(j["values_per_parameter"], "fuzz.values_per_parameter"));
  }
  if (j.count("num_nodes_range")) {
    parse_range_int(j["num_nodes_range"], "fuzz.num_nodes_range", fuzz.num_nodes_lo,
                    fuzz.num_nodes_hi);
  }
  if (j.count("iteration_duration_ms_range")) {
    parse_range_double(j["iteration_duration_ms_range"], "fuzz.iteration_duration_ms_range",
                       fuzz.iteration_lo_ms, fuzz.iteration_hi_ms);
  }
  if (j.count("failure_chance_range")) {
    parse_range_double(j["failure_chance_range"], "fuzz.failure_chance_range",
                       fuzz.failure_lo, fuzz.failure_hi);
  }
}

void parse_model(const json& j, ModelSection& model) {
  reject_unknown_keys(j, "model", {"nodes", "stakes", "byzantine_count"});
  if (j.count("nodes")) model.nodes = static_cast<int>(as_int(j["nodes"], "model.nodes"));
  if (j.count("stakes")) model.stakes = as_stake_list(j["stakes"], "model.stakes");
  if (j.count("byzantine_count")) {
    model.byzantine_count =
        static_cast<int>(as_int(j["byzantine_count"], "model.byzantine_count"));
  }
}

void parse_workflow(const json& j, WorkflowConfig& wf) {
  reject_unknown_keys(j, "workflow",
                      {"budget", "walk_traces", "walk_depth", "store",
                       "all_violations", "jobs"});
  if (j.count("budget")) wf.budget = static_cast<int>(as_int(j["budget"], "workflow.budget"));
  if (j.count("walk_traces")) {
    wf.walk_traces = static_cast<int>(as_int(j["walk_traces"], "workflow.walk_traces"));
  }
  if (j.count("walk_depth")) {
    wf.walk_depth = static_cast<int>(as_int(j["walk_depth"], "workflow.walk_depth"));
  }
  if (j.count("store")) wf.store_path = as_string(j["store"], "workflow.store");
  if (j.count("all_violations")) {
    wf.all_violations = as_bool(j["all_violations"], "workflow.all_violations");
  }
  if (j.count("jobs")) wf.jobs = static_cast<int>(as_int(j["jobs"], "workflow.jobs"));
}

}  // namespace

ModelConfig HarnessConfig::walk_model_config() const {
  ModelConfig m;
  for (int i = 0; i < model.nodes; ++i) m.node_set.push_back(node_id_for_index(i));
  m.stakes = model.stakes.empty()
                 ? std::vector<std::int64_t>(static_cast<std::size_t>(model.nodes), 1)
                 : model.stakes;
  for (int i = 0; i < model.byzantine_count; ++i) {
    m.byzantine.push_back(node_id_for_index(i));
  }
  m.round_bound = sim.round_bound;
  m.reconfigure_round = sim.reconfigure_round;
  m.reconfigure_enabled = sim.reconfigure_enabled;
  apply_model_violation(m, seeded_violation);
  return m;
}

nlohmann::json HarnessConfig::to_json() const {
  nlohmann::json j;
  j["sim"] = {{"num_nodes", sim.num_nodes},
              {"number_faulty", sim.number_faulty},
              {"vertex_production_rate", sim.vertex_production_rate},
              {"failure_chance", sim.failure_chance},
              {"message_send_delay_ms", sim.message_send_delay_ms},
              {"message_receive_delay_ms", sim.message_receive_delay_ms},
              {"iteration_duration_ms", sim.iteration_duration_ms},
              {"seed", sim.seed},
              {"round_bound", sim.round_bound},
              {"max_virtual_time_ms", sim.max_virtual_time_ms},
              {"reconfigure_round", sim.reconfigure_round},
              {"reconfigure_enabled", sim.reconfigure_enabled},
              {"stakes", sim.stakes}};
  j["fuzz"] = {{"parameters", fuzz.parameters},
               {"values_per_parameter", fuzz.values_per_parameter},
               {"num_nodes_range", {fuzz.num_nodes_lo, fuzz.num_nodes_hi}},
               {"iteration_duration_ms_range", {fuzz.iteration_lo_ms, fuzz.iteration_hi_ms}},
               {"failure_chance_range", {fuzz.failure_lo, fuzz.failure_hi}}};
  j["model"] = {{"nodes", model.nodes},
                {"stakes", model.stakes},
                {"byzantine_count", model.byzantine_count}};
  j["mapping"] = mapping.to_json();
  j["workflow"] = {{"budget", workflow.budget},
                   {"walk_traces", workflow.walk_traces},
                   {"walk_depth", workflow.walk_depth},
                   {"store", workflow.store_path},
                   {"all_violations", workflow.all_violations},
                   {"jobs", workflow.jobs}};
  j["metrics"] = metrics;
  j["seeded_violation"] = seeded_violation;
  return j;
}

std::string HarnessConfig::config_id() const {
  return sha256_hex(to_json().dump()).substr(0, 12);
}

void validate_harness_config(const HarnessConfig& cfg) {
  validate_sim_config(cfg.sim);
  if (cfg.model.nodes < 1) throw ConfigError("model.nodes must be at least 1");
  if (cfg.model.byzantine_count < 0 ||
      (cfg.model.byzantine_count > 0 &&
       3 * cfg.model.byzantine_count >= cfg.model.nodes)) {
    throw ConfigError("model.byzantine_count must satisfy 3f < nodes");
  }
  if (!cfg.model.stakes.empty()) {
    if (cfg.model.stakes.size() != static_cast<std::size_t>(cfg.model.nodes)) {
      throw ConfigError("model.stakes must be empty or one entry per node");
    }
    for (auto s : cfg.model.stakes) {
      if (s < 1) throw ConfigError("model.stakes entries must be positive");
    }
  }
  if (cfg.fuzz.values_per_parameter < 1) {
    throw ConfigError("fuzz.values_per_parameter must be at least 1");
  }
  if (cfg.fuzz.parameters.empty()) {
    throw ConfigError("fuzz.parameters must not be empty");
  }
  std::set<std::string> seen;
  for (const auto& p : cfg.fuzz.parameters) {
    if (p != "num_nodes" && p != "iteration_duration" && p != "failure_chance") {
      throw ConfigError("unknown fuzz parameter '" + p + "'");
    }
    if (!seen.insert(p).second) {
      throw ConfigError("duplicate fuzz parameter '" + p + "'");
    }
  }
  if (cfg.fuzz.num_nodes_lo < 1 || cfg.fuzz.num_nodes_hi < cfg.fuzz.num_nodes_lo) {
    throw ConfigError("fuzz.num_nodes_range must be an ordered pair of positive values");
  }
  if (cfg.fuzz.iteration_lo_ms <= 0.0 ||
      cfg.fuzz.iteration_hi_ms < cfg.fuzz.iteration_lo_ms) {
    throw ConfigError("fuzz.iteration_duration_ms_range must be ordered and positive");
  }
  if (cfg.fuzz.failure_lo < 0.0 || cfg.fuzz.failure_hi > 1.0 ||
      cfg.fuzz.failure_hi < cfg.fuzz.failure_lo) {
    throw ConfigError("fuzz.failure_chance_range must be ordered within [0, 1]");
  }
  // A zero budget is legal and yields an empty conformance report.
  if (cfg.workflow.budget < 0) throw ConfigError("workflow.budget must be non-negative");
  if (cfg.workflow.walk_traces < 1) {
    throw ConfigError("workflow.walk_traces must be at least 1");
  }
  if (cfg.workflow.walk_depth < 1) {
    throw ConfigError("workflow.walk_depth must be at least 1");
  }
  if (cfg.workflow.jobs < 1) throw ConfigError("workflow.jobs must be at least 1");
  std::set<std::string> mseen;
  for (const auto& name : cfg.metrics) {
    if (!is_metric_name(name)) throw ConfigError("unknown metric '" + name + "'");
    if (!mseen.insert(name).second) throw ConfigError("duplicate metric '" + name + "'");
  }
  if (!cfg.seeded_violation.empty() && find_violation(cfg.seeded_violation) == nullptr) {
    throw ConfigError("unknown seeded violation '" + cfg.seeded_violation + "'");
  }
  cfg.mapping.validate();
  validate_model_config(cfg.walk_model_config());
}

HarnessConfig default_harness_config() { return HarnessConfig{}; }

HarnessConfig harness_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  reject_unknown_keys(j, "",
                      {"sim", "fuzz", "model", "mapping", "workflow", "metrics",
                       "seeded_violation"});
  HarnessConfig cfg;
  if (j.count("sim")) {
    if (!j["sim"].is_object()) throw ConfigError("config key 'sim' must be an object");
    parse_sim(j["sim"], cfg.sim);
  }
  if (j.count("fuzz")) {
    if (!j["fuzz"].is_object()) throw ConfigError("config key 'fuzz' must be an object");
    parse_fuzz(j["fuzz"], cfg.fuzz);
  }
  if (j.count("model")) {
    if (!j["model"].is_object()) throw ConfigError("config key 'model' must be an object");
    parse_model(j["model"], cfg.model);
  }
  if (j.count("mapping")) {
    try {
      cfg.mapping = MappingTable::from_json(j["mapping"]);
    } catch (const MappingError& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.count("workflow")) {
    if (!j["workflow"].is_object()) {
      throw ConfigError("config key 'workflow' must be an object");
    }
    parse_workflow(j["workflow"], cfg.workflow);
  }
  if (j.count("metrics")) {
    const json& m = j["metrics"];
    if (!m.is_array()) throw ConfigError("config key 'metrics' must be an array");
    cfg.metrics.clear();
    for (std::size_t i = 0; i < m.size(); ++i) {
      cfg.metrics.push_back(as_string(m[i], "metrics[" + std::to_string(i) + "]"));
    }
  }
  if (j.count("seeded_violation")) {
    cfg.seeded_violation = as_string(j["seeded_violation"], "seeded_violation");
  }
  validate_harness_config(cfg);
  return cfg;
}

HarnessConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return harness_config_from_json(j);
}

}  // namespace fmdse
