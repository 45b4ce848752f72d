#include "fmdse/trace.hpp"

#include <fstream>
#include <sstream>

namespace fmdse {

namespace {

using nlohmann::json;

json params_to_json(const Action& a) {
  json out = json::object();
  for (const auto& [k, v] : a.params) {
    if (std::holds_alternative<std::int64_t>(v)) {
      out[k] = std::get<std::int64_t>(v);
    } else {
      out[k] = std::get<std::string>(v);
    }
  }
  return out;
}

Action action_from_json(const json& j, std::size_t line) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("params")) {
    throw TraceParseError(line, "action must be an object with kind and params");
  }
  Action a;
  a.kind = j.at("kind").get<std::string>();
  const json& p = j.at("params");
  if (!p.is_object()) throw TraceParseError(line, "action params must be an object");
  for (auto it = p.begin(); it != p.end(); ++it) {
    if (it.value().is_number_integer()) {
      a.params[it.key()] = it.value().get<std::int64_t>();
    } else if (it.value().is_string()) {
      a.params[it.key()] = it.value().get<std::string>();
    } else {
      throw TraceParseError(line, "param '" + it.key() + "' must be integer or string");
    }
  }
  return a;
}

}  // namespace

std::string hash_trace(const Trace& t) {
  Sha256Stream h;
  h.update("trace/v1\n");
  h.update(t.init_digest);
  h.update("\n");
  for (const auto& step : t.steps) {
    h.update(canonical_action(step.action));
    h.update("->");
    h.update(step.post_digest);
    h.update("\n");
  }
  return h.finish_hex();
}

std::string serialize_trace(const Trace& t, bool with_states) {
  json header = {
      {"version", kTraceVersion},
      {"source", t.meta.source},
      {"seed", t.meta.seed},
      {"config_id", t.meta.config_id},
      {"init_digest", t.init_digest},
  };
  std::string out = header.dump();
  out += '\n';
  for (const auto& step : t.steps) {
    json line = {
        {"action", {{"kind", step.action.kind}, {"params", params_to_json(step.action)}}},
        {"post_digest", step.post_digest},
    };
    if (with_states && step.post_state.has_value()) {
      line["post_state"] = *step.post_state;
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

Trace deserialize_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Trace t;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TraceParseError(lineno, e.what());
    }
    if (!saw_header) {
      if (!j.contains("version") || !j.at("version").is_number_integer()) {
        throw TraceParseError(lineno, "header missing integer version");
      }
      if (j.at("version").get<int>() != kTraceVersion) {
        throw TraceParseError(lineno, "unsupported trace version");
      }
      for (const char* field : {"source", "config_id", "init_digest"}) {
        if (!j.contains(field) || !j.at(field).is_string()) {
          throw TraceParseError(lineno, std::string("header missing string ") + field);
        }
      }
      if (!j.contains("seed") || !j.at("seed").is_number()) {
        throw TraceParseError(lineno, "header missing numeric seed");
      }
      t.meta.source = j.at("source").get<std::string>();
      t.meta.seed = j.at("seed").get<std::uint64_t>();
      t.meta.config_id = j.at("config_id").get<std::string>();
      t.init_digest = j.at("init_digest").get<std::string>();
      if (!looks_like_digest(t.init_digest)) {
        throw TraceParseError(lineno, "init_digest is not a digest");
      }
      saw_header = true;
      continue;
    }
    TraceStep step;
    if (!j.contains("action")) throw TraceParseError(lineno, "step missing action");
    step.action = action_from_json(j.at("action"), lineno);
    if (!j.contains("post_digest") || !j.at("post_digest").is_string()) {
      throw TraceParseError(lineno, "step missing post_digest");
    }
    step.post_digest = j.at("post_digest").get<std::string>();
    if (!looks_like_digest(step.post_digest)) {
      throw TraceParseError(lineno, "post_digest is not a digest");
    }
    if (j.contains("post_state")) step.post_state = j.at("post_state");
    t.steps.push_back(std::move(step));
  }
  if (!saw_header) throw TraceParseError(lineno, "missing header line");
  if (t.steps.empty()) throw TraceParseError(lineno, "trace has no steps");
  return t;
}

void write_trace_file(const std::filesystem::path& path, const Trace& t, bool with_states) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path.string());
  out << serialize_trace(t, with_states);
  if (!out.flush()) throw std::runtime_error("failed writing trace file: " + path.string());
}

Trace read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_trace(buf.str());
}

nlohmann::json state_to_json(const AbstractState& s) {
  json nodes = json::array();
  for (const auto& n : s.nodes) {
    json dag = json::object();
    for (const auto& [round, row] : n.dag) {
      json jrow = json::object();
      for (const auto& [creator, ref] : row) {
        jrow[s.nodes[creator].id] = ref;
      }
      dag[std::to_string(round)] = std::move(jrow);
    }
    json leaders = json::array();
    for (const auto& [w, ref] : n.leaders) leaders.push_back(json::array({w, ref}));
    nodes.push_back({{"id", n.id}, {"round", n.round}, {"dag", std::move(dag)},
                     {"leaders", std::move(leaders)}});
  }
  return {{"nodes", std::move(nodes)}, {"faulty", s.faulty}};
}

AbstractState state_from_json(const nlohmann::json& j) {
  AbstractState s;
  for (const auto& jn : j.at("nodes")) {
    NodeView n;
    n.id = jn.at("id").get<std::string>();
    n.round = jn.at("round").get<Round>();
    for (const auto& [w, ref] : jn.at("leaders").items()) {
      (void)w;
      n.leaders.emplace_back(ref.at(0).get<Wave>(), ref.at(1).get<std::string>());
    }
    s.nodes.push_back(std::move(n));
  }
  s.faulty = j.at("faulty").get<std::vector<std::string>>();
  // Second pass: creator ids in the dag resolve against the full node list.
  std::size_t i = 0;
  for (const auto& jn : j.at("nodes")) {
    for (const auto& [round_str, row] : jn.at("dag").items()) {
      const Round r = std::stoll(round_str);
      for (const auto& [creator_id, ref] : row.items()) {
        const int ci = s.node_index(creator_id);
        if (ci < 0) throw std::runtime_error("post_state dag references unknown node " + creator_id);
        s.nodes[i].dag[r][ci] = ref.get<std::string>();
      }
    }
    ++i;
  }
  return s;
}

}  // namespace fmdse
