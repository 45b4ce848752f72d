#include "fmdse/mapping.hpp"

#include <algorithm>
#include <set>

#include "fmdse/actions.hpp"

namespace fmdse {

MappingTable MappingTable::defaults() {
  MappingTable t;
  t.entries[kImplAdvanceRound] = {false, kNextRound, {{"p", "p"}}};
  t.entries[kImplCreateVertex] = {false, kCreateVertex, {{"p", "p"}}};
  t.entries[kImplIncorporate] = {
      false, kReceiveVertex, {{"p", "p"}, {"q", "q"}, {"r", "r"}, {"v", "v"}}};
  t.entries[kImplCommitLeader] = {false, kCommitLeader, {{"p", "p"}, {"w", "w"}}};
  t.entries[kImplEquivocate] = {false, kEquivocate, {{"p", "p"}, {"r", "r"}}};
  t.entries[kImplReconfigureAdd] = {false, kReconfigure, {}};
  for (const char* internal_kind :
       {kImplBroadcast, kImplBufferVertex, kImplDuplicateDrop,
        kImplEquivocationDetected, kImplRejectVertex, kImplCrash}) {
    t.entries[internal_kind] = {true, "", {}};
  }
  t.projection = {{"round", "current_round"},
                  {"dag", "local_dag"},
                  {"leaders", "committed"},
                  {"faulty", "faulty_set"}};
  return t;
}

MappingTable MappingTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw MappingError("mapping section must be an object");
  MappingTable t;
  for (const auto& [key, value] : j.items()) {
    if (key == "actions") {
      if (!value.is_object()) throw MappingError("mapping.actions must be an object");
      for (const auto& [kind, spec] : value.items()) {
        if (!spec.is_object()) {
          throw MappingError("mapping.actions." + kind + " must be an object");
        }
        MappingEntry e;
        for (const auto& [field, fv] : spec.items()) {
          if (field == "internal") {
            if (!fv.is_boolean()) {
              throw MappingError("mapping.actions." + kind + ".internal must be a bool");
            }
            e.internal = fv.get<bool>();
          } else if (field == "to") {
            if (!fv.is_string()) {
              throw MappingError("mapping.actions." + kind + ".to must be a string");
            }
            e.abstract_kind = fv.get<std::string>();
          } else if (field == "params") {
            if (!fv.is_object()) {
              throw MappingError("mapping.actions." + kind + ".params must be an object");
            }
            for (const auto& [an, cn] : fv.items()) {
              if (!cn.is_string()) {
                throw MappingError("mapping.actions." + kind + ".params." + an +
                                   " must be a string");
              }
              e.params.emplace_back(an, cn.get<std::string>());
            }
          } else {
            throw MappingError("unknown key mapping.actions." + kind + "." + field);
          }
        }
        std::sort(e.params.begin(), e.params.end());
        t.entries[kind] = std::move(e);
      }
    } else if (key == "state_projection") {
      if (!value.is_object()) {
        throw MappingError("mapping.state_projection must be an object");
      }
      for (const auto& [an, cn] : value.items()) {
        if (!cn.is_string()) {
          throw MappingError("mapping.state_projection." + an + " must be a string");
        }
        t.projection[an] = cn.get<std::string>();
      }
    } else {
      throw MappingError("unknown key mapping." + key);
    }
  }
  t.validate();
  return t;
}

nlohmann::json MappingTable::to_json() const {
  nlohmann::json actions = nlohmann::json::object();
  for (const auto& [kind, e] : entries) {
    nlohmann::json spec = nlohmann::json::object();
    if (e.internal) {
      spec["internal"] = true;
    } else {
      spec["to"] = e.abstract_kind;
      nlohmann::json params = nlohmann::json::object();
      for (const auto& [an, cn] : e.params) params[an] = cn;
      spec["params"] = params;
    }
    actions[kind] = spec;
  }
  nlohmann::json proj = nlohmann::json::object();
  for (const auto& [an, cn] : projection) proj[an] = cn;
  return {{"actions", actions}, {"state_projection", proj}};
}

void MappingTable::validate() const {
  const auto& vocabulary = impl_action_kinds();
  for (const auto& kind : vocabulary) {
    auto it = entries.find(kind);
    if (it == entries.end()) {
      throw MappingError("mapping does not cover concrete action kind '" + kind + "'");
    }
    const MappingEntry& e = it->second;
    if (e.internal) {
      if (!e.abstract_kind.empty() || !e.params.empty()) {
        throw MappingError("internal mapping for '" + kind +
                           "' must not carry a target action");
      }
      continue;
    }
    if (!is_abstract_kind(e.abstract_kind)) {
      throw MappingError("mapping for '" + kind + "' targets unknown abstract kind '" +
                         e.abstract_kind + "'");
    }
    Action probe;
    probe.kind = e.abstract_kind;
    for (const auto& [an, cn] : e.params) {
      (void)cn;
      probe.params[an] = std::int64_t{0};
    }
    std::string err = validate_abstract_action(probe);
    if (!err.empty()) {
      throw MappingError("mapping for '" + kind + "' is not schema-valid: " + err);
    }
  }
  for (const auto& [kind, e] : entries) {
    (void)e;
    if (std::find(vocabulary.begin(), vocabulary.end(), kind) == vocabulary.end()) {
      throw MappingError("mapping covers unknown concrete action kind '" + kind + "'");
    }
  }
  for (const char* field : {"round", "dag", "leaders", "faulty"}) {
    auto it = projection.find(field);
    if (it == projection.end() || it->second.empty()) {
      throw MappingError(std::string("state projection must name a concrete field for '") +
                         field + "'");
    }
  }
}

Trace abstract_trace(const Trace& concrete, const MappingTable& table) {
  table.validate();
  Trace out;
  out.meta = concrete.meta;
  out.init_digest = concrete.init_digest;
  for (std::size_t i = 0; i < concrete.steps.size(); ++i) {
    const TraceStep& step = concrete.steps[i];
    auto it = table.entries.find(step.action.kind);
    if (it == table.entries.end()) {
      throw MappingError("step " + std::to_string(i + 1) +
                         ": no mapping for concrete action kind '" + step.action.kind +
                         "'");
    }
    if (it->second.internal) continue;
    Action a;
    a.kind = it->second.abstract_kind;
    for (const auto& [an, cn] : it->second.params) {
      auto pit = step.action.params.find(cn);
      if (pit == step.action.params.end()) {
        throw MappingError("step " + std::to_string(i + 1) + ": concrete action '" +
                           step.action.kind + "' lacks parameter '" + cn + "'");
      }
      a.params[an] = pit->second;
    }
    std::string err = validate_abstract_action(a);
    if (!err.empty()) {
      throw MappingError("step " + std::to_string(i + 1) + ": " + err);
    }
    TraceStep mapped;
    mapped.action = std::move(a);
    mapped.post_digest = step.post_digest;
    out.steps.push_back(std::move(mapped));
  }
  if (out.steps.empty()) {
    throw MappingError("abstraction produced an empty trace");
  }
  return out;
}

namespace {

void diff_line(std::vector<std::string>& lines, std::string text) {
  if (lines.size() < 8) lines.push_back(std::move(text));
}

}  // namespace

std::string diff_states(const AbstractState& expected, const AbstractState& actual) {
  std::vector<std::string> lines;
  if (expected.nodes.size() != actual.nodes.size()) {
    diff_line(lines, "node count " + std::to_string(expected.nodes.size()) + " vs " +
                         std::to_string(actual.nodes.size()));
  }
  if (expected.faulty != actual.faulty) {
    diff_line(lines, "faulty sets differ");
  }
  std::size_t n = std::min(expected.nodes.size(), actual.nodes.size());
  for (std::size_t i = 0; i < n; ++i) {
    const NodeView& e = expected.nodes[i];
    const NodeView& a = actual.nodes[i];
    if (e.id != a.id) {
      diff_line(lines, "node " + std::to_string(i) + " id " + e.id + " vs " + a.id);
      continue;
    }
    if (e.round != a.round) {
      diff_line(lines, e.id + ": round " + std::to_string(e.round) + " vs " +
                           std::to_string(a.round));
    }
    if (e.leaders != a.leaders) {
      diff_line(lines, e.id + ": committed leader sequences differ (" +
                           std::to_string(e.leaders.size()) + " vs " +
                           std::to_string(a.leaders.size()) + " waves)");
    }
    for (const auto& [r, row] : e.dag) {
      auto ait = a.dag.find(r);
      for (const auto& [ci, ref] : row) {
        const std::string* aref = nullptr;
        if (ait != a.dag.end()) {
          auto sit = ait->second.find(ci);
          if (sit != ait->second.end()) aref = &sit->second;
        }
        if (aref == nullptr) {
          diff_line(lines, e.id + ": dag slot (" + std::to_string(r) + "," +
                               std::to_string(ci) + ") missing");
        } else if (*aref != ref) {
          diff_line(lines, e.id + ": dag slot (" + std::to_string(r) + "," +
                               std::to_string(ci) + ") holds a different vertex");
        }
      }
    }
    for (const auto& [r, row] : a.dag) {
      auto eit = e.dag.find(r);
      for (const auto& [ci, ref] : row) {
        (void)ref;
        if (eit == e.dag.end() || !eit->second.count(ci)) {
          diff_line(lines, e.id + ": unexpected dag slot (" + std::to_string(r) + "," +
                               std::to_string(ci) + ")");
        }
      }
    }
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out += "; ";
    out += lines[i];
  }
  return out;
}

ReplayResult replay_check(const ModelConfig& mcfg, const SimConfig& scfg,
                          const ViolationFlags& flags, const Trace& model_trace) {
  for (std::size_t i = 0; i < mcfg.node_set.size(); ++i) {
    if (mcfg.node_set[i] != node_id_for_index(static_cast<int>(i))) {
      throw MappingError("replay requires canonical node naming (P1, P2, ...)");
    }
  }
  SimConfig cfg = scfg;
  cfg.num_nodes = static_cast<int>(mcfg.node_set.size());
  cfg.number_faulty = static_cast<int>(mcfg.byzantine.size());
  cfg.stakes = mcfg.stakes;
  cfg.round_bound = mcfg.round_bound;
  cfg.reconfigure_round = mcfg.reconfigure_round;
  cfg.reconfigure_enabled = mcfg.reconfigure_enabled;

  Simulator sim = Simulator::driver(cfg, flags);
  ReplayResult rr;
  if (sim.init_digest() != model_trace.init_digest) {
    rr.ok = false;
    rr.kind = ReplayResult::Kind::DigestDivergence;
    rr.step = 0;
    rr.detail = "initial state digest differs";
    rr.expected_digest = model_trace.init_digest;
    rr.got_digest = sim.init_digest();
    rr.concrete_log = sim.trace();
    return rr;
  }

  for (std::size_t i = 0; i < model_trace.steps.size(); ++i) {
    const TraceStep& step = model_trace.steps[i];
    const Action& a = step.action;
    DriveResult res;
    if (a.kind == kNextRound) {
      res = sim.drive_advance(a.str("p"));
    } else if (a.kind == kCreateVertex) {
      res = sim.drive_create(a.str("p"));
    } else if (a.kind == kReceiveVertex) {
      res = sim.drive_deliver(a.str("p"), a.str("v"));
    } else if (a.kind == kCommitLeader) {
      res = sim.drive_commit(a.str("p"), a.num("w"));
    } else if (a.kind == kEquivocate) {
      res = sim.drive_equivocate(a.str("p"), a.num("r"));
    } else if (a.kind == kReconfigure) {
      res = sim.drive_reconfigure();
    } else {
      throw MappingError("step " + std::to_string(i + 1) +
                         ": not an abstract action kind: " + a.kind);
    }
    if (!res.ok) {
      rr.ok = false;
      rr.kind = ReplayResult::Kind::NotExecutable;
      rr.step = i + 1;
      rr.detail = canonical_action(a) + " not executable: " + res.detail;
      break;
    }
    std::string got = sim.current_digest();
    if (got != step.post_digest) {
      rr.ok = false;
      rr.kind = ReplayResult::Kind::DigestDivergence;
      rr.step = i + 1;
      rr.detail = "state digest diverged after " + canonical_action(a);
      rr.expected_digest = step.post_digest;
      rr.got_digest = got;
      if (step.post_state.has_value()) {
        rr.field_diff = diff_states(state_from_json(*step.post_state),
                                    sim.abstract_view());
      }
      break;
    }
  }
  rr.concrete_log = sim.trace();
  return rr;
}

}  // namespace fmdse
