#include "fmdse/actions.hpp"

#include <array>
#include <stdexcept>

namespace fmdse {

namespace {

struct KindSchema {
  const char* kind;
  std::vector<const char*> params;
};

const std::array<KindSchema, 6>& schemas() {
  static const std::array<KindSchema, 6> s = {{
      {kCreateVertex, {"p"}},
      {kReceiveVertex, {"p", "q", "r", "v"}},
      {kNextRound, {"p"}},
      {kCommitLeader, {"p", "w"}},
      {kEquivocate, {"p", "r"}},
      {kReconfigure, {}},
  }};
  return s;
}

}  // namespace

std::string Action::str(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end() || !std::holds_alternative<std::string>(it->second)) {
    throw std::runtime_error("action " + kind + ": missing string param '" + name + "'");
  }
  return std::get<std::string>(it->second);
}

std::int64_t Action::num(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end() || !std::holds_alternative<std::int64_t>(it->second)) {
    throw std::runtime_error("action " + kind + ": missing integer param '" + name + "'");
  }
  return std::get<std::int64_t>(it->second);
}

const std::vector<std::string>& impl_action_kinds() {
  static const std::vector<std::string> kKinds = {
      kImplAdvanceRound,  kImplCreateVertex, kImplIncorporate,
      kImplCommitLeader,  kImplEquivocate,   kImplReconfigureAdd,
      kImplBroadcast,     kImplBufferVertex, kImplDuplicateDrop,
      kImplEquivocationDetected, kImplRejectVertex, kImplCrash,
  };
  return kKinds;
}

bool is_abstract_kind(const std::string& kind) {
  for (const auto& s : schemas()) {
    if (kind == s.kind) return true;
  }
  return false;
}

std::string validate_abstract_action(const Action& a) {
  for (const auto& s : schemas()) {
    if (a.kind != s.kind) continue;
    if (a.params.size() != s.params.size()) {
      return "action " + a.kind + ": expected " + std::to_string(s.params.size()) +
             " params, got " + std::to_string(a.params.size());
    }
    for (const char* name : s.params) {
      if (!a.has(name)) return "action " + a.kind + ": missing param '" + name + "'";
    }
    return "";
  }
  return "unknown abstract action kind '" + a.kind + "'";
}

std::string canonical_action(const Action& a) {
  std::string out = a.kind;
  out += '(';
  bool first = true;
  for (const auto& [k, v] : a.params) {  // std::map iterates keys ascending
    if (!first) out += ',';
    first = false;
    out += k;
    out += '=';
    if (std::holds_alternative<std::int64_t>(v)) {
      out += std::to_string(std::get<std::int64_t>(v));
    } else {
      out += std::get<std::string>(v);
    }
  }
  out += ')';
  return out;
}

Action make_action(std::string kind,
                   std::initializer_list<std::pair<const std::string, ParamValue>> params) {
  Action a;
  a.kind = std::move(kind);
  a.params = std::map<std::string, ParamValue>(params);
  return a;
}

}  // namespace fmdse
