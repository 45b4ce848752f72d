#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace fmdse {

// Abstract action vocabulary. Concrete (simulator) actions reuse the same
// envelope with kinds prefixed "impl."; only the six kinds below are valid in
// abstract traces.
inline constexpr const char* kCreateVertex = "CreateVertex";
inline constexpr const char* kReceiveVertex = "ReceiveVertex";
inline constexpr const char* kNextRound = "NextRound";
inline constexpr const char* kCommitLeader = "CommitLeader";
inline constexpr const char* kEquivocate = "Equivocate";
inline constexpr const char* kReconfigure = "Reconfigure";

inline constexpr const char* kImplPrefix = "impl.";

// Concrete action kinds the simulator records. The first six carry protocol
// meaning and map onto abstract actions; the rest are wiring detail that the
// abstraction discards.
inline constexpr const char* kImplAdvanceRound = "impl.advance_round";
inline constexpr const char* kImplCreateVertex = "impl.create_vertex";
inline constexpr const char* kImplIncorporate = "impl.incorporate";
inline constexpr const char* kImplCommitLeader = "impl.commit_leader";
inline constexpr const char* kImplEquivocate = "impl.equivocate";
inline constexpr const char* kImplReconfigureAdd = "impl.reconfigure_add";
inline constexpr const char* kImplBroadcast = "impl.broadcast";
inline constexpr const char* kImplBufferVertex = "impl.buffer_vertex";
inline constexpr const char* kImplDuplicateDrop = "impl.duplicate_drop";
inline constexpr const char* kImplEquivocationDetected = "impl.equivocation_detected";
inline constexpr const char* kImplRejectVertex = "impl.reject_vertex";
inline constexpr const char* kImplCrash = "impl.crash";

// Complete concrete vocabulary; the mapping table must cover all of it.
const std::vector<std::string>& impl_action_kinds();

using ParamValue = std::variant<std::int64_t, std::string>;

struct Action {
  std::string kind;
  std::map<std::string, ParamValue> params;

  std::string str(const std::string& name) const;
  std::int64_t num(const std::string& name) const;
  bool has(const std::string& name) const { return params.count(name) != 0; }
};

bool is_abstract_kind(const std::string& kind);

// Checks the parameter names against the fixed per-kind schema. Returns an
// empty string when valid, otherwise a description of the mismatch.
std::string validate_abstract_action(const Action& a);

// Deterministic single-line rendering used by trace hashing; keys ascending.
std::string canonical_action(const Action& a);

Action make_action(std::string kind,
                   std::initializer_list<std::pair<const std::string, ParamValue>> params);

}  // namespace fmdse
