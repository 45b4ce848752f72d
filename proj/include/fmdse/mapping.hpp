#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fmdse/model.hpp"
#include "fmdse/sim.hpp"
#include "fmdse/trace.hpp"
#include "fmdse/violations.hpp"

namespace fmdse {

// A broken mapping is a harness defect, not a conformance finding; callers
// translate this exception into the dedicated error exit path.
class MappingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MappingEntry {
  bool internal = false;
  std::string abstract_kind;
  // abstract parameter name -> concrete parameter name
  std::vector<std::pair<std::string, std::string>> params;
};

// Declarative concrete-to-abstract translation, carried in the config file.
// Every concrete action kind must either map to exactly one abstract action
// or be declared internal; the projection block names the concrete state
// fields backing each abstract field.
struct MappingTable {
  std::map<std::string, MappingEntry> entries;
  std::map<std::string, std::string> projection;

  static MappingTable defaults();
  static MappingTable from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Throws MappingError on coverage gaps, unknown kinds, or parameter lists
  // that do not produce schema-valid abstract actions.
  void validate() const;
};

// Projects a concrete trace onto the abstract vocabulary: internal steps
// vanish, mapped steps keep their recorded post digest. Throws MappingError
// on unmapped kinds, missing parameters, or an empty result.
Trace abstract_trace(const Trace& concrete, const MappingTable& table);

struct ReplayResult {
  bool ok = true;
  enum class Kind { None, NotExecutable, DigestDivergence };
  Kind kind = Kind::None;
  std::size_t step = 0;  // 0 = initial state, otherwise 1-based
  std::string detail;
  std::string expected_digest;
  std::string got_digest;
  std::string field_diff;
  Trace concrete_log;
};

// Describes where two abstract states disagree, a few fields at most.
std::string diff_states(const AbstractState& expected, const AbstractState& actual);

// Drives the concrete implementation through an abstract trace step by step,
// comparing the projected digest after every action. Network delays and
// production budgets do not apply; the trace is the only scheduler.
ReplayResult replay_check(const ModelConfig& mcfg, const SimConfig& scfg,
                          const ViolationFlags& flags, const Trace& model_trace);

}  // namespace fmdse
