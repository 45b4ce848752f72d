#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdse/abstract_state.hpp"
#include "fmdse/actions.hpp"

namespace fmdse {

inline constexpr int kTraceVersion = 1;

// Carried for reproducibility and reporting; never part of the trace hash.
struct TraceMeta {
  std::string source;  // "model" or "simulator"
  std::uint64_t seed = 0;
  std::string config_id;
};

struct TraceStep {
  Action action;
  std::string post_digest;
  std::optional<nlohmann::json> post_state;
};

struct Trace {
  TraceMeta meta;
  std::string init_digest;
  std::vector<TraceStep> steps;
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : std::runtime_error("trace parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Trace identity: covers the initial digest and the ordered (action,
// post_digest) pairs. Metadata and embedded states are excluded, so the same
// behavior hashes identically regardless of provenance.
std::string hash_trace(const Trace& t);

// JSON Lines: one header object, then one object per step.
std::string serialize_trace(const Trace& t, bool with_states = false);
Trace deserialize_trace(const std::string& text);

void write_trace_file(const std::filesystem::path& path, const Trace& t,
                      bool with_states = false);
Trace read_trace_file(const std::filesystem::path& path);

nlohmann::json state_to_json(const AbstractState& s);
AbstractState state_from_json(const nlohmann::json& j);

}  // namespace fmdse
