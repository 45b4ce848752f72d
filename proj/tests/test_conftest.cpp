#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fmdse/conftest.hpp"
#include "fmdse/rng.hpp"

namespace {

using namespace fmdse;

struct TempPath {
  std::filesystem::path p;

  explicit TempPath(const std::string& stem) {
    p = std::filesystem::temp_directory_path() /
        (stem + "-" + std::to_string(Rng(std::random_device{}()).next_u64()));
  }
  ~TempPath() { std::filesystem::remove(p); }
  std::string str() const { return p.string(); }
};

// Small grid and short runs keep the loop tests under a second apiece.
HarnessConfig quick_config() {
  HarnessConfig cfg = default_harness_config();
  cfg.sim.round_bound = 10;
  cfg.sim.seed = 404;
  cfg.fuzz.values_per_parameter = 2;
  cfg.fuzz.num_nodes_lo = 4;
  cfg.fuzz.num_nodes_hi = 8;
  cfg.fuzz.iteration_lo_ms = 10.0;
  cfg.fuzz.iteration_hi_ms = 20.0;
  cfg.fuzz.failure_lo = 0.0;
  cfg.fuzz.failure_hi = 0.2;
  cfg.workflow.budget = 2;
  cfg.workflow.walk_traces = 3;
  cfg.workflow.walk_depth = 250;
  validate_harness_config(cfg);
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_SUITE("conftest") {

TEST_CASE("discrepancy classes have stable names") {
  CHECK(violation_class_name(ViolationClass::TypeI) == "type-I");
  CHECK(violation_class_name(ViolationClass::TypeII) == "type-II");
  CHECK(violation_class_name(ViolationClass::Prop) == "prop");
}

TEST_CASE("abstraction failures split on the safety verdict") {
  AcceptResult rejected;
  rejected.accepted = false;
  rejected.kind = RejectKind::GuardFailure;

  SafetyFinding clean;
  CHECK(classify_abstraction_failure(clean, rejected) == ViolationClass::TypeI);

  SafetyFinding broken;
  broken.ok = false;
  broken.property = "block_consistency";
  CHECK(classify_abstraction_failure(broken, rejected) == ViolationClass::Prop);
}

TEST_CASE("replay failures are always type-II") {
  ReplayResult stuck;
  stuck.ok = false;
  stuck.kind = ReplayResult::Kind::NotExecutable;
  CHECK(classify_replay_failure(stuck) == ViolationClass::TypeII);

  ReplayResult diverged;
  diverged.ok = false;
  diverged.kind = ReplayResult::Kind::DigestDivergence;
  CHECK(classify_replay_failure(diverged) == ViolationClass::TypeII);
}

TEST_CASE("grid expansion covers the cross product in odometer order") {
  HarnessConfig cfg = default_harness_config();
  REQUIRE(cfg.fuzz.parameters.size() == 3);
  REQUIRE(cfg.fuzz.values_per_parameter == 3);

  std::vector<GridCombo> combos = expand_grid(cfg, 777);
  REQUIRE(combos.size() == 27);

  for (std::size_t i = 0; i < combos.size(); ++i) {
    CHECK(combos[i].index == i);
    CHECK(combos[i].sim.seed == mix_seed(777, static_cast<std::uint64_t>(i)));
    CHECK(combos[i].desc.find("num_nodes=") != std::string::npos);
    CHECK(combos[i].desc.find("iteration_duration_ms=") != std::string::npos);
    CHECK(combos[i].desc.find("failure_chance=") != std::string::npos);
  }

  // The last listed parameter varies fastest: combos 0..2 share everything
  // but failure_chance, and the num_nodes value only changes every 9 combos.
  auto prefix = [](const std::string& desc) {
    return desc.substr(0, desc.rfind(" failure_chance="));
  };
  CHECK(prefix(combos[0].desc) == prefix(combos[1].desc));
  CHECK(prefix(combos[1].desc) == prefix(combos[2].desc));
  CHECK(combos[0].desc != combos[1].desc);

  auto nodes_of = [](const GridCombo& c) { return c.sim.num_nodes; };
  for (std::size_t i = 0; i < 9; ++i) CHECK(nodes_of(combos[i]) == nodes_of(combos[0]));
  std::set<int> distinct_nodes;
  for (const auto& c : combos) distinct_nodes.insert(c.sim.num_nodes);
  CHECK(distinct_nodes.size() <= 3);
}

TEST_CASE("fuzzed node counts re-derive the fault budget") {
  HarnessConfig cfg = quick_config();
  cfg.fuzz.num_nodes_lo = 4;
  cfg.fuzz.num_nodes_hi = 20;
  cfg.fuzz.values_per_parameter = 3;

  for (const auto& combo : expand_grid(cfg, 9)) {
    const int n = combo.sim.num_nodes;
    CHECK(n >= 4);
    CHECK(n <= 20);
    CHECK(combo.sim.number_faulty == (n - 1) / 3);
    CHECK(3 * combo.sim.number_faulty < n);
    CHECK(combo.sim.stakes.empty());
  }
}

TEST_CASE("grid expansion is a pure function of the iteration seed") {
  HarnessConfig cfg = quick_config();
  std::vector<GridCombo> a = expand_grid(cfg, 42);
  std::vector<GridCombo> b = expand_grid(cfg, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].desc == b[i].desc);
    CHECK(a[i].sim.seed == b[i].sim.seed);
  }

  std::vector<GridCombo> c = expand_grid(cfg, 43);
  bool any_different = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].desc != c[i].desc) any_different = true;
  }
  CHECK(any_different);
}

TEST_CASE("single-parameter grids stay one-dimensional") {
  HarnessConfig cfg = quick_config();
  cfg.fuzz.parameters = {"num_nodes"};
  cfg.fuzz.values_per_parameter = 4;

  std::vector<GridCombo> combos = expand_grid(cfg, 5);
  REQUIRE(combos.size() == 4);
  for (const auto& combo : combos) {
    CHECK(combo.desc.rfind("num_nodes=", 0) == 0);
    CHECK(combo.desc.find(' ') == std::string::npos);
  }
}

TEST_CASE("trace generation fills a fresh store") {
  HarnessConfig cfg = quick_config();
  TempPath store_path("conftest-wf1");
  TraceStore store(store_path.p);

  WorkflowOutcome outcome = run_workflow_one(cfg, store, 1001, false);
  CHECK(outcome.violations.empty());
  CHECK(outcome.stats.runs == 8);
  CHECK(outcome.stats.new_traces > 0);
  CHECK(outcome.stats.new_traces + outcome.stats.duplicates == 8);
  CHECK(store.size() == static_cast<std::size_t>(outcome.stats.new_traces));
  CHECK_FALSE(outcome.exhausted);
}

TEST_CASE("a repeated batch is pure duplicates and reports exhaustion") {
  HarnessConfig cfg = quick_config();
  TempPath store_path("conftest-dup");
  TraceStore store(store_path.p);

  WorkflowOutcome first = run_workflow_one(cfg, store, 66, false);
  REQUIRE(first.violations.empty());
  const std::size_t filled = store.size();

  WorkflowOutcome again = run_workflow_one(cfg, store, 66, false);
  CHECK(again.violations.empty());
  CHECK(again.stats.new_traces == 0);
  CHECK(again.stats.duplicates == again.stats.runs);
  CHECK(again.exhausted);
  CHECK(store.size() == filled);
}

TEST_CASE("parallel and serial grid runs agree") {
  HarnessConfig serial_cfg = quick_config();
  serial_cfg.workflow.jobs = 1;
  HarnessConfig parallel_cfg = quick_config();
  parallel_cfg.workflow.jobs = 4;

  TempPath serial_path("conftest-serial");
  TempPath parallel_path("conftest-parallel");
  TraceStore serial_store(serial_path.p);
  TraceStore parallel_store(parallel_path.p);

  WorkflowOutcome s = run_workflow_one(serial_cfg, serial_store, 321, false);
  WorkflowOutcome p = run_workflow_one(parallel_cfg, parallel_store, 321, false);

  CHECK(s.violations.size() == p.violations.size());
  CHECK(s.stats.runs == p.stats.runs);
  CHECK(s.stats.new_traces == p.stats.new_traces);
  CHECK(s.stats.duplicates == p.stats.duplicates);
  CHECK(serial_store.size() == parallel_store.size());

  // Aggregation walks combos in ascending index order regardless of which
  // thread ran them, so the two store files match byte for byte.
  CHECK(slurp(serial_path.p) == slurp(parallel_path.p));
}

TEST_CASE("model exploration fills slots and persists the walks") {
  HarnessConfig cfg = quick_config();
  TempPath store_path("conftest-wf2");
  TraceStore store(store_path.p);

  WorkflowOutcome outcome = run_workflow_two(cfg, store, 2024, false);
  CHECK(outcome.violations.empty());
  CHECK(outcome.stats.runs == cfg.workflow.walk_traces);
  CHECK(outcome.stats.new_traces == cfg.workflow.walk_traces);
  CHECK_FALSE(outcome.exhausted);
  CHECK(store.size() == static_cast<std::size_t>(cfg.workflow.walk_traces));

  // Re-running the same slots hits the store and burns retries before
  // finding unexplored walks.
  WorkflowOutcome again = run_workflow_two(cfg, store, 2024, false);
  CHECK(again.violations.empty());
  CHECK(again.stats.retries >= cfg.workflow.walk_traces);
}

TEST_CASE("a zero-indexed implementation is rejected at the initial state") {
  HarnessConfig cfg = quick_config();
  cfg.seeded_violation = "V1";
  TempPath store_path("conftest-v1");
  TraceStore store(store_path.p);

  WorkflowOutcome outcome = run_workflow_one(cfg, store, 7, false);
  REQUIRE(outcome.violations.size() == 1);
  const ViolationReport& v = outcome.violations[0];
  CHECK(v.cls == ViolationClass::TypeI);
  CHECK(v.workflow == "I");
  CHECK(v.step == 0);
  CHECK_FALSE(v.combo_desc.empty());
  CHECK(v.evidence_hash == hash_trace(v.evidence));
  CHECK(store.size() == 0);  // aborted batch inserts nothing
}

TEST_CASE("a missing admission path surfaces as an inexecutable replay") {
  HarnessConfig cfg = quick_config();
  cfg.seeded_violation = "V5";
  TempPath store_path("conftest-v5");
  TraceStore store(store_path.p);

  WorkflowOutcome outcome = run_workflow_two(cfg, store, 11, false);
  REQUIRE_FALSE(outcome.violations.empty());
  const ViolationReport& v = outcome.violations[0];
  CHECK(v.cls == ViolationClass::TypeII);
  CHECK(v.workflow == "II");
  CHECK(v.summary.find("not executable") != std::string::npos);
}

TEST_CASE("the conformance loop alternates workflows and grows the store") {
  HarnessConfig cfg = quick_config();
  TempPath store_path("conftest-loop");
  TraceStore store(store_path.p);

  ConfTestReport report = conf_test(cfg, store);
  CHECK_FALSE(report.any_violation());
  REQUIRE(report.iterations.size() == 2);
  CHECK(report.iterations[0].workflow == "I");
  CHECK(report.iterations[1].workflow == "II");
  CHECK(report.store_initial == 0);
  CHECK(report.store_final == store.size());
  CHECK(report.store_final > report.store_initial);

  nlohmann::json j = report.to_json(cfg);
  CHECK(j["verdict"] == "conformant");
  CHECK(j["config_id"].get<std::string>().size() == 12);
  CHECK(j["iterations"].size() == 2);
  CHECK_FALSE(j.contains("seeded_violation"));
}

TEST_CASE("a zero budget yields an empty conformant report") {
  HarnessConfig cfg = quick_config();
  cfg.workflow.budget = 0;
  TempPath store_path("conftest-zero");
  TraceStore store(store_path.p);

  ConfTestReport report = conf_test(cfg, store);
  CHECK(report.iterations.empty());
  CHECK(report.violations.empty());
  CHECK(report.store_initial == 0);
  CHECK(report.store_final == 0);
  CHECK_FALSE(report.exhausted);
  CHECK(report.to_json(cfg)["verdict"] == "conformant");
}

TEST_CASE("the loop stops at the first violation by default") {
  HarnessConfig cfg = quick_config();
  cfg.seeded_violation = "V1";
  cfg.workflow.budget = 4;
  TempPath store_path("conftest-stop");
  TraceStore store(store_path.p);

  ConfTestReport report = conf_test(cfg, store);
  REQUIRE(report.any_violation());
  CHECK(report.iterations.size() == 1);
  CHECK(report.violations.size() == 1);
  CHECK(report.violations[0].cls == ViolationClass::TypeI);

  nlohmann::json j = report.to_json(cfg);
  CHECK(j["verdict"] == "violation");
  CHECK(j["seeded_violation"]["id"] == "V1");
  CHECK(j["seeded_violation"]["site"] == "model");
  CHECK(j["seeded_violation"]["expected_class"] == "type-I");
}

TEST_CASE("all_violations keeps the loop running past failures") {
  HarnessConfig cfg = quick_config();
  cfg.seeded_violation = "V1";
  cfg.workflow.budget = 2;
  cfg.workflow.all_violations = true;
  TempPath store_path("conftest-all");
  TraceStore store(store_path.p);

  ConfTestReport report = conf_test(cfg, store);
  CHECK(report.iterations.size() == 2);
  CHECK(report.violations.size() > 1);

  bool saw_one = false;
  bool saw_two = false;
  for (const auto& v : report.violations) {
    if (v.workflow == "I") saw_one = true;
    if (v.workflow == "II") saw_two = true;
  }
  CHECK(saw_one);
  CHECK(saw_two);
}

TEST_CASE("a saturated grid ends the loop as exhausted") {
  HarnessConfig cfg = quick_config();
  TempPath store_path("conftest-exhaust");
  TraceStore store(store_path.p);

  ConfTestReport warmup = conf_test(cfg, store);
  REQUIRE_FALSE(warmup.any_violation());

  // Same master seed, same grid: the first generation batch is all
  // duplicates, which reads as coverage exhaustion.
  cfg.workflow.budget = 4;
  ConfTestReport rerun = conf_test(cfg, store);
  CHECK(rerun.exhausted);
  CHECK(rerun.iterations.size() == 1);
  CHECK(rerun.iterations[0].stats.new_traces == 0);
  CHECK(rerun.store_final == rerun.store_initial);
}

TEST_CASE("violation reports serialize every field") {
  ViolationReport v;
  v.cls = ViolationClass::Prop;
  v.workflow = "I";
  v.step = 12;
  v.summary = "safety property dag_consistency violated during simulation";
  v.detail = "fork at round 3";
  v.combo_desc = "num_nodes=7";
  v.seed = 99;
  v.evidence_hash = "abc123";

  nlohmann::json j = v.to_json();
  CHECK(j["class"] == "prop");
  CHECK(j["workflow"] == "I");
  CHECK(j["step"] == 12);
  CHECK(j["summary"].get<std::string>().find("dag_consistency") != std::string::npos);
  CHECK(j["detail"] == "fork at round 3");
  CHECK(j["combo"] == "num_nodes=7");
  CHECK(j["seed"] == 99);
  CHECK(j["evidence_hash"] == "abc123");
  CHECK(j["evidence_steps"] == 0);
}

}  // TEST_SUITE
