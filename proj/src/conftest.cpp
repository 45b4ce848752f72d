#include "fmdse/conftest.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fmdse/rng.hpp"

namespace fmdse {

std::string violation_class_name(ViolationClass c) {
  switch (c) {
    case ViolationClass::TypeI:
      return "type-I";
    case ViolationClass::TypeII:
      return "type-II";
    case ViolationClass::Prop:
      return "prop";
  }
  return "unknown";
}

ViolationClass classify_abstraction_failure(const SafetyFinding& safety,
                                            const AcceptResult& accept) {
  (void)accept;
  return safety.ok ? ViolationClass::TypeI : ViolationClass::Prop;
}

ViolationClass classify_replay_failure(const ReplayResult& replay) {
  (void)replay;
  return ViolationClass::TypeII;
}

nlohmann::json ViolationReport::to_json() const {
  return {{"class", violation_class_name(cls)},
          {"workflow", workflow},
          {"step", step},
          {"summary", summary},
          {"detail", detail},
          {"combo", combo_desc},
          {"seed", seed},
          {"evidence_hash", evidence_hash},
          {"evidence_steps", evidence.steps.size()}};
}

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::vector<GridCombo> expand_grid(const HarnessConfig& cfg,
                                   std::uint64_t iteration_seed) {
  const FuzzConfig& fuzz = cfg.fuzz;
  const int k = fuzz.values_per_parameter;
  Rng grid_rng(mix_seed(iteration_seed, "grid-values"));

  struct DrawnParam {
    std::string name;
    std::vector<std::int64_t> ints;
    std::vector<double> reals;
  };
  std::vector<DrawnParam> drawn;
  for (const auto& name : fuzz.parameters) {
    DrawnParam p;
    p.name = name;
    for (int i = 0; i < k; ++i) {
      if (name == "num_nodes") {
        p.ints.push_back(grid_rng.next_int(fuzz.num_nodes_lo, fuzz.num_nodes_hi));
      } else if (name == "iteration_duration") {
        p.reals.push_back(grid_rng.next_real(fuzz.iteration_lo_ms, fuzz.iteration_hi_ms));
      } else if (name == "failure_chance") {
        p.reals.push_back(grid_rng.next_real(fuzz.failure_lo, fuzz.failure_hi));
      } else {
        throw ConfigError("unknown fuzz parameter '" + name + "'");
      }
    }
    drawn.push_back(std::move(p));
  }

  std::size_t total = 1;
  for (std::size_t i = 0; i < drawn.size(); ++i) total *= static_cast<std::size_t>(k);

  std::vector<GridCombo> combos;
  combos.reserve(total);
  std::vector<int> odometer(drawn.size(), 0);
  for (std::size_t index = 0; index < total; ++index) {
    GridCombo combo;
    combo.index = index;
    combo.sim = cfg.sim;
    std::string desc;
    for (std::size_t pi = 0; pi < drawn.size(); ++pi) {
      const DrawnParam& p = drawn[pi];
      int vi = odometer[pi];
      if (!desc.empty()) desc += ' ';
      if (p.name == "num_nodes") {
        int n = static_cast<int>(p.ints[static_cast<std::size_t>(vi)]);
        combo.sim.num_nodes = n;
        combo.sim.number_faulty = (n - 1) / 3;
        combo.sim.stakes.clear();
        desc += "num_nodes=" + std::to_string(n);
      } else if (p.name == "iteration_duration") {
        combo.sim.iteration_duration_ms = p.reals[static_cast<std::size_t>(vi)];
        desc += "iteration_duration_ms=" + format_value(combo.sim.iteration_duration_ms);
      } else {
        combo.sim.failure_chance = p.reals[static_cast<std::size_t>(vi)];
        desc += "failure_chance=" + format_value(combo.sim.failure_chance);
      }
    }
    combo.sim.seed = mix_seed(iteration_seed, static_cast<std::uint64_t>(index));
    combo.desc = std::move(desc);
    combos.push_back(std::move(combo));

    // Lexicographic order: the last listed parameter varies fastest.
    for (std::size_t pi = drawn.size(); pi-- > 0;) {
      if (++odometer[pi] < k) break;
      odometer[pi] = 0;
    }
  }
  return combos;
}

namespace {

struct ComboResult {
  std::exception_ptr error;
  bool duplicate = false;
  std::string hash;
  Trace abstracted;
  std::optional<ViolationReport> violation;
};

void run_one_combo(const HarnessConfig& cfg, const TraceStore& store,
                   const ViolationFlags& flags, const GridCombo& combo,
                   ComboResult& out) {
  SimRun run = simulate(combo.sim, flags, FaultPlan{});
  Trace abstracted = abstract_trace(run.trace, cfg.mapping);
  std::string hash = hash_trace(abstracted);

  if (!run.safety.ok) {
    ViolationReport v;
    v.cls = ViolationClass::Prop;
    v.workflow = "I";
    v.step = run.safety.step;
    v.summary = "safety property " + run.safety.property +
                " violated during simulation";
    v.detail = run.safety.detail;
    v.combo_desc = combo.desc;
    v.seed = combo.sim.seed;
    v.evidence = std::move(abstracted);
    v.evidence_hash = hash;
    out.violation = std::move(v);
    out.hash = std::move(hash);
    return;
  }

  if (store.contains(hash)) {
    out.duplicate = true;
    out.hash = std::move(hash);
    return;
  }

  ModelConfig mcfg = derive_model_config(combo.sim);
  apply_model_violation(mcfg, cfg.seeded_violation);
  AcceptResult ar = accept_trace(mcfg, abstracted);
  if (!ar.accepted) {
    ViolationReport v;
    v.cls = classify_abstraction_failure(run.safety, ar);
    v.workflow = "I";
    v.step = ar.step;
    v.summary = "model rejected the abstracted trace at step " +
                std::to_string(ar.step);
    v.detail = ar.detail;
    v.combo_desc = combo.desc;
    v.seed = combo.sim.seed;
    v.evidence = std::move(abstracted);
    v.evidence_hash = hash;
    out.violation = std::move(v);
    out.hash = std::move(hash);
    return;
  }

  out.abstracted = std::move(abstracted);
  out.hash = std::move(hash);
}

}  // namespace

WorkflowOutcome run_workflow_one(const HarnessConfig& cfg, TraceStore& store,
                                 std::uint64_t iteration_seed, bool all_violations) {
  ViolationFlags flags = cfg.impl_flags();
  std::vector<GridCombo> combos = expand_grid(cfg, iteration_seed);
  std::vector<ComboResult> results(combos.size());

  const int jobs = cfg.workflow.jobs;
#ifdef _OPENMP
  if (jobs > 1) {
#pragma omp parallel for num_threads(jobs) schedule(dynamic)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(combos.size()); ++i) {
      auto idx = static_cast<std::size_t>(i);
      try {
        run_one_combo(cfg, store, flags, combos[idx], results[idx]);
      } catch (...) {
        results[idx].error = std::current_exception();
      }
    }
  } else
#endif
  {
    (void)jobs;
    for (std::size_t i = 0; i < combos.size(); ++i) {
      try {
        run_one_combo(cfg, store, flags, combos[i], results[i]);
      } catch (...) {
        results[i].error = std::current_exception();
      }
    }
  }

  WorkflowOutcome outcome;
  outcome.stats.runs = static_cast<int>(combos.size());

  std::set<std::string> batch_hashes;
  std::vector<std::string> to_insert;
  for (std::size_t i = 0; i < results.size(); ++i) {
    ComboResult& r = results[i];
    if (r.error) std::rethrow_exception(r.error);
    if (r.violation) {
      outcome.violations.push_back(std::move(*r.violation));
      if (all_violations) {
        if (batch_hashes.insert(r.hash).second) to_insert.push_back(r.hash);
        continue;
      }
      return outcome;  // batch aborted, nothing inserted
    }
    if (r.duplicate) {
      ++outcome.stats.duplicates;
      continue;
    }
    if (!batch_hashes.insert(r.hash).second) {
      ++outcome.stats.duplicates;  // same trace from two combos in this batch
      continue;
    }
    to_insert.push_back(r.hash);
  }

  for (const auto& h : to_insert) {
    if (store.insert(h)) ++outcome.stats.new_traces;
  }
  outcome.exhausted = outcome.violations.empty() && outcome.stats.new_traces == 0;
  return outcome;
}

WorkflowOutcome run_workflow_two(const HarnessConfig& cfg, TraceStore& store,
                                 std::uint64_t iteration_seed, bool all_violations) {
  ViolationFlags flags = cfg.impl_flags();
  ModelConfig mcfg = cfg.walk_model_config();
  WorkflowOutcome outcome;
  std::set<std::string> batch_hashes;
  std::vector<std::string> to_insert;

  const int slots = cfg.workflow.walk_traces;
  const int depth = cfg.workflow.walk_depth;
  constexpr int kMaxRetries = 100;

  for (int slot = 0; slot < slots; ++slot) {
    bool filled = false;
    for (int retry = 0; retry < kMaxRetries; ++retry) {
      std::uint64_t walk_seed = mix_seed(
          iteration_seed, static_cast<std::uint64_t>(slot) * 131 +
                              static_cast<std::uint64_t>(retry));
      std::vector<Trace> walked = model_random_walk(mcfg, 1, depth, walk_seed);
      if (walked.empty()) {
        ++outcome.stats.retries;
        continue;
      }
      Trace t = std::move(walked[0]);
      std::string hash = hash_trace(t);
      if (store.contains(hash) || batch_hashes.count(hash)) {
        ++outcome.stats.retries;
        continue;
      }

      ReplayResult rr = replay_check(mcfg, cfg.sim, flags, t);
      ++outcome.stats.runs;
      if (!rr.ok) {
        ViolationReport v;
        v.cls = classify_replay_failure(rr);
        v.workflow = "II";
        v.step = rr.step;
        v.summary = rr.kind == ReplayResult::Kind::NotExecutable
                        ? "model action not executable in the implementation"
                        : "implementation diverged from the model trace";
        v.detail = rr.detail;
        if (!rr.field_diff.empty()) v.detail += " [" + rr.field_diff + "]";
        v.seed = walk_seed;
        v.evidence = std::move(t);
        v.evidence_hash = hash;
        outcome.violations.push_back(std::move(v));
        if (!all_violations) return outcome;
        if (batch_hashes.insert(hash).second) to_insert.push_back(hash);
        filled = true;
        break;
      }

      batch_hashes.insert(hash);
      to_insert.push_back(hash);
      filled = true;
      break;
    }
    if (!filled) {
      outcome.exhausted = true;
      break;
    }
  }

  for (const auto& h : to_insert) {
    if (store.insert(h)) ++outcome.stats.new_traces;
  }
  return outcome;
}

ConfTestReport conf_test(const HarnessConfig& cfg, TraceStore& store) {
  ConfTestReport report;
  report.store_initial = store.size();
  const bool all_violations = cfg.workflow.all_violations;

  for (int iter = 0; iter < cfg.workflow.budget; ++iter) {
    std::uint64_t iteration_seed = mix_seed(cfg.sim.seed, static_cast<std::uint64_t>(iter));
    const bool generation = (iter % 2 == 0);
    WorkflowOutcome outcome =
        generation ? run_workflow_one(cfg, store, iteration_seed, all_violations)
                   : run_workflow_two(cfg, store, iteration_seed, all_violations);

    IterationReport ir;
    ir.index = iter;
    ir.workflow = generation ? "I" : "II";
    ir.stats = outcome.stats;
    ir.violations = static_cast<int>(outcome.violations.size());
    ir.exhausted = outcome.exhausted;
    report.iterations.push_back(ir);

    for (auto& v : outcome.violations) report.violations.push_back(std::move(v));

    if (!report.violations.empty() && !all_violations) break;
    if (outcome.exhausted) {
      report.exhausted = true;
      break;
    }
  }

  report.store_final = store.size();
  return report;
}

nlohmann::json ConfTestReport::to_json(const HarnessConfig& cfg) const {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& ir : iterations) {
    iters.push_back({{"index", ir.index},
                     {"workflow", ir.workflow},
                     {"runs", ir.stats.runs},
                     {"new_traces", ir.stats.new_traces},
                     {"duplicates", ir.stats.duplicates},
                     {"retries", ir.stats.retries},
                     {"violations", ir.violations},
                     {"exhausted", ir.exhausted}});
  }
  nlohmann::json viols = nlohmann::json::array();
  for (const auto& v : violations) viols.push_back(v.to_json());

  nlohmann::json out = {{"config_id", cfg.config_id()},
                        {"iterations", iters},
                        {"violations", viols},
                        {"store_initial", store_initial},
                        {"store_final", store_final},
                        {"exhausted", exhausted},
                        {"verdict", violations.empty() ? "conformant" : "violation"}};
  if (!cfg.seeded_violation.empty()) {
    const SeededViolation* sv = find_violation(cfg.seeded_violation);
    out["seeded_violation"] = {{"id", sv->id},
                               {"site", sv->site},
                               {"expected_class", sv->expected_class},
                               {"min_workflow", sv->min_workflow},
                               {"description", sv->description}};
  }
  return out;
}

}  // namespace fmdse
