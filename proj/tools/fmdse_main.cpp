#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fmdse/conftest.hpp"
#include "fmdse/config.hpp"
#include "fmdse/mapping.hpp"
#include "fmdse/metrics.hpp"
#include "fmdse/model.hpp"
#include "fmdse/rng.hpp"
#include "fmdse/sim.hpp"
#include "fmdse/trace.hpp"
#include "fmdse/trace_store.hpp"

namespace {

constexpr int kExitClean = 0;
constexpr int kExitViolation = 1;
constexpr int kExitError = 2;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::string> store_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> seeded_violation;
  std::optional<int> jobs;
};

fmdse::HarnessConfig resolve_config(const GlobalOptions& g) {
  fmdse::HarnessConfig cfg = g.config_path.empty()
                                 ? fmdse::default_harness_config()
                                 : fmdse::load_config_file(g.config_path);
  if (g.seed) cfg.sim.seed = *g.seed;
  if (g.store_path) cfg.workflow.store_path = *g.store_path;
  if (g.jobs) cfg.workflow.jobs = *g.jobs;
  if (g.seeded_violation) cfg.seeded_violation = *g.seeded_violation;
  fmdse::validate_harness_config(cfg);
  return cfg;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

int cmd_sim_run(const fmdse::HarnessConfig& cfg, const std::string& trace_out,
                const std::string& metrics_out) {
  fmdse::SimRun run = fmdse::simulate(cfg.sim, cfg.impl_flags());
  if (!trace_out.empty()) {
    fmdse::write_trace_file(trace_out, run.trace, false);
  }
  nlohmann::json metrics = fmdse::metrics_to_json(run.metrics, cfg.metrics);
  if (!metrics_out.empty()) {
    write_text_file(metrics_out, metrics.dump(2) + "\n");
  }
  nlohmann::json summary = {
      {"events", run.events},
      {"end_time_us", run.end_time_us},
      {"steps", run.trace.steps.size()},
      {"init_digest", run.trace.init_digest},
      {"metrics", metrics},
      {"safety_ok", run.safety.ok}};
  if (!run.safety.ok) {
    summary["safety"] = {{"property", run.safety.property},
                         {"step", run.safety.step},
                         {"detail", run.safety.detail}};
  }
  std::cout << summary.dump(2) << "\n";
  return run.safety.ok ? kExitClean : kExitViolation;
}

int cmd_workflow(const fmdse::HarnessConfig& cfg, bool generation, int iteration) {
  fmdse::TraceStore store(fmdse::resolve_store_path(cfg.workflow.store_path));
  std::uint64_t iteration_seed =
      fmdse::mix_seed(cfg.sim.seed, static_cast<std::uint64_t>(iteration));
  fmdse::WorkflowOutcome outcome =
      generation ? fmdse::run_workflow_one(cfg, store, iteration_seed,
                                           cfg.workflow.all_violations)
                 : fmdse::run_workflow_two(cfg, store, iteration_seed,
                                           cfg.workflow.all_violations);
  nlohmann::json viols = nlohmann::json::array();
  for (const auto& v : outcome.violations) viols.push_back(v.to_json());
  nlohmann::json out = {{"workflow", generation ? "I" : "II"},
                        {"iteration", iteration},
                        {"runs", outcome.stats.runs},
                        {"new_traces", outcome.stats.new_traces},
                        {"duplicates", outcome.stats.duplicates},
                        {"retries", outcome.stats.retries},
                        {"exhausted", outcome.exhausted},
                        {"store_size", store.size()},
                        {"violations", viols}};
  std::cout << out.dump(2) << "\n";
  return outcome.violations.empty() ? kExitClean : kExitViolation;
}

int cmd_conftest(const fmdse::HarnessConfig& cfg, const std::string& report_out,
                 const std::string& evidence_out) {
  fmdse::TraceStore store(fmdse::resolve_store_path(cfg.workflow.store_path));
  fmdse::ConfTestReport report = fmdse::conf_test(cfg, store);
  nlohmann::json j = report.to_json(cfg);
  if (!report_out.empty()) write_text_file(report_out, j.dump(2) + "\n");
  if (!evidence_out.empty() && !report.violations.empty()) {
    fmdse::write_trace_file(evidence_out, report.violations.front().evidence, false);
  }
  std::cout << j.dump(2) << "\n";
  return report.any_violation() ? kExitViolation : kExitClean;
}

int cmd_replay(const fmdse::HarnessConfig& cfg, const std::string& trace_path) {
  fmdse::Trace t = fmdse::read_trace_file(trace_path);
  fmdse::ModelConfig mcfg = cfg.walk_model_config();
  fmdse::ReplayResult rr =
      fmdse::replay_check(mcfg, cfg.sim, cfg.impl_flags(), t);
  nlohmann::json out = {{"ok", rr.ok},
                        {"steps", t.steps.size()},
                        {"concrete_steps", rr.concrete_log.steps.size()}};
  if (!rr.ok) {
    out["kind"] = rr.kind == fmdse::ReplayResult::Kind::NotExecutable
                      ? "not-executable"
                      : "digest-divergence";
    out["step"] = rr.step;
    out["detail"] = rr.detail;
    if (!rr.expected_digest.empty()) out["expected_digest"] = rr.expected_digest;
    if (!rr.got_digest.empty()) out["got_digest"] = rr.got_digest;
    if (!rr.field_diff.empty()) out["field_diff"] = rr.field_diff;
  }
  std::cout << out.dump(2) << "\n";
  return rr.ok ? kExitClean : kExitViolation;
}

int cmd_abstract(const fmdse::HarnessConfig& cfg, const std::string& trace_path,
                 const std::string& out_path) {
  fmdse::Trace concrete = fmdse::read_trace_file(trace_path);
  fmdse::Trace abstracted = fmdse::abstract_trace(concrete, cfg.mapping);
  if (!out_path.empty()) fmdse::write_trace_file(out_path, abstracted, false);
  nlohmann::json out = {{"concrete_steps", concrete.steps.size()},
                        {"abstract_steps", abstracted.steps.size()},
                        {"trace_hash", fmdse::hash_trace(abstracted)}};
  std::cout << out.dump(2) << "\n";
  return kExitClean;
}

int cmd_metrics(const fmdse::HarnessConfig& cfg, const std::string& trace_path) {
  fmdse::Trace concrete = fmdse::read_trace_file(trace_path);
  fmdse::MetricsRecord m = fmdse::metrics_from_concrete_trace(
      concrete, cfg.sim.num_nodes, cfg.impl_flags());
  std::cout << fmdse::metrics_to_json(m, cfg.metrics).dump(2) << "\n";
  return kExitClean;
}

int cmd_fuzz_model_walks(const fmdse::HarnessConfig& cfg, int count, int depth,
                         const std::string& out_prefix) {
  fmdse::ModelConfig mcfg = cfg.walk_model_config();
  std::vector<fmdse::Trace> traces =
      fmdse::model_random_walk(mcfg, count, depth, cfg.sim.seed);
  nlohmann::json hashes = nlohmann::json::array();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    hashes.push_back(fmdse::hash_trace(traces[i]));
    if (!out_prefix.empty()) {
      fmdse::write_trace_file(out_prefix + std::to_string(i) + ".jsonl", traces[i],
                              true);
    }
  }
  std::cout << nlohmann::json({{"traces", traces.size()}, {"hashes", hashes}}).dump(2)
            << "\n";
  return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformance-testing harness for a DAG consensus implementation"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Path to a harness config JSON file");
  std::string store_flag;
  auto* store_opt = app.add_option("--store", store_flag,
                                   "Trace store file (FMDSE_STORE overrides)");
  std::uint64_t seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "Master seed override");
  std::string violation_flag;
  auto* violation_opt = app.add_option("--seeded-violation", violation_flag,
                                       "Activate a cataloged defect (V1..V10)");
  int jobs_flag = 1;
  auto* jobs_opt = app.add_option("--jobs", jobs_flag, "Fuzz grid worker threads");

  auto* sim_run = app.add_subcommand("sim-run", "Free-run the simulator once");
  std::string sim_trace_out, sim_metrics_out;
  sim_run->add_option("--out", sim_trace_out, "Write the concrete trace here");
  sim_run->add_option("--metrics-out", sim_metrics_out, "Write metrics JSON here");

  auto* fuzz_impl = app.add_subcommand(
      "fuzz-impl", "One trace-generation iteration over the fuzz grid");
  int fuzz_impl_iteration = 0;
  fuzz_impl->add_option("--iteration", fuzz_impl_iteration,
                        "Iteration index used for seeding");

  auto* fuzz_model =
      app.add_subcommand("fuzz-model", "One model-exploration iteration");
  int fuzz_model_iteration = 1;
  fuzz_model->add_option("--iteration", fuzz_model_iteration,
                         "Iteration index used for seeding");

  auto* conftest = app.add_subcommand("conftest", "Run the conformance loop");
  std::string report_out, evidence_out;
  conftest->add_option("--report", report_out, "Write the report JSON here");
  conftest->add_option("--evidence", evidence_out,
                       "Write the first counterexample trace here");

  auto* replay = app.add_subcommand("replay", "Replay an abstract trace");
  std::string replay_trace;
  replay->add_option("--trace", replay_trace, "Abstract trace file")->required();

  auto* abstract_cmd =
      app.add_subcommand("abstract", "Project a concrete trace onto the model");
  std::string abstract_trace_path, abstract_out;
  abstract_cmd->add_option("--trace", abstract_trace_path, "Concrete trace file")
      ->required();
  abstract_cmd->add_option("--out", abstract_out, "Write the abstract trace here");

  auto* metrics_cmd =
      app.add_subcommand("metrics", "Recompute metrics from a concrete trace");
  std::string metrics_trace;
  metrics_cmd->add_option("--trace", metrics_trace, "Concrete trace file")->required();

  auto* walks = app.add_subcommand("walks", "Generate model random walks");
  int walk_count = 1, walk_depth = 100;
  std::string walk_prefix;
  walks->add_option("--count", walk_count, "Number of walks");
  walks->add_option("--depth", walk_depth, "Steps per walk");
  walks->add_option("--out-prefix", walk_prefix, "Write traces to <prefix><i>.jsonl");

  CLI11_PARSE(app, argc, argv);

  if (*store_opt) g.store_path = store_flag;
  if (*seed_opt) g.seed = seed_flag;
  if (*violation_opt) g.seeded_violation = violation_flag;
  if (*jobs_opt) g.jobs = jobs_flag;

  try {
    fmdse::HarnessConfig cfg = resolve_config(g);
    if (sim_run->parsed()) return cmd_sim_run(cfg, sim_trace_out, sim_metrics_out);
    if (fuzz_impl->parsed()) return cmd_workflow(cfg, true, fuzz_impl_iteration);
    if (fuzz_model->parsed()) return cmd_workflow(cfg, false, fuzz_model_iteration);
    if (conftest->parsed()) return cmd_conftest(cfg, report_out, evidence_out);
    if (replay->parsed()) return cmd_replay(cfg, replay_trace);
    if (abstract_cmd->parsed()) return cmd_abstract(cfg, abstract_trace_path, abstract_out);
    if (metrics_cmd->parsed()) return cmd_metrics(cfg, metrics_trace);
    if (walks->parsed()) return cmd_fuzz_model_walks(cfg, walk_count, walk_depth, walk_prefix);
    std::cerr << "no subcommand selected\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
