// Copyright 2026 The zipzo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// The CLI commands as library calls. Each writes its files under the
// resolved output directory and returns an exit code:
// 0 success or pass, 1 check failed, 2 usage or config error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "zipzo/harness/config.hpp"
#include "zipzo/harness/trace.hpp"
#include "zipzo/objectives.hpp"
#include "zipzo/optimizer.hpp"
#include "zipzo/verify.hpp"

namespace zipzo::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;
  nlohmann::json summary;
};

namespace detail {

inline std::filesystem::path prepare_output(const RunConfig& cfg) {
  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.cfg", std::ios::binary) << serialize(cfg);
  return dir;
}

inline nlohmann::json mean_sd(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return {{"mean", mean}, {"sd", std::sqrt(sample_variance(v))},
          {"n", v.size()}};
}

inline void write_json(const std::filesystem::path& path,
                       const nlohmann::json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  os << j.dump(2) << '\n';
}

inline nlohmann::json header(const RunConfig& cfg, std::string_view command) {
  const PromptShape shape = prompt_shape(cfg);
  return {{"tool", "zipzo"},
          {"command", command},
          {"config_hash", config_hash(cfg)},
          {"git_describe", std::string(kGitDescribe)},
          {"objective", std::string(to_string(cfg.objective.kind))},
          {"variant", std::string(to_string(cfg.variant))},
          {"shape",
           {{"p", shape.p}, {"m", shape.m}, {"q", shape.q}, {"r", shape.r}}},
          {"delta", delta(shape, cfg.variant)},
          {"budget", cfg.budget},
          {"n_spsa", cfg.n_spsa},
          {"seeds", cfg.seeds}};
}

// Copies the final evaluation onto the last record when the periodic
// cadence did not already produce one there.
inline void stamp_final(std::vector<TraceRecord>& trace,
                        const std::optional<EvalResult>& final_eval) {
  if (trace.empty() || !final_eval || trace.back().eval_loss) return;
  trace.back().eval_loss = final_eval->loss;
  trace.back().eval_accuracy = final_eval->accuracy;
}

struct MethodRun {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> trace;
  std::optional<EvalResult> initial;
  std::optional<EvalResult> final_eval;
  std::uint64_t queries_used = 0;
  std::uint64_t eval_queries = 0;
  std::uint64_t steps = 0;
  std::string status = "ok";
  std::string note;
};

inline nlohmann::json run_json(const MethodRun& r, const std::string& file) {
  nlohmann::json j = {{"method", r.method},
                      {"seed", r.seed},
                      {"status", r.status},
                      {"steps", r.steps},
                      {"queries_used", r.queries_used},
                      {"eval_queries", r.eval_queries},
                      {"trace_file", file}};
  if (r.initial) j["initial_loss"] = r.initial->loss;
  if (r.final_eval) {
    j["final_loss"] = r.final_eval->loss;
    if (r.final_eval->accuracy) j["final_accuracy"] = *r.final_eval->accuracy;
  }
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline MethodRun from_training(std::string method, std::uint64_t seed,
                               const RunResult& run) {
  MethodRun m;
  m.method = std::move(method);
  m.seed = seed;
  m.trace = run.state.trace;
  m.initial = run.initial_eval;
  m.final_eval = run.final_eval;
  m.queries_used = run.state.ledger.used();
  m.eval_queries = run.eval_ledger.used();
  m.steps = run.state.step;
  stamp_final(m.trace, m.final_eval);
  const std::uint64_t unused = run.state.ledger.remaining();
  if (unused) {
    m.note = "budget exhausted: " + std::to_string(unused) +
             " queries left, fewer than one estimate";
  }
  return m;
}

inline MethodRun from_abort(std::string method, std::uint64_t seed,
                            const TrainingAborted& e) {
  MethodRun m;
  m.method = std::move(method);
  m.seed = seed;
  m.trace = e.state().trace;
  m.queries_used = e.state().ledger.used();
  m.steps = e.state().step;
  m.status = "aborted";
  m.note = e.what();
  return m;
}

inline MethodRun run_zip(const RunConfig& cfg, const Objective& objective,
                         std::uint64_t seed, std::string method) {
  try {
    const auto r = run_training(objective, training_config(cfg, seed));
    return from_training(std::move(method), seed, r.run);
  } catch (const TrainingAborted& e) {
    return from_abort(std::move(method), seed, e);
  }
}

inline MethodRun run_naive(const RunConfig& cfg, const Objective& objective,
                           std::uint64_t seed) {
  ZoRunConfig zo = zo_config(cfg, seed);
  if (cfg.naive_a1) zo.schedule.a1 = *cfg.naive_a1;
  try {
    return from_training("naive-zo", seed,
                         run_naive_zo(objective, zo, cfg.batch_size));
  } catch (const TrainingAborted& e) {
    return from_abort("naive-zo", seed, e);
  }
}

inline MethodRun run_fo(const RunConfig& cfg, const Objective& objective,
                        std::uint64_t seed) {
  const std::uint64_t steps = cfg.fo_steps ? cfg.fo_steps : cfg.budget;
  const Eigen::VectorXd x0 = objective.initial_point();
  MethodRun m;
  m.method = "fo";
  m.seed = seed;
  m.initial = make_eval_hook(objective)(x0);
  const auto fo = run_fo_sgd(objective, x0, cfg.fo_lr, steps, seed,
                             cfg.batch_size);
  m.trace = fo.trace;
  m.final_eval = fo.final_eval;
  m.queries_used = steps;
  m.eval_queries = 2;
  m.steps = steps;
  stamp_final(m.trace, m.final_eval);
  if (!m.final_eval || !std::isfinite(m.final_eval->loss)) {
    m.status = "diverged";
  }
  return m;
}

inline std::string write_method_trace(const std::filesystem::path& dir,
                                      const RunConfig& cfg,
                                      const MethodRun& m) {
  TraceMeta meta;
  meta.method = m.method;
  meta.seed = m.seed;
  meta.config_hash = config_hash(cfg);
  if (m.method == "fo") {
    meta.extra.emplace_back("query_accounting",
                            "one query per gradient step (plotting "
                            "convention)");
  } else if (m.method != "naive-zo") {
    meta.extra.emplace_back("delta",
                            std::to_string(delta(prompt_shape(cfg),
                                                 cfg.variant)));
  }
  meta.extra.emplace_back("status", m.status);
  const std::string name = m.method + "-seed" + std::to_string(m.seed) + ".tsv";
  write_trace_file((dir / name).string(), meta, m.trace, m.initial);
  return name;
}

inline nlohmann::json aggregate(const std::vector<MethodRun>& runs) {
  std::vector<double> loss, acc, queries;
  for (const auto& r : runs) {
    queries.push_back(static_cast<double>(r.queries_used));
    if (!r.final_eval) continue;
    loss.push_back(r.final_eval->loss);
    if (r.final_eval->accuracy) acc.push_back(*r.final_eval->accuracy);
  }
  return {{"final_loss", mean_sd(loss)},
          {"final_accuracy", mean_sd(acc)},
          {"queries_used", mean_sd(queries)}};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace detail

// Reparameterized training for every seed: one trace per seed and
// summary.json. Exit 1 if any seed aborted on an objective failure.
inline CommandResult run_command(const RunConfig& cfg, std::ostream& log) {
  validate_training(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = detail::prepare_output(cfg);
  const std::string method(to_string(cfg.variant));
  CommandResult out;
  out.summary["header"] = detail::header(cfg, "run");
  out.summary["header"]["method"] = method;
  log << "delta " << out.summary["header"]["delta"] << '\n';
  std::vector<detail::MethodRun> runs;
  nlohmann::json run_list = nlohmann::json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const auto objective = make_objective(objective_for(cfg, seed));
    auto m = detail::run_zip(cfg, *objective, seed, method);
    const auto file = detail::write_method_trace(dir, cfg, m);
    out.files.push_back(file);
    run_list.push_back(detail::run_json(m, file));
    if (m.status != "ok") out.exit_code = kExitCheckFailed;
    log << "seed " << seed << ' ' << m.status << " steps " << m.steps
        << " queries " << m.queries_used;
    if (m.final_eval) log << " final_loss " << m.final_eval->loss;
    log << '\n';
    runs.push_back(std::move(m));
  }
  out.summary["runs"] = run_list;
  out.summary["aggregate"] = detail::aggregate(runs);
  out.summary["wall_time_seconds"] = detail::seconds_since(t0);
  detail::write_json(dir / "summary.json", out.summary);
  out.files.push_back("summary.json");
  return out;
}

// ZIP, naive full-dimension ZO and FO on the same objective instances.
inline CommandResult compare_command(const RunConfig& cfg, std::ostream& log) {
  validate_training(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = detail::prepare_output(cfg);
  const std::string zip_name(to_string(cfg.variant));
  CommandResult out;
  out.summary["header"] = detail::header(cfg, "compare");
  out.summary["header"]["fo_query_accounting"] =
      "one query per gradient step (plotting convention)";
  out.summary["header"]["fo_lr"] = cfg.fo_lr;
  out.summary["header"]["fo_steps"] = cfg.fo_steps ? cfg.fo_steps : cfg.budget;
  out.summary["header"]["naive_a1"] =
      cfg.naive_a1 ? *cfg.naive_a1 : cfg.schedule.a1;
  std::vector<detail::MethodRun> zip, naive, fo;
  nlohmann::json run_list = nlohmann::json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const auto objective = make_objective(objective_for(cfg, seed));
    auto record = [&](detail::MethodRun m, std::vector<detail::MethodRun>& to) {
      const auto file = detail::write_method_trace(dir, cfg, m);
      out.files.push_back(file);
      run_list.push_back(detail::run_json(m, file));
      log << m.method << " seed " << seed << ' ' << m.status;
      if (m.final_eval) log << " final_loss " << m.final_eval->loss;
      log << '\n';
      to.push_back(std::move(m));
    };
    record(detail::run_zip(cfg, *objective, seed, zip_name), zip);
    record(detail::run_naive(cfg, *objective, seed), naive);
    record(detail::run_fo(cfg, *objective, seed), fo);
  }
  std::uint64_t zip_wins = 0;
  for (std::size_t i = 0; i < zip.size(); ++i) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double a = zip[i].final_eval ? zip[i].final_eval->loss : inf;
    const double b = naive[i].final_eval ? naive[i].final_eval->loss : inf;
    if (a < b) ++zip_wins;
  }
  out.summary["runs"] = run_list;
  out.summary["aggregate"] = {{zip_name, detail::aggregate(zip)},
                              {"naive-zo", detail::aggregate(naive)},
                              {"fo", detail::aggregate(fo)}};
  out.summary["zip_beats_naive_seeds"] = zip_wins;
  out.summary["wall_time_seconds"] = detail::seconds_since(t0);
  log << "zip beats naive-zo in " << zip_wins << '/' << zip.size()
      << " seeds\n";
  detail::write_json(dir / "summary.json", out.summary);
  out.files.push_back("summary.json");
  return out;
}

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "lemma1", "lemma2", "dim-scaling", "threshold-sweep", "ablation"};
  return names;
}

inline DimScalingConfig dim_scaling_config(const RunConfig& cfg) {
  DimScalingConfig d;
  d.dims = cfg.dims;
  d.seeds = cfg.seeds;
  d.budget = cfg.budget;
  d.n_spsa = cfg.n_spsa;
  d.schedule = cfg.schedule;
  d.normalize_lr_by_dim = cfg.normalize_lr_by_dim;
  d.fo_lr = cfg.fo_lr;
  if (cfg.fo_steps) d.fo_max_iters = cfg.fo_steps;
  d.target_fraction = cfg.target_fraction;
  d.kappa = cfg.objective.kappa;
  return d;
}

// Runs one named check. Unknown names are a usage error.
inline std::optional<VerificationReport> run_check(const RunConfig& cfg,
                                                   std::string_view name) {
  if (name == "lemma1") {
    return verify_unbiasedness(cfg.verify_dim, cfg.verify_n, cfg.verify_c,
                               cfg.verify_samples, cfg.verify_seed,
                               cfg.injection);
  }
  if (name == "lemma2") {
    return verify_second_moment(cfg.verify_dim, cfg.verify_n, cfg.verify_c,
                                cfg.verify_samples, cfg.verify_seed,
                                cfg.injection);
  }
  if (name == "dim-scaling") {
    return dimension_scaling_experiment(dim_scaling_config(cfg));
  }
  if (name == "threshold-sweep") {
    validate_training(cfg);
    ThresholdSweepConfig s;
    s.objective = cfg.objective;
    s.training = training_config(cfg, 0);
    s.ks = cfg.ks;
    s.seeds = cfg.seeds;
    return threshold_sweep(s);
  }
  if (name == "ablation") {
    validate_training(cfg);
    AblationConfig a;
    a.objective = cfg.objective;
    a.training = training_config(cfg, 0);
    a.seeds = cfg.seeds;
    return ablation_grid(a);
  }
  return std::nullopt;
}

inline CommandResult verify_command(const RunConfig& cfg,
                                    std::string_view name, std::ostream& log) {
  validate(cfg);
  CommandResult out;
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run_check(cfg, name);
  if (!report) {
    log << "unknown check '" << name << "'; expected one of:";
    for (const auto& n : check_names()) log << ' ' << n;
    log << '\n';
    out.exit_code = kExitUsage;
    return out;
  }
  const auto dir = detail::prepare_output(cfg);
  out.summary = to_json(*report);
  out.summary["config_hash"] = config_hash(cfg);
  out.summary["git_describe"] = std::string(kGitDescribe);
  out.summary["wall_time_seconds"] = detail::seconds_since(t0);
  const std::string file = std::string(name) + ".json";
  detail::write_json(dir / file, out.summary);
  out.files.push_back(file);
  const bool failed = report->pass && !*report->pass;
  out.exit_code = failed ? kExitCheckFailed : kExitOk;
  log << name << ' '
      << (report->pass ? (*report->pass ? "PASS" : "FAIL") : "REPORTED")
      << " (" << report->tolerance << ")\n";
  return out;
}

// Merges trace files into one long-format table. Exit 2 on schema mismatch.
inline int emit_plot_data_command(const std::vector<std::string>& inputs,
                                  const std::string& output,
                                  std::ostream& log) {
  std::vector<ParsedTrace> traces;
  try {
    for (const auto& path : inputs) traces.push_back(read_trace_file(path));
  } catch (const SchemaMismatch& e) {
    log << "schema mismatch: " << e.what() << '\n';
    return kExitUsage;
  }
  if (output.empty() || output == "-") {
    emit_plot_data(std::cout, traces);
  } else {
    std::ofstream os(output, std::ios::binary);
    if (!os) {
      log << "cannot write '" << output << "'\n";
      return kExitUsage;
    }
    emit_plot_data(os, traces);
  }
  return kExitOk;
}

inline std::string describe_objective(const RunConfig& cfg,
                                      std::uint64_t seed) {
  std::string out = describe(objective_for(cfg, seed));
  const auto objective = make_objective(objective_for(cfg, seed));
  out += "parameters " + std::to_string(objective->dim()) + '\n';
  const Eigen::VectorXd x0 = objective->initial_point();
  out += "initial_loss " + text::format_double(objective->loss(x0, Batch{})) +
         '\n';
  if (objective->is_classifier()) {
    out += "initial_test_accuracy " +
           text::format_double(
               objective->accuracy(x0, objective->test_indices())) +
           '\n';
  }
  return out;
}

}  // namespace zipzo::harness
