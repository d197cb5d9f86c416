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

// zipzo command-line front end.

#include <deque>
#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "zipzo/harness/commands.hpp"
#include "zipzo/harness/config.hpp"

namespace {

using zipzo::harness::RunConfig;

// --config plus one --flag per config key, applied on top of the file.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* app) {
    app->add_option("--config", path_, "Config file (sectioned key = value)")
        ->check(CLI::ExistingFile);
    for (const auto& field : zipzo::harness::fields()) {
      values_.emplace_back();
      auto* opt = app->add_option("--" + field.flag(), values_.back(),
                                  field.section + "." + field.key);
      opt->group("Config overrides");
      options_.emplace_back(&field, opt);
    }
  }

  RunConfig build() const {
    RunConfig cfg;
    if (!path_.empty()) cfg = zipzo::harness::load(path_);
    auto value = values_.begin();
    for (const auto& [field, opt] : options_) {
      if (opt->count() && !field->set(cfg, *value)) {
        throw zipzo::ConfigError(0, "invalid value '" + *value + "' for --" +
                                        field->flag());
      }
      ++value;
    }
    return cfg;
  }

 private:
  std::string path_;
  std::deque<std::string> values_;
  std::vector<std::pair<const zipzo::harness::Field*, CLI::Option*>> options_;
};

}  // namespace

int main(int argc, char** argv) {
  namespace h = zipzo::harness;
  CLI::App app{"Zeroth-order intrinsic-dimensional prompt tuning experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(h::kGitDescribe));

  auto* run = app.add_subcommand("run", "Train the reparameterized prompt per seed");
  ConfigFlags run_flags(run);

  auto* verify = app.add_subcommand("verify", "Run one named verification");
  std::string check;
  verify->add_option("check", check, "lemma1 | lemma2 | dim-scaling | "
                                     "threshold-sweep | ablation")
      ->required();
  ConfigFlags verify_flags(verify);

  auto* compare =
      app.add_subcommand("compare", "ZIP vs naive ZO vs FO on matched seeds");
  ConfigFlags compare_flags(compare);

  auto* sweep = app.add_subcommand("sweep-threshold",
                                   "Clip thresholds delta^(k/10) plus no-clip");
  ConfigFlags sweep_flags(sweep);

  auto* ablate = app.add_subcommand("ablate",
                                    "Diagonal / sharing / clipping ablation");
  ConfigFlags ablate_flags(ablate);

  auto* plot = app.add_subcommand("emit-plot-data",
                                  "Merge trace files into one long table");
  std::vector<std::string> inputs;
  std::string plot_out = "-";
  plot->add_option("traces", inputs, "Trace files")->required();
  plot->add_option("-o,--output", plot_out, "Output file, '-' for stdout");

  auto* describe = app.add_subcommand(
      "describe-objective", "Print the objective built from the first seed");
  ConfigFlags describe_flags(describe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? h::kExitOk : h::kExitUsage;
  }

  try {
    if (*plot) return h::emit_plot_data_command(inputs, plot_out, std::cerr);
    if (*run) return h::run_command(run_flags.build(), std::cout).exit_code;
    if (*compare) {
      return h::compare_command(compare_flags.build(), std::cout).exit_code;
    }
    if (*verify) {
      return h::verify_command(verify_flags.build(), check, std::cout)
          .exit_code;
    }
    if (*sweep) {
      return h::verify_command(sweep_flags.build(), "threshold-sweep",
                               std::cout)
          .exit_code;
    }
    if (*ablate) {
      return h::verify_command(ablate_flags.build(), "ablation", std::cout)
          .exit_code;
    }
    if (*describe) {
      const RunConfig cfg = describe_flags.build();
      h::validate(cfg);
      std::cout << h::describe_objective(cfg, cfg.seeds.front());
      return h::kExitOk;
    }
  } catch (const zipzo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return h::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return h::kExitCheckFailed;
  }
  return h::kExitUsage;
}
