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

// Sectioned key = value configuration shared by every CLI command.

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "zipzo/errors.hpp"
#include "zipzo/objectives.hpp"
#include "zipzo/optimizer.hpp"
#include "zipzo/reparam.hpp"
#include "zipzo/text.hpp"
#include "zipzo/transforms.hpp"
#include "zipzo/verify.hpp"

namespace zipzo::harness {

// Everything one CLI invocation needs. The objective seed is not stored:
// each run seed also seeds its own objective instance.
struct RunConfig {
  // [objective]
  ObjectiveSpec objective;
  // [prompt]  (objective.p and objective.m live here too)
  std::size_t intrinsic_dim = 500;
  std::size_t rank = 5;
  VariantKind variant = VariantKind::Zip;
  ProjectionKind projection = ProjectionKind::Fastfood;
  // [optimizer]
  GainSchedule schedule;
  std::size_t n_spsa = 5;
  std::uint64_t budget = 5000;
  bool clip = true;
  std::optional<double> clip_threshold;  // unset: sqrt(delta)
  std::size_t batch_size = 128;
  std::uint64_t eval_every = 500;
  // [run]
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_dir;  // empty: $ZIPZO_OUTPUT_DIR, then "zipzo-out"
  std::size_t workers = 1;
  // [baseline]
  double fo_lr = 0.1;
  std::uint64_t fo_steps = 0;      // 0: one step per training query
  std::optional<double> naive_a1;  // unset: same as optimizer a1
  // [sweep]
  std::vector<int> ks{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  // [dim_scaling]
  std::vector<std::size_t> dims{16, 64, 256};
  bool normalize_lr_by_dim = true;
  double target_fraction = 0.1;
  // [verify]
  std::size_t verify_dim = 20;
  std::size_t verify_n = 1;
  double verify_c = 1e-5;
  std::uint64_t verify_samples = 100000;
  std::uint64_t verify_seed = 1;
  Injection injection = Injection::None;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// One config key. `flag` is the CLI spelling (--flag).
struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  // Returns false when the text is not a valid value for the key.
  std::function<bool(RunConfig&, std::string_view)> set;

  std::string flag() const {
    std::string out = key;
    for (char& c : out) {
      if (c == '_') c = '-';
    }
    return out;
  }
};

namespace detail {

inline std::string show(double v) { return text::format_double(v); }
inline std::string show(std::uint64_t v) { return std::to_string(v); }
inline std::string show(bool v) { return v ? "true" : "false"; }

inline bool read(std::string_view s, double& out) {
  const auto v = text::parse_double(s);
  if (!v) return false;
  out = *v;
  return true;
}

template <class T>
  requires std::is_unsigned_v<T>
bool read(std::string_view s, T& out) {
  const auto v = text::parse_u64(s);
  if (!v) return false;
  out = static_cast<T>(*v);
  return true;
}

inline bool read(std::string_view s, bool& out) {
  if (s == "true") {
    out = true;
  } else if (s == "false") {
    out = false;
  } else {
    return false;
  }
  return true;
}

inline bool read(std::string_view s, int& out) {
  const auto v = text::parse_u64(s);
  if (!v || *v > 1000) return false;
  out = static_cast<int>(*v);
  return true;
}

template <class T>
std::string show_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

template <class T>
bool read_list(std::string_view s, std::vector<T>& out) {
  std::vector<T> tmp;
  for (auto item : text::split(s, ',')) {
    T v{};
    if (!read(text::trim(item), v)) return false;
    tmp.push_back(v);
  }
  out = std::move(tmp);
  return true;
}

template <class T>
Field scalar(std::string section, std::string key, T RunConfig::*member) {
  return {std::move(section), std::move(key),
          [member](const RunConfig& c) {
            if constexpr (std::is_same_v<T, std::size_t>) {
              return show(static_cast<std::uint64_t>(c.*member));
            } else {
              return show(c.*member);
            }
          },
          [member](RunConfig& c, std::string_view s) {
            return read(s, c.*member);
          }};
}

template <class T, class Member>
Field nested(std::string section, std::string key, Member outer,
             T ObjectiveSpec::*inner) {
  return {std::move(section), std::move(key),
          [outer, inner](const RunConfig& c) {
            if constexpr (std::is_same_v<T, std::size_t>) {
              return show(static_cast<std::uint64_t>((c.*outer).*inner));
            } else {
              return show((c.*outer).*inner);
            }
          },
          [outer, inner](RunConfig& c, std::string_view s) {
            return read(s, (c.*outer).*inner);
          }};
}

inline Field gain(std::string key, double GainSchedule::*inner) {
  return {"optimizer", std::move(key),
          [inner](const RunConfig& c) { return show(c.schedule.*inner); },
          [inner](RunConfig& c, std::string_view s) {
            return read(s, c.schedule.*inner);
          }};
}

template <class T>
Field list(std::string section, std::string key,
           std::vector<T> RunConfig::*member) {
  return {std::move(section), std::move(key),
          [member](const RunConfig& c) { return show_list(c.*member); },
          [member](RunConfig& c, std::string_view s) {
            return read_list(s, c.*member);
          }};
}

// "auto" stands for an unset optional.
inline Field optional_double(std::string section, std::string key,
                             std::optional<double> RunConfig::*member) {
  return {std::move(section), std::move(key),
          [member](const RunConfig& c) {
            return c.*member ? show(*(c.*member)) : std::string("auto");
          },
          [member](RunConfig& c, std::string_view s) {
            if (s == "auto") {
              c.*member = std::nullopt;
              return true;
            }
            double v = 0.0;
            if (!read(s, v)) return false;
            c.*member = v;
            return true;
          }};
}

template <class Enum, class Parse>
Field named(std::string section, std::string key, Enum RunConfig::*member,
            Parse parse) {
  return {std::move(section), std::move(key),
          [member](const RunConfig& c) {
            return std::string(to_string(c.*member));
          },
          [member, parse](RunConfig& c, std::string_view s) {
            try {
              c.*member = parse(s);
            } catch (const Error&) {
              return false;
            }
            return true;
          }};
}

}  // namespace detail

// All keys in file order.
inline const std::vector<Field>& fields() {
  using detail::gain;
  using detail::list;
  using detail::named;
  using detail::nested;
  using detail::optional_double;
  using detail::scalar;
  constexpr auto obj = &RunConfig::objective;
  static const std::vector<Field> table = {
      {"objective", "kind",
       [](const RunConfig& c) {
         return std::string(to_string(c.objective.kind));
       },
       [](RunConfig& c, std::string_view s) {
         try {
           c.objective.kind = parse_objective_kind(s);
         } catch (const Error&) {
           return false;
         }
         return true;
       }},
      nested("objective", "dim", obj, &ObjectiveSpec::dim),
      nested("objective", "kappa", obj, &ObjectiveSpec::kappa),
      nested("objective", "classes", obj, &ObjectiveSpec::classes),
      nested("objective", "feature_dim", obj, &ObjectiveSpec::feature_dim),
      nested("objective", "train_samples", obj, &ObjectiveSpec::train_samples),
      nested("objective", "test_samples", obj, &ObjectiveSpec::test_samples),
      nested("objective", "noise", obj, &ObjectiveSpec::noise),
      nested("objective", "separation", obj, &ObjectiveSpec::separation),
      nested("objective", "hidden", obj, &ObjectiveSpec::hidden),
      nested("objective", "teacher_shift", obj, &ObjectiveSpec::teacher_shift),
      nested("objective", "head_gain", obj, &ObjectiveSpec::head_gain),
      nested("objective", "anchor", obj, &ObjectiveSpec::anchor),
      nested("prompt", "p", obj, &ObjectiveSpec::p),
      nested("prompt", "m", obj, &ObjectiveSpec::m),
      scalar("prompt", "intrinsic_dim", &RunConfig::intrinsic_dim),
      scalar("prompt", "rank", &RunConfig::rank),
      named("prompt", "variant", &RunConfig::variant,
            [](std::string_view s) { return parse_variant(s); }),
      named("prompt", "projection", &RunConfig::projection,
            [](std::string_view s) { return parse_projection_kind(s); }),
      gain("a1", &GainSchedule::a1),
      gain("lr_decay", &GainSchedule::lr_decay),
      gain("c1", &GainSchedule::c1),
      gain("pm_decay", &GainSchedule::pm_decay),
      scalar("optimizer", "n_spsa", &RunConfig::n_spsa),
      scalar("optimizer", "budget", &RunConfig::budget),
      scalar("optimizer", "clip", &RunConfig::clip),
      optional_double("optimizer", "clip_threshold",
                      &RunConfig::clip_threshold),
      scalar("optimizer", "batch_size", &RunConfig::batch_size),
      scalar("optimizer", "eval_every", &RunConfig::eval_every),
      list("run", "seeds", &RunConfig::seeds),
      {"run", "output_dir",
       [](const RunConfig& c) { return c.output_dir; },
       [](RunConfig& c, std::string_view s) {
         c.output_dir = std::string(s);
         return true;
       }},
      scalar("run", "workers", &RunConfig::workers),
      scalar("baseline", "fo_lr", &RunConfig::fo_lr),
      scalar("baseline", "fo_steps", &RunConfig::fo_steps),
      optional_double("baseline", "naive_a1", &RunConfig::naive_a1),
      list("sweep", "ks", &RunConfig::ks),
      list("dim_scaling", "dims", &RunConfig::dims),
      scalar("dim_scaling", "normalize_lr_by_dim",
             &RunConfig::normalize_lr_by_dim),
      scalar("dim_scaling", "target_fraction", &RunConfig::target_fraction),
      scalar("verify", "d", &RunConfig::verify_dim),
      scalar("verify", "n", &RunConfig::verify_n),
      scalar("verify", "c", &RunConfig::verify_c),
      scalar("verify", "m_samples", &RunConfig::verify_samples),
      scalar("verify", "seed", &RunConfig::verify_seed),
      named("verify", "injection", &RunConfig::injection,
            [](std::string_view s) { return parse_injection(s); }),
  };
  return table;
}

inline const Field* find_field(std::string_view section, std::string_view key) {
  for (const auto& f : fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

inline void serialize(std::ostream& os, const RunConfig& cfg) {
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
}

inline std::string serialize(const RunConfig& cfg) {
  std::ostringstream os;
  serialize(os, cfg);
  return os.str();
}

// Applies `[section]` / `key = value` lines on top of `base`. Blank lines
// and lines starting with '#' are skipped. Unknown sections or keys, repeated
// keys and malformed values raise ConfigError with the 1-based line number.
inline RunConfig parse(std::istream& is, RunConfig base = {}) {
  std::string line;
  std::string section;
  std::map<std::string, std::size_t> seen;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    const std::string_view body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(number, "unterminated section");
      section = std::string(text::trim(body.substr(1, body.size() - 2)));
      bool known = false;
      for (const auto& f : fields()) known = known || f.section == section;
      if (!known) {
        throw ConfigError(number, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(number, "expected 'key = value'");
    }
    if (section.empty()) {
      throw ConfigError(number, "key outside of a [section]");
    }
    const std::string key(text::trim(body.substr(0, eq)));
    const std::string_view value = text::trim(body.substr(eq + 1));
    const Field* field = find_field(section, key);
    if (!field) {
      throw ConfigError(number,
                        "unknown key '" + key + "' in [" + section + "]");
    }
    const std::string qualified = section + "." + key;
    if (auto it = seen.find(qualified); it != seen.end()) {
      throw ConfigError(number, "duplicate key '" + qualified +
                                    "' (first set on line " +
                                    std::to_string(it->second) + ")");
    }
    seen[qualified] = number;
    if (!field->set(base, value)) {
      throw ConfigError(number, "invalid value '" + std::string(value) +
                                    "' for " + qualified);
    }
  }
  return base;
}

inline RunConfig parse(const std::string& content, RunConfig base = {}) {
  std::istringstream is(content);
  return parse(is, std::move(base));
}

inline RunConfig load(const std::string& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError(0, "cannot open config file '" + path + "'");
  try {
    return parse(is, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(0, path + ": " + e.what());
  }
}

// Hash of the settings that affect results. The output location and worker
// count are left out, so traces stay byte-identical across both.
inline std::string config_hash(const RunConfig& cfg) {
  RunConfig canonical = cfg;
  canonical.output_dir.clear();
  canonical.workers = 1;
  return text::hex64(text::fnv1a(serialize(canonical)));
}

inline PromptShape prompt_shape(const RunConfig& cfg) {
  return PromptShape::from_intrinsic_dim(cfg.objective.p, cfg.objective.m,
                                         cfg.intrinsic_dim, cfg.rank);
}

inline std::size_t model_dim(const RunConfig& cfg) {
  switch (cfg.objective.kind) {
    case ObjectiveKind::Quadratic: return cfg.objective.dim;
    case ObjectiveKind::SoftmaxRegression:
      return cfg.objective.classes * cfg.objective.feature_dim;
    case ObjectiveKind::FrozenPromptSurrogate:
      return cfg.objective.p * cfg.objective.m;
  }
  return 0;
}

inline ObjectiveSpec objective_for(const RunConfig& cfg, std::uint64_t seed) {
  ObjectiveSpec spec = cfg.objective;
  spec.seed = seed;
  return spec;
}

inline ZoRunConfig zo_config(const RunConfig& cfg, std::uint64_t seed) {
  ZoRunConfig zo;
  zo.schedule = cfg.schedule;
  zo.n_spsa = cfg.n_spsa;
  zo.budget = cfg.budget;
  zo.seed = seed;
  zo.eval_every = cfg.eval_every;
  zo.estimator.workers = cfg.workers;
  return zo;
}

inline TrainingConfig training_config(const RunConfig& cfg,
                                      std::uint64_t seed) {
  TrainingConfig tc;
  tc.shape = prompt_shape(cfg);
  tc.variant = cfg.variant;
  tc.projection = cfg.projection;
  tc.zo = zo_config(cfg, seed);
  tc.clip = cfg.clip;
  tc.clip_threshold = cfg.clip_threshold;
  tc.batch_size = cfg.batch_size;
  return tc;
}

// Checks that do not depend on the command. Throws ConfigError.
inline void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& what) { throw ConfigError(0, what); };
  if (cfg.n_spsa < 1) fail("optimizer.n_spsa must be >= 1");
  if (cfg.budget < 2 * static_cast<std::uint64_t>(cfg.n_spsa)) {
    fail("optimizer.budget " + std::to_string(cfg.budget) +
         " cannot fund one estimate: need at least 2 * n_spsa = " +
         std::to_string(2 * cfg.n_spsa));
  }
  if (cfg.batch_size < 1) fail("optimizer.batch_size must be >= 1");
  if (cfg.seeds.empty()) fail("run.seeds must not be empty");
  if (cfg.workers < 1) fail("run.workers must be >= 1");
  if (!(cfg.fo_lr > 0.0)) fail("baseline.fo_lr must be positive");
  if (cfg.clip_threshold && !(*cfg.clip_threshold > 0.0)) {
    fail("optimizer.clip_threshold must be positive");
  }
  for (int k : cfg.ks) {
    if (k < 0 || k > 10) fail("sweep.ks entries must lie in [0, 10]");
  }
  if (cfg.dims.empty()) fail("dim_scaling.dims must not be empty");
  if (cfg.verify_dim < 1 || cfg.verify_n < 1 || cfg.verify_samples < 1) {
    fail("verify.d, verify.n and verify.m_samples must be >= 1");
  }
  if (!(cfg.verify_c > 0.0)) fail("verify.c must be positive");
  try {
    cfg.schedule.validate();
    prompt_shape(cfg);
  } catch (const Error& e) {
    fail(e.what());
  }
}

// Extra checks for commands that train through the prompt reparameterization.
inline void validate_training(const RunConfig& cfg) {
  validate(cfg);
  const std::size_t full = cfg.objective.p * cfg.objective.m;
  if (model_dim(cfg) != full) {
    throw ConfigError(0, "objective has " + std::to_string(model_dim(cfg)) +
                             " parameters but prompt.p * prompt.m = " +
                             std::to_string(full));
  }
}

inline std::string resolve_output_dir(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("ZIPZO_OUTPUT_DIR"); env && *env) {
    return env;
  }
  return "zipzo-out";
}

}  // namespace zipzo::harness
