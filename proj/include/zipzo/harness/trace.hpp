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

// Per-step trace files and the long-format table merged from them.
//
// A trace file is tab-separated text:
//   # zipzo-trace 1
//   # method <name>
//   # seed <n>
//   # config_hash <hex>
//   # git_describe <string>
//   # <key> <value>            (any further metadata)
//   step  queries_used  train_loss  eval_loss  eval_accuracy  alpha  grad_norm
//   ...one row per optimizer step; absent values are written as "na"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "zipzo/errors.hpp"
#include "zipzo/optimizer.hpp"
#include "zipzo/text.hpp"

#ifndef ZIPZO_GIT_DESCRIBE
#define ZIPZO_GIT_DESCRIBE "unknown"
#endif

namespace zipzo::harness {

inline constexpr std::string_view kGitDescribe = ZIPZO_GIT_DESCRIBE;

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {
      "step",          "queries_used", "train_loss", "eval_loss",
      "eval_accuracy", "alpha",        "grad_norm"};
  return cols;
}

inline const std::vector<std::string>& plot_columns() {
  static const std::vector<std::string> cols = {"method", "seed",
                                                "queries_used", "loss",
                                                "accuracy"};
  return cols;
}

// Input files disagree with the expected layout.
class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

struct TraceMeta {
  std::string method;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string git_describe{kGitDescribe};
  std::vector<std::pair<std::string, std::string>> extra;
};

namespace detail {

inline std::string cell(const std::optional<double>& v) {
  return v ? text::format_double(*v) : std::string("na");
}

inline std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace detail

// `initial` becomes a step-0 row evaluated before any update.
inline void write_trace(std::ostream& os, const TraceMeta& meta,
                        const std::vector<TraceRecord>& trace,
                        const std::optional<EvalResult>& initial = {}) {
  os << "# zipzo-trace 1\n"
     << "# method " << meta.method << '\n'
     << "# seed " << meta.seed << '\n'
     << "# config_hash " << meta.config_hash << '\n'
     << "# git_describe " << meta.git_describe << '\n';
  for (const auto& [k, v] : meta.extra) os << "# " << k << ' ' << v << '\n';
  os << detail::join(trace_columns(), '\t') << '\n';
  if (initial) {
    os << "0\t0\t" << text::format_double(initial->loss) << '\t'
       << text::format_double(initial->loss) << '\t'
       << detail::cell(initial->accuracy) << "\tna\tna\n";
  }
  for (const auto& r : trace) {
    os << r.step << '\t' << r.queries_used << '\t'
       << text::format_double(r.train_loss) << '\t' << detail::cell(r.eval_loss)
       << '\t' << detail::cell(r.eval_accuracy) << '\t'
       << text::format_double(r.alpha) << '\t'
       << text::format_double(r.grad_norm) << '\n';
  }
}

inline void write_trace_file(const std::string& path, const TraceMeta& meta,
                             const std::vector<TraceRecord>& trace,
                             const std::optional<EvalResult>& initial = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write trace file '" + path + "'");
  write_trace(os, meta, trace, initial);
}

struct ParsedTrace {
  TraceMeta meta;
  std::vector<std::vector<std::string>> rows;  // in trace_columns() order
};

inline ParsedTrace read_trace(std::istream& is, const std::string& name) {
  auto fail = [&](const std::string& why) -> ParsedTrace {
    throw SchemaMismatch(name + ": " + why);
  };
  std::string line;
  if (!std::getline(is, line) || line != "# zipzo-trace 1") {
    return fail("missing '# zipzo-trace 1' header");
  }
  ParsedTrace out;
  bool have_method = false, have_seed = false;
  while (std::getline(is, line) && line.rfind("# ", 0) == 0) {
    const std::string body = line.substr(2);
    const auto space = body.find(' ');
    const std::string key = body.substr(0, space);
    const std::string value =
        space == std::string::npos ? std::string() : body.substr(space + 1);
    if (key == "method") {
      out.meta.method = value;
      have_method = true;
    } else if (key == "seed") {
      const auto v = text::parse_u64(value);
      if (!v) return fail("bad seed '" + value + "'");
      out.meta.seed = *v;
      have_seed = true;
    } else if (key == "config_hash") {
      out.meta.config_hash = value;
    } else if (key == "git_describe") {
      out.meta.git_describe = value;
    } else {
      out.meta.extra.emplace_back(key, value);
    }
  }
  if (!have_method || !have_seed) return fail("missing method or seed");
  std::vector<std::string> cols;
  for (auto c : text::split(line, '\t')) cols.emplace_back(c);
  if (cols != trace_columns()) {
    return fail("column header '" + line + "' does not match '" +
                detail::join(trace_columns(), '\t') + "'");
  }
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> row;
    for (auto c : text::split(line, '\t')) row.emplace_back(c);
    if (row.size() != cols.size()) {
      return fail("row " + std::to_string(number) + " has " +
                  std::to_string(row.size()) + " fields, expected " +
                  std::to_string(cols.size()));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline ParsedTrace read_trace_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SchemaMismatch(path + ": cannot open");
  return read_trace(is, path);
}

// Long-format table (method, seed, queries_used, loss, accuracy), where loss
// is the per-step training loss and accuracy the held-out accuracy of
// evaluation rows. Rows are grouped by (method, seed) in sorted order and
// keep their file order within a group.
inline void emit_plot_data(std::ostream& os,
                           const std::vector<ParsedTrace>& traces) {
  std::set<std::string> hashes, describes;
  for (const auto& t : traces) {
    hashes.insert(t.meta.config_hash);
    describes.insert(t.meta.git_describe);
  }
  std::vector<std::size_t> order(traces.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    const auto& ma = traces[a].meta;
    const auto& mb = traces[b].meta;
    return std::tie(ma.method, ma.seed) < std::tie(mb.method, mb.seed);
  });
  auto list = [](const std::set<std::string>& s) {
    return detail::join(std::vector<std::string>(s.begin(), s.end()), ',');
  };
  os << "# zipzo-plot-data 1\n"
     << "# config_hash " << list(hashes) << '\n'
     << "# git_describe " << list(describes) << '\n'
     << detail::join(plot_columns(), '\t') << '\n';
  for (std::size_t i : order) {
    const auto& t = traces[i];
    for (const auto& row : t.rows) {
      os << t.meta.method << '\t' << t.meta.seed << '\t' << row[1] << '\t'
         << row[2] << '\t' << row[4] << '\n';
    }
  }
}

}  // namespace zipzo::harness
