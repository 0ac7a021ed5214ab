// Copyright 2026 The Gibbs Control Authors
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

// Run records and their on-disk layout: one directory per run holding
// config.resolved.json, metrics.csv, summary.json and any plots.

#ifndef GIBBS_CONTROL_HARNESS_RECORD_HPP_
#define GIBBS_CONTROL_HARNESS_RECORD_HPP_

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "gibbs_control/core.hpp"
#include "gibbs_control/harness/config.hpp"

namespace gibbs::harness {

/// Shortest text that parses back to the same double. Locale-independent.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

using Cell = std::variant<double, std::int64_t, std::string>;

/// Column-typed rows rendered as CSV. Cells never contain wall-clock time,
/// so the text is a pure function of the run's inputs.
class MetricsTable {
 public:
  MetricsTable() = default;
  explicit MetricsTable(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<Cell>& row(std::size_t i) const { return rows_[i]; }

  void add(std::vector<Cell> row) {
    require(row.size() == columns_.size(), "MetricsTable: row width mismatch");
    rows_.push_back(std::move(row));
  }

  std::string csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      out += (c ? "," : "") + columns_[c];
    }
    out += "\n";
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ",";
        if (const double* d = std::get_if<double>(&row[c])) {
          out += format_number(*d);
        } else if (const auto* i = std::get_if<std::int64_t>(&row[c])) {
          out += std::to_string(*i);
        } else {
          out += std::get<std::string>(row[c]);
        }
      }
      out += "\n";
    }
    return out;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

struct RunRecord {
  ExperimentConfig config;
  MetricsTable metrics;
  Json summary = Json::object();
  std::vector<std::pair<std::string, std::string>> plots;  // file name, SVG
  bool passed = true;

  RunRecord() = default;
  RunRecord(ExperimentConfig cfg, std::vector<std::string> columns = {})
      : config(std::move(cfg)), metrics(std::move(columns)) {}
};

/// 20261019T143000Z
inline std::string utc_stamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

inline std::string run_directory_name(const ExperimentConfig& cfg,
                                      std::chrono::system_clock::time_point t) {
  return std::string(to_string(cfg.method)) + "-" + utc_stamp(t) + "-" +
         std::to_string(cfg.seed);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

/// Creates the run directory under cfg.output_dir (suffixing -2, -3, ... if
/// the name is taken) and writes every artifact. Returns the directory.
inline std::filesystem::path write_run(const RunRecord& record,
                                       std::chrono::system_clock::time_point started) {
  namespace fs = std::filesystem;
  const fs::path root = record.config.output_dir;
  fs::create_directories(root);
  const std::string base = run_directory_name(record.config, started);
  fs::path dir = root / base;
  for (int k = 2; !fs::create_directory(dir); ++k) {
    dir = root / (base + "-" + std::to_string(k));
  }
  write_text(dir / "config.resolved.json", to_json(record.config).dump(2) + "\n");
  write_text(dir / "metrics.csv", record.metrics.csv());
  write_text(dir / "summary.json", record.summary.dump(2) + "\n");
  for (const auto& [name, svg] : record.plots) write_text(dir / name, svg);
  return dir;
}

}  // namespace gibbs::harness

#endif  // GIBBS_CONTROL_HARNESS_RECORD_HPP_
