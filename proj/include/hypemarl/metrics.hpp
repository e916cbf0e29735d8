// Copyright 2026 The HypeMARL Authors. All Rights Reserved.
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

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace hypemarl {

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

struct MetricRow {
  std::size_t episode = 0;
  std::string mode;  // real, surrogate or eval
  double mean_return = kNoValue;
  double critic_loss = kNoValue;
  double actor_loss = kNoValue;
  double surrogate_loss = kNoValue;
  double wall_time = 0.0;  // seconds spent on this row
  std::size_t real_episodes = 0;
};

extern const char* const kMetricHeader;

/// Full-precision CSV line without the trailing newline.
std::string format_metric_row(const MetricRow& row);
MetricRow parse_metric_row(const std::string& line);

/// Append-only CSV writer. Creates the file with a header if absent.
class MetricLog {
 public:
  explicit MetricLog(const std::filesystem::path& path);
  void append(const MetricRow& row);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::vector<MetricRow> read_metric_log(const std::filesystem::path& path);

/// Linear-interpolation quantile (q in [0, 1]) of unsorted values.
double quantile(std::vector<double> values, double q);

/// Writes text to a file, surfacing failures with the path.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace hypemarl
