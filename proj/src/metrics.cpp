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
#include "hypemarl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hypemarl/error.hpp"

namespace hypemarl {

const char* const kMetricHeader =
    "episode,mode,mean_return,critic_loss,actor_loss,surrogate_loss,wall_time,real_episodes";

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNoValue;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw IoError("malformed metric value '" + s + "'");
  }
}

}  // namespace

std::string format_metric_row(const MetricRow& r) {
  std::string out = std::to_string(r.episode);
  out += ',' + r.mode;
  for (double v : {r.mean_return, r.critic_loss, r.actor_loss, r.surrogate_loss, r.wall_time}) {
    out += ',' + fmt(v);
  }
  out += ',' + std::to_string(r.real_episodes);
  return out;
}

MetricRow parse_metric_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (f.size() != 8) throw IoError("metric row has " + std::to_string(f.size()) + " fields: " + line);
  MetricRow r;
  r.episode = static_cast<std::size_t>(std::stoull(f[0]));
  r.mode = f[1];
  r.mean_return = parse_double(f[2]);
  r.critic_loss = parse_double(f[3]);
  r.actor_loss = parse_double(f[4]);
  r.surrogate_loss = parse_double(f[5]);
  r.wall_time = parse_double(f[6]);
  r.real_episodes = static_cast<std::size_t>(std::stoull(f[7]));
  return r;
}

MetricLog::MetricLog(const std::filesystem::path& path) : path_(path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open metric log " + path.string());
  if (fresh) out_ << kMetricHeader << '\n' << std::flush;
}

void MetricLog::append(const MetricRow& row) {
  out_ << format_metric_row(row) << '\n' << std::flush;
  if (!out_) throw IoError("write failed on " + path_.string());
}

std::vector<MetricRow> read_metric_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read metric log " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kMetricHeader) throw IoError("unexpected metric header in " + path.string());
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_metric_row(line));
  }
  return rows;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed on " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace hypemarl
