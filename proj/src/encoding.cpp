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
#include "hypemarl/encoding.hpp"

#include <cmath>

#include "hypemarl/error.hpp"

namespace hypemarl {

void EncodingConfig::validate() const {
  if (dim < 2 || dim % 2 != 0) throw ConfigError("encoding.dim must be even and >= 2");
  if (!(base > 1.0)) throw ConfigError("encoding.base must be > 1");
}

Vector positional_encoding(double position, const EncodingConfig& cfg) {
  cfg.validate();
  Vector pe(static_cast<Eigen::Index>(cfg.dim));
  const double d = static_cast<double>(cfg.dim);
  for (std::size_t j = 1; j <= cfg.dim / 2; ++j) {
    const double omega = std::pow(cfg.base, 2.0 * static_cast<double>(j) / d);
    const double arg = position / omega;
    pe[static_cast<Eigen::Index>(2 * (j - 1))] = std::sin(arg);
    pe[static_cast<Eigen::Index>(2 * j - 1)] = std::cos(arg);
  }
  return pe;
}

LayoutScheme layout_scheme_from_string(const std::string& name) {
  if (name == "row_major") return LayoutScheme::row_major;
  if (name == "column_major") return LayoutScheme::column_major;
  throw ConfigError("unknown layout scheme '" + name + "'");
}

const char* to_string(LayoutScheme s) {
  return s == LayoutScheme::row_major ? "row_major" : "column_major";
}

AgentLayout layout_positions(std::size_t rows, std::size_t cols, LayoutScheme scheme) {
  if (rows == 0 || cols == 0) throw ConfigError("layout_positions: grid must be non-empty");
  AgentLayout layout;
  layout.rows = rows;
  layout.cols = cols;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t node = r * cols + c;
      const std::size_t p = scheme == LayoutScheme::row_major ? node : c * rows + r;
      layout.positions.push_back(static_cast<double>(p));
      layout.row.push_back(r);
      layout.col.push_back(c);
      layout.node.push_back(node);
    }
  }
  return layout;
}

EncodingTable::EncodingTable(const AgentLayout& layout, const EncodingConfig& cfg) {
  cfg.validate();
  table_.resize(static_cast<Eigen::Index>(cfg.dim), static_cast<Eigen::Index>(layout.size()));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    table_.col(static_cast<Eigen::Index>(i)) = positional_encoding(layout.positions[i], cfg);
  }
}

}  // namespace hypemarl
