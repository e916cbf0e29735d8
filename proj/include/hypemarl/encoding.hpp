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
#include <string>
#include <vector>

#include "hypemarl/autodiff.hpp"

namespace hypemarl {

struct EncodingConfig {
  std::size_t dim = 2048;  // even
  double base = 1000.0;    // > 1

  void validate() const;
};

/// Sinusoidal embedding of a scalar position, length cfg.dim.
///
/// Entry 2(j-1) is sin(p / w_j) and entry 2j-1 is cos(p / w_j) for
/// j = 1..dim/2, with w_j = base^(2j / dim).
Vector positional_encoding(double position, const EncodingConfig& cfg);

enum class LayoutScheme { row_major, column_major };

LayoutScheme layout_scheme_from_string(const std::string& name);
const char* to_string(LayoutScheme s);

/// One agent per grid node. Node indices are always row-major; the scheme
/// only decides which scalar position each node is given.
struct AgentLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> positions;
  std::vector<std::size_t> row;
  std::vector<std::size_t> col;
  std::vector<std::size_t> node;

  std::size_t size() const { return positions.size(); }
};

AgentLayout layout_positions(std::size_t rows, std::size_t cols,
                             LayoutScheme scheme = LayoutScheme::row_major);

/// Encodings of every agent in a layout, computed once (dim x N).
class EncodingTable {
 public:
  EncodingTable() = default;
  EncodingTable(const AgentLayout& layout, const EncodingConfig& cfg);

  const Matrix& matrix() const { return table_; }
  auto column(std::size_t agent) const { return table_.col(static_cast<Eigen::Index>(agent)); }
  std::size_t dim() const { return static_cast<std::size_t>(table_.rows()); }
  std::size_t agents() const { return static_cast<std::size_t>(table_.cols()); }

 private:
  Matrix table_;
};

}  // namespace hypemarl
