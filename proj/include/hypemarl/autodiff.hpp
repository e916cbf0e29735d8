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

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <vector>

namespace hypemarl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { identity, relu, tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Value-only kernels. The tape records the same computations.

/// Affine layer y = W x + b read from a flat parameter block starting at
/// `offset`: W is stored row-major (fan_out x fan_in) followed by b.
/// `theta` is either one column (weights shared by the whole batch) or one
/// column per sample of `x` (per-sample weights, e.g. emitted by a
/// hypernetwork).
Matrix dense_forward(const Matrix& theta, std::size_t offset, std::size_t fan_out,
                     std::size_t fan_in, const Matrix& x);

Matrix activate(const Matrix& x, Activation a);

namespace ad {

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  std::size_t id() const { return id_; }
  bool valid() const { return id_ != kInvalid; }

 private:
  friend class Tape;
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  explicit Var(std::size_t id) : id_(id) {}
  std::size_t id_ = kInvalid;
};

/// Reverse-mode tape over matrix-valued nodes.
///
/// Nodes are appended in evaluation order, so reverse insertion order is a
/// valid topological order for the backward sweep. Columns index batch
/// samples throughout. A tape supports exactly one backward pass.
class Tape {
 public:
  Var constant(Matrix value);
  Var variable(Matrix value);

  const Matrix& value(Var v) const;
  /// Gradient accumulated by backward(); zeros for nodes the seed never reached.
  Matrix grad(Var v) const;
  /// Moves the accumulated gradient out of the tape (zeros if untouched).
  Matrix take_grad(Var v);
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  Var dense(Var theta, std::size_t offset, std::size_t fan_out, std::size_t fan_in, Var x);
  Var activate(Var x, Activation a);
  /// Elementwise scale * x + shift.
  Var affine(Var x, double scale, double shift);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var square(Var x);
  Var huber(Var residual, double delta);
  Var concat_rows(std::initializer_list<Var> parts);
  /// Rows [start, start + count) of x.
  Var rows(Var x, std::size_t start, std::size_t count);
  Var sum(Var x);
  Var mean(Var x);

  /// Propagates seed (same shape as output) back through every recorded node.
  void backward(Var output, const Matrix& seed);
  /// Shorthand for a 1x1 output with seed 1.
  void backward(Var scalar_output);

 private:
  using Pullback = std::function<void(Tape&, const Matrix& upstream)>;

  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Pullback pullback;
  };

  Var push(Matrix value, bool requires_grad, Pullback pullback);
  const Node& node(Var v) const;
  /// Zero-initialized on first touch; only valid for nodes that require grad.
  Matrix& grad_buffer(std::size_t id);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace ad
}  // namespace hypemarl
