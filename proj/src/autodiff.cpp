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
#include "hypemarl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypemarl/error.hpp"

namespace hypemarl {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

void check_dense_shapes(const Matrix& theta, std::size_t offset, std::size_t fan_out,
                        std::size_t fan_in, const Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != fan_in) {
    throw ConfigError("dense: input has " + std::to_string(x.rows()) + " rows, layer expects " +
                      std::to_string(fan_in));
  }
  if (static_cast<std::size_t>(theta.rows()) < offset + fan_out * fan_in + fan_out) {
    throw ConfigError("dense: parameter block out of range");
  }
  if (theta.cols() != 1 && theta.cols() != x.cols()) {
    throw ConfigError("dense: per-sample weights have " + std::to_string(theta.cols()) +
                      " columns for a batch of " + std::to_string(x.cols()));
  }
}

}  // namespace

Matrix dense_forward(const Matrix& theta, std::size_t offset, std::size_t fan_out,
                     std::size_t fan_in, const Matrix& x) {
  check_dense_shapes(theta, offset, fan_out, fan_in, x);
  const auto out = static_cast<Eigen::Index>(fan_out);
  const auto in = static_cast<Eigen::Index>(fan_in);
  const auto bias_offset = static_cast<Eigen::Index>(offset + fan_out * fan_in);
  Matrix y(out, x.cols());
  if (theta.cols() == 1) {
    Eigen::Map<const RowMajorMatrix> w(theta.data() + offset, out, in);
    y.noalias() = w * x;
    y.colwise() += theta.col(0).segment(bias_offset, out);
  } else {
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
      Eigen::Map<const RowMajorMatrix> w(theta.col(b).data() + offset, out, in);
      y.col(b).noalias() = w * x.col(b);
      y.col(b) += theta.col(b).segment(bias_offset, out);
    }
  }
  return y;
}

Matrix activate(const Matrix& x, Activation a) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::tanh: return x.array().tanh().matrix();
  }
  return x;
}

namespace ad {

Var Tape::push(Matrix value, bool requires_grad, Pullback pullback) {
  if (consumed_) throw UsageError("tape already consumed by backward()");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.pullback = std::move(pullback);
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id() >= nodes_.size()) throw UsageError("variable does not belong to this tape");
  return nodes_[v.id()];
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Tape::variable(Matrix value) { return push(std::move(value), true, {}); }

const Matrix& Tape::value(Var v) const { return node(v).value; }

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.has_grad) return n.grad;
  return Matrix::Zero(n.value.rows(), n.value.cols());
}

Matrix Tape::take_grad(Var v) {
  const Node& n = node(v);
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  Node& m = nodes_[v.id()];
  m.has_grad = false;
  return std::move(m.grad);
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Var Tape::dense(Var theta, std::size_t offset, std::size_t fan_out, std::size_t fan_in, Var x) {
  Matrix y = dense_forward(value(theta), offset, fan_out, fan_in, value(x));
  const bool needs = requires_grad(theta) || requires_grad(x);
  const std::size_t tid = theta.id();
  const std::size_t xid = x.id();
  return push(std::move(y), needs, [=](Tape& t, const Matrix& dy) {
    const Matrix& th = t.nodes_[tid].value;
    const Matrix& xv = t.nodes_[xid].value;
    const auto out = static_cast<Eigen::Index>(fan_out);
    const auto in = static_cast<Eigen::Index>(fan_in);
    const auto bias_offset = static_cast<Eigen::Index>(offset + fan_out * fan_in);
    const bool theta_grad = t.nodes_[tid].requires_grad;
    const bool x_grad = t.nodes_[xid].requires_grad;
    if (th.cols() == 1) {
      if (theta_grad) {
        Matrix& g = t.grad_buffer(tid);
        Eigen::Map<RowMajorMatrix> gw(g.data() + offset, out, in);
        gw.noalias() += dy * xv.transpose();
        g.col(0).segment(bias_offset, out) += dy.rowwise().sum();
      }
      if (x_grad) {
        Eigen::Map<const RowMajorMatrix> w(th.data() + offset, out, in);
        t.grad_buffer(xid).noalias() += w.transpose() * dy;
      }
      return;
    }
    for (Eigen::Index b = 0; b < xv.cols(); ++b) {
      if (theta_grad) {
        Matrix& g = t.grad_buffer(tid);
        Eigen::Map<RowMajorMatrix> gw(g.col(b).data() + offset, out, in);
        gw.noalias() += dy.col(b) * xv.col(b).transpose();
        g.col(b).segment(bias_offset, out) += dy.col(b);
      }
      if (x_grad) {
        Eigen::Map<const RowMajorMatrix> w(th.col(b).data() + offset, out, in);
        t.grad_buffer(xid).col(b).noalias() += w.transpose() * dy.col(b);
      }
    }
  });
}

Var Tape::activate(Var x, Activation a) {
  if (a == Activation::identity) return x;
  Matrix y = hypemarl::activate(value(x), a);
  const std::size_t xid = x.id();
  const std::size_t yid = nodes_.size();
  return push(std::move(y), requires_grad(x), [=](Tape& t, const Matrix& dy) {
    Matrix& gx = t.grad_buffer(xid);
    if (a == Activation::relu) {
      gx.array() += (t.nodes_[xid].value.array() > 0.0).select(dy.array(), 0.0);
    } else {
      const auto& yv = t.nodes_[yid].value.array();
      gx.array() += dy.array() * (1.0 - yv * yv);
    }
  });
}

Var Tape::affine(Var x, double scale, double shift) {
  Matrix y = (value(x).array() * scale + shift).matrix();
  const std::size_t xid = x.id();
  return push(std::move(y), requires_grad(x),
              [=](Tape& t, const Matrix& dy) { t.grad_buffer(xid) += scale * dy; });
}

namespace {
void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch");
  }
}
}  // namespace

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Matrix y = value(a) + value(b);
  const std::size_t aid = a.id(), bid = b.id();
  return push(std::move(y), requires_grad(a) || requires_grad(b), [=](Tape& t, const Matrix& dy) {
    if (t.nodes_[aid].requires_grad) t.grad_buffer(aid) += dy;
    if (t.nodes_[bid].requires_grad) t.grad_buffer(bid) += dy;
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Matrix y = value(a) - value(b);
  const std::size_t aid = a.id(), bid = b.id();
  return push(std::move(y), requires_grad(a) || requires_grad(b), [=](Tape& t, const Matrix& dy) {
    if (t.nodes_[aid].requires_grad) t.grad_buffer(aid) += dy;
    if (t.nodes_[bid].requires_grad) t.grad_buffer(bid) -= dy;
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Matrix y = value(a).cwiseProduct(value(b));
  const std::size_t aid = a.id(), bid = b.id();
  return push(std::move(y), requires_grad(a) || requires_grad(b), [=](Tape& t, const Matrix& dy) {
    if (t.nodes_[aid].requires_grad) t.grad_buffer(aid) += dy.cwiseProduct(t.nodes_[bid].value);
    if (t.nodes_[bid].requires_grad) t.grad_buffer(bid) += dy.cwiseProduct(t.nodes_[aid].value);
  });
}

Var Tape::square(Var x) {
  Matrix y = value(x).array().square().matrix();
  const std::size_t xid = x.id();
  return push(std::move(y), requires_grad(x), [=](Tape& t, const Matrix& dy) {
    t.grad_buffer(xid) += 2.0 * dy.cwiseProduct(t.nodes_[xid].value);
  });
}

Var Tape::huber(Var residual, double delta) {
  if (!(delta > 0.0)) throw ConfigError("huber: delta must be positive");
  const Matrix& r = value(residual);
  Matrix y = r.unaryExpr([delta](double v) {
    const double a = std::abs(v);
    return a <= delta ? 0.5 * v * v : delta * (a - 0.5 * delta);
  });
  const std::size_t rid = residual.id();
  return push(std::move(y), requires_grad(residual), [=](Tape& t, const Matrix& dy) {
    const Matrix& rv = t.nodes_[rid].value;
    t.grad_buffer(rid) += rv.unaryExpr([delta](double v) { return std::clamp(v, -delta, delta); })
                              .cwiseProduct(dy);
  });
}

Var Tape::concat_rows(std::initializer_list<Var> parts) {
  if (parts.size() == 0) throw ConfigError("concat_rows: no inputs");
  const Eigen::Index cols = value(*parts.begin()).cols();
  Eigen::Index rows = 0;
  bool needs = false;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw ConfigError("concat_rows: column mismatch");
    rows += value(p).rows();
    needs = needs || requires_grad(p);
    ids.push_back(p.id());
  }
  Matrix y(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    y.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
  }
  return push(std::move(y), needs, [ids](Tape& t, const Matrix& dy) {
    Eigen::Index row = 0;
    for (std::size_t id : ids) {
      const Eigen::Index n = t.nodes_[id].value.rows();
      if (t.nodes_[id].requires_grad) t.grad_buffer(id) += dy.middleRows(row, n);
      row += n;
    }
  });
}

Var Tape::rows(Var x, std::size_t start, std::size_t count) {
  const Matrix& xv = value(x);
  if (start + count > static_cast<std::size_t>(xv.rows())) throw ConfigError("rows: out of range");
  const auto s = static_cast<Eigen::Index>(start);
  const auto n = static_cast<Eigen::Index>(count);
  Matrix y = xv.middleRows(s, n);
  const std::size_t xid = x.id();
  return push(std::move(y), requires_grad(x), [=](Tape& t, const Matrix& dy) {
    t.grad_buffer(xid).middleRows(s, n) += dy;
  });
}

Var Tape::sum(Var x) {
  Matrix y(1, 1);
  y(0, 0) = value(x).sum();
  const std::size_t xid = x.id();
  return push(std::move(y), requires_grad(x),
              [=](Tape& t, const Matrix& dy) { t.grad_buffer(xid).array() += dy(0, 0); });
}

Var Tape::mean(Var x) {
  const auto n = static_cast<double>(value(x).size());
  if (n == 0) throw ConfigError("mean: empty input");
  Matrix y(1, 1);
  y(0, 0) = value(x).sum() / n;
  const std::size_t xid = x.id();
  return push(std::move(y), requires_grad(x),
              [=](Tape& t, const Matrix& dy) { t.grad_buffer(xid).array() += dy(0, 0) / n; });
}

void Tape::backward(Var output, const Matrix& seed) {
  if (consumed_) throw UsageError("tape already consumed by backward()");
  const Node& out = node(output);
  if (seed.rows() != out.value.rows() || seed.cols() != out.value.cols()) {
    throw ConfigError("backward: seed shape does not match output");
  }
  consumed_ = true;
  if (!out.requires_grad) return;
  grad_buffer(output.id()) += seed;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.pullback) n.pullback(*this, n.grad);
  }
}

void Tape::backward(Var scalar_output) {
  backward(scalar_output, Matrix::Ones(1, 1));
}

}  // namespace ad
}  // namespace hypemarl
