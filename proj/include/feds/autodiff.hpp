// Copyright 2026 The FEDS Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reverse-mode automatic differentiation over a dynamically built graph of
// row-major 2-D double tensors.
//
// Every backward rule is written in terms of the same primitive ops, so with
// `create_graph` the returned gradients are themselves graph nodes and can be
// differentiated again (double backprop). Nodes are immutable once created.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace feds::ad {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

class Var;

struct Node {
  using BackwardFn = std::function<std::vector<Var>(const Var& grad_out, const Var& self)>;

  Shape shape;
  std::vector<double> value;
  const char* op = "leaf";
  std::vector<Var> parents;
  BackwardFn backward;
  bool requires_grad = false;
};

// Shared handle to an immutable graph node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Node& node() const { return *node_; }
  const Node* get() const { return node_.get(); }

  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->shape.size(); }
  const std::vector<double>& value() const { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  // Value of a 1x1 node.
  double item() const;
  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }

 private:
  std::shared_ptr<const Node> node_;
};

// While alive, newly created ops do not record parents or backward rules.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// Leaves.
Var constant(Shape shape, std::vector<double> values);
Var constant_scalar(double v);
Var zeros(Shape shape);
Var full(Shape shape, double v);
// A leaf that gradients can be taken with respect to.
Var parameter(Shape shape, std::vector<double> values);

// Elementwise binary ops on equal shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);

// Scalar and constant-tensor ops.
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var neg(const Var& a);
// a * mask where `mask` is a constant (not differentiated).
Var mul_const(const Var& a, std::vector<double> mask);
// Multiplies every entry of `a` by the 1x1 node `s`.
Var mul_scalar(const Var& a, const Var& s);

// Linear algebra.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);

// Reductions and their adjoint broadcasts.
Var sum_rows(const Var& a);                         // [m,n] -> [1,n]
Var broadcast_rows(const Var& a, std::size_t m);    // [1,n] -> [m,n]
Var sum_cols(const Var& a);                         // [m,n] -> [m,1]
Var broadcast_cols(const Var& a, std::size_t n);    // [m,1] -> [m,n]
Var group_sum(const Var& a, std::size_t group);     // [k*g,n] -> [k,n], sums consecutive rows
Var group_broadcast(const Var& a, std::size_t group);  // [k,n] -> [k*g,n]
Var sum(const Var& a);                              // -> [1,1]
Var mean(const Var& a);                             // -> [1,1]

// Adds a [1,n] bias to every row of an [m,n] matrix.
Var add_row_bias(const Var& x, const Var& bias);

// Sliding-window unfolding over a batch of sequences laid out as
// [batch*length, channels]. Output row (b, p) holds input rows
// p - pad .. p - pad + kernel - 1 of sequence b (zero outside), flattened
// kernel-offset major: column k * channels + c.
Var unfold1d(const Var& x, std::size_t length, std::size_t kernel, std::size_t pad);
Var fold1d(const Var& cols, std::size_t length, std::size_t kernel, std::size_t pad);

// 1-D convolution with stride 1 over [batch*length, in_channels] input.
// `weight` is [kernel*in_channels, out_channels], `bias` is [1, out_channels].
Var conv1d(const Var& x, const Var& weight, const Var& bias, std::size_t length, std::size_t kernel,
           std::size_t pad);
// x * weight + bias for [m,in] x [in,out] + [1,out].
Var linear(const Var& x, const Var& weight, const Var& bias);

// Pointwise nonlinearities.
Var leaky_relu(const Var& x, double slope = 0.01);
Var square(const Var& x);
Var sqrt(const Var& x);
Var reciprocal(const Var& x);
Var abs(const Var& x);
// sqrt(x^2 + eps).
Var abs_smooth(const Var& x, double eps = 1e-12);
// log(max(x, floor)); zero gradient where x < floor.
Var log_clamped(const Var& x, double floor = 1e-12);
// min(x, cap); the x >= cap branch is constant.
Var min_const(const Var& x, double cap);

// Softmax along each row (each row becomes a distribution).
Var softmax_rows(const Var& x);

// Per-row Euclidean norm sqrt(sum_j x_ij^2 + eps): [m,n] -> [m,1].
Var l2_norm_rows(const Var& x, double eps = 1e-12);
// Norm of all entries: [m,n] -> [1,1].
Var l2_norm_eps(const Var& x, double eps = 1e-12);

// Gradients of the scalar `root` with respect to each of `wrt`. Nodes that do
// not influence `root` get an exact zero gradient. With `create_graph` the
// gradients are recorded so a second backward can run through them.
std::vector<Var> backward(const Var& root, std::span<const Var> wrt, bool create_graph = false);
Var grad(const Var& root, const Var& wrt, bool create_graph = false);

}  // namespace feds::ad
