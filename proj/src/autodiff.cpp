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

#include "feds/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "feds/errors.hpp"

namespace feds::ad {

namespace {

thread_local bool g_grad_mode = true;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

void check_finite(const char* op, const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_defined(const char* op, const Var& a) {
  if (!a.defined()) throw ShapeError(std::string(op) + ": undefined operand");
}

Var make(const char* op, Shape shape, std::vector<double> value, std::vector<Var> parents,
         Node::BackwardFn backward) {
  check_finite(op, value);
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (g_grad_mode) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
    node->requires_grad = true;
  }
  return Var(std::move(node));
}

const Var& parent(const Var& self, std::size_t i) { return self.node().parents[i]; }

// a * mask with the mask shared between forward and every derivative order.
Var mul_mask(const Var& a, std::shared_ptr<const std::vector<double>> mask) {
  require_defined("mul_const", a);
  if (mask->size() != a.size()) throw ShapeError("mul_const: mask size mismatch");
  std::vector<double> out(a.size());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * (*mask)[i];
  return make("mul_const", a.shape(), std::move(out), {a},
              [mask](const Var& g, const Var&) { return std::vector<Var>{mul_mask(g, mask)}; });
}

}  // namespace

std::string to_string(const Shape& s) {
  return "[" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "]";
}

double Var::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar node " + to_string(shape()));
  return node_->value[0];
}

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

bool grad_mode_enabled() { return g_grad_mode; }

Var constant(Shape shape, std::vector<double> values) {
  if (values.size() != shape.size()) throw ShapeError("constant: value count does not match shape");
  return make("constant", shape, std::move(values), {}, nullptr);
}

Var constant_scalar(double v) { return constant({1, 1}, {v}); }
Var zeros(Shape shape) { return constant(shape, std::vector<double>(shape.size(), 0.0)); }
Var full(Shape shape, double v) { return constant(shape, std::vector<double>(shape.size(), v)); }

Var parameter(Shape shape, std::vector<double> values) {
  if (values.size() != shape.size()) throw ShapeError("parameter: value count does not match shape");
  check_finite("parameter", values);
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->op = "parameter";
  node->requires_grad = true;
  return Var(std::move(node));
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make("add", a.shape(), std::move(out), {a, b},
              [](const Var& g, const Var&) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make("sub", a.shape(), std::move(out), {a, b},
              [](const Var& g, const Var&) { return std::vector<Var>{g, neg(g)}; });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make("mul", a.shape(), std::move(out), {a, b}, [](const Var& g, const Var& self) {
    return std::vector<Var>{mul(g, parent(self, 1)), mul(g, parent(self, 0))};
  });
}

Var scale(const Var& a, double c) {
  require_defined("scale", a);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * c;
  return make("scale", a.shape(), std::move(out), {a},
              [c](const Var& g, const Var&) { return std::vector<Var>{scale(g, c)}; });
}

Var add_scalar(const Var& a, double c) {
  require_defined("add_scalar", a);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + c;
  return make("add_scalar", a.shape(), std::move(out), {a},
              [](const Var& g, const Var&) { return std::vector<Var>{g}; });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var mul_const(const Var& a, std::vector<double> mask) {
  return mul_mask(a, std::make_shared<const std::vector<double>>(std::move(mask)));
}

Var mul_scalar(const Var& a, const Var& s) {
  require_defined("mul_scalar", a);
  if (s.size() != 1) throw ShapeError("mul_scalar: multiplier must be 1x1, got " + to_string(s.shape()));
  double k = s.value()[0];
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * k;
  return make("mul_scalar", a.shape(), std::move(out), {a, s}, [](const Var& g, const Var& self) {
    const Var& x = parent(self, 0);
    const Var& k = parent(self, 1);
    return std::vector<Var>{mul_scalar(g, k), sum(mul(g, x))};
  });
}

Var matmul(const Var& a, const Var& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  Shape shape{a.rows(), b.cols()};
  std::vector<double> out(shape.size());
  MutMap(out.data(), shape.rows, shape.cols).noalias() =
      ConstMap(a.value().data(), a.rows(), a.cols()) * ConstMap(b.value().data(), b.rows(), b.cols());
  return make("matmul", shape, std::move(out), {a, b}, [](const Var& g, const Var& self) {
    const Var& x = parent(self, 0);
    const Var& y = parent(self, 1);
    return std::vector<Var>{matmul(g, transpose(y)), matmul(transpose(x), g)};
  });
}

Var transpose(const Var& a) {
  require_defined("transpose", a);
  Shape shape{a.cols(), a.rows()};
  std::vector<double> out(shape.size());
  MutMap(out.data(), shape.rows, shape.cols) = ConstMap(a.value().data(), a.rows(), a.cols()).transpose();
  return make("transpose", shape, std::move(out), {a},
              [](const Var& g, const Var&) { return std::vector<Var>{transpose(g)}; });
}

Var reshape(const Var& a, Shape shape) {
  require_defined("reshape", a);
  if (shape.size() != a.size()) {
    throw ShapeError("reshape: " + to_string(a.shape()) + " cannot become " + to_string(shape));
  }
  Shape original = a.shape();
  return make("reshape", shape, a.value(), {a},
              [original](const Var& g, const Var&) { return std::vector<Var>{reshape(g, original)}; });
}

Var sum_rows(const Var& a) {
  require_defined("sum_rows", a);
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[c] += a.value()[r * n + c];
  return make("sum_rows", {1, n}, std::move(out), {a},
              [m](const Var& g, const Var&) { return std::vector<Var>{broadcast_rows(g, m)}; });
}

Var broadcast_rows(const Var& a, std::size_t m) {
  require_defined("broadcast_rows", a);
  if (a.rows() != 1) throw ShapeError("broadcast_rows: expected one row, got " + to_string(a.shape()));
  std::size_t n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) std::copy(a.value().begin(), a.value().end(), out.begin() + r * n);
  return make("broadcast_rows", {m, n}, std::move(out), {a},
              [](const Var& g, const Var&) { return std::vector<Var>{sum_rows(g)}; });
}

Var sum_cols(const Var& a) {
  require_defined("sum_cols", a);
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r] += a.value()[r * n + c];
  return make("sum_cols", {m, 1}, std::move(out), {a},
              [n](const Var& g, const Var&) { return std::vector<Var>{broadcast_cols(g, n)}; });
}

Var broadcast_cols(const Var& a, std::size_t n) {
  require_defined("broadcast_cols", a);
  if (a.cols() != 1) throw ShapeError("broadcast_cols: expected one column, got " + to_string(a.shape()));
  std::size_t m = a.rows();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) std::fill_n(out.begin() + r * n, n, a.value()[r]);
  return make("broadcast_cols", {m, n}, std::move(out), {a},
              [](const Var& g, const Var&) { return std::vector<Var>{sum_cols(g)}; });
}

Var group_sum(const Var& a, std::size_t group) {
  require_defined("group_sum", a);
  if (group == 0 || a.rows() % group != 0) {
    throw ShapeError("group_sum: " + std::to_string(a.rows()) + " rows not divisible by " + std::to_string(group));
  }
  std::size_t k = a.rows() / group, n = a.cols();
  std::vector<double> out(k * n, 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out[(r / group) * n + c] += a.value()[r * n + c];
  return make("group_sum", {k, n}, std::move(out), {a},
              [group](const Var& g, const Var&) { return std::vector<Var>{group_broadcast(g, group)}; });
}

Var group_broadcast(const Var& a, std::size_t group) {
  require_defined("group_broadcast", a);
  std::size_t n = a.cols();
  std::vector<double> out(a.rows() * group * n);
  for (std::size_t r = 0; r < a.rows() * group; ++r)
    std::copy_n(a.value().begin() + (r / group) * n, n, out.begin() + r * n);
  return make("group_broadcast", {a.rows() * group, n}, std::move(out), {a},
              [group](const Var& g, const Var&) { return std::vector<Var>{group_sum(g, group)}; });
}

Var sum(const Var& a) { return sum_cols(sum_rows(a)); }

Var mean(const Var& a) {
  if (a.size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var add_row_bias(const Var& x, const Var& bias) {
  require_defined("add_row_bias", x);
  require_defined("add_row_bias", bias);
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_row_bias: bias " + to_string(bias.shape()) + " does not fit " + to_string(x.shape()));
  }
  std::size_t n = x.cols();
  std::vector<double> out(x.value());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bias.value()[c];
  return make("add_row_bias", x.shape(), std::move(out), {x, bias},
              [](const Var& g, const Var&) { return std::vector<Var>{g, sum_rows(g)}; });
}

Var unfold1d(const Var& x, std::size_t length, std::size_t kernel, std::size_t pad) {
  require_defined("unfold1d", x);
  if (length == 0 || x.rows() % length != 0) throw ShapeError("unfold1d: rows are not a multiple of length");
  if (kernel == 0 || pad >= kernel) throw ShapeError("unfold1d: padding must be smaller than the kernel");
  std::size_t batch = x.rows() / length, ch = x.cols();
  std::vector<double> out(x.rows() * kernel * ch, 0.0);
  const auto& xv = x.value();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < length; ++p) {
      double* dst = out.data() + (b * length + p) * kernel * ch;
      for (std::size_t k = 0; k < kernel; ++k) {
        auto src = static_cast<std::ptrdiff_t>(p + k) - static_cast<std::ptrdiff_t>(pad);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(length)) continue;
        std::copy_n(xv.data() + (b * length + static_cast<std::size_t>(src)) * ch, ch, dst + k * ch);
      }
    }
  }
  return make("unfold1d", {x.rows(), kernel * ch}, std::move(out), {x},
              [length, kernel, pad](const Var& g, const Var&) {
                return std::vector<Var>{fold1d(g, length, kernel, pad)};
              });
}

Var fold1d(const Var& cols, std::size_t length, std::size_t kernel, std::size_t pad) {
  require_defined("fold1d", cols);
  if (length == 0 || cols.rows() % length != 0) throw ShapeError("fold1d: rows are not a multiple of length");
  if (kernel == 0 || pad >= kernel || cols.cols() % kernel != 0) throw ShapeError("fold1d: bad kernel layout");
  std::size_t batch = cols.rows() / length, ch = cols.cols() / kernel;
  std::vector<double> out(cols.rows() * ch, 0.0);
  const auto& cv = cols.value();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < length; ++p) {
      const double* src = cv.data() + (b * length + p) * kernel * ch;
      for (std::size_t k = 0; k < kernel; ++k) {
        auto dst = static_cast<std::ptrdiff_t>(p + k) - static_cast<std::ptrdiff_t>(pad);
        if (dst < 0 || dst >= static_cast<std::ptrdiff_t>(length)) continue;
        double* d = out.data() + (b * length + static_cast<std::size_t>(dst)) * ch;
        for (std::size_t c = 0; c < ch; ++c) d[c] += src[k * ch + c];
      }
    }
  }
  return make("fold1d", {cols.rows(), ch}, std::move(out), {cols},
              [length, kernel, pad](const Var& g, const Var&) {
                return std::vector<Var>{unfold1d(g, length, kernel, pad)};
              });
}

Var conv1d(const Var& x, const Var& weight, const Var& bias, std::size_t length, std::size_t kernel,
           std::size_t pad) {
  if (weight.rows() != kernel * x.cols()) {
    throw ShapeError("conv1d: weight " + to_string(weight.shape()) + " does not match " +
                     std::to_string(x.cols()) + " input channels and kernel " + std::to_string(kernel));
  }
  return add_row_bias(matmul(unfold1d(x, length, kernel, pad), weight), bias);
}

Var linear(const Var& x, const Var& weight, const Var& bias) { return add_row_bias(matmul(x, weight), bias); }

Var leaky_relu(const Var& x, double slope) {
  require_defined("leaky_relu", x);
  std::vector<double> mask(x.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = x.value()[i] > 0.0 ? 1.0 : slope;
  return mul_const(x, std::move(mask));
}

Var square(const Var& x) { return mul(x, x); }

Var sqrt(const Var& x) {
  require_defined("sqrt", x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (x.value()[i] < 0.0) throw NumericError("sqrt of a negative value");
    out[i] = std::sqrt(x.value()[i]);
  }
  return make("sqrt", x.shape(), std::move(out), {x}, [](const Var& g, const Var& self) {
    return std::vector<Var>{mul(g, scale(reciprocal(self), 0.5))};
  });
}

Var reciprocal(const Var& x) {
  require_defined("reciprocal", x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / x.value()[i];
  return make("reciprocal", x.shape(), std::move(out), {x}, [](const Var& g, const Var& self) {
    return std::vector<Var>{neg(mul(g, mul(self, self)))};
  });
}

Var abs(const Var& x) {
  require_defined("abs", x);
  std::vector<double> sign(x.size());
  for (std::size_t i = 0; i < sign.size(); ++i) {
    double v = x.value()[i];
    sign[i] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  }
  return mul_const(x, std::move(sign));
}

Var abs_smooth(const Var& x, double eps) { return sqrt(add_scalar(square(x), eps)); }

Var log_clamped(const Var& x, double floor) {
  require_defined("log_clamped", x);
  std::vector<double> keep(x.size());
  std::vector<double> fill(x.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    bool above = x.value()[i] >= floor;
    keep[i] = above ? 1.0 : 0.0;
    fill[i] = above ? 0.0 : floor;
  }
  Var clamped = add(mul_const(x, std::move(keep)), constant(x.shape(), std::move(fill)));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(clamped.value()[i]);
  return make("log", x.shape(), std::move(out), {clamped}, [](const Var& g, const Var& self) {
    return std::vector<Var>{mul(g, reciprocal(parent(self, 0)))};
  });
}

Var min_const(const Var& x, double cap) {
  require_defined("min_const", x);
  std::vector<double> keep(x.size());
  std::vector<double> fill(x.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    bool below = x.value()[i] < cap;
    keep[i] = below ? 1.0 : 0.0;
    fill[i] = below ? 0.0 : cap;
  }
  return add(mul_const(x, std::move(keep)), constant(x.shape(), std::move(fill)));
}

Var softmax_rows(const Var& x) {
  require_defined("softmax_rows", x);
  std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < m; ++r) {
    const double* src = x.value().data() + r * n;
    double* dst = out.data() + r * n;
    double mx = *std::max_element(src, src + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += (dst[c] = std::exp(src[c] - mx));
    for (std::size_t c = 0; c < n; ++c) dst[c] /= z;
  }
  return make("softmax_rows", x.shape(), std::move(out), {x}, [n](const Var& g, const Var& self) {
    Var dot = broadcast_cols(sum_cols(mul(g, self)), n);
    return std::vector<Var>{mul(self, sub(g, dot))};
  });
}

Var l2_norm_rows(const Var& x, double eps) { return sqrt(add_scalar(sum_cols(square(x)), eps)); }

Var l2_norm_eps(const Var& x, double eps) { return sqrt(add_scalar(sum(square(x)), eps)); }

std::vector<Var> backward(const Var& root, std::span<const Var> wrt, bool create_graph) {
  require_defined("backward", root);
  if (root.size() != 1) throw InputError("backward: root must be a scalar, got " + to_string(root.shape()));

  // Iterative post-order DFS over the differentiable subgraph.
  std::vector<Var> order;
  std::unordered_map<const Node*, bool> visited;
  if (root.requires_grad()) {
    std::vector<std::pair<Var, std::size_t>> stack{{root, 0}};
    visited[root.get()] = true;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& ps = v.node().parents;
      if (next < ps.size()) {
        const Var& p = ps[next++];
        if (p.requires_grad() && !visited[p.get()]) {
          visited[p.get()] = true;
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }

  std::unordered_map<const Node*, Var> grads;
  {
    bool previous = g_grad_mode;
    g_grad_mode = create_graph;
    struct Restore {
      bool value;
      ~Restore() { g_grad_mode = value; }
    } restore{previous};

    if (root.requires_grad()) grads[root.get()] = constant_scalar(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const Var& v = *it;
      auto found = grads.find(v.get());
      if (found == grads.end() || !v.node().backward) continue;
      Var g = found->second;
      std::vector<Var> pg = v.node().backward(g, v);
      const auto& ps = v.node().parents;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        if (!ps[i].requires_grad()) continue;
        auto slot = grads.find(ps[i].get());
        if (slot == grads.end()) {
          grads.emplace(ps[i].get(), pg[i]);
        } else {
          slot->second = add(slot->second, pg[i]);
        }
      }
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    require_defined("backward", w);
    auto found = grads.find(w.get());
    result.push_back(found == grads.end() ? zeros(w.shape()) : found->second);
  }
  return result;
}

Var grad(const Var& root, const Var& wrt, bool create_graph) {
  return backward(root, std::span<const Var>(&wrt, 1), create_graph)[0];
}

}  // namespace feds::ad
