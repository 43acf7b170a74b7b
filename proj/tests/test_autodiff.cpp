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

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "feds/errors.hpp"
#include "feds/params.hpp"
#include "support/gradcheck.hpp"

namespace ad = feds::ad;
using feds::ParamStore;
using feds::testing::check_gradients;
using feds::testing::uniform_values;

namespace {

// Weighted sum with fixed random weights, so no output entry can cancel.
ad::Var probe(const ad::Var& out, std::uint64_t seed = 99) {
  return ad::sum(ad::mul(out, ad::constant(out.shape(), uniform_values(out.size(), seed, 0.5, 1.5))));
}

void expect_fd(ParamStore& store, const std::function<ad::Var()>& f) {
  auto report = check_gradients(store, f);
  INFO(report.first_failure);
  CHECK(report.ok());
}

// Values away from 0 so kinks stay outside the finite-difference stencil.
std::vector<double> off_zero(std::size_t n, std::uint64_t seed) {
  auto v = uniform_values(n, seed, 0.2, 1.5);
  for (std::size_t i = 0; i < n; i += 2) v[i] = -v[i];
  return v;
}

}  // namespace

TEST_CASE("forward values") {
  auto a = ad::constant({2, 2}, {1, 2, 3, 4});
  auto b = ad::constant({2, 2}, {5, 6, 7, 8});
  CHECK(ad::matmul(a, b).value() == std::vector<double>{19, 22, 43, 50});
  CHECK(ad::transpose(a).value() == std::vector<double>{1, 3, 2, 4});
  CHECK(ad::sum_rows(a).value() == std::vector<double>{4, 6});
  CHECK(ad::sum_cols(a).value() == std::vector<double>{3, 7});
  CHECK(ad::group_sum(ad::constant({4, 1}, {1, 2, 3, 4}), 2).value() == std::vector<double>{3, 7});
  CHECK(ad::mean(a).item() == 2.5);
  CHECK(ad::min_const(a, 2.5).value() == std::vector<double>{1, 2, 2.5, 2.5});
  CHECK(ad::leaky_relu(ad::constant({1, 2}, {-2, 3}), 0.1).value() == std::vector<double>{-0.2, 3});
  CHECK(ad::l2_norm_rows(ad::constant({1, 2}, {3, 4}), 0.0).item() == 5.0);

  auto sm = ad::softmax_rows(ad::constant({2, 3}, {1, 2, 3, 1000, 1000, 1000}));
  CHECK(sm.at(0, 0) + sm.at(0, 1) + sm.at(0, 2) == doctest::Approx(1.0));
  CHECK(sm.at(1, 0) == doctest::Approx(1.0 / 3));
}

TEST_CASE("unfold1d windows with zero padding") {
  // Two sequences of length 3, one channel.
  auto x = ad::constant({6, 1}, {1, 2, 3, 4, 5, 6});
  auto u = ad::unfold1d(x, 3, 3, 1);
  CHECK(u.shape() == ad::Shape{6, 3});
  CHECK(u.value() == std::vector<double>{0, 1, 2, 1, 2, 3, 2, 3, 0, 0, 4, 5, 4, 5, 6, 5, 6, 0});
}

TEST_CASE("fold1d is the adjoint of unfold1d") {
  const std::size_t length = 5, kernel = 3, pad = 1, channels = 2, batch = 2;
  auto x = uniform_values(batch * length * channels, 1);
  auto y = uniform_values(batch * length * kernel * channels, 2);
  auto ux = ad::unfold1d(ad::constant({batch * length, channels}, x), length, kernel, pad);
  auto fy = ad::fold1d(ad::constant({batch * length, kernel * channels}, y), length, kernel, pad);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += ux.value()[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * fy.value()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("conv1d matches a direct loop") {
  const std::size_t length = 4, kernel = 3, pad = 1, in = 2, out = 3;
  auto xv = uniform_values(length * in, 5);
  auto wv = uniform_values(kernel * in * out, 6);
  auto bv = uniform_values(out, 7);
  auto y = ad::conv1d(ad::constant({length, in}, xv), ad::constant({kernel * in, out}, wv),
                      ad::constant({1, out}, bv), length, kernel, pad);
  for (std::size_t p = 0; p < length; ++p) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = bv[o];
      for (std::size_t k = 0; k < kernel; ++k) {
        long src = static_cast<long>(p + k) - static_cast<long>(pad);
        if (src < 0 || src >= static_cast<long>(length)) continue;
        for (std::size_t c = 0; c < in; ++c) acc += xv[src * in + c] * wv[(k * in + c) * out + o];
      }
      CHECK(y.at(p, o) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("first-order gradients match finite differences") {
  ParamStore s;
  s.add("a", {3, 4}, off_zero(12, 1));
  s.add("b", {3, 4}, off_zero(12, 2));
  s.add("m", {4, 2}, uniform_values(8, 3));
  s.add("bias", {1, 4}, uniform_values(4, 4));
  s.add("s", {1, 1}, {0.7});
  s.add("pos", {3, 4}, uniform_values(12, 5, 0.3, 2.0));
  auto a = [&] { return s.get("a"); };
  auto b = [&] { return s.get("b"); };

  SUBCASE("add") { expect_fd(s, [&] { return probe(ad::add(a(), b())); }); }
  SUBCASE("sub") { expect_fd(s, [&] { return probe(ad::sub(a(), b())); }); }
  SUBCASE("mul") { expect_fd(s, [&] { return probe(ad::mul(a(), b())); }); }
  SUBCASE("scale, add_scalar, neg") {
    expect_fd(s, [&] { return probe(ad::neg(ad::add_scalar(ad::scale(a(), 1.7), 0.3))); });
  }
  SUBCASE("mul_const") {
    expect_fd(s, [&] { return probe(ad::mul_const(a(), uniform_values(12, 8))); });
  }
  SUBCASE("mul_scalar") { expect_fd(s, [&] { return probe(ad::mul_scalar(a(), s.get("s"))); }); }
  SUBCASE("matmul") { expect_fd(s, [&] { return probe(ad::matmul(a(), s.get("m"))); }); }
  SUBCASE("transpose and reshape") {
    expect_fd(s, [&] { return probe(ad::reshape(ad::transpose(a()), {2, 6})); });
  }
  SUBCASE("sum_rows and broadcast_rows") {
    expect_fd(s, [&] { return probe(ad::broadcast_rows(ad::sum_rows(a()), 5)); });
  }
  SUBCASE("sum_cols and broadcast_cols") {
    expect_fd(s, [&] { return probe(ad::broadcast_cols(ad::sum_cols(a()), 3)); });
  }
  SUBCASE("group_sum and group_broadcast") {
    expect_fd(s, [&] { return probe(ad::group_broadcast(ad::group_sum(ad::reshape(a(), {6, 2}), 3), 2)); });
  }
  SUBCASE("mean") { expect_fd(s, [&] { return ad::mean(ad::mul(a(), b())); }); }
  SUBCASE("add_row_bias") { expect_fd(s, [&] { return probe(ad::add_row_bias(a(), s.get("bias"))); }); }
  SUBCASE("leaky_relu") { expect_fd(s, [&] { return probe(ad::leaky_relu(a(), 0.05)); }); }
  SUBCASE("square, sqrt, reciprocal") {
    expect_fd(s, [&] { return probe(ad::reciprocal(ad::sqrt(ad::add(ad::square(a()), s.get("pos"))))); });
  }
  SUBCASE("abs and abs_smooth") {
    expect_fd(s, [&] { return probe(ad::add(ad::abs(a()), ad::abs_smooth(b()))); });
  }
  SUBCASE("log_clamped") { expect_fd(s, [&] { return probe(ad::log_clamped(s.get("pos"))); }); }
  SUBCASE("min_const") { expect_fd(s, [&] { return probe(ad::min_const(a(), 0.5)); }); }
  SUBCASE("softmax_rows") { expect_fd(s, [&] { return probe(ad::softmax_rows(a())); }); }
  SUBCASE("l2_norm_rows and l2_norm_eps") {
    expect_fd(s, [&] { return ad::add(probe(ad::l2_norm_rows(a())), ad::l2_norm_eps(b())); });
  }
}

TEST_CASE("conv1d gradients match finite differences") {
  const std::size_t batch = 2, length = 5, in = 3, out = 4, kernel = 3;
  ParamStore s;
  s.add("x", {batch * length, in}, uniform_values(batch * length * in, 21));
  s.add("w", {kernel * in, out}, uniform_values(kernel * in * out, 22));
  s.add("b", {1, out}, uniform_values(out, 23));
  expect_fd(s, [&] { return probe(ad::conv1d(s.get("x"), s.get("w"), s.get("b"), length, kernel, 1)); });
}

TEST_CASE("second-order gradients match finite differences of the first") {
  // f(x, w) = sum(softmax(x w)^2 ...); check d/dw of ||df/dx||^2 through create_graph.
  ParamStore s;
  s.add("x", {2, 3}, uniform_values(6, 31));
  s.add("w", {3, 3}, uniform_values(9, 32));
  s.add("c", {2, 3}, off_zero(6, 33));
  auto penalty = [&] {
    ad::Var x = s.get("x");
    ad::Var inner = ad::sum(ad::mul(ad::square(ad::softmax_rows(ad::matmul(x, s.get("w")))), s.get("c")));
    inner = ad::add(inner, ad::l2_norm_eps(ad::leaky_relu(ad::matmul(x, s.get("w")))));
    ad::Var dx = ad::grad(inner, x, /*create_graph=*/true);
    return ad::square(ad::add_scalar(ad::l2_norm_eps(dx), -1.0));
  };
  expect_fd(s, penalty);
}

TEST_CASE("backward contracts") {
  auto p = ad::parameter({2, 2}, {1, 2, 3, 4});
  auto q = ad::parameter({2, 2}, {1, 1, 1, 1});
  SUBCASE("non-scalar root") { CHECK_THROWS_AS(ad::grad(p, p), feds::InputError); }
  SUBCASE("unreachable leaf gets exact zeros") {
    auto g = ad::grad(ad::sum(p), q);
    CHECK(g.shape() == q.shape());
    for (double v : g.value()) CHECK(v == 0.0);
  }
  SUBCASE("without create_graph the gradient is a plain leaf") {
    auto g = ad::grad(ad::sum(ad::square(p)), p);
    CHECK(g.value() == std::vector<double>{2, 4, 6, 8});
    CHECK_FALSE(g.requires_grad());
  }
  SUBCASE("fan-out accumulates") {
    auto g = ad::grad(ad::sum(ad::add(ad::mul(p, p), p)), p);
    CHECK(g.value() == std::vector<double>{3, 5, 7, 9});
  }
  SUBCASE("NoGradGuard stops recording") {
    feds::ad::NoGradGuard guard;
    CHECK_FALSE(ad::grad_mode_enabled());
    CHECK_FALSE(ad::mul(p, q).requires_grad());
  }
  CHECK(ad::grad_mode_enabled());
}

TEST_CASE("numeric and shape errors") {
  CHECK_THROWS_AS(ad::constant({1, 1}, {std::numeric_limits<double>::infinity()}), feds::NumericError);
  CHECK_THROWS_AS(ad::reciprocal(ad::constant({1, 1}, {0.0})), feds::NumericError);
  CHECK_THROWS_AS(ad::sqrt(ad::constant({1, 1}, {-1.0})), feds::NumericError);
  CHECK_THROWS_AS(ad::add(ad::zeros({1, 2}), ad::zeros({2, 1})), feds::ShapeError);
  CHECK_THROWS_AS(ad::matmul(ad::zeros({2, 3}), ad::zeros({2, 3})), feds::ShapeError);
  CHECK_THROWS_AS(ad::constant({2, 2}, {1.0}), feds::ShapeError);
}
