// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <doctest.h>

#include <cmath>
#include <random>

#include "p2be/error.hpp"
#include "p2be/numgraph/gradcheck.hpp"
#include "p2be/numgraph/graph.hpp"

using namespace p2be;
using namespace p2be::numgraph;

namespace {

template <class T>
BasicTensor<T> random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  BasicTensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = T(dist(rng));
  return t;
}

// Sum of outputs.
template <class T>
LossEval<T> sum_loss(const BasicTensor<T>& out) {
  double s = 0.0;
  for (T v : out.data()) s += double(v);
  return {s, BasicTensor<T>(out.shape(), T{1})};
}

// Mean squared distance to a fixed target, so gradients are not constant.
template <class T>
LossClosure<T> squared_loss(BasicTensor<T> target) {
  return [target](const BasicTensor<T>& out) {
    LossEval<T> e{0.0, BasicTensor<T>(out.shape())};
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = double(out[i]) - double(target[i]);
      e.value += 0.5 * d * d;
      e.upstream[i] = T(d);
    }
    return e;
  };
}

BasicGraph<double> toy_cnn() {
  BasicGraph<double> g({2, 5, 5});
  auto x = g.conv2d(g.input(), 3, 3, 1, "c1");
  x = g.relu(x);
  x = g.conv2d(x, 4, 3, 0, "c2");
  x = g.relu(x);
  x = g.global_avg_pool(x);
  g.dense(x, 3, "fc");
  g.initialize(7);
  return g;
}

}  // namespace

TEST_CASE("tensor validates shape and data length") {
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), ShapeError);
  Tensor t({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.all_finite());
  t[4] = std::nanf("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("identity graph returns its input") {
  Graph g({4});
  const Tensor x({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(g.forward(x) == x);
  const auto grads = g.backward(Tensor({2, 4}, 1.0f));
  for (float v : grads.input.data()) CHECK(v == 1.0f);
}

TEST_CASE("dense identity weights reproduce the input") {
  Graph g({3});
  g.dense(g.input(), 3, "fc");
  auto& w = g.parameters().at("fc.weight");
  for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 1.0f;
  const Tensor v({1, 3}, {0.5f, -2.0f, 7.0f});
  CHECK(std::ranges::equal(g.forward(v).data(), v.data()));
}

TEST_CASE("1x1 all-ones convolution sums channels") {
  Graph g({2, 3, 3});
  g.conv2d(g.input(), 1, 1, 0, "c");
  g.parameters().at("c.weight").fill(1.0f);
  const Tensor out = g.forward(Tensor({1, 2, 3, 3}, 0.5f));
  CHECK(out.shape() == Shape{1, 1, 3, 3});
  for (float v : out.data()) CHECK(v == 1.0f);
}

TEST_CASE("dense weight gradient of a sum is the outer product with the input") {
  Graph g({3});
  g.dense(g.input(), 2, "fc");
  g.initialize(3);
  const Tensor x({1, 3}, {1.0f, -2.0f, 0.25f});
  const Tensor y = g.forward(x);
  const auto grads = g.backward(Tensor(y.shape(), 1.0f));
  const Tensor& dw = grads.parameters.at("fc.weight");
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t i = 0; i < 3; ++i) CHECK(dw[o * 3 + i] == x[i]);
  for (float v : grads.parameters.at("fc.bias").data()) CHECK(v == 1.0f);
}

TEST_CASE("backward before forward is a state error") {
  Graph g({2});
  g.dense(g.input(), 2);
  CHECK_THROWS_AS(g.backward(Tensor({1, 2})), StateError);
}

TEST_CASE("shape errors name the node") {
  Graph g({3, 4, 4});
  try {
    g.conv2d(g.input(), 2, 7, 0, "too_big");
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("too_big") != std::string::npos);
  }
  g.dense(g.input(), 2, "fc");
  try {
    (void)g.evaluate(Tensor({1, 3, 4, 5}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("input") != std::string::npos);
  }
  Graph a({2}), b({3});
  auto x = a.dense(a.input(), 2);
  auto y = a.dense(a.input(), 3);
  CHECK_THROWS_AS(a.add(x, y, "mismatch"), ShapeError);
}

TEST_CASE("forward is bit-reproducible") {
  Graph g({3, 6, 6});
  auto x = g.conv2d(g.input(), 8, 3, 1);
  x = g.relu(x);
  x = g.global_avg_pool(x);
  g.dense(x, 4);
  g.initialize(11);
  const Tensor in = random_tensor<float>({5, 3, 6, 6}, 1);
  CHECK(g.forward(in) == g.forward(in));
  const auto g1 = g.backward(Tensor({5, 4}, 0.3f));
  const auto g2 = g.backward(Tensor({5, 4}, 0.3f));
  CHECK(g1.parameters == g2.parameters);
}

TEST_CASE("softmax rows are distributions") {
  Graph g({6});
  g.softmax(g.dense(g.input(), 5));
  g.initialize(2);
  const Tensor p = g.forward(random_tensor<float>({8, 6}, 4, 3.0));
  for (std::size_t r = 0; r < 8; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      const float v = p[r * 5 + c];
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("toy CNN parameter gradients match central differences") {
  auto g = toy_cnn();
  const auto input = random_tensor<double>({2, 2, 5, 5}, 5);
  const auto loss = squared_loss(random_tensor<double>({2, 3}, 6));
  for (const auto& e : std::vector<std::string>{"c1.weight", "c1.bias", "c2.weight", "c2.bias", "fc.weight",
                                                 "fc.bias", kInputGradient}) {
    CAPTURE(e);
    const auto report = finite_difference_check<double>(g, input, loss, e, 1e-3);
    CHECK(report.checked > 0);
    CHECK(report.max_relative_error < 1e-3);
  }
}

TEST_CASE("every operator passes the gradient check") {
  BasicGraph<double> g({2, 3, 3});
  auto c = g.conv2d(g.input(), 2, 2, 1, "c");
  auto r = g.relu(c);
  auto s = g.scale(r, -1.7);
  auto a = g.add(s, c);
  auto p = g.global_avg_pool(a);
  auto d = g.dense(p, 3, "fc");
  g.softmax(d);
  g.initialize(9);
  const auto input = random_tensor<double>({3, 2, 3, 3}, 8);
  const auto loss = squared_loss(random_tensor<double>({3, 3}, 10, 0.3));
  for (const char* name : {"c.weight", "c.bias", "fc.weight", "fc.bias", kInputGradient}) {
    CAPTURE(name);
    const auto report = finite_difference_check<double>(g, input, loss, name, 1e-4);
    CHECK(report.max_relative_error < 1e-3);
  }
}

TEST_CASE("float graph gradients agree with the double instantiation") {
  auto gd = toy_cnn();
  const Graph gf = gd.cast<float>();
  const auto xd = random_tensor<double>({2, 2, 5, 5}, 12);
  const Tensor xf = xd.cast<float>();
  const auto td = gd.evaluate(xd);
  const auto tf = gf.evaluate(xf);
  const auto grad_d = gd.gradients(td, BasicTensor<double>({2, 3}, 1.0));
  const auto grad_f = gf.gradients(tf, Tensor({2, 3}, 1.0f));
  auto it = grad_f.parameters.begin();
  for (const auto& e : grad_d.parameters) {
    for (std::size_t i = 0; i < e.value.size(); ++i)
      CHECK(std::abs(double(it->value[i]) - e.value[i]) <= 1e-4 * (1.0 + std::abs(e.value[i])));
    ++it;
  }
}

TEST_CASE("quadratic loss on a scalar parameter is checked almost exactly") {
  BasicGraph<double> g({1});
  g.dense(g.input(), 1, "fc");
  g.parameters().at("fc.weight")[0] = 0.7;
  const BasicTensor<double> x({1, 1}, 1.3);
  LossClosure<double> loss = [](const BasicTensor<double>& out) {
    return LossEval<double>{out[0] * out[0], BasicTensor<double>(out.shape(), 2.0 * out[0])};
  };
  const auto report = finite_difference_check<double>(g, x, loss, "fc.weight", 1e-4);
  CHECK(report.checked == 1);
  CHECK(report.max_relative_error < 1e-6);
}

TEST_CASE("relu kink coordinates are skipped") {
  // With zero weights the relu input is exactly 0 and any bias perturbation
  // crosses the kink.
  BasicGraph<double> g({2});
  g.relu(g.dense(g.input(), 1, "fc"));
  const BasicTensor<double> x({1, 2}, 1.0);
  const auto report = finite_difference_check<double>(g, x, LossClosure<double>(sum_loss<double>), "fc.bias", 1e-4);
  CHECK(report.checked == 0);
  CHECK(report.skipped == 1);
}

TEST_CASE("finite difference check rejects bad arguments") {
  BasicGraph<double> g({1});
  g.dense(g.input(), 1, "fc");
  const BasicTensor<double> x({1, 1}, 1.0);
  CHECK_THROWS_AS(finite_difference_check<double>(g, x, LossClosure<double>(sum_loss<double>), "fc.weight", 0.0),
                  std::invalid_argument);
  LossClosure<double> nan_loss = [](const BasicTensor<double>& out) {
    return LossEval<double>{std::nan(""), BasicTensor<double>(out.shape())};
  };
  CHECK_THROWS_AS(finite_difference_check<double>(g, x, nan_loss, "fc.weight", 1e-3), NumericError);
}
