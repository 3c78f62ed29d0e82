// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "p2be/error.hpp"
#include "p2be/numgraph/graph.hpp"

namespace p2be::numgraph {

/// Loss value plus its gradient with respect to the graph output.
template <class T>
struct LossEval {
  double value = 0.0;
  BasicTensor<T> upstream;
};

template <class T>
using LossClosure = std::function<LossEval<T>(const BasicTensor<T>& output)>;

/// Pass as `parameter` to check the gradient with respect to the graph input.
inline constexpr const char* kInputGradient = "<input>";

struct GradCheckOptions {
  std::size_t max_coordinates = 64;  // sampled without replacement
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // relu kinks crossed by the perturbation
};

/// Compares backward() against central differences on sampled coordinates of
/// one parameter. A coordinate is skipped when the ±eps evaluations change
/// the sign pattern of any relu input (a kink lies inside the stencil).
template <class T>
GradCheckReport finite_difference_check(BasicGraph<T>& graph,
                                        const BasicTensor<T>& input,
                                        const LossClosure<T>& loss,
                                        const std::string& parameter, double eps,
                                        GradCheckOptions options = {}) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_difference_check: eps must be > 0");

  auto evaluate = [&](const BasicTensor<T>& x, std::vector<signed char>* signs) {
    Trace<T> trace = graph.evaluate(x);
    LossEval<T> l = loss(trace.values[graph.output()]);
    if (!std::isfinite(l.value)) throw NumericError("finite_difference_check: non-finite loss");
    if (signs) *signs = graph.relu_input_signs(trace);
    return l;
  };

  BasicTensor<T> x = input;
  const bool wrt_input = parameter == kInputGradient;
  BasicTensor<T>& target = wrt_input ? x : graph.parameters().at(parameter);

  graph.forward(x);
  LossEval<T> base = loss(graph.last_trace()->values[graph.output()]);
  if (!std::isfinite(base.value)) throw NumericError("finite_difference_check: non-finite loss");
  const Gradients<T> grads = graph.backward(base.upstream);
  const BasicTensor<T>& analytic = wrt_input ? grads.input : grads.parameters.at(parameter);
  const std::vector<signed char> base_signs = graph.relu_input_signs(*graph.last_trace());

  std::vector<std::size_t> coords(target.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (coords.size() > options.max_coordinates) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coordinates);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  for (std::size_t i : coords) {
    const T saved = target[i];
    std::vector<signed char> plus_signs, minus_signs;
    target[i] = T(double(saved) + eps);
    const double plus = evaluate(x, &plus_signs).value;
    target[i] = T(double(saved) - eps);
    const double minus = evaluate(x, &minus_signs).value;
    const double step = double(T(double(saved) + eps)) - double(T(double(saved) - eps));
    target[i] = saved;

    if (plus_signs != base_signs || minus_signs != base_signs) {
      ++report.skipped;
      continue;
    }
    const double numeric = (plus - minus) / step;
    const double a = double(analytic[i]);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / denom);
    ++report.checked;
  }
  return report;
}

}  // namespace p2be::numgraph
