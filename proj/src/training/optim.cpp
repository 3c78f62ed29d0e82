// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/training/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "p2be/error.hpp"

namespace p2be::training {

void sgd_momentum_step(ParameterSet<float>& params, const ParameterSet<float>& grads, SgdState& state,
                       double lr, double momentum, double weight_decay) {
  if (grads.size() != params.size()) throw ShapeError("sgd: gradient set does not match parameters");
  if (state.velocity.size() == 0) state.velocity = params.zeros_like();
  if (state.velocity.size() != params.size()) throw ShapeError("sgd: velocity does not match parameters");

  auto p = params.begin();
  auto g = grads.begin();
  auto v = state.velocity.begin();
  for (; p != params.end(); ++p, ++g, ++v) {
    if (p->name != g->name || p->value.shape() != g->value.shape() || v->value.shape() != p->value.shape()) {
      throw ShapeError("sgd: shape mismatch for '" + p->name + "'");
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double vel = momentum * double(v->value[i]) + double(g->value[i]) +
                         weight_decay * double(p->value[i]);
      v->value[i] = float(vel);
      p->value[i] = float(double(p->value[i]) - lr * vel);
    }
  }
}

void adamw_step(std::span<float> params, std::span<const float> grads, AdamWState& state, double lr,
                double beta1, double beta2, double weight_decay) {
  if (grads.size() != params.size()) throw ShapeError("adamw: gradient size does not match parameters");
  if (state.first_moment.empty() && state.step == 0) {
    state.first_moment.assign(params.size(), 0.0f);
    state.second_moment.assign(params.size(), 0.0f);
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ShapeError("adamw: moment buffers do not match parameters");
  }
  ++state.step;
  const double bias1 = 1.0 - std::pow(beta1, double(state.step));
  const double bias2 = 1.0 - std::pow(beta2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double p = double(params[i]) * (1.0 - lr * weight_decay);
    const double g = double(grads[i]);
    const double m = beta1 * double(state.first_moment[i]) + (1.0 - beta1) * g;
    const double v = beta2 * double(state.second_moment[i]) + (1.0 - beta2) * g * g;
    state.first_moment[i] = float(m);
    state.second_moment[i] = float(v);
    p -= lr * (m / bias1) / (std::sqrt(v / bias2) + kAdamEpsilon);
    params[i] = float(p);
  }
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_start, double lr_end) {
  if (total_steps == 0) return lr_start;
  if (step > total_steps) throw std::out_of_range("cosine_lr: step beyond schedule");
  const double t = double(step) / double(total_steps);
  return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace p2be::training
