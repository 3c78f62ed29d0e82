// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "p2be/numgraph/graph.hpp"

namespace p2be::training {

using numgraph::ParameterSet;

/// Velocity per parameter; empty until the first step.
struct SgdState {
  ParameterSet<float> velocity;
  friend bool operator==(const SgdState&, const SgdState&) = default;
};

/// v <- momentum * v + grad + weight_decay * param; param <- param - lr * v.
void sgd_momentum_step(ParameterSet<float>& params, const ParameterSet<float>& grads, SgdState& state,
                       double lr, double momentum, double weight_decay);

struct AdamWState {
  std::vector<float> first_moment;
  std::vector<float> second_moment;
  std::uint64_t step = 0;
  friend bool operator==(const AdamWState&, const AdamWState&) = default;
};

inline constexpr double kAdamEpsilon = 1e-8;

/// Decoupled weight decay (param *= 1 - lr * wd), then the bias-corrected
/// adaptive step param -= lr * m_hat / (sqrt(v_hat) + 1e-8).
void adamw_step(std::span<float> params, std::span<const float> grads, AdamWState& state, double lr,
                double beta1, double beta2, double weight_decay);

/// lr_end + (lr_start - lr_end) * (1 + cos(pi * step / total_steps)) / 2.
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_start, double lr_end);

}  // namespace p2be::training
