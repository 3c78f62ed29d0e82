// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "p2be/encoders.hpp"
#include "p2be/numgraph/tensor.hpp"

namespace p2be::losses {

using numgraph::Tensor;

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kNormEpsilon = 1e-12;

/// Consistency coefficient alpha and smoothness coefficient lambda.
struct LossWeights {
  double alpha = 12.0;
  double lambda = 1.0;

  void validate() const;
};

/// Mean over the batch of -log softmax(logits)[label].
double cross_entropy(const Tensor& logits, std::span<const int> labels);

struct ValueAndGrad {
  double value = 0.0;
  Tensor grad;  // same shape as the differentiated input
};

/// Cross-entropy and its gradient w.r.t. the logits.
ValueAndGrad cross_entropy_with_grad(const Tensor& logits, std::span<const int> labels);

/// Row-wise softmax in double precision, [B, K] -> B*K values.
std::vector<double> softmax_rows(const Tensor& logits);

/// sum p_i log(p_i / q_i) with 0 log 0 = 0 and q floored at 1e-12.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// (KL(p||V) + KL(p1||V) + KL(p2||V)) / 3 with V the mean distribution.
double augmix_jsd(std::span<const double> p, std::span<const double> p1,
                  std::span<const double> p2);

/// (KL(p||V) + KL(q||V)) / 2 with V = (p + q) / 2.
double contrain_jsd(std::span<const double> p, std::span<const double> p_adv);

struct JsdResult {
  double value = 0.0;
  std::vector<Tensor> grads;  // one per logits argument
};

/// Batch-mean Jensen-Shannon divergence between the softmax predictions of
/// equally shaped logits tensors, with gradients w.r.t. each of them.
/// Three arguments give the augmix loss, two give the ConTrain loss.
JsdResult jsd_from_logits(std::span<const Tensor* const> logits);

struct SmoothnessResult {
  double value = 0.0;
  Tensor grad;  // [256, dim]
};

/// sum_{k=0..254} 1 - <w_k, w_{k+1}> / (|w_k| |w_{k+1}| + eps) and its exact
/// gradient w.r.t. every table entry.
SmoothnessResult smoothness_loss(const encoders::EmbeddingTable& table);

enum class Objective { clean_consistency, adversarial_consistency };

struct LossParts {
  double cross_entropy = 0.0;
  double consistency = 0.0;  // augmix JSD or ConTrain JSD depending on objective
  double smoothness = 0.0;
};

struct LossBreakdown {
  LossParts parts;
  double total = 0.0;
};

/// ce + alpha * consistency + lambda * smoothness. Both objectives share the
/// form; `objective` selects which consistency term the caller supplied.
LossBreakdown total_loss(Objective objective, const LossParts& parts, const LossWeights& weights);

std::string_view to_string(Objective objective);

}  // namespace p2be::losses
