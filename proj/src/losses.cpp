// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "p2be/error.hpp"

namespace p2be::losses {

void LossWeights::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0) throw ConfigError("alpha", "must be finite and >= 0");
  if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("lambda", "must be finite and >= 0");
}

namespace {

void check_logits(const Tensor& logits) {
  if (logits.rank() != 2) {
    throw ShapeError("expected logits [batch, classes], got " + numgraph::shape_string(logits.shape()));
  }
}

double log_floor(double p) { return std::log(std::max(p, kProbabilityFloor)); }

void check_distribution(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative or NaN probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-5) {
    throw std::invalid_argument(std::string(what) + ": probabilities sum to " + std::to_string(total));
  }
}

}  // namespace

std::vector<double> softmax_rows(const Tensor& logits) {
  check_logits(logits);
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  std::vector<double> out(rows * k);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* z = logits.data().data() + r * k;
    const double mx = *std::max_element(z, z + k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += out[r * k + i] = std::exp(double(z[i]) - mx);
    for (std::size_t i = 0; i < k; ++i) out[r * k + i] /= total;
  }
  return out;
}

ValueAndGrad cross_entropy_with_grad(const Tensor& logits, std::span<const int> labels) {
  check_logits(logits);
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  if (labels.size() != rows) throw ShapeError("cross_entropy: label count differs from batch size");
  ValueAndGrad out{0.0, Tensor(logits.shape())};
  const std::vector<double> probs = softmax_rows(logits);
  for (std::size_t r = 0; r < rows; ++r) {
    const int label = labels[r];
    if (label < 0 || std::size_t(label) >= k) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                              std::to_string(k) + ")");
    }
    // log-sum-exp form keeps large margins exact
    const float* z = logits.data().data() + r * k;
    const double mx = *std::max_element(z, z + k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += std::exp(double(z[i]) - mx);
    out.value += (mx + std::log(total)) - double(z[label]);
    for (std::size_t i = 0; i < k; ++i) {
      const double target = std::size_t(label) == i ? 1.0 : 0.0;
      out.grad[r * k + i] = float((probs[r * k + i] - target) / double(rows));
    }
  }
  out.value /= double(rows);
  return out;
}

double cross_entropy(const Tensor& logits, std::span<const int> labels) {
  return cross_entropy_with_grad(logits, labels).value;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw ShapeError("kl_divergence: size mismatch");
  check_distribution(p, "kl_divergence p");
  check_distribution(q, "kl_divergence q");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    total += p[i] * (std::log(p[i]) - log_floor(q[i]));
  }
  return std::max(total, 0.0);
}

namespace {

double jsd(std::span<const std::span<const double>> dists) {
  const std::size_t k = dists.front().size();
  std::vector<double> mix(k, 0.0);
  for (auto d : dists) {
    if (d.size() != k) throw ShapeError("jsd: distributions differ in length");
    for (std::size_t i = 0; i < k; ++i) mix[i] += d[i] / double(dists.size());
  }
  double total = 0.0;
  for (auto d : dists) total += kl_divergence(d, mix);
  return total / double(dists.size());
}

}  // namespace

double augmix_jsd(std::span<const double> p, std::span<const double> p1, std::span<const double> p2) {
  const std::span<const double> d[] = {p, p1, p2};
  return jsd(d);
}

double contrain_jsd(std::span<const double> p, std::span<const double> p_adv) {
  const std::span<const double> d[] = {p, p_adv};
  return jsd(d);
}

JsdResult jsd_from_logits(std::span<const Tensor* const> logits) {
  if (logits.size() < 2) throw std::invalid_argument("jsd_from_logits: need at least two inputs");
  for (const Tensor* t : logits) {
    check_logits(*t);
    if (t->shape() != logits.front()->shape()) throw ShapeError("jsd_from_logits: shape mismatch");
  }
  const std::size_t n = logits.size();
  const std::size_t rows = logits.front()->dim(0), k = logits.front()->dim(1);
  std::vector<std::vector<double>> probs;
  for (const Tensor* t : logits) probs.push_back(softmax_rows(*t));

  JsdResult out;
  for (std::size_t i = 0; i < n; ++i) out.grads.emplace_back(logits.front()->shape());

  std::vector<double> log_mix(k), g(k);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += probs[i][r * k + c];
      log_mix[c] = log_floor(m / double(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = probs[i].data() + r * k;
      double kl = 0.0, dot = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double lp = log_floor(p[c]);
        if (p[c] > 0.0) kl += p[c] * (lp - log_mix[c]);
        // d/dp of the mean KL; the mixture's own derivative sums to a constant
        g[c] = (lp - log_mix[c]) / (double(n) * double(rows));
        dot += p[c] * g[c];
      }
      out.value += kl / double(n);
      for (std::size_t c = 0; c < k; ++c) out.grads[i][r * k + c] = float(p[c] * (g[c] - dot));
    }
  }
  out.value = std::max(out.value / double(rows), 0.0);
  return out;
}

SmoothnessResult smoothness_loss(const encoders::EmbeddingTable& table) {
  const std::size_t dim = table.dim();
  const std::size_t levels = encoders::kLevels;
  std::vector<double> grad(levels * dim, 0.0);
  std::vector<double> norms(levels, 0.0);
  for (std::size_t k = 0; k < levels; ++k) {
    double s = 0.0;
    for (float v : table.row(k)) s += double(v) * double(v);
    norms[k] = std::sqrt(s);
  }

  SmoothnessResult out;
  for (std::size_t k = 0; k + 1 < levels; ++k) {
    const auto u = table.row(k);
    const auto v = table.row(k + 1);
    const double a = norms[k], b = norms[k + 1];
    double dot = 0.0;
    for (std::size_t m = 0; m < dim; ++m) dot += double(u[m]) * double(v[m]);
    const double denom = a * b + kNormEpsilon;
    out.value += 1.0 - dot / denom;

    // d(dot/denom)/du = v/denom - dot * b * (u/a) / denom^2, and symmetrically for v.
    const double cu = a > 0.0 ? dot * b / (a * denom * denom) : 0.0;
    const double cv = b > 0.0 ? dot * a / (b * denom * denom) : 0.0;
    for (std::size_t m = 0; m < dim; ++m) {
      grad[k * dim + m] -= double(v[m]) / denom - cu * double(u[m]);
      grad[(k + 1) * dim + m] -= double(u[m]) / denom - cv * double(v[m]);
    }
  }
  out.grad = Tensor({levels, dim});
  for (std::size_t i = 0; i < grad.size(); ++i) out.grad[i] = float(grad[i]);
  return out;
}

LossBreakdown total_loss(Objective, const LossParts& parts, const LossWeights& weights) {
  weights.validate();
  LossBreakdown out{parts, 0.0};
  out.total = parts.cross_entropy + weights.alpha * parts.consistency + weights.lambda * parts.smoothness;
  return out;
}

std::string_view to_string(Objective objective) {
  return objective == Objective::clean_consistency ? "clean-consistency" : "adversarial-consistency";
}

}  // namespace p2be::losses
