// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "p2be/error.hpp"
#include "p2be/losses.hpp"

namespace p2be::attack {

using encoders::EncoderKind;
using numgraph::Tensor;

void AttackConfig::validate() const {
  if (steps < 1) throw ConfigError("attack.steps", "must be >= 1");
  if (!(anneal_rate > 1.0) || !std::isfinite(anneal_rate)) throw ConfigError("attack.anneal_rate", "must be > 1");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("attack.step_size", "must be > 0");
  if (!(epsilon >= 0.0) || epsilon > 1.0) throw ConfigError("attack.epsilon", "must be in [0, 1]");
  if (!(initial_temperature > 0.0) || !std::isfinite(initial_temperature)) {
    throw ConfigError("attack.initial_temperature", "must be > 0");
  }
  if (restarts < 1) throw ConfigError("attack.restarts", "must be >= 1");
}

int AttackConfig::budget_levels() const { return int(std::lround(epsilon * 255.0)); }

// ---------------------------------------------------------------------------

LevelScheme::LevelScheme(EncoderKind kind, const encoders::BinaryCodebook& codebook)
    : codebook_(&codebook), level_of_(encoders::kLevels) {
  switch (kind) {
    case EncoderKind::p2be:
      for (int x = 0; x < int(encoders::kLevels); ++x) {
        ranges_.push_back({x, x});
        level_of_[std::size_t(x)] = std::size_t(x);
      }
      break;
    case EncoderKind::one_hot:
    case EncoderKind::thermometer:
      for (std::size_t b = 0; b < codebook.dim(); ++b) ranges_.push_back(encoders::bucket_magnitudes(b, codebook.dim()));
      for (std::size_t x = 0; x < encoders::kLevels; ++x)
        level_of_[x] = encoders::one_hot_bucket(std::uint8_t(x), codebook.dim());
      break;
    case EncoderKind::rgb:
      throw ConfigError("encoder", "LS-PGA needs a binary encoder; rgb inputs have no discrete levels");
  }
}

std::size_t LevelScheme::level_of(std::uint8_t magnitude) const { return level_of_[magnitude]; }

std::span<const std::uint8_t> LevelScheme::code(std::size_t level) const {
  return codebook_->row(std::size_t(ranges_[level].lo));
}

LogitRelaxation::LogitRelaxation(const PixelImage& original, const LevelScheme& scheme, int budget_levels)
    : original_(original), scheme_(&scheme), levels_(scheme.levels()) {
  if (budget_levels < 0) throw std::invalid_argument("negative attack budget");
  u_.assign(pixels() * levels_, -std::numeric_limits<float>::infinity());
  mask_.assign(pixels() * levels_, 0);
  const auto px = original_.values();
  for (std::size_t p = 0; p < pixels(); ++p) {
    const int lo = int(px[p]) - budget_levels;
    const int hi = int(px[p]) + budget_levels;
    for (std::size_t l = 0; l < levels_; ++l) {
      const auto& r = scheme.magnitudes(l);
      if (!r.empty() && r.lo <= hi && r.hi >= lo) mask_[p * levels_ + l] = 1;
    }
  }
}

std::size_t LogitRelaxation::original_level(std::size_t pixel) const {
  return scheme_->level_of(original_.values()[pixel]);
}

void LogitRelaxation::initialize(std::mt19937_64& rng) {
  std::uniform_real_distribution<float> noise(0.0f, 0.1f);
  for (std::size_t p = 0; p < pixels(); ++p) {
    const std::size_t home = original_level(p);
    for (std::size_t l = 0; l < levels_; ++l) {
      if (!feasible(p, l)) continue;
      u_[p * levels_ + l] = l == home ? 1.0f : noise(rng);
    }
  }
}

PixelImage LogitRelaxation::harden() const {
  PixelImage out = original_;
  auto dst = out.values();
  for (std::size_t p = 0; p < pixels(); ++p) {
    std::size_t best = original_level(p);
    float best_u = u_[p * levels_ + best];
    for (std::size_t l = 0; l < levels_; ++l) {
      if (feasible(p, l) && u_[p * levels_ + l] > best_u) {
        best = l;
        best_u = u_[p * levels_ + l];
      }
    }
    const auto& r = scheme_->magnitudes(best);
    dst[p] = std::uint8_t(std::clamp(int(original_.values()[p]), r.lo, r.hi));
  }
  return out;
}

namespace {

// Softmax weights over feasible levels of one pixel; infeasible levels get 0.
void level_weights(const LogitRelaxation& rx, std::size_t pixel, double temperature,
                   std::vector<double>& w) {
  const auto u = rx.logits(pixel);
  w.assign(rx.levels(), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < rx.levels(); ++l)
    if (rx.feasible(pixel, l)) mx = std::max(mx, double(u[l]) / temperature);
  double total = 0.0;
  for (std::size_t l = 0; l < rx.levels(); ++l) {
    if (!rx.feasible(pixel, l)) continue;
    w[l] = std::exp(double(u[l]) / temperature - mx);
    total += w[l];
  }
  for (auto& v : w) v /= total;
}

void soft_encode_into(const LogitRelaxation& rx, double temperature, float* out) {
  const PixelImage& im = rx.original();
  const std::size_t plane = im.plane();
  const std::size_t dim = rx.scheme().dim();
  std::vector<double> w;
  std::vector<double> bits(dim);
  for (std::size_t p = 0; p < rx.pixels(); ++p) {
    level_weights(rx, p, temperature, w);
    std::fill(bits.begin(), bits.end(), 0.0);
    for (std::size_t l = 0; l < rx.levels(); ++l) {
      if (w[l] == 0.0) continue;
      const auto code = rx.scheme().code(l);
      for (std::size_t m = 0; m < dim; ++m) bits[m] += w[l] * code[m];
    }
    const std::size_t c = p / plane, i = p % plane;
    for (std::size_t m = 0; m < dim; ++m) out[(dim * c + m) * plane + i] = float(bits[m]);
  }
}

std::vector<double> per_sample_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const std::vector<double> probs = losses::softmax_rows(logits);
  const std::size_t k = logits.dim(1);
  std::vector<double> out(labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r)
    out[r] = -std::log(std::max(probs[r * k + std::size_t(labels[r])], losses::kProbabilityFloor));
  return out;
}

struct Run {
  std::vector<PixelImage> adversarial;
  std::vector<std::vector<double>> traces;
};

Run run_once(const AttackTarget& target, const LevelScheme& scheme, std::span<const PixelImage> images,
             std::span<const int> labels, const AttackConfig& config, std::mt19937_64& rng) {
  const std::size_t batch = images.size();
  std::vector<LogitRelaxation> rx;
  rx.reserve(batch);
  for (const auto& im : images) {
    rx.emplace_back(im, scheme, config.budget_levels());
    rx.back().initialize(rng);
  }
  const std::size_t dim = scheme.dim();
  const std::size_t plane = images.front().plane();
  Run run;
  run.traces.resize(batch);

  double temperature = config.initial_temperature;
  std::vector<double> w, dlds;
  for (int step = 0; step < config.steps; ++step) {
    Tensor soft({batch, 3 * dim, images.front().height(), images.front().width()});
    const std::size_t stride = soft.size() / batch;
    for (std::size_t b = 0; b < batch; ++b) soft_encode_into(rx[b], temperature, soft.data().data() + b * stride);

    const auto trace = target.network.evaluate(soft);
    const Tensor& logits = trace.values[target.network.output()];
    const auto per_sample = per_sample_cross_entropy(logits, labels);
    for (std::size_t b = 0; b < batch; ++b) run.traces[b].push_back(per_sample[b]);
    const auto ce = losses::cross_entropy_with_grad(logits, labels);
    const Tensor grad_bits = target.network.gradients(trace, ce.grad).input;

    for (std::size_t b = 0; b < batch; ++b) {
      const float* g = grad_bits.data().data() + b * stride;
      for (std::size_t p = 0; p < rx[b].pixels(); ++p) {
        const std::size_t c = p / plane, i = p % plane;
        level_weights(rx[b], p, temperature, w);
        dlds.assign(rx[b].levels(), 0.0);
        double mean = 0.0;
        for (std::size_t l = 0; l < rx[b].levels(); ++l) {
          if (!rx[b].feasible(p, l)) continue;
          const auto code = scheme.code(l);
          double acc = 0.0;
          for (std::size_t m = 0; m < dim; ++m)
            if (code[m]) acc += double(g[(dim * c + m) * plane + i]);
          dlds[l] = acc;
          mean += w[l] * acc;
        }
        auto u = rx[b].logits(p);
        for (std::size_t l = 0; l < rx[b].levels(); ++l) {
          if (!rx[b].feasible(p, l)) continue;
          const double dldu = w[l] * (dlds[l] - mean) / temperature;
          if (dldu > 0.0) u[l] += float(config.step_size);
          else if (dldu < 0.0) u[l] -= float(config.step_size);
        }
      }
    }
    temperature /= config.anneal_rate;
  }
  for (const auto& r : rx) run.adversarial.push_back(r.harden());
  return run;
}

}  // namespace

Tensor soft_encode(const LogitRelaxation& relaxation, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("soft_encode: temperature must be > 0");
  const PixelImage& im = relaxation.original();
  Tensor out({3 * relaxation.scheme().dim(), im.height(), im.width()});
  soft_encode_into(relaxation, temperature, out.data().data());
  return out;
}

std::vector<AttackResult> lspga_attack_batch(const AttackTarget& target, std::span<const PixelImage> images,
                                             std::span<const int> labels, const AttackConfig& config,
                                             std::uint64_t seed) {
  config.validate();
  if (images.size() != labels.size()) throw ShapeError("lspga: image and label counts differ");
  if (images.empty()) return {};
  const auto& in_shape = target.network.input_shape();
  if (in_shape.size() != 3 || in_shape[0] != 3 * target.codebook.dim()) {
    throw ShapeError("lspga: network input " + numgraph::shape_string(in_shape) +
                     " does not match a " + std::to_string(target.codebook.dim()) + "-bit encoder");
  }
  const LevelScheme scheme(target.encoder, target.codebook);
  std::mt19937_64 rng(seed);

  Run best = run_once(target, scheme, images, labels, config, rng);
  if (config.restarts > 1) {
    auto hard_loss = [&](const std::vector<PixelImage>& adv) {
      const Tensor x = encoders::embed_batch(adv, target.codebook);
      const auto trace = target.network.evaluate(x);
      return per_sample_cross_entropy(trace.values[target.network.output()], labels);
    };
    auto best_loss = hard_loss(best.adversarial);
    for (int r = 1; r < config.restarts; ++r) {
      Run next = run_once(target, scheme, images, labels, config, rng);
      const auto loss = hard_loss(next.adversarial);
      for (std::size_t b = 0; b < images.size(); ++b) {
        if (loss[b] > best_loss[b]) {
          best_loss[b] = loss[b];
          best.adversarial[b] = std::move(next.adversarial[b]);
          best.traces[b] = std::move(next.traces[b]);
        }
      }
    }
  }

  std::vector<AttackResult> out;
  out.reserve(images.size());
  for (std::size_t b = 0; b < images.size(); ++b)
    out.push_back({std::move(best.adversarial[b]), std::move(best.traces[b])});
  return out;
}

AttackResult lspga_attack(const AttackTarget& target, const PixelImage& image, int label,
                          const AttackConfig& config, std::uint64_t seed) {
  const int labels[] = {label};
  return std::move(lspga_attack_batch(target, std::span(&image, 1), labels, config, seed).front());
}

}  // namespace p2be::attack
