// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0
//
// LS-PGA: logit-space projected gradient ascent for networks that consume
// discretized inputs. Each pixel gets a vector of logits over the discrete
// levels reachable within the budget; a temperature softmax over those
// logits yields a soft code that the network can differentiate through.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "p2be/encoders.hpp"
#include "p2be/image.hpp"
#include "p2be/numgraph/graph.hpp"

namespace p2be::attack {

struct AttackConfig {
  int steps = 7;
  double anneal_rate = 1.2;        // temperature divided by this every step
  double step_size = 1.0;          // signed-gradient step on the logits
  double epsilon = 8.0 / 255.0;    // budget in [0,1] pixel units
  double initial_temperature = 1.0;
  int restarts = 1;

  void validate() const;
  /// Largest allowed per-pixel deviation in integer levels.
  int budget_levels() const;
};

/// Discrete levels an encoder distinguishes: every magnitude for p2be, one
/// bucket per bit for one-hot and thermometer.
class LevelScheme {
 public:
  LevelScheme(encoders::EncoderKind kind, const encoders::BinaryCodebook& codebook);

  std::size_t levels() const noexcept { return ranges_.size(); }
  std::size_t dim() const noexcept { return codebook_->dim(); }
  std::size_t level_of(std::uint8_t magnitude) const;
  /// Magnitudes represented by a level; empty for unused buckets.
  const encoders::MagnitudeRange& magnitudes(std::size_t level) const { return ranges_[level]; }
  std::span<const std::uint8_t> code(std::size_t level) const;

 private:
  const encoders::BinaryCodebook* codebook_;
  std::vector<encoders::MagnitudeRange> ranges_;
  std::vector<std::size_t> level_of_;
};

/// Per-pixel logits over levels, shape [3, H, W, L]. Levels outside the
/// budget hold -inf and can never be selected.
class LogitRelaxation {
 public:
  LogitRelaxation(const PixelImage& original, const LevelScheme& scheme, int budget_levels);

  std::size_t pixels() const noexcept { return original_.size(); }
  std::size_t levels() const noexcept { return levels_; }
  const PixelImage& original() const noexcept { return original_; }
  const LevelScheme& scheme() const noexcept { return *scheme_; }

  std::span<float> logits(std::size_t pixel) { return {u_.data() + pixel * levels_, levels_}; }
  std::span<const float> logits(std::size_t pixel) const { return {u_.data() + pixel * levels_, levels_}; }
  bool feasible(std::size_t pixel, std::size_t level) const { return mask_[pixel * levels_ + level] != 0; }
  std::size_t original_level(std::size_t pixel) const;

  /// u = 1 on the original level, Uniform(0, 0.1) on other feasible levels.
  void initialize(std::mt19937_64& rng);

  /// Argmax level per pixel, mapped back to the magnitude of that level
  /// closest to the original pixel.
  PixelImage harden() const;

 private:
  PixelImage original_;
  const LevelScheme* scheme_;
  std::size_t levels_;
  std::vector<float> u_;
  std::vector<std::uint8_t> mask_;
};

/// Soft bit planes [3*dim, H, W]: per pixel, softmax(u / T) over feasible
/// levels weights the level codes.
numgraph::Tensor soft_encode(const LogitRelaxation& relaxation, double temperature);

/// What the attack needs from a trained model. The network is only read.
struct AttackTarget {
  const numgraph::Graph& network;
  encoders::EncoderKind encoder;
  const encoders::BinaryCodebook& codebook;
};

struct AttackResult {
  PixelImage adversarial;
  std::vector<double> loss_trace;  // relaxed cross-entropy before each step
};

std::vector<AttackResult> lspga_attack_batch(const AttackTarget& target,
                                             std::span<const PixelImage> images,
                                             std::span<const int> labels,
                                             const AttackConfig& config, std::uint64_t seed);

AttackResult lspga_attack(const AttackTarget& target, const PixelImage& image, int label,
                          const AttackConfig& config, std::uint64_t seed);

}  // namespace p2be::attack
