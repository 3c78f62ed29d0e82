// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "p2be/attack.hpp"
#include "p2be/encoders.hpp"
#include "p2be/numgraph/graph.hpp"

namespace p2be::training {

/// conv(in -> 16, 3x3) -> relu -> conv(16 -> 32, 3x3) -> relu -> global
/// average pool -> dense(32 -> classes). Convolutions keep the spatial size.
numgraph::Graph build_toy_network(std::size_t in_channels, std::size_t height, std::size_t width,
                                  std::size_t classes);

/// An input encoder in front of the toy network.
class Classifier {
 public:
  /// Fresh model; the p2be table is drawn from N(0, 1).
  static Classifier create(encoders::EncoderKind encoder, std::size_t dim, std::size_t classes,
                           std::size_t height, std::size_t width, std::mt19937_64& rng);
  /// Rebuilds a model from stored parts; `table` is required iff encoder is p2be.
  static Classifier restore(encoders::EncoderKind encoder, std::size_t dim, std::size_t classes,
                            std::size_t height, std::size_t width, numgraph::ParameterSet<float> parameters,
                            std::optional<encoders::EmbeddingTable> table);

  encoders::EncoderKind encoder() const noexcept { return encoder_; }
  /// Bits per color channel; 1 for rgb.
  std::size_t dim() const noexcept { return dim_; }
  std::size_t classes() const noexcept { return classes_; }

  numgraph::Graph& network() noexcept { return network_; }
  const numgraph::Graph& network() const noexcept { return network_; }

  bool has_table() const noexcept { return table_.has_value(); }
  const encoders::EmbeddingTable& table() const { return table_.value(); }
  encoders::EmbeddingTable& table() { return table_.value(); }
  /// Replaces the table (dimension must match) and rebinarizes.
  void set_table(encoders::EmbeddingTable table);

  /// Codebook for binary encoders; throws for rgb.
  const encoders::BinaryCodebook& codebook() const;
  /// Rederives the p2be codebook from the current table.
  void refresh_codebook();

  numgraph::Tensor encode(std::span<const PixelImage> images) const;
  numgraph::Tensor logits(std::span<const PixelImage> images) const;
  std::vector<int> predict(std::span<const PixelImage> images) const;

  attack::AttackTarget attack_target() const;

 private:
  Classifier(encoders::EncoderKind encoder, std::size_t dim, std::size_t classes, numgraph::Graph network);

  encoders::EncoderKind encoder_;
  std::size_t dim_;
  std::size_t classes_;
  numgraph::Graph network_;
  std::optional<encoders::EmbeddingTable> table_;
  std::optional<encoders::BinaryCodebook> codebook_;
};

}  // namespace p2be::training
