// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/training/model.hpp"

#include "p2be/error.hpp"

namespace p2be::training {

using encoders::EncoderKind;
using numgraph::Tensor;

numgraph::Graph build_toy_network(std::size_t in_channels, std::size_t height, std::size_t width,
                                  std::size_t classes) {
  numgraph::Graph g({in_channels, height, width});
  auto x = g.conv2d(g.input(), 16, 3, 1, "conv1");
  x = g.relu(x, "relu1");
  x = g.conv2d(x, 32, 3, 1, "conv2");
  x = g.relu(x, "relu2");
  x = g.global_avg_pool(x, "pool");
  g.dense(x, classes, "fc");
  return g;
}

Classifier::Classifier(EncoderKind encoder, std::size_t dim, std::size_t classes, numgraph::Graph network)
    : encoder_(encoder), dim_(dim), classes_(classes), network_(std::move(network)) {}

Classifier Classifier::create(EncoderKind encoder, std::size_t dim, std::size_t classes, std::size_t height,
                              std::size_t width, std::mt19937_64& rng) {
  if (encoder == EncoderKind::rgb) dim = 1;
  if (dim == 0) throw ConfigError("embedding_dim", "must be >= 1");
  Classifier model(encoder, dim, classes, build_toy_network(3 * dim, height, width, classes));
  switch (encoder) {
    case EncoderKind::rgb:
      break;
    case EncoderKind::one_hot:
      model.codebook_ = encoders::BinaryCodebook::one_hot(dim);
      break;
    case EncoderKind::thermometer:
      model.codebook_ = encoders::BinaryCodebook::thermometer(dim);
      break;
    case EncoderKind::p2be:
      model.table_ = encoders::EmbeddingTable::random_normal(dim, rng);
      model.refresh_codebook();
      break;
  }
  model.network_.initialize(rng());
  return model;
}

Classifier Classifier::restore(EncoderKind encoder, std::size_t dim, std::size_t classes, std::size_t height,
                               std::size_t width, numgraph::ParameterSet<float> parameters,
                               std::optional<encoders::EmbeddingTable> table) {
  if (encoder == EncoderKind::rgb) dim = 1;
  if (dim == 0) throw ConfigError("embedding_dim", "must be >= 1");
  if (table.has_value() != (encoder == EncoderKind::p2be)) {
    throw FormatError("an embedding table is present iff the encoder is p2be");
  }
  Classifier model(encoder, dim, classes, build_toy_network(3 * dim, height, width, classes));
  auto& expected = model.network_.parameters();
  if (parameters.size() != expected.size()) throw ShapeError("network parameter count mismatch");
  auto it = parameters.begin();
  for (const auto& e : expected) {
    if (it->name != e.name || it->value.shape() != e.value.shape()) {
      throw ShapeError("network parameter '" + it->name + "' does not match '" + e.name + "' " +
                       numgraph::shape_string(e.value.shape()));
    }
    ++it;
  }
  expected = std::move(parameters);
  switch (encoder) {
    case EncoderKind::rgb: break;
    case EncoderKind::one_hot: model.codebook_ = encoders::BinaryCodebook::one_hot(dim); break;
    case EncoderKind::thermometer: model.codebook_ = encoders::BinaryCodebook::thermometer(dim); break;
    case EncoderKind::p2be: model.set_table(std::move(*table)); break;
  }
  return model;
}

void Classifier::set_table(encoders::EmbeddingTable table) {
  if (encoder_ != EncoderKind::p2be) throw ConfigError("encoder", "only p2be models carry an embedding table");
  if (table.dim() != dim_) {
    throw ShapeError("embedding table has dimension " + std::to_string(table.dim()) + ", model expects " +
                     std::to_string(dim_));
  }
  table_ = std::move(table);
  refresh_codebook();
}

const encoders::BinaryCodebook& Classifier::codebook() const {
  if (!codebook_) throw ConfigError("encoder", "the rgb encoder has no codebook");
  return *codebook_;
}

void Classifier::refresh_codebook() {
  if (table_) codebook_ = encoders::binarize_table(*table_);
}

Tensor Classifier::encode(std::span<const PixelImage> images) const {
  if (encoder_ == EncoderKind::rgb) return encoders::normalize_rgb(images);
  return encoders::embed_batch(images, *codebook_);
}

Tensor Classifier::logits(std::span<const PixelImage> images) const {
  auto trace = network_.evaluate(encode(images));
  return std::move(trace.values[network_.output()]);
}

std::vector<int> Classifier::predict(std::span<const PixelImage> images) const {
  const Tensor z = logits(images);
  const std::size_t k = z.dim(1);
  std::vector<int> out(z.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (z[r * k + c] > z[r * k + best]) best = c;
    out[r] = int(best);
  }
  return out;
}

attack::AttackTarget Classifier::attack_target() const {
  return {network_, encoder_, codebook()};
}

}  // namespace p2be::training
