// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pixel-to-binary encodings. Every encoder is expressed as a 256-row
// codebook (one code per pixel magnitude), so embedding an image is the same
// table lookup for one-hot, thermometer and learned codes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "p2be/image.hpp"
#include "p2be/numgraph/tensor.hpp"

namespace p2be::encoders {

inline constexpr std::size_t kLevels = 256;

enum class EncoderKind { rgb, one_hot, thermometer, p2be };

std::string_view to_string(EncoderKind kind);
/// Accepts "rgb", "one-hot", "thermometer", "p2be"; throws ConfigError.
EncoderKind parse_encoder(std::string_view name);

using Code = std::vector<std::uint8_t>;

/// 0-based bucket of `x` among `dim` equal-width buckets; 255 lands in the top one.
std::size_t one_hot_bucket(std::uint8_t x, std::size_t dim);

struct MagnitudeRange {
  int lo = 0;  // inclusive
  int hi = -1; // inclusive; empty when hi < lo
  bool empty() const noexcept { return hi < lo; }
};
/// Pixel magnitudes whose bucket is `bucket`.
MagnitudeRange bucket_magnitudes(std::size_t bucket, std::size_t dim);

Code encode_one_hot(std::uint8_t x, std::size_t dim);
Code encode_thermometer(std::uint8_t x, std::size_t dim);

/// Learnable real table w, 256 x dim, one row per magnitude.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::vector<float> weights);

  /// w ~ N(0, 1).
  static EmbeddingTable random_normal(std::size_t dim, std::mt19937_64& rng);

  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t k) const { return {weights_.data() + k * dim_, dim_}; }
  float at(std::size_t k, std::size_t m) const { return weights_[k * dim_ + m]; }
  std::span<const float> weights() const noexcept { return weights_; }
  /// Mutable access for optimizers; callers keep entries finite.
  std::span<float> mutable_weights() noexcept { return weights_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t dim_;
  std::vector<float> weights_;
};

/// Binary table e, 256 x dim, entries exactly 0 or 1.
class BinaryCodebook {
 public:
  BinaryCodebook(std::size_t dim, std::vector<std::uint8_t> bits);

  static BinaryCodebook one_hot(std::size_t dim);
  static BinaryCodebook thermometer(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::span<const std::uint8_t> row(std::size_t k) const { return {bits_.data() + k * dim_, dim_}; }
  std::uint8_t at(std::size_t k, std::size_t m) const { return bits_[k * dim_ + m]; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  /// Rows packed 8 bits per byte, MSB first, each row padded to a byte boundary.
  std::vector<std::uint8_t> packed() const;

  friend bool operator==(const BinaryCodebook&, const BinaryCodebook&) = default;

 private:
  std::size_t dim_;
  std::vector<std::uint8_t> bits_;
};

/// e = (sign(w) + 1) / 2 with sign(0) = +1. Throws NumericError on non-finite w.
BinaryCodebook binarize_table(const EmbeddingTable& table);

/// Bit planes [3*dim, H, W]; channel dim*c + m holds bit m of color channel c.
numgraph::Tensor embed_image(const PixelImage& image, const BinaryCodebook& codebook);
/// Batched bit planes [B, 3*dim, H, W]. Images must share a size.
numgraph::Tensor embed_batch(std::span<const PixelImage> images, const BinaryCodebook& codebook);
/// Plain x/255 input [B, 3, H, W] for the rgb baseline.
numgraph::Tensor normalize_rgb(std::span<const PixelImage> images);

/// Piecewise-quadratic surrogate of sign; continuous antiderivative of
/// approx_sign_derivative with value -1 at -1.
double approx_sign(double x);
/// 2 + 2x on [-1, 0), 2 - 2x on [0, 1), 0 elsewhere.
double approx_sign_derivative(double x);

/// Surrogate gradient of the loss w.r.t. the table, shape [256, dim]:
/// dW[x][m] += 0.5 * upstream[dim*c + m, h, w] * approx_sign_derivative(w[x][m])
/// for every pixel occurrence x = image[c, h, w].
numgraph::Tensor p2be_backward(const PixelImage& image, const numgraph::Tensor& upstream,
                               const EmbeddingTable& table);
/// Batched form; upstream is [B, 3*dim, H, W]. Accumulates in image order.
numgraph::Tensor p2be_backward_batch(std::span<const PixelImage> images,
                                     const numgraph::Tensor& upstream,
                                     const EmbeddingTable& table);

struct SimilarityMatrix {
  std::size_t size = kLevels;
  std::vector<double> values;           // row-major size x size
  std::vector<std::size_t> zero_rows;   // rows whose code has no ones
  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

/// Pairwise cosine similarity of codebook rows. Rows with zero norm are
/// filled with 0 (including the diagonal) and reported in `zero_rows`.
SimilarityMatrix cosine_similarity_matrix(const BinaryCodebook& codebook);

/// `magnitude,b0,...,b{dim-1}` with a header row.
void write_codebook_csv(std::ostream& out, const BinaryCodebook& codebook);
/// Header `magnitude,s0..s255`; one row per magnitude.
void write_similarity_csv(std::ostream& out, const SimilarityMatrix& matrix);
/// 8-bit heatmap, gray = round(255 * cos).
void write_similarity_pgm(std::ostream& out, const SimilarityMatrix& matrix);

}  // namespace p2be::encoders
