// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/encoders.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <ostream>
#include <string>

#include "p2be/error.hpp"
#include "p2be/log.hpp"

namespace p2be::encoders {

using numgraph::Tensor;

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::rgb: return "rgb";
    case EncoderKind::one_hot: return "one-hot";
    case EncoderKind::thermometer: return "thermometer";
    case EncoderKind::p2be: return "p2be";
  }
  return "?";
}

EncoderKind parse_encoder(std::string_view name) {
  for (auto kind : {EncoderKind::rgb, EncoderKind::one_hot, EncoderKind::thermometer,
                    EncoderKind::p2be}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("encoder", "unknown encoder '" + std::string(name) +
                                   "' (expected rgb, one-hot, thermometer, p2be)");
}

std::size_t one_hot_bucket(std::uint8_t x, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("encoding dimension must be >= 1");
  // Bucket i (0-based) covers i/dim <= x/255 < (i+1)/dim; 255 joins the top bucket.
  return std::min<std::size_t>(std::size_t(x) * dim / 255, dim - 1);
}

MagnitudeRange bucket_magnitudes(std::size_t bucket, std::size_t dim) {
  MagnitudeRange range;
  for (int x = 0; x < int(kLevels); ++x) {
    if (one_hot_bucket(std::uint8_t(x), dim) != bucket) continue;
    if (range.empty()) range.lo = x;
    range.hi = x;
  }
  return range;
}

Code encode_one_hot(std::uint8_t x, std::size_t dim) {
  Code code(dim, 0);
  code[one_hot_bucket(x, dim)] = 1;
  return code;
}

Code encode_thermometer(std::uint8_t x, std::size_t dim) {
  Code code(dim, 0);
  for (std::size_t i = one_hot_bucket(x, dim); i < dim; ++i) code[i] = 1;
  return code;
}

// ---------------------------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<float> weights)
    : dim_(dim), weights_(std::move(weights)) {
  if (dim_ == 0) throw ShapeError("embedding dimension must be >= 1");
  if (weights_.size() != kLevels * dim_) {
    throw ShapeError("embedding table needs 256 x " + std::to_string(dim_) + " entries, got " +
                     std::to_string(weights_.size()));
  }
  for (float v : weights_)
    if (!std::isfinite(v)) throw NumericError("embedding table has a non-finite entry");
}

EmbeddingTable EmbeddingTable::random_normal(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<float> w(kLevels * dim);
  for (auto& v : w) v = float(dist(rng));
  return EmbeddingTable(dim, std::move(w));
}

BinaryCodebook::BinaryCodebook(std::size_t dim, std::vector<std::uint8_t> bits)
    : dim_(dim), bits_(std::move(bits)) {
  if (dim_ == 0) throw ShapeError("codebook dimension must be >= 1");
  if (bits_.size() != kLevels * dim_) throw ShapeError("codebook needs 256 rows");
  for (auto b : bits_)
    if (b > 1) throw std::invalid_argument("codebook entries must be 0 or 1");
}

BinaryCodebook BinaryCodebook::one_hot(std::size_t dim) {
  std::vector<std::uint8_t> bits;
  bits.reserve(kLevels * dim);
  for (std::size_t x = 0; x < kLevels; ++x) {
    const Code code = encode_one_hot(std::uint8_t(x), dim);
    bits.insert(bits.end(), code.begin(), code.end());
  }
  return BinaryCodebook(dim, std::move(bits));
}

BinaryCodebook BinaryCodebook::thermometer(std::size_t dim) {
  std::vector<std::uint8_t> bits;
  bits.reserve(kLevels * dim);
  for (std::size_t x = 0; x < kLevels; ++x) {
    const Code code = encode_thermometer(std::uint8_t(x), dim);
    bits.insert(bits.end(), code.begin(), code.end());
  }
  return BinaryCodebook(dim, std::move(bits));
}

std::vector<std::uint8_t> BinaryCodebook::packed() const {
  const std::size_t row_bytes = (dim_ + 7) / 8;
  std::vector<std::uint8_t> out(kLevels * row_bytes, 0);
  for (std::size_t k = 0; k < kLevels; ++k)
    for (std::size_t m = 0; m < dim_; ++m)
      if (at(k, m)) out[k * row_bytes + m / 8] |= std::uint8_t(0x80u >> (m % 8));
  return out;
}

BinaryCodebook binarize_table(const EmbeddingTable& table) {
  std::vector<std::uint8_t> bits(table.weights().size());
  const auto w = table.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) throw NumericError("binarize_table: non-finite weight");
    bits[i] = w[i] >= 0.0f ? 1 : 0;
  }
  return BinaryCodebook(table.dim(), std::move(bits));
}

// ---------------------------------------------------------------------------

namespace {

void embed_into(const PixelImage& image, const BinaryCodebook& codebook, float* out) {
  const std::size_t dim = codebook.dim();
  const std::size_t plane = image.plane();
  for (std::size_t c = 0; c < PixelImage::kChannels; ++c) {
    const std::uint8_t* px = image.values().data() + c * plane;
    for (std::size_t m = 0; m < dim; ++m) {
      float* dst = out + (dim * c + m) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = float(codebook.at(px[i], m));
    }
  }
}

void check_same_size(std::span<const PixelImage> images) {
  if (images.empty()) throw ShapeError("empty image batch");
  for (const auto& im : images) {
    if (im.height() != images.front().height() || im.width() != images.front().width()) {
      throw ShapeError("images in a batch must share a size");
    }
  }
}

}  // namespace

Tensor embed_image(const PixelImage& image, const BinaryCodebook& codebook) {
  Tensor out({PixelImage::kChannels * codebook.dim(), image.height(), image.width()});
  embed_into(image, codebook, out.data().data());
  return out;
}

Tensor embed_batch(std::span<const PixelImage> images, const BinaryCodebook& codebook) {
  check_same_size(images);
  const auto& first = images.front();
  Tensor out({images.size(), PixelImage::kChannels * codebook.dim(), first.height(), first.width()});
  const std::size_t stride = out.size() / images.size();
  for (std::size_t b = 0; b < images.size(); ++b)
    embed_into(images[b], codebook, out.data().data() + b * stride);
  return out;
}

Tensor normalize_rgb(std::span<const PixelImage> images) {
  check_same_size(images);
  const auto& first = images.front();
  Tensor out({images.size(), PixelImage::kChannels, first.height(), first.width()});
  std::size_t i = 0;
  for (const auto& im : images)
    for (auto v : im.values()) out[i++] = float(v) / 255.0f;
  return out;
}

// ---------------------------------------------------------------------------

double approx_sign(double x) {
  if (x < -1.0) return -1.0;
  if (x < 0.0) return 2.0 * x + x * x;
  if (x < 1.0) return 2.0 * x - x * x;
  return 1.0;
}

double approx_sign_derivative(double x) {
  if (x >= -1.0 && x < 0.0) return 2.0 + 2.0 * x;
  if (x >= 0.0 && x < 1.0) return 2.0 - 2.0 * x;
  return 0.0;
}

namespace {

// Sums upstream into per-(magnitude, bit) buckets, in image order.
void accumulate_upstream(const PixelImage& image, const float* upstream, std::size_t dim,
                         std::vector<double>& sums) {
  const std::size_t plane = image.plane();
  for (std::size_t c = 0; c < PixelImage::kChannels; ++c) {
    const std::uint8_t* px = image.values().data() + c * plane;
    for (std::size_t m = 0; m < dim; ++m) {
      const float* g = upstream + (dim * c + m) * plane;
      for (std::size_t i = 0; i < plane; ++i) sums[std::size_t(px[i]) * dim + m] += double(g[i]);
    }
  }
}

Tensor scale_by_surrogate(const std::vector<double>& sums, const EmbeddingTable& table) {
  Tensor grad({kLevels, table.dim()});
  const auto w = table.weights();
  for (std::size_t i = 0; i < sums.size(); ++i)
    grad[i] = float(0.5 * sums[i] * approx_sign_derivative(double(w[i])));
  return grad;
}

}  // namespace

Tensor p2be_backward(const PixelImage& image, const Tensor& upstream, const EmbeddingTable& table) {
  const numgraph::Shape expected{PixelImage::kChannels * table.dim(), image.height(), image.width()};
  if (upstream.shape() != expected) {
    throw ShapeError("p2be_backward: upstream " + numgraph::shape_string(upstream.shape()) +
                     ", expected " + numgraph::shape_string(expected));
  }
  std::vector<double> sums(kLevels * table.dim(), 0.0);
  accumulate_upstream(image, upstream.data().data(), table.dim(), sums);
  return scale_by_surrogate(sums, table);
}

Tensor p2be_backward_batch(std::span<const PixelImage> images, const Tensor& upstream,
                           const EmbeddingTable& table) {
  check_same_size(images);
  const auto& first = images.front();
  const numgraph::Shape expected{images.size(), PixelImage::kChannels * table.dim(),
                                 first.height(), first.width()};
  if (upstream.shape() != expected) {
    throw ShapeError("p2be_backward: upstream " + numgraph::shape_string(upstream.shape()) +
                     ", expected " + numgraph::shape_string(expected));
  }
  std::vector<double> sums(kLevels * table.dim(), 0.0);
  const std::size_t stride = upstream.size() / images.size();
  for (std::size_t b = 0; b < images.size(); ++b)
    accumulate_upstream(images[b], upstream.data().data() + b * stride, table.dim(), sums);
  return scale_by_surrogate(sums, table);
}

// ---------------------------------------------------------------------------

SimilarityMatrix cosine_similarity_matrix(const BinaryCodebook& codebook) {
  SimilarityMatrix out;
  out.values.assign(kLevels * kLevels, 0.0);
  std::vector<double> counts(kLevels, 0.0);
  for (std::size_t k = 0; k < kLevels; ++k) {
    for (auto b : codebook.row(k)) counts[k] += b;
    if (counts[k] == 0.0) out.zero_rows.push_back(k);
  }
  for (std::size_t i = 0; i < kLevels; ++i) {
    if (counts[i] == 0.0) continue;
    const auto ri = codebook.row(i);
    for (std::size_t j = i; j < kLevels; ++j) {
      if (counts[j] == 0.0) continue;
      const auto rj = codebook.row(j);
      double dot = 0.0;
      for (std::size_t m = 0; m < codebook.dim(); ++m) dot += double(ri[m] & rj[m]);
      const double cos = dot / std::sqrt(counts[i] * counts[j]);
      out.values[i * kLevels + j] = cos;
      out.values[j * kLevels + i] = cos;
    }
  }
  if (!out.zero_rows.empty()) {
    log::warn("cosine similarity: " + std::to_string(out.zero_rows.size()) +
              " all-zero code(s), first at magnitude " + std::to_string(out.zero_rows.front()) +
              "; filled with 0");
  }
  return out;
}

void write_codebook_csv(std::ostream& out, const BinaryCodebook& codebook) {
  out << "magnitude";
  for (std::size_t m = 0; m < codebook.dim(); ++m) out << ",b" << m;
  out << '\n';
  for (std::size_t k = 0; k < kLevels; ++k) {
    out << k;
    for (auto b : codebook.row(k)) out << ',' << int(b);
    out << '\n';
  }
}

void write_similarity_csv(std::ostream& out, const SimilarityMatrix& matrix) {
  out << "magnitude";
  for (std::size_t j = 0; j < matrix.size; ++j) out << ",s" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < matrix.size; ++i) {
    out << i;
    for (std::size_t j = 0; j < matrix.size; ++j) {
      std::snprintf(buf, sizeof buf, ",%.6f", matrix.at(i, j));
      out << buf;
    }
    out << '\n';
  }
}

void write_similarity_pgm(std::ostream& out, const SimilarityMatrix& matrix) {
  std::vector<std::uint8_t> gray(matrix.values.size());
  for (std::size_t i = 0; i < gray.size(); ++i)
    gray[i] = std::uint8_t(std::lround(255.0 * std::clamp(matrix.values[i], 0.0, 1.0)));
  write_pgm(out, matrix.size, matrix.size, gray);
}

}  // namespace p2be::encoders
