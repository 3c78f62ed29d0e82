// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "p2be/encoders.hpp"
#include "p2be/image.hpp"

namespace p2be::testing {

inline PixelImage random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> px(0, 255);
  PixelImage im(h, w);
  for (auto& v : im.values()) v = std::uint8_t(px(rng));
  return im;
}

inline encoders::EmbeddingTable random_table(std::size_t dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<float> w(encoders::kLevels * dim);
  for (auto& v : w) v = float(n(rng));
  return encoders::EmbeddingTable(dim, std::move(w));
}

}  // namespace p2be::testing
