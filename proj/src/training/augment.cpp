// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/training/augment.hpp"

#include "p2be/corruptions.hpp"

namespace p2be::training {

PixelImage augment_chain(const PixelImage& image, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length(1, 3);
  std::uniform_int_distribution<int> op(0, 3);
  std::uniform_int_distribution<int> shift(-1, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PixelImage out = image;
  const int n = length(rng);
  for (int i = 0; i < n; ++i) {
    switch (op(rng)) {
      case 0:
        out = corruptions::adjust_brightness(out, 0.1 * (2.0 * unit(rng) - 1.0));
        break;
      case 1:
        out = corruptions::adjust_contrast(out, 0.7 + 0.6 * unit(rng));
        break;
      case 2:
        out = corruptions::pixelate(out, 0.6 + 0.4 * unit(rng));
        break;
      default: {
        const int dy = shift(rng);
        const int dx = shift(rng);
        out = corruptions::translate(out, dy, dx);
        break;
      }
    }
  }
  return out;
}

}  // namespace p2be::training
