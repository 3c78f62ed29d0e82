// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "p2be/image.hpp"

namespace p2be::training {

/// Random chain of one to three mild operations drawn from brightness shift,
/// contrast change, pixelation and a one-pixel translation.
PixelImage augment_chain(const PixelImage& image, std::mt19937_64& rng);

}  // namespace p2be::training
