// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "p2be/image.hpp"

namespace p2be::training {

struct Dataset {
  std::vector<PixelImage> images;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return images.size(); }
  std::size_t height() const { return images.at(0).height(); }
  std::size_t width() const { return images.at(0).width(); }
  /// Non-empty, equal image sizes, labels within [0, num_classes).
  void validate() const;
};

struct SyntheticSpec {
  std::size_t classes = 4;       // 2..10 pattern families
  std::size_t image_size = 8;
  std::size_t samples = 512;
  std::uint64_t seed = 0;
};

/// Colored geometric patterns: class k is one pattern family (stripes in
/// several orientations, checkerboard, square, frame, cross, dots, split)
/// drawn in a random foreground/background color pair at a random phase.
/// Labels cycle through the classes so every class is equally represented.
Dataset make_synthetic(const SyntheticSpec& spec);

/// Reads `labels_csv` (header `file,label`) and the referenced PPM files,
/// resolved relative to `dir`.
Dataset load_ppm_dataset(const std::filesystem::path& dir, const std::filesystem::path& labels_csv,
                         std::size_t num_classes);

}  // namespace p2be::training
