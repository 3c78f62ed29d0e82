// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace p2be {

/// 8-bit RGB image stored channel-major, shape [3, H, W].
class PixelImage {
 public:
  static constexpr std::size_t kChannels = 3;

  PixelImage() = default;
  PixelImage(std::size_t height, std::size_t width, std::uint8_t fill = 0);
  PixelImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::uint8_t& at(std::size_t c, std::size_t y, std::size_t x) {
    return values_[(c * height_ + y) * width_ + x];
  }
  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * height_ + y) * width_ + x];
  }

  std::span<std::uint8_t> values() noexcept { return values_; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }

  friend bool operator==(const PixelImage&, const PixelImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> values_;
};

/// Binary PPM (P6, maxval 255).
PixelImage read_ppm(std::istream& in);
PixelImage read_ppm(const std::filesystem::path& path);
void write_ppm(std::ostream& out, const PixelImage& image);
void write_ppm(const std::filesystem::path& path, const PixelImage& image);

/// Binary PGM (P5, maxval 255), row-major gray values.
void write_pgm(std::ostream& out, std::size_t height, std::size_t width,
               std::span<const std::uint8_t> gray);

}  // namespace p2be
