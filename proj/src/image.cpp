// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/image.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "p2be/error.hpp"

namespace p2be {

PixelImage::PixelImage(std::size_t height, std::size_t width, std::uint8_t fill)
    : height_(height), width_(width), values_(kChannels * height * width, fill) {
  if (height == 0 || width == 0) throw ShapeError("image dimensions must be positive");
}

PixelImage::PixelImage(std::size_t height, std::size_t width,
                       std::vector<std::uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height == 0 || width == 0) throw ShapeError("image dimensions must be positive");
  if (values_.size() != kChannels * height * width) {
    throw ShapeError("image buffer holds " + std::to_string(values_.size()) +
                     " values, expected 3x" + std::to_string(height) + "x" +
                     std::to_string(width));
  }
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      if (!token.empty()) break;
    } else {
      token.push_back(char(ch));
    }
    ch = in.get();
  }
  if (token.empty()) throw FormatError("ppm: truncated header");
  return token;
}

std::size_t header_number(std::istream& in, const char* what) {
  const std::string tok = header_token(in);
  std::size_t pos = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || value == 0) {
    throw FormatError(std::string("ppm: invalid ") + what + " '" + tok + "'");
  }
  return value;
}

}  // namespace

PixelImage read_ppm(std::istream& in) {
  if (header_token(in) != "P6") throw FormatError("ppm: expected P6 magic");
  const std::size_t width = header_number(in, "width");
  const std::size_t height = header_number(in, "height");
  if (header_number(in, "maxval") != 255) throw FormatError("ppm: only maxval 255 is supported");

  std::vector<std::uint8_t> interleaved(3 * width * height);
  in.read(reinterpret_cast<char*>(interleaved.data()), std::streamsize(interleaved.size()));
  if (std::size_t(in.gcount()) != interleaved.size()) throw FormatError("ppm: truncated pixel data");

  PixelImage image(height, width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      for (std::size_t c = 0; c < 3; ++c) image.at(c, y, x) = interleaved[(y * width + x) * 3 + c];
  return image;
}

PixelImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_ppm(in);
}

void write_ppm(std::ostream& out, const PixelImage& image) {
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<std::uint8_t> interleaved(image.size());
  for (std::size_t y = 0; y < image.height(); ++y)
    for (std::size_t x = 0; x < image.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c)
        interleaved[(y * image.width() + x) * 3 + c] = image.at(c, y, x);
  out.write(reinterpret_cast<const char*>(interleaved.data()), std::streamsize(interleaved.size()));
}

void write_ppm(const std::filesystem::path& path, const PixelImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_ppm(out, image);
}

void write_pgm(std::ostream& out, std::size_t height, std::size_t width,
               std::span<const std::uint8_t> gray) {
  if (gray.size() != height * width) throw ShapeError("pgm: buffer size mismatch");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()), std::streamsize(gray.size()));
}

}  // namespace p2be
