// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/training/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "p2be/error.hpp"
#include "p2be/rng.hpp"

namespace p2be::training {

void Dataset::validate() const {
  if (images.empty()) throw std::invalid_argument("dataset is empty");
  if (labels.size() != images.size()) throw std::invalid_argument("dataset label count differs from image count");
  for (const auto& im : images) {
    if (im.height() != images.front().height() || im.width() != images.front().width()) {
      throw ShapeError("dataset images differ in size");
    }
  }
  for (int l : labels) {
    if (l < 0 || std::size_t(l) >= num_classes) {
      throw std::invalid_argument("dataset label " + std::to_string(l) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
}

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr std::array<Rgb, 8> kPalette = {{
    {230, 40, 40}, {40, 200, 60}, {50, 70, 220}, {235, 220, 50},
    {30, 30, 30},  {225, 225, 225}, {200, 60, 200}, {60, 200, 210},
}};

// Whether (y, x) is foreground for pattern `family` with random offsets.
bool foreground(std::size_t family, int y, int x, int n, int a, int b) {
  switch (family) {
    case 0: return (y + a) % 3 == 0;                        // horizontal stripes
    case 1: return (x + a) % 3 == 0;                        // vertical stripes
    case 2: return (x + y + a) % 3 == 0;                    // diagonal stripes
    case 3: return ((y + a) / 2 + (x + b) / 2) % 2 == 0;    // checkerboard
    case 4: {                                               // filled square
      const int s = n / 2;
      return y >= a && y < a + s && x >= b && x < b + s;
    }
    case 5: {                                               // hollow frame
      const int s = n / 2 + 1;
      const bool inside = y >= a && y < a + s && x >= b && x < b + s;
      return inside && (y == a || y == a + s - 1 || x == b || x == b + s - 1);
    }
    case 6: return y == a || x == b;                        // cross
    case 7: return (x - y + 3 * n + a) % 3 == 0;            // anti-diagonal stripes
    case 8: return (y % 3 == a % 3) && (x % 3 == b % 3);    // dots
    case 9: return x < a + n / 4;                           // split halves
  }
  return false;
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.classes > 10) throw std::invalid_argument("synthetic data supports 2..10 classes");
  if (spec.image_size < 4) throw std::invalid_argument("synthetic images must be at least 4x4");
  Dataset out;
  out.num_classes = spec.classes;
  const int n = int(spec.image_size);
  std::mt19937_64 rng = make_stream(spec.seed, "synthetic");
  std::uniform_int_distribution<int> color(0, int(kPalette.size()) - 1);
  std::uniform_int_distribution<int> jitter(-3, 3);

  for (std::size_t i = 0; i < spec.samples; ++i) {
    const std::size_t family = i % spec.classes;
    const int fg = color(rng);
    int bg = color(rng);
    while (bg == fg) bg = color(rng);
    const int span = std::max(1, n - n / 2);
    const int a = std::uniform_int_distribution<int>(0, span - 1)(rng);
    const int b = std::uniform_int_distribution<int>(0, span - 1)(rng);
    Rgb shift{};
    for (auto& s : shift) s = std::uint8_t(jitter(rng) + 3);

    PixelImage im(spec.image_size, spec.image_size);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const Rgb& c = kPalette[std::size_t(foreground(family, y, x, n, a, b) ? fg : bg)];
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const int v = int(c[ch]) + int(shift[ch]) - 3;
          im.at(ch, std::size_t(y), std::size_t(x)) = std::uint8_t(std::clamp(v, 0, 255));
        }
      }
    out.images.push_back(std::move(im));
    out.labels.push_back(int(family));
  }
  return out;
}

Dataset load_ppm_dataset(const std::filesystem::path& dir, const std::filesystem::path& labels_csv,
                         std::size_t num_classes) {
  std::ifstream in(labels_csv);
  if (!in) throw FormatError("cannot open labels file " + labels_csv.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(labels_csv.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "file,label") throw FormatError(labels_csv.string() + ": expected header 'file,label'");

  Dataset out;
  out.num_classes = num_classes;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw FormatError(labels_csv.string() + ":" + std::to_string(lineno) + ": expected 'file,label'");
    }
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(line.substr(comma + 1), &used);
      if (used != line.size() - comma - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(labels_csv.string() + ":" + std::to_string(lineno) + ": malformed label");
    }
    out.images.push_back(read_ppm(dir / line.substr(0, comma)));
    out.labels.push_back(label);
  }
  out.validate();
  return out;
}

}  // namespace p2be::training
