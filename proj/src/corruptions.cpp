// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/corruptions.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "p2be/error.hpp"

namespace p2be::corruptions {

std::string_view to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::gaussian_noise: return "gaussian-noise";
    case CorruptionKind::shot_noise: return "shot-noise";
    case CorruptionKind::impulse_noise: return "impulse-noise";
    case CorruptionKind::defocus_blur: return "defocus-blur";
    case CorruptionKind::contrast: return "contrast";
    case CorruptionKind::brightness: return "brightness";
    case CorruptionKind::pixelate: return "pixelate";
  }
  return "?";
}

const std::vector<CorruptionKind>& all_corruptions() {
  static const std::vector<CorruptionKind> kinds = {
      CorruptionKind::gaussian_noise, CorruptionKind::shot_noise,   CorruptionKind::impulse_noise,
      CorruptionKind::defocus_blur,   CorruptionKind::contrast,     CorruptionKind::brightness,
      CorruptionKind::pixelate,
  };
  return kinds;
}

std::string valid_corruption_names() {
  std::string out;
  for (auto k : all_corruptions()) {
    if (!out.empty()) out += ", ";
    out += to_string(k);
  }
  return out;
}

CorruptionKind parse_corruption(std::string_view name) {
  for (auto k : all_corruptions())
    if (to_string(k) == name) return k;
  throw ConfigError("kind", "unknown corruption '" + std::string(name) +
                                "'; valid kinds: " + valid_corruption_names());
}

void CorruptionSpec::validate() const {
  if (severity < 1 || severity > kSeverities) {
    throw ConfigError("severity", "must be in [1, 5], got " + std::to_string(severity));
  }
  if (parameters.size() != 1 || !std::isfinite(parameters[0]) || parameters[0] < 0.0) {
    throw ConfigError(std::string(to_string(kind)), "expects one finite non-negative parameter");
  }
}

SeverityTable SeverityTable::defaults() {
  SeverityTable t;
  t.ladders_[CorruptionKind::gaussian_noise] = {0.04, 0.06, 0.08, 0.09, 0.10};
  t.ladders_[CorruptionKind::shot_noise] = {1.0 / 500, 1.0 / 250, 1.0 / 100, 1.0 / 75, 1.0 / 50};
  t.ladders_[CorruptionKind::impulse_noise] = {0.01, 0.02, 0.03, 0.05, 0.07};
  t.ladders_[CorruptionKind::defocus_blur] = {0.75, 1.0, 1.25, 1.5, 2.0};
  t.ladders_[CorruptionKind::contrast] = {0.25, 0.5, 0.6, 0.7, 0.85};
  t.ladders_[CorruptionKind::brightness] = {0.05, 0.1, 0.15, 0.2, 0.3};
  t.ladders_[CorruptionKind::pixelate] = {0.05, 0.1, 0.15, 0.25, 0.35};
  return t;
}

const std::array<double, kSeverities>& SeverityTable::ladder(CorruptionKind kind) const {
  return ladders_.at(kind);
}

void SeverityTable::set_ladder(CorruptionKind kind, const std::array<double, kSeverities>& ladder) {
  const std::string field = "corruptions." + std::string(to_string(kind));
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!std::isfinite(ladder[i]) || ladder[i] < 0.0) throw ConfigError(field, "parameters must be finite and >= 0");
    if (i > 0 && !(ladder[i] > ladder[i - 1])) throw ConfigError(field, "parameters must increase with severity");
  }
  if (kind == CorruptionKind::contrast || kind == CorruptionKind::pixelate ||
      kind == CorruptionKind::impulse_noise) {
    if (ladder.back() > 1.0) throw ConfigError(field, "parameters must not exceed 1");
  }
  ladders_[kind] = ladder;
}

CorruptionSpec SeverityTable::spec(CorruptionKind kind, int severity) const {
  if (severity < 1 || severity > kSeverities) {
    throw ConfigError("severity", "must be in [1, 5], got " + std::to_string(severity));
  }
  return {kind, severity, {ladder(kind)[std::size_t(severity - 1)]}};
}

// ---------------------------------------------------------------------------

namespace {

std::uint8_t to_pixel(double v) {
  return std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
}

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto len = std::ptrdiff_t(n);
  if (len == 1) return 0;
  const std::ptrdiff_t period = 2 * (len - 1);
  i %= period;
  if (i < 0) i += period;
  return std::size_t(i < len ? i : period - i);
}

}  // namespace

PixelImage add_gaussian_noise(const PixelImage& image, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return image;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma * 255.0);
  PixelImage out = image;
  for (auto& v : out.values()) v = to_pixel(double(v) + noise(rng));
  return out;
}

PixelImage add_shot_noise(const PixelImage& image, double inverse_photons, std::uint64_t seed) {
  if (inverse_photons == 0.0) return image;
  std::mt19937_64 rng(seed);
  PixelImage out = image;
  for (auto& v : out.values()) {
    const double rate = double(v) / 255.0 / inverse_photons;
    if (rate <= 0.0) continue;
    std::poisson_distribution<long> draw(rate);
    v = to_pixel(double(draw(rng)) * inverse_photons * 255.0);
  }
  return out;
}

PixelImage add_impulse_noise(const PixelImage& image, double fraction, std::uint64_t seed) {
  if (fraction == 0.0) return image;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PixelImage out = image;
  for (auto& v : out.values()) {
    if (u(rng) < fraction) v = u(rng) < 0.5 ? 0 : 255;
  }
  return out;
}

PixelImage defocus_blur(const PixelImage& image, double radius) {
  // Anti-aliased disk: weight = clamp(r + 0.5 - distance, 0, 1).
  const int reach = int(std::ceil(radius)) + 1;
  std::vector<double> kernel;
  std::vector<std::pair<int, int>> offsets;
  double total = 0.0;
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx) {
      const double w = std::clamp(radius + 0.5 - std::hypot(double(dy), double(dx)), 0.0, 1.0);
      if (w <= 0.0) continue;
      kernel.push_back(w);
      offsets.emplace_back(dy, dx);
      total += w;
    }
  if (kernel.size() == 1) return image;

  PixelImage out = image;
  for (std::size_t c = 0; c < PixelImage::kChannels; ++c)
    for (std::size_t y = 0; y < image.height(); ++y)
      for (std::size_t x = 0; x < image.width(); ++x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < kernel.size(); ++i) {
          const auto sy = reflect(std::ptrdiff_t(y) + offsets[i].first, image.height());
          const auto sx = reflect(std::ptrdiff_t(x) + offsets[i].second, image.width());
          acc += kernel[i] * image.at(c, sy, sx);
        }
        out.at(c, y, x) = to_pixel(acc / total);
      }
  return out;
}

PixelImage adjust_contrast(const PixelImage& image, double factor) {
  PixelImage out = image;
  const std::size_t plane = image.plane();
  for (std::size_t c = 0; c < PixelImage::kChannels; ++c) {
    auto src = image.values().subspan(c * plane, plane);
    double mean = 0.0;
    for (auto v : src) mean += v;
    mean /= double(plane);
    auto dst = out.values().subspan(c * plane, plane);
    for (std::size_t i = 0; i < plane; ++i) dst[i] = to_pixel(mean + factor * (double(src[i]) - mean));
  }
  return out;
}

PixelImage adjust_brightness(const PixelImage& image, double offset) {
  PixelImage out = image;
  for (auto& v : out.values()) v = to_pixel(double(v) + offset * 255.0);
  return out;
}

PixelImage pixelate(const PixelImage& image, double scale) {
  const std::size_t h = image.height(), w = image.width();
  const auto th = std::max<std::size_t>(1, std::size_t(std::floor(double(h) * scale + 1e-9)));
  const auto tw = std::max<std::size_t>(1, std::size_t(std::floor(double(w) * scale + 1e-9)));
  if (th >= h && tw >= w) return image;

  // Each source pixel belongs to one coarse cell; the cell mean is written back.
  PixelImage out = image;
  std::vector<double> sums(th * tw);
  std::vector<double> counts(th * tw);
  for (std::size_t c = 0; c < PixelImage::kChannels; ++c) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t cell = (y * th / h) * tw + x * tw / w;
        sums[cell] += image.at(c, y, x);
        counts[cell] += 1.0;
      }
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t cell = (y * th / h) * tw + x * tw / w;
        out.at(c, y, x) = to_pixel(sums[cell] / counts[cell]);
      }
  }
  return out;
}

PixelImage translate(const PixelImage& image, int dy, int dx) {
  PixelImage out = image;
  const auto h = std::ptrdiff_t(image.height()), w = std::ptrdiff_t(image.width());
  for (std::size_t c = 0; c < PixelImage::kChannels; ++c)
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        const auto sy = std::clamp<std::ptrdiff_t>(y - dy, 0, h - 1);
        const auto sx = std::clamp<std::ptrdiff_t>(x - dx, 0, w - 1);
        out.at(c, std::size_t(y), std::size_t(x)) = image.at(c, std::size_t(sy), std::size_t(sx));
      }
  return out;
}

PixelImage apply_corruption(const PixelImage& image, const CorruptionSpec& spec, std::uint64_t seed) {
  spec.validate();
  const double p = spec.parameters[0];
  switch (spec.kind) {
    case CorruptionKind::gaussian_noise: return add_gaussian_noise(image, p, seed);
    case CorruptionKind::shot_noise: return add_shot_noise(image, p, seed);
    case CorruptionKind::impulse_noise: return add_impulse_noise(image, p, seed);
    case CorruptionKind::defocus_blur: return defocus_blur(image, p);
    case CorruptionKind::contrast: return adjust_contrast(image, 1.0 - p);
    case CorruptionKind::brightness: return adjust_brightness(image, p);
    case CorruptionKind::pixelate: return pixelate(image, 1.0 - p);
  }
  throw ConfigError("kind", "unknown corruption kind");
}

// ---------------------------------------------------------------------------

void ErrorTable::validate() const {
  auto check = [](const ErrorMap& m, const char* which) {
    for (const auto& [key, e] : m) {
      if (!(e >= 0.0 && e <= 1.0)) {
        throw std::invalid_argument(std::string(which) + " error for " + key.first + "/" +
                                    std::to_string(key.second) + " outside [0,1]");
      }
    }
  };
  check(model_errors, "model");
  check(baseline_errors, "baseline");
  if (baseline_errors.empty()) return;
  for (const auto& [key, e] : model_errors)
    if (!baseline_errors.contains(key)) {
      throw std::invalid_argument("baseline has no entry for " + key.first + "/" + std::to_string(key.second));
    }
  for (const auto& [key, e] : baseline_errors)
    if (!model_errors.contains(key)) {
      throw std::invalid_argument("model has no entry for " + key.first + "/" + std::to_string(key.second));
    }
}

std::vector<std::string> ErrorTable::kinds() const {
  std::vector<std::string> out;
  for (const auto& [key, e] : model_errors)
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  return out;
}

double corruption_error(const ErrorTable& table, std::string_view kind) {
  double model = 0.0, baseline = 0.0;
  for (int s = 1; s <= kSeverities; ++s) {
    const ErrorKey key{std::string(kind), s};
    const auto m = table.model_errors.find(key);
    const auto b = table.baseline_errors.find(key);
    if (m == table.model_errors.end() || b == table.baseline_errors.end()) {
      throw std::invalid_argument("corruption_error: " + key.first + " lacks severity " + std::to_string(s));
    }
    model += m->second;
    baseline += b->second;
  }
  if (baseline == 0.0) throw std::domain_error("corruption_error: baseline errors of " + std::string(kind) + " sum to 0");
  return model / baseline;
}

double mean_corruption_error(const ErrorTable& table) {
  const auto kinds = table.kinds();
  if (kinds.empty()) throw std::invalid_argument("mean_corruption_error: empty table");
  double total = 0.0;
  for (const auto& k : kinds) total += corruption_error(table, k);
  return total / double(kinds.size());
}

double mean_error_cifar_style(const ErrorTable& table) {
  if (table.model_errors.empty()) throw std::invalid_argument("mean_error_cifar_style: empty table");
  double total = 0.0;
  for (const auto& [key, e] : table.model_errors) total += e;
  return total / double(table.model_errors.size());
}

ErrorMap read_error_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("error csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "kind,severity,error") {
    throw FormatError("error csv: expected header 'kind,severity,error', got '" + line + "'");
  }
  ErrorMap out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string kind, sev, err;
    if (!std::getline(row, kind, ',') || !std::getline(row, sev, ',') || !std::getline(row, err) ||
        kind.empty()) {
      throw FormatError("error csv line " + std::to_string(lineno) + ": expected 3 fields");
    }
    int severity = 0;
    double error = 0.0;
    try {
      std::size_t used = 0;
      severity = std::stoi(sev, &used);
      if (used != sev.size()) throw std::invalid_argument(sev);
      error = std::stod(err, &used);
      if (used != err.size()) throw std::invalid_argument(err);
    } catch (const std::exception&) {
      throw FormatError("error csv line " + std::to_string(lineno) + ": malformed number");
    }
    if (severity < 1 || severity > kSeverities) {
      throw FormatError("error csv line " + std::to_string(lineno) + ": severity outside 1..5");
    }
    if (!(error >= 0.0 && error <= 1.0)) {
      throw FormatError("error csv line " + std::to_string(lineno) + ": error outside [0,1]");
    }
    if (!out.emplace(ErrorKey{kind, severity}, error).second) {
      throw FormatError("error csv line " + std::to_string(lineno) + ": duplicate entry");
    }
  }
  return out;
}

void write_error_csv(std::ostream& out, const ErrorMap& errors) {
  out << "kind,severity,error\n";
  char buf[64];
  for (const auto& [key, e] : errors) {
    std::snprintf(buf, sizeof buf, "%.17g", e);
    out << key.first << ',' << key.second << ',' << buf << '\n';
  }
}

}  // namespace p2be::corruptions
