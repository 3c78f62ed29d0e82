// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural common corruptions and the corruption-robustness metrics
// (per-corruption error CE_c, its mean mCE, and the unnormalized mean error).

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "p2be/image.hpp"

namespace p2be::corruptions {

enum class CorruptionKind {
  gaussian_noise,
  shot_noise,
  impulse_noise,
  defocus_blur,
  contrast,
  brightness,
  pixelate,
};

inline constexpr int kSeverities = 5;

std::string_view to_string(CorruptionKind kind);
/// Throws ConfigError listing the valid names.
CorruptionKind parse_corruption(std::string_view name);
const std::vector<CorruptionKind>& all_corruptions();
/// Comma-separated list of every implemented kind.
std::string valid_corruption_names();

/// One distortion parameter per kind; larger always means stronger and 0 is
/// the identity:
///   gaussian-noise  noise std-dev in [0,1] pixel units
///   shot-noise      1 / photon count (Poisson rate = pixel / parameter)
///   impulse-noise   fraction of values replaced by 0 or 255
///   defocus-blur    disk radius in pixels
///   contrast        1 - contrast factor
///   brightness      additive offset in [0,1] pixel units
///   pixelate        1 - downscale factor
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  int severity = 1;
  std::vector<double> parameters;

  void validate() const;
};

/// Severity ladder per kind (five strictly increasing parameters).
class SeverityTable {
 public:
  static SeverityTable defaults();

  const std::array<double, kSeverities>& ladder(CorruptionKind kind) const;
  /// Throws ConfigError unless the ladder is non-negative and increasing.
  void set_ladder(CorruptionKind kind, const std::array<double, kSeverities>& ladder);

  CorruptionSpec spec(CorruptionKind kind, int severity) const;

  const std::map<CorruptionKind, std::array<double, kSeverities>>& ladders() const noexcept {
    return ladders_;
  }

 private:
  std::map<CorruptionKind, std::array<double, kSeverities>> ladders_;
};

/// Values are rounded and clamped to [0,255]. Noise kinds are deterministic
/// given `seed`; the others ignore it.
PixelImage apply_corruption(const PixelImage& image, const CorruptionSpec& spec, std::uint64_t seed);

// Individual kernels, exposed for augmentation and tests.
PixelImage add_gaussian_noise(const PixelImage& image, double sigma, std::uint64_t seed);
PixelImage add_shot_noise(const PixelImage& image, double inverse_photons, std::uint64_t seed);
PixelImage add_impulse_noise(const PixelImage& image, double fraction, std::uint64_t seed);
PixelImage defocus_blur(const PixelImage& image, double radius);
PixelImage adjust_contrast(const PixelImage& image, double factor);
PixelImage adjust_brightness(const PixelImage& image, double offset);
PixelImage pixelate(const PixelImage& image, double scale);
/// Shift by (dy, dx); vacated pixels replicate the nearest edge.
PixelImage translate(const PixelImage& image, int dy, int dx);

// ---------------------------------------------------------------------------
// Metrics

using ErrorKey = std::pair<std::string, int>;  // (kind name, severity)
using ErrorMap = std::map<ErrorKey, double>;

/// Model and baseline test errors keyed by (kind, severity). Kind names are
/// free-form so tables can include corruptions this library does not generate.
struct ErrorTable {
  ErrorMap model_errors;
  ErrorMap baseline_errors;

  /// Every entry within [0,1] and both maps share keys; throws otherwise.
  void validate() const;
  std::vector<std::string> kinds() const;
};

/// sum_s E_{s,c} / sum_s E^baseline_{s,c} over severities 1..5.
double corruption_error(const ErrorTable& table, std::string_view kind);
/// Unweighted mean of CE_c over every kind in the table.
double mean_corruption_error(const ErrorTable& table);
/// Unweighted mean of the model error over every (kind, severity) cell.
double mean_error_cifar_style(const ErrorTable& table);

/// CSV with header `kind,severity,error`, error as a fraction.
ErrorMap read_error_csv(std::istream& in);
void write_error_csv(std::ostream& out, const ErrorMap& errors);

}  // namespace p2be::corruptions
