// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2be/encoders.hpp"
#include "p2be/training/model.hpp"
#include "p2be/training/optim.hpp"

namespace p2be::training {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Everything needed to resume or evaluate a run.
///
/// File layout, little-endian: "P2BE", u16 version, then sections of
/// (4-byte tag, u64 length, payload), then the CRC32 of all section bytes.
/// Sections: CONF (config JSON), MODL (architecture), STEP, NETP (network
/// parameters), EMBD (p2be only), OPTS (optimizer states).
struct Checkpoint {
  nlohmann::json config = nlohmann::json::object();
  encoders::EncoderKind encoder = encoders::EncoderKind::p2be;
  std::size_t dim = 1;
  std::size_t classes = 2;
  std::size_t height = 1;
  std::size_t width = 1;
  std::uint64_t step = 0;
  numgraph::ParameterSet<float> network;
  std::optional<encoders::EmbeddingTable> table;
  SgdState sgd;
  AdamWState adamw;

  static Checkpoint capture(const Classifier& model, const nlohmann::json& config, std::uint64_t step,
                            const SgdState& sgd, const AdamWState& adamw);
  Classifier model() const;

  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError on bad magic, unsupported version, truncation or a
  /// checksum mismatch.
  static Checkpoint deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

}  // namespace p2be::training
