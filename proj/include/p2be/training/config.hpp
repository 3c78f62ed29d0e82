// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "p2be/attack.hpp"
#include "p2be/corruptions.hpp"
#include "p2be/encoders.hpp"
#include "p2be/losses.hpp"

namespace p2be::training {

enum class TrainMode { clean_consistency, adversarial_consistency, advtrain };

std::string_view to_string(TrainMode mode);
TrainMode parse_mode(std::string_view name);

struct TrainConfig {
  encoders::EncoderKind encoder = encoders::EncoderKind::p2be;
  std::size_t embedding_dim = 64;
  TrainMode mode = TrainMode::clean_consistency;
  int epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  // network: momentum SGD, cosine-annealed learning rate
  double net_lr_start = 0.1;
  double net_lr_end = 1e-5;
  double net_momentum = 0.9;
  double net_weight_decay = 5e-4;

  // embedding table: AdamW, constant learning rate
  double emb_lr = 1e-4;
  double emb_beta1 = 0.999;
  double emb_beta2 = 0.999;
  double emb_weight_decay = 1e-4;

  losses::LossWeights weights{};
  bool freeze_embedding = false;

  /// Channel count of the input the network sees (3 for rgb, 3*dim otherwise).
  std::size_t input_channels() const;
  /// `allow_zero_epochs` admits the no-op run used to export an initialization.
  void validate(bool allow_zero_epochs = false) const;
};

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "ppm"
  std::size_t classes = 4;
  std::size_t image_size = 8;
  std::size_t train_samples = 512;
  std::size_t test_samples = 256;
  std::string train_dir;      // ppm source: directory of .ppm files
  std::string train_labels;   // ppm source: CSV `file,label`
  std::string test_dir;
  std::string test_labels;

  void validate() const;
};

/// Everything one run needs, read from a single strict JSON document.
struct RunConfig {
  TrainConfig train;
  attack::AttackConfig attack;
  corruptions::SeverityTable corruptions = corruptions::SeverityTable::defaults();
  DataConfig data;
  std::string output_dir = "run";
  std::string init_embedding;  // checkpoint to import the embedding table from
  int threads = 1;

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys and bad values throw
/// ConfigError naming the field.
RunConfig run_config_from_json(const nlohmann::json& doc);
/// Complete document with every key; dump order is stable.
nlohmann::json to_json(const RunConfig& config);

}  // namespace p2be::training
