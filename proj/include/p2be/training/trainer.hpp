// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2be/attack.hpp"
#include "p2be/corruptions.hpp"
#include "p2be/training/checkpoint.hpp"
#include "p2be/training/config.hpp"
#include "p2be/training/dataset.hpp"
#include "p2be/training/model.hpp"

namespace p2be::training {

struct EpochMetrics {
  int epoch = 0;             // 1-based
  double lr = 0.0;           // network learning rate at the epoch's first step
  double cross_entropy = 0.0;
  double consistency = 0.0;  // step means over the epoch
  double smoothness = 0.0;
  double train_accuracy = 0.0;  // clean predictions made during the epoch's steps
  std::optional<double> clean_test_error;
};

struct StepMetrics {
  std::uint64_t step = 0;  // 1-based
  double cross_entropy = 0.0;
  double consistency = 0.0;
  double smoothness = 0.0;
  double total = 0.0;
};

struct TrainRequest {
  TrainConfig train;
  attack::AttackConfig attack;  // used by the adversarial modes
  const Dataset* test_set = nullptr;
  /// Replaces the randomly initialized p2be table before training.
  std::optional<encoders::EmbeddingTable> initial_table;
  /// Stored verbatim in the checkpoint.
  nlohmann::json config_echo = nlohmann::json::object();
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> epochs;
  std::vector<StepMetrics> steps;
};

/// Deterministic given the config seed. Zero epochs returns the initialization.
TrainResult train(const TrainRequest& request, const Dataset& train_set);

/// Synthetic or PPM train/test sets for a run; synthetic sets draw from the
/// run seed.
std::pair<Dataset, std::optional<Dataset>> load_datasets(const DataConfig& data, std::uint64_t seed);

struct EvalOptions {
  std::vector<corruptions::CorruptionSpec> corruptions;
  std::optional<attack::AttackConfig> attack;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;
  int threads = 1;
  bool keep_adversarial = false;
};

struct AttackRecord {
  std::size_t index = 0;
  bool clean_correct = false;
  bool adversarial_correct = false;
  std::vector<double> loss_trace;
};

struct EvalReport {
  double clean_error = 0.0;
  corruptions::ErrorMap corrupted;  // (kind, severity) -> error fraction
  std::optional<double> attacked_error;
  std::vector<AttackRecord> attack_records;
  std::vector<PixelImage> adversarial;  // filled when keep_adversarial is set
};

/// Clean error, then every requested corruption, then the attack. Results do
/// not depend on the thread count.
EvalReport evaluate(const Classifier& model, const Dataset& data, const EvalOptions& options);
/// Same, after checking that the checkpoint's encoder is `expected`.
EvalReport evaluate(const Checkpoint& checkpoint, const Dataset& data, const EvalOptions& options,
                    std::optional<encoders::EncoderKind> expected = std::nullopt);

/// Error fraction of `model` on `data`.
double error_rate(const Classifier& model, const Dataset& data, std::size_t batch_size = 256);

/// Kinds whose error decreases somewhere along the severity ladder.
std::vector<std::string> non_monotone_kinds(const corruptions::ErrorMap& errors);

/// Header: epoch,lr,L_ce,L_consistency,L_smooth,train_acc,clean_test_err
void write_epoch_csv(std::ostream& out, const std::vector<EpochMetrics>& epochs);
/// Header: step,L_ce,L_consistency,L_smooth,L_total
void write_step_csv(std::ostream& out, const std::vector<StepMetrics>& steps);
/// Header: index,clean_correct,adv_correct,loss_trace (trace values joined by ';')
void write_attack_csv(std::ostream& out, const std::vector<AttackRecord>& records);

}  // namespace p2be::training
