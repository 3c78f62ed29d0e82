// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/training/config.hpp"

#include <cmath>
#include <set>

#include "p2be/error.hpp"

namespace p2be::training {

using nlohmann::json;

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::clean_consistency: return "clean-consistency";
    case TrainMode::adversarial_consistency: return "adversarial-consistency";
    case TrainMode::advtrain: return "advtrain";
  }
  return "?";
}

TrainMode parse_mode(std::string_view name) {
  for (auto m : {TrainMode::clean_consistency, TrainMode::adversarial_consistency, TrainMode::advtrain})
    if (to_string(m) == name) return m;
  throw ConfigError("train.mode", "unknown mode '" + std::string(name) +
                                      "' (expected clean-consistency, adversarial-consistency, advtrain)");
}

std::size_t TrainConfig::input_channels() const {
  return encoder == encoders::EncoderKind::rgb ? 3 : 3 * embedding_dim;
}

namespace {

void require(bool ok, const char* field, const char* message) {
  if (!ok) throw ConfigError(field, message);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }
bool non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void TrainConfig::validate(bool allow_zero_epochs) const {
  require(epochs >= (allow_zero_epochs ? 0 : 1), "train.epochs", "must be >= 1");
  require(batch_size >= 1, "train.batch_size", "must be >= 1");
  require(encoder == encoders::EncoderKind::rgb || (embedding_dim >= 1 && embedding_dim <= 4096),
          "train.embedding_dim", "must be in [1, 4096]");
  require(positive(net_lr_start), "train.net_lr_start", "must be > 0");
  require(positive(net_lr_end), "train.net_lr_end", "must be > 0");
  require(non_negative(net_momentum) && net_momentum < 1.0, "train.net_momentum", "must be in [0, 1)");
  require(non_negative(net_weight_decay), "train.net_weight_decay", "must be >= 0");
  require(positive(emb_lr), "train.emb_lr", "must be > 0");
  require(non_negative(emb_beta1) && emb_beta1 < 1.0, "train.emb_beta1", "must be in [0, 1)");
  require(non_negative(emb_beta2) && emb_beta2 < 1.0, "train.emb_beta2", "must be in [0, 1)");
  require(non_negative(emb_weight_decay), "train.emb_weight_decay", "must be >= 0");
  weights.validate();
  require(!freeze_embedding || encoder == encoders::EncoderKind::p2be, "train.freeze_embedding",
          "only applies to the p2be encoder");
  require(mode == TrainMode::clean_consistency || encoder != encoders::EncoderKind::rgb, "train.mode",
          "adversarial modes need a binary encoder");
}

void DataConfig::validate() const {
  require(source == "synthetic" || source == "ppm", "data.source", "must be 'synthetic' or 'ppm'");
  if (source == "synthetic") {
    require(classes >= 2 && classes <= 10, "data.classes", "synthetic data supports 2..10 classes");
    require(image_size >= 4 && image_size <= 64, "data.image_size", "must be in [4, 64]");
    require(train_samples >= 1, "data.train_samples", "must be >= 1");
    require(test_samples >= 1, "data.test_samples", "must be >= 1");
  } else {
    require(!train_dir.empty(), "data.train_dir", "required for the ppm source");
    require(!train_labels.empty(), "data.train_labels", "required for the ppm source");
    require(classes >= 2, "data.classes", "must be >= 2");
  }
}

void RunConfig::validate() const {
  train.validate();
  attack.validate();
  data.validate();
  require(threads >= 1, "threads", "must be >= 1");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  require(init_embedding.empty() || train.encoder == encoders::EncoderKind::p2be, "init_embedding",
          "only applies to the p2be encoder");
}

// ---------------------------------------------------------------------------

namespace {

// Reads known keys of one JSON object and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be a JSON object");
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(const char* key, T& out) {
    const json* v = get(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError(field(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0) {
            throw ConfigError(field(key), "must be non-negative");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      } else {
        if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(field(it.key().c_str()), "unknown key");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_train(const json& j, TrainConfig& t) {
  ObjectReader r(j, "train");
  std::string s;
  if (r.get("encoder")) {
    r.read("encoder", s);
    try {
      t.encoder = encoders::parse_encoder(s);
    } catch (const ConfigError& e) {
      throw ConfigError("train.encoder", e.what());
    }
  }
  r.read("embedding_dim", t.embedding_dim);
  if (r.get("mode")) {
    r.read("mode", s);
    t.mode = parse_mode(s);
  }
  r.read("epochs", t.epochs);
  r.read("batch_size", t.batch_size);
  r.read("seed", t.seed);
  r.read("net_lr_start", t.net_lr_start);
  r.read("net_lr_end", t.net_lr_end);
  r.read("net_momentum", t.net_momentum);
  r.read("net_weight_decay", t.net_weight_decay);
  r.read("emb_lr", t.emb_lr);
  r.read("emb_beta1", t.emb_beta1);
  r.read("emb_beta2", t.emb_beta2);
  r.read("emb_weight_decay", t.emb_weight_decay);
  r.read("alpha", t.weights.alpha);
  r.read("lambda", t.weights.lambda);
  r.read("freeze_embedding", t.freeze_embedding);
  r.finish();
}

void read_attack(const json& j, attack::AttackConfig& a) {
  ObjectReader r(j, "attack");
  r.read("steps", a.steps);
  r.read("anneal_rate", a.anneal_rate);
  r.read("step_size", a.step_size);
  r.read("epsilon", a.epsilon);
  r.read("initial_temperature", a.initial_temperature);
  r.read("restarts", a.restarts);
  r.finish();
}

void read_corruptions(const json& j, corruptions::SeverityTable& table) {
  if (!j.is_object()) throw ConfigError("corruptions", "must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string field = "corruptions." + it.key();
    corruptions::CorruptionKind kind;
    try {
      kind = corruptions::parse_corruption(it.key());
    } catch (const ConfigError& e) {
      throw ConfigError(field, e.what());
    }
    if (!it->is_array() || it->size() != corruptions::kSeverities) {
      throw ConfigError(field, "expected an array of 5 numbers");
    }
    std::array<double, corruptions::kSeverities> ladder{};
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      if (!(*it)[i].is_number()) throw ConfigError(field, "expected an array of 5 numbers");
      ladder[i] = (*it)[i].get<double>();
    }
    table.set_ladder(kind, ladder);
  }
}

void read_data(const json& j, DataConfig& d) {
  ObjectReader r(j, "data");
  r.read("source", d.source);
  r.read("classes", d.classes);
  r.read("image_size", d.image_size);
  r.read("train_samples", d.train_samples);
  r.read("test_samples", d.test_samples);
  r.read("train_dir", d.train_dir);
  r.read("train_labels", d.train_labels);
  r.read("test_dir", d.test_dir);
  r.read("test_labels", d.test_labels);
  r.finish();
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
  RunConfig cfg;
  ObjectReader r(doc, "");
  if (const json* j = r.get("train")) read_train(*j, cfg.train);
  if (const json* j = r.get("attack")) read_attack(*j, cfg.attack);
  if (const json* j = r.get("corruptions")) read_corruptions(*j, cfg.corruptions);
  if (const json* j = r.get("data")) read_data(*j, cfg.data);
  r.read("output_dir", cfg.output_dir);
  r.read("init_embedding", cfg.init_embedding);
  r.read("threads", cfg.threads);
  r.finish();
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& c) {
  json train = {
      {"encoder", std::string(encoders::to_string(c.train.encoder))},
      {"embedding_dim", c.train.embedding_dim},
      {"mode", std::string(to_string(c.train.mode))},
      {"epochs", c.train.epochs},
      {"batch_size", c.train.batch_size},
      {"seed", c.train.seed},
      {"net_lr_start", c.train.net_lr_start},
      {"net_lr_end", c.train.net_lr_end},
      {"net_momentum", c.train.net_momentum},
      {"net_weight_decay", c.train.net_weight_decay},
      {"emb_lr", c.train.emb_lr},
      {"emb_beta1", c.train.emb_beta1},
      {"emb_beta2", c.train.emb_beta2},
      {"emb_weight_decay", c.train.emb_weight_decay},
      {"alpha", c.train.weights.alpha},
      {"lambda", c.train.weights.lambda},
      {"freeze_embedding", c.train.freeze_embedding},
  };
  json attack = {
      {"steps", c.attack.steps},
      {"anneal_rate", c.attack.anneal_rate},
      {"step_size", c.attack.step_size},
      {"epsilon", c.attack.epsilon},
      {"initial_temperature", c.attack.initial_temperature},
      {"restarts", c.attack.restarts},
  };
  json corr = json::object();
  for (const auto& [kind, ladder] : c.corruptions.ladders())
    corr[std::string(corruptions::to_string(kind))] = ladder;
  json data = {
      {"source", c.data.source},
      {"classes", c.data.classes},
      {"image_size", c.data.image_size},
      {"train_samples", c.data.train_samples},
      {"test_samples", c.data.test_samples},
      {"train_dir", c.data.train_dir},
      {"train_labels", c.data.train_labels},
      {"test_dir", c.data.test_dir},
      {"test_labels", c.data.test_labels},
  };
  return json{
      {"train", train},       {"attack", attack},
      {"corruptions", corr},  {"data", data},
      {"output_dir", c.output_dir}, {"init_embedding", c.init_embedding},
      {"threads", c.threads},
  };
}

}  // namespace p2be::training
