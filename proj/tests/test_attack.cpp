// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "p2be/attack.hpp"
#include "p2be/error.hpp"
#include "p2be/training/model.hpp"
#include "test_util.hpp"

using namespace p2be;
using namespace p2be::attack;
using encoders::BinaryCodebook;
using encoders::EncoderKind;
using p2be::testing::random_image;
using p2be::testing::random_table;

namespace {

int max_deviation(const PixelImage& a, const PixelImage& b) {
  int worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(int(a.values()[i]) - int(b.values()[i])));
  return worst;
}

}  // namespace

TEST_CASE("attack config validation and budget") {
  AttackConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.budget_levels() == 8);
  c.epsilon = 0.0;
  CHECK(c.budget_levels() == 0);
  AttackConfig bad;
  bad.steps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.anneal_rate = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.epsilon = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.initial_temperature = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("level schemes") {
  const auto oh = BinaryCodebook::one_hot(10);
  const LevelScheme s(EncoderKind::one_hot, oh);
  CHECK(s.levels() == 10);
  CHECK(s.level_of(122) == 4);
  CHECK(s.level_of(255) == 9);
  std::mt19937_64 rng(1);
  const auto cb = encoders::binarize_table(random_table(6, rng));
  const LevelScheme p(EncoderKind::p2be, cb);
  CHECK(p.levels() == 256);
  CHECK(p.level_of(77) == 77);
  CHECK_THROWS_AS(LevelScheme(EncoderKind::rgb, oh), ConfigError);
}

TEST_CASE("feasible levels respect the budget") {
  std::mt19937_64 rng(2);
  const auto im = random_image(3, 3, rng);
  const auto th = BinaryCodebook::thermometer(16);
  const LevelScheme scheme(EncoderKind::thermometer, th);
  const LogitRelaxation r(im, scheme, 8);
  for (std::size_t p = 0; p < r.pixels(); ++p) {
    const int x = im.values()[p];
    CHECK(r.feasible(p, r.original_level(p)));
    for (std::size_t l = 0; l < r.levels(); ++l) {
      const auto m = scheme.magnitudes(l);
      const bool reachable = m.lo <= m.hi && int(m.hi) >= x - 8 && int(m.lo) <= x + 8;
      CHECK(r.feasible(p, l) == reachable);
    }
  }
}

TEST_CASE("soft encoding with a single feasible level is the hard code") {
  std::mt19937_64 rng(3);
  const auto im = random_image(2, 3, rng);
  const auto cb = encoders::binarize_table(random_table(5, rng));
  const LevelScheme scheme(EncoderKind::p2be, cb);
  LogitRelaxation r(im, scheme, 0);
  r.initialize(rng);
  const auto hard = encoders::embed_image(im, cb);
  for (double t : {1e-3, 1.0, 50.0}) CHECK(soft_encode(r, t) == hard);
}

TEST_CASE("soft encoding approaches the argmax level as temperature vanishes") {
  std::mt19937_64 rng(4);
  const auto im = random_image(3, 3, rng);
  const auto cb = BinaryCodebook::one_hot(12);
  const LevelScheme scheme(EncoderKind::one_hot, cb);
  LogitRelaxation r(im, scheme, 40);
  r.initialize(rng);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (std::size_t p = 0; p < r.pixels(); ++p)
    for (std::size_t l = 0; l < r.levels(); ++l)
      if (r.feasible(p, l)) r.logits(p)[l] = u(rng);
  const auto soft = soft_encode(r, 1e-6);
  const auto hard = encoders::embed_image(r.harden(), cb);
  for (std::size_t i = 0; i < soft.size(); ++i) CHECK(std::abs(soft[i] - hard[i]) <= 1e-6);
}

TEST_CASE("two equally likely one-hot levels average their codes") {
  // M=4 buckets: [0,63], [64,127], [128,191], [192,255]. 120 +- 10 reaches
  // buckets 1 and 2.
  PixelImage im(1, 1, 120);
  const auto cb = BinaryCodebook::one_hot(4);
  const LevelScheme scheme(EncoderKind::one_hot, cb);
  LogitRelaxation r(im, scheme, 10);
  for (std::size_t p = 0; p < r.pixels(); ++p) {
    std::size_t feasible = 0;
    for (std::size_t l = 0; l < r.levels(); ++l) {
      if (!r.feasible(p, l)) continue;
      r.logits(p)[l] = 0.5f;
      ++feasible;
    }
    CHECK(feasible == 2);
  }
  const auto soft = soft_encode(r, 0.7);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(soft[4 * c + 0] == 0.0f);
    CHECK(soft[4 * c + 1] == doctest::Approx(0.5));
    CHECK(soft[4 * c + 2] == doctest::Approx(0.5));
    CHECK(soft[4 * c + 3] == 0.0f);
  }
}

TEST_CASE("LS-PGA with zero budget returns the input") {
  std::mt19937_64 rng(5);
  auto model = training::Classifier::create(EncoderKind::thermometer, 8, 3, 4, 4, rng);
  std::vector<PixelImage> images;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    images.push_back(random_image(4, 4, rng));
    labels.push_back(i % 3);
  }
  AttackConfig cfg;
  cfg.epsilon = 0.0;
  const auto out = lspga_attack_batch(model.attack_target(), images, labels, cfg, 9);
  for (std::size_t i = 0; i < images.size(); ++i) CHECK(out[i].adversarial == images[i]);
}

TEST_CASE("LS-PGA stays within budget for every encoder") {
  std::mt19937_64 rng(6);
  for (auto kind : {EncoderKind::one_hot, EncoderKind::thermometer, EncoderKind::p2be}) {
    CAPTURE(encoders::to_string(kind));
    auto model = training::Classifier::create(kind, 8, 4, 5, 5, rng);
    std::vector<PixelImage> images;
    std::vector<int> labels;
    for (int i = 0; i < 12; ++i) {
      images.push_back(random_image(5, 5, rng));
      labels.push_back(i % 4);
    }
    AttackConfig cfg;
    cfg.restarts = 2;
    const auto out = lspga_attack_batch(model.attack_target(), images, labels, cfg, 11);
    for (std::size_t i = 0; i < images.size(); ++i) {
      CHECK(max_deviation(out[i].adversarial, images[i]) <= 8);
      CHECK(out[i].loss_trace.size() == std::size_t(cfg.steps));
      for (double v : out[i].loss_trace) CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("LS-PGA is deterministic given the seed") {
  std::mt19937_64 rng(7);
  auto model = training::Classifier::create(EncoderKind::p2be, 6, 3, 4, 4, rng);
  std::vector<PixelImage> images = {random_image(4, 4, rng), random_image(4, 4, rng)};
  const std::vector<int> labels = {0, 2};
  const AttackConfig cfg;
  const auto a = lspga_attack_batch(model.attack_target(), images, labels, cfg, 42);
  const auto b = lspga_attack_batch(model.attack_target(), images, labels, cfg, 42);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a[i].adversarial == b[i].adversarial);
    CHECK(a[i].loss_trace == b[i].loss_trace);
  }
  const auto single = lspga_attack(model.attack_target(), images[0], labels[0], cfg, 42);
  CHECK(single.adversarial.size() == images[0].size());
}

TEST_CASE("LS-PGA rejects mismatched inputs") {
  std::mt19937_64 rng(8);
  auto model = training::Classifier::create(EncoderKind::one_hot, 4, 2, 3, 3, rng);
  std::vector<PixelImage> images = {random_image(3, 3, rng)};
  const std::vector<int> two_labels = {0, 1};
  CHECK_THROWS_AS(lspga_attack_batch(model.attack_target(), images, two_labels, {}, 1), ShapeError);
  const auto other = BinaryCodebook::one_hot(5);
  const AttackTarget wrong{model.network(), EncoderKind::one_hot, other};
  const std::vector<int> one_label = {0};
  CHECK_THROWS_AS(lspga_attack_batch(wrong, images, one_label, {}, 1), ShapeError);
}
