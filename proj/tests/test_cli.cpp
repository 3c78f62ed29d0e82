// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "p2be/cli.hpp"
#include "p2be/image.hpp"
#include "p2be/training/checkpoint.hpp"
#include "p2be/training/config.hpp"
#include "p2be/training/dataset.hpp"

using namespace p2be;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "p2be_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
  return s;
}

// Compares against tests/golden/<name>; P2BE_UPDATE_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const std::string& actual) {
  const std::string text = replace_all(actual, work_dir().string(), "<dir>");
  const fs::path path = fs::path(P2BE_GOLDEN_DIR) / name;
  if (const char* update = std::getenv("P2BE_UPDATE_GOLDEN"); update && std::string(update) == "1") {
    std::ofstream(path, std::ios::binary) << text;
  }
  CAPTURE(name);
  CHECK(slurp(path) == text);
}

fs::path write_config(const std::string& name, const nlohmann::json& doc) {
  const auto path = work_dir() / name;
  std::ofstream(path) << doc.dump(2);
  return path;
}

nlohmann::json small_config(const std::string& out_dir) {
  return {
      {"train", {{"embedding_dim", 4}, {"epochs", 2}, {"batch_size", 32}}},
      {"data", {{"classes", 3}, {"image_size", 6}, {"train_samples", 48}, {"test_samples", 24}}},
      {"output_dir", (work_dir() / out_dir).string()},
  };
}

// Trains the shared small model once.
const fs::path& trained_checkpoint() {
  static const fs::path ckpt = [] {
    const auto cfg = write_config("shared.json", small_config("shared"));
    const auto r = run({"train", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    return work_dir() / "shared" / "checkpoint.p2be";
  }();
  return ckpt;
}

}  // namespace

TEST_CASE("cli: no subcommand or unknown flags are usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"train"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"eval", "--checkpoint", "x", "--nope"}).code == 2);
}

TEST_CASE("cli: help documents the config defaults") {
  const auto r = run({"train", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"net_lr_start\": 0.1") != std::string::npos);
  CHECK(r.out.find("\"embedding_dim\": 64") != std::string::npos);
}

TEST_CASE("cli: defaults writes the default config") {
  const auto path = work_dir() / "defaults.json";
  const auto r = run({"defaults", "--out", path.string()});
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(path));
  CHECK(doc == training::to_json(training::RunConfig{}));
  CHECK(training::run_config_from_json(doc).train.epochs == 100);
  const auto s = run({"defaults", "--out", "-"});
  CHECK(nlohmann::json::parse(s.out) == doc);
}

TEST_CASE("cli: train reports missing and invalid configs") {
  const auto missing = run({"train", "--config", "/no/such/config.json"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("/no/such/config.json") != std::string::npos);

  auto bad = small_config("bad");
  bad["train"]["learning_rate"] = 0.1;
  const auto r = run({"train", "--config", write_config("bad.json", bad).string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("train.learning_rate") != std::string::npos);

  const auto path = work_dir() / "broken.json";
  std::ofstream(path) << "{ not json";
  CHECK(run({"train", "--config", path.string()}).code == 2);
}

TEST_CASE("cli: train writes a checkpoint and metrics") {
  const auto& ckpt = trained_checkpoint();
  CHECK(fs::exists(ckpt));
  const auto dir = ckpt.parent_path();
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "steps.csv"));
  CHECK(fs::exists(dir / "config.json"));
  check_golden("train_metrics.csv", slurp(dir / "metrics.csv"));

  const auto cfg = write_config("again.json", small_config("again"));
  const auto r = run({"train", "--config", cfg.string(), "--out-dir", (work_dir() / "again").string()});
  CHECK(r.code == 0);
  check_golden("train_stdout.txt", r.out);
}

TEST_CASE("cli: same seed gives identical CSVs and a new seed changes them") {
  trained_checkpoint();
  const auto cfg = write_config("seeded.json", small_config("unused"));
  const auto a = run({"train", "--config", cfg.string(), "--out-dir", (work_dir() / "seed_a").string()});
  const auto c = run({"train", "--config", cfg.string(), "--seed", "7", "--out-dir", (work_dir() / "seed_c").string()});
  REQUIRE(a.code == 0);
  REQUIRE(c.code == 0);
  const auto shared = work_dir() / "shared";
  CHECK(slurp(work_dir() / "seed_a" / "metrics.csv") == slurp(shared / "metrics.csv"));
  CHECK(slurp(work_dir() / "seed_a" / "steps.csv") == slurp(shared / "steps.csv"));
  auto again = training::Checkpoint::load(work_dir() / "seed_a" / "checkpoint.p2be");
  const auto first = training::Checkpoint::load(shared / "checkpoint.p2be");
  CHECK(again.config["output_dir"] != first.config["output_dir"]);
  again.config = first.config;
  CHECK(again == first);
  CHECK(slurp(work_dir() / "seed_c" / "metrics.csv") != slurp(shared / "metrics.csv"));
}

TEST_CASE("cli: eval output schema") {
  const auto ckpt = trained_checkpoint().string();
  const auto clean = run({"eval", "--checkpoint", ckpt});
  CHECK(clean.code == 0);
  check_golden("eval_clean.txt", clean.out);

  const auto errors = work_dir() / "errors.csv";
  const auto corr = run({"eval", "--checkpoint", ckpt, "--corruptions", "all", "--errors-out", errors.string()});
  CHECK(corr.code == 0);
  check_golden("eval_corruptions.txt", corr.out);

  const auto mce = run({"eval", "--checkpoint", ckpt, "--corruptions", "all", "--baseline-csv", errors.string(), "--mce"});
  CHECK(mce.code == 0);
  CHECK(mce.out.find("mCE: 1.000\n") != std::string::npos);
  check_golden("eval_mce.txt", mce.out);

  const auto attack = run({"eval", "--checkpoint", ckpt, "--attack", "--attack-csv", (work_dir() / "attack.csv").string()});
  CHECK(attack.code == 0);
  check_golden("eval_attack.txt", attack.out);
  std::istringstream csv(slurp(work_dir() / "attack.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "index,clean_correct,adv_correct,loss_trace");
}

TEST_CASE("cli: eval with zero budget keeps the clean error") {
  const auto r = run({"eval", "--checkpoint", trained_checkpoint().string(), "--attack", "--epsilon", "0"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line, last;
  while (std::getline(in, line)) last = line;
  const auto a = last.find(','), b = last.rfind(',');
  CHECK(last.substr(a + 1, b - a - 1) == last.substr(b + 1));
}

TEST_CASE("cli: eval usage errors") {
  const auto ckpt = trained_checkpoint().string();
  CHECK(run({"eval", "--checkpoint", ckpt, "--corruptions", "all", "--mce"}).code == 2);
  CHECK(run({"eval", "--checkpoint", ckpt, "--corruptions", "fog"}).code == 2);
  CHECK(run({"eval", "--checkpoint", ckpt, "--encoder", "one-hot"}).code == 2);
  const auto partial = work_dir() / "partial.csv";
  std::ofstream(partial) << "kind,severity,error\ncontrast,1,0.5\n";
  CHECK(run({"eval", "--checkpoint", ckpt, "--corruptions", "all", "--baseline-csv", partial.string()}).code == 2);
  CHECK(run({"eval", "--checkpoint", "/no/such.p2be"}).code == 1);
}

TEST_CASE("cli: export-sim") {
  const auto th = run({"export-sim", "--encoder", "thermometer", "--dim", "64", "--out", (work_dir() / "th").string()});
  CHECK(th.code == 0);
  check_golden("export_thermometer.txt", th.out);
  const std::string pgm = slurp(work_dir() / "th.pgm");
  const std::string header = "P5\n256 256\n255\n";
  REQUIRE(pgm.size() == header.size() + 65536);
  for (std::size_t i = 0; i < 256; ++i) CHECK(std::uint8_t(pgm[header.size() + 257 * i]) == 255);

  CHECK(run({"export-sim", "--encoder", "one-hot", "--dim", "256", "--out", (work_dir() / "oh").string()}).code == 0);
  const std::string oh = slurp(work_dir() / "oh.pgm");
  for (std::size_t i = 0; i < 256; ++i)
    for (std::size_t j = 0; j < 256; ++j)
      CHECK(std::uint8_t(oh[header.size() + 256 * i + j]) == (i == j ? 255 : 0));

  CHECK(run({"export-sim", "--encoder", "rgb", "--out", (work_dir() / "x").string()}).code == 2);
  CHECK(run({"export-sim", "--out", (work_dir() / "x").string()}).code == 2);

  const auto p = run({"export-sim", "--checkpoint", trained_checkpoint().string(), "--out", (work_dir() / "p").string()});
  CHECK(p.code == 0);
  const std::string ps = slurp(work_dir() / "p.pgm");
  for (std::size_t i = 0; i < 256; ++i)
    for (std::size_t j = 0; j < i; ++j) CHECK(ps[header.size() + 256 * i + j] == ps[header.size() + 256 * j + i]);
}

TEST_CASE("cli: corrupt") {
  const auto data = training::make_synthetic({2, 8, 1, 4});
  const auto input = work_dir() / "in.ppm";
  write_ppm(input, data.images[0]);
  const auto out = [&](const std::string& n) { return (work_dir() / n).string(); };

  const auto bad_kind = run({"corrupt", "--input", input.string(), "--kind", "fog", "--severity", "1", "--output", out("x.ppm")});
  CHECK(bad_kind.code == 2);
  CHECK(bad_kind.err.find("gaussian-noise") != std::string::npos);
  CHECK(bad_kind.err.find("pixelate") != std::string::npos);
  CHECK(run({"corrupt", "--input", input.string(), "--kind", "contrast", "--severity", "6", "--output", out("x.ppm")}).code == 2);
  CHECK(run({"corrupt", "--input", out("none.ppm"), "--kind", "contrast", "--severity", "1", "--output", out("x.ppm")}).code == 2);

  const auto g1 = run({"corrupt", "--input", input.string(), "--kind", "gaussian-noise", "--severity", "3", "--seed", "9", "--output", out("g1.ppm")});
  const auto g2 = run({"corrupt", "--input", input.string(), "--kind", "gaussian-noise", "--severity", "3", "--seed", "9", "--output", out("g2.ppm")});
  CHECK(g1.code == 0);
  check_golden("corrupt_gaussian.txt", g1.out);
  CHECK(slurp(out("g1.ppm")) == slurp(out("g2.ppm")));

  double prev = -1.0;
  for (int s = 1; s <= 5; ++s) {
    const auto name = out("b" + std::to_string(s) + ".ppm");
    REQUIRE(run({"corrupt", "--input", input.string(), "--kind", "brightness", "--severity", std::to_string(s), "--output", name}).code == 0);
    const auto im = read_ppm(fs::path(name));
    const double mean = std::accumulate(im.values().begin(), im.values().end(), 0.0) / double(im.size());
    CHECK(mean > prev);
    prev = mean;
  }
}
