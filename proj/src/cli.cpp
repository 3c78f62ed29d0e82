// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "p2be/corruptions.hpp"
#include "p2be/encoders.hpp"
#include "p2be/error.hpp"
#include "p2be/image.hpp"
#include "p2be/log.hpp"
#include "p2be/training/checkpoint.hpp"
#include "p2be/training/config.hpp"
#include "p2be/training/trainer.hpp"

namespace p2be::cli {

namespace fs = std::filesystem;
using namespace p2be::training;

namespace {

// A usage or configuration problem; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> threads;
  bool verbose = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = read_config(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
  if (a.threads) cfg.threads = *a.threads;
  cfg.validate();

  auto [train_set, test_set] = load_datasets(cfg.data, cfg.train.seed);
  TrainRequest req;
  req.train = cfg.train;
  req.attack = cfg.attack;
  req.test_set = test_set ? &*test_set : nullptr;
  req.config_echo = to_json(cfg);
  if (!cfg.init_embedding.empty()) {
    const auto source = Checkpoint::load(cfg.init_embedding);
    if (!source.table) throw UsageError("init_embedding checkpoint '" + cfg.init_embedding + "' has no p2be table");
    req.initial_table = *source.table;
  }
  if (a.verbose) {
    req.on_epoch = [&err, total = cfg.train.epochs](const EpochMetrics& e) {
      err << "epoch " << e.epoch << "/" << total << " L_ce=" << fixed(e.cross_entropy, 4)
          << " train_acc=" << fixed(e.train_accuracy, 4) << '\n';
    };
  }

  const auto result = train(req, train_set);

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  result.checkpoint.save(dir / "checkpoint.p2be");
  std::ostringstream metrics, steps;
  write_epoch_csv(metrics, result.epochs);
  write_step_csv(steps, result.steps);
  write_text(dir / "metrics.csv", metrics.str());
  write_text(dir / "steps.csv", steps.str());
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

  const auto model = result.checkpoint.model();
  out << "checkpoint: " << (dir / "checkpoint.p2be").string() << '\n';
  out << "train_error: " << fixed(error_rate(model, train_set), 4) << '\n';
  if (test_set) out << "clean_error: " << fixed(error_rate(model, *test_set), 4) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::string split = "test";
  std::string corruptions;
  bool attack = false;
  std::optional<double> epsilon;
  std::string baseline_csv;
  bool mce = false;
  std::string errors_out;
  std::string attack_csv;
  std::string encoder;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

std::vector<corruptions::CorruptionKind> parse_kind_list(const std::string& text) {
  if (text == "all") return corruptions::all_corruptions();
  std::vector<corruptions::CorruptionKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(corruptions::parse_corruption(item));
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--corruptions: ") + e.what());
    }
  }
  if (out.empty()) throw UsageError("--corruptions: expected 'all' or a comma-separated list of kinds");
  return out;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.mce && a.baseline_csv.empty()) throw UsageError("--mce requires --baseline-csv");
  if (!a.baseline_csv.empty() && a.corruptions.empty()) throw UsageError("--baseline-csv requires --corruptions");
  std::optional<encoders::EncoderKind> expected;
  if (!a.encoder.empty()) {
    try {
      expected = encoders::parse_encoder(a.encoder);
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--encoder: ") + e.what());
    }
  }
  std::vector<corruptions::CorruptionKind> kinds;
  if (!a.corruptions.empty()) kinds = parse_kind_list(a.corruptions);
  corruptions::ErrorMap baseline;
  if (!a.baseline_csv.empty()) {
    std::ifstream in(a.baseline_csv);
    if (!in) throw UsageError("cannot open baseline CSV '" + a.baseline_csv + "'");
    try {
      baseline = corruptions::read_error_csv(in);
    } catch (const FormatError& e) {
      throw UsageError(a.baseline_csv + ": " + e.what());
    }
  }

  const auto ckpt = Checkpoint::load(a.checkpoint);
  RunConfig cfg = a.config.empty() ? run_config_from_json(ckpt.config) : read_config(a.config);
  if (a.threads) cfg.threads = *a.threads;
  if (a.epsilon) cfg.attack.epsilon = *a.epsilon;
  cfg.attack.validate();
  auto [train_set, test_set] = load_datasets(cfg.data, cfg.train.seed);
  if (a.split != "train" && !test_set) throw UsageError("the configured data source has no test split");
  const Dataset& data = a.split == "train" ? train_set : *test_set;

  EvalOptions opts;
  for (auto kind : kinds)
    for (int s = 1; s <= corruptions::kSeverities; ++s) opts.corruptions.push_back(cfg.corruptions.spec(kind, s));
  if (a.attack) opts.attack = cfg.attack;
  opts.seed = a.seed.value_or(cfg.train.seed);
  opts.threads = cfg.threads;

  const auto report = evaluate(ckpt, data, opts, expected);

  out << "clean_error: " << fixed(report.clean_error, 4) << '\n';
  if (!kinds.empty()) {
    out << "kind,severity,error\n";
    for (const auto& [key, e] : report.corrupted) out << key.first << ',' << key.second << ',' << fixed(e, 4) << '\n';
    corruptions::ErrorTable table{report.corrupted, {}};
    out << "mean_corrupted_error: " << fixed(corruptions::mean_error_cifar_style(table), 4) << '\n';
    for (const auto& kind : non_monotone_kinds(report.corrupted))
      log::warn(kind + ": error is not monotone in severity");
    if (!baseline.empty()) {
      for (const auto& [key, e] : report.corrupted) {
        auto it = baseline.find(key);
        if (it == baseline.end()) {
          throw UsageError("baseline CSV has no entry for " + key.first + "/" + std::to_string(key.second));
        }
        table.baseline_errors.insert(*it);
      }
      try {
        table.validate();
        out << "kind,CE\n";
        for (const auto& kind : table.kinds())
          out << kind << ',' << fixed(corruptions::corruption_error(table, kind), 3) << '\n';
        out << "mCE: " << fixed(corruptions::mean_corruption_error(table), 3) << '\n';
      } catch (const std::domain_error& e) {
        throw UsageError(std::string("cannot compute CE: ") + e.what());
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("baseline CSV: ") + e.what());
      }
    }
    if (!a.errors_out.empty()) {
      std::ostringstream csv;
      corruptions::write_error_csv(csv, report.corrupted);
      write_text(a.errors_out, csv.str());
    }
  }
  if (report.attacked_error) {
    out << "encoder,clean_error,attacked_error\n";
    out << encoders::to_string(ckpt.encoder) << ',' << fixed(report.clean_error, 4) << ','
        << fixed(*report.attacked_error, 4) << '\n';
    if (!a.attack_csv.empty()) {
      std::ostringstream csv;
      write_attack_csv(csv, report.attack_records);
      write_text(a.attack_csv, csv.str());
    }
  }
  (void)err;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CorruptArgs {
  std::string input;
  std::string kind;
  int severity = 1;
  std::uint64_t seed = 0;
  std::string output;
  std::string config;
};

int cmd_corrupt(const CorruptArgs& a, std::ostream& out) {
  corruptions::CorruptionKind kind;
  try {
    kind = corruptions::parse_corruption(a.kind);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (a.severity < 1 || a.severity > corruptions::kSeverities) {
    throw UsageError("--severity must be in [1, " + std::to_string(corruptions::kSeverities) + "], got " +
                     std::to_string(a.severity));
  }
  const auto table = a.config.empty() ? corruptions::SeverityTable::defaults() : read_config(a.config).corruptions;
  const auto spec = table.spec(kind, a.severity);
  std::ifstream probe(a.input, std::ios::binary);
  if (!probe) throw UsageError("cannot open input image '" + a.input + "'");
  const PixelImage image = read_ppm(probe);
  write_ppm(fs::path(a.output), corruptions::apply_corruption(image, spec, a.seed));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", spec.parameters.at(0));
  out << "kind: " << corruptions::to_string(kind) << '\n';
  out << "severity: " << a.severity << '\n';
  out << "parameter: " << buf << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string checkpoint;
  std::string encoder;
  std::size_t dim = 64;
  std::string out;
};

int cmd_export_sim(const ExportArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() == a.encoder.empty()) throw UsageError("give exactly one of --checkpoint or --encoder");
  std::optional<encoders::BinaryCodebook> codebook;
  std::string source;
  if (!a.encoder.empty()) {
    encoders::EncoderKind kind;
    try {
      kind = encoders::parse_encoder(a.encoder);
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--encoder: ") + e.what());
    }
    if (a.dim == 0) throw UsageError("--dim must be >= 1");
    switch (kind) {
      case encoders::EncoderKind::one_hot: codebook = encoders::BinaryCodebook::one_hot(a.dim); break;
      case encoders::EncoderKind::thermometer: codebook = encoders::BinaryCodebook::thermometer(a.dim); break;
      case encoders::EncoderKind::rgb: throw UsageError("the rgb encoder has no binary codebook");
      case encoders::EncoderKind::p2be:
        throw UsageError("a p2be codebook comes from a checkpoint; use --checkpoint");
    }
    source = std::string(encoders::to_string(kind));
  } else {
    const auto ckpt = Checkpoint::load(a.checkpoint);
    if (!ckpt.table) {
      throw UsageError("checkpoint encoder is " + std::string(encoders::to_string(ckpt.encoder)) +
                       ", which has no learned table; use --encoder for hand-coded encoders");
    }
    codebook = encoders::binarize_table(*ckpt.table);
    source = "p2be";
  }
  const auto sim = encoders::cosine_similarity_matrix(*codebook);
  const std::string pgm = a.out + ".pgm", csv = a.out + ".csv", codes = a.out + "_codes.csv";
  {
    std::ostringstream s;
    encoders::write_similarity_pgm(s, sim);
    write_text(pgm, s.str());
  }
  {
    std::ostringstream s;
    encoders::write_similarity_csv(s, sim);
    write_text(csv, s.str());
  }
  {
    std::ostringstream s;
    encoders::write_codebook_csv(s, *codebook);
    write_text(codes, s.str());
  }
  out << "encoder: " << source << '\n';
  out << "dim: " << codebook->dim() << '\n';
  out << "heatmap: " << pgm << '\n';
  out << "similarity: " << csv << '\n';
  out << "codebook: " << codes << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_defaults(const std::string& path, std::ostream& out) {
  const std::string text = to_json(RunConfig{}).dump(2) + "\n";
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text(path, text);
    out << "wrote " << path << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pixel-to-binary-embedding robustness toolkit", "p2be"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "p2be 1.0.0");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a JSON config");
  train_cmd->add_option("--config", train_args.config, "Run config (JSON)")->required();
  train_cmd->add_option("--seed", train_args.seed, "Override train.seed");
  train_cmd->add_option("--out-dir", train_args.out_dir, "Override output_dir");
  train_cmd->add_option("--threads", train_args.threads, "Worker cap")->check(CLI::PositiveNumber);
  train_cmd->add_flag("--verbose", train_args.verbose, "Per-epoch progress on stderr");
  train_cmd->footer("Config keys and defaults:\n" + to_json(RunConfig{}).dump(2));

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--config", eval_args.config, "Config whose data/attack/corruption sections to use");
  eval_cmd->add_option("--split", eval_args.split, "Dataset split")->check(CLI::IsMember({"train", "test"}));
  eval_cmd->add_option("--corruptions", eval_args.corruptions, "'all' or comma-separated kinds");
  eval_cmd->add_flag("--attack", eval_args.attack, "Run the LS-PGA attack");
  eval_cmd->add_option("--epsilon", eval_args.epsilon, "Override attack.epsilon")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--baseline-csv", eval_args.baseline_csv, "Baseline errors (kind,severity,error)");
  eval_cmd->add_flag("--mce", eval_args.mce, "Require CE and mCE output");
  eval_cmd->add_option("--errors-out", eval_args.errors_out, "Write corrupted errors as CSV");
  eval_cmd->add_option("--attack-csv", eval_args.attack_csv, "Write per-sample attack results");
  eval_cmd->add_option("--encoder", eval_args.encoder, "Expected encoder of the checkpoint");
  eval_cmd->add_option("--seed", eval_args.seed, "Corruption and attack seed (default: train.seed)");
  eval_cmd->add_option("--threads", eval_args.threads, "Worker cap")->check(CLI::PositiveNumber);

  CorruptArgs corrupt_args;
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Corrupt one PPM image");
  corrupt_cmd->add_option("--input", corrupt_args.input, "Input PPM")->required();
  corrupt_cmd->add_option("--kind", corrupt_args.kind, "Corruption kind")->required();
  corrupt_cmd->add_option("--severity", corrupt_args.severity, "Severity 1..5")->required();
  corrupt_cmd->add_option("--seed", corrupt_args.seed, "Noise seed");
  corrupt_cmd->add_option("--output", corrupt_args.output, "Output PPM")->required();
  corrupt_cmd->add_option("--config", corrupt_args.config, "Config with corruption ladder overrides");

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export-sim", "Export the codebook similarity heatmap");
  export_cmd->add_option("--checkpoint", export_args.checkpoint, "Checkpoint with a p2be table");
  export_cmd->add_option("--encoder", export_args.encoder, "Hand-coded encoder: one-hot or thermometer");
  export_cmd->add_option("--dim", export_args.dim, "Bits per channel for --encoder");
  export_cmd->add_option("--out", export_args.out, "Output prefix (.pgm, .csv, _codes.csv)")->required();

  std::string defaults_path;
  auto* defaults_cmd = app.add_subcommand("defaults", "Write the default config");
  defaults_cmd->add_option("--out", defaults_path, "Output path, '-' for stdout")->default_val("defaults.json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto previous = log::set_warning_sink([&err](std::string_view msg) { err << "warning: " << msg << '\n'; });
  struct Restore {
    log::Sink sink;
    ~Restore() { log::set_warning_sink(std::move(sink)); }
  } restore{std::move(previous)};

  try {
    if (*train_cmd) return cmd_train(train_args, out, err);
    if (*eval_cmd) return cmd_eval(eval_args, out, err);
    if (*corrupt_cmd) return cmd_corrupt(corrupt_args, out);
    if (*export_cmd) return cmd_export_sim(export_args, out);
    if (*defaults_cmd) return cmd_defaults(defaults_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace p2be::cli
