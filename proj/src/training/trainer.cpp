// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/training/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "p2be/error.hpp"
#include "p2be/log.hpp"
#include "p2be/losses.hpp"
#include "p2be/rng.hpp"
#include "p2be/training/augment.hpp"
#include "p2be/training/optim.hpp"

namespace p2be::training {

using encoders::EncoderKind;
using numgraph::Tensor;

namespace {

std::vector<int> argmax_rows(const Tensor& logits) {
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (logits[r * k + c] > logits[r * k + best]) best = c;
    out[r] = int(best);
  }
  return out;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::size_t(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void add_scaled(Tensor& dst, const Tensor& src, double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += float(scale * src[i]);
}

std::size_t count_correct(std::span<const int> predicted, std::span<const int> labels) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) n += predicted[i] == labels[i];
  return n;
}

}  // namespace

TrainResult train(const TrainRequest& request, const Dataset& train_set) {
  const TrainConfig& cfg = request.train;
  cfg.validate(/*allow_zero_epochs=*/true);
  train_set.validate();
  const bool p2be = cfg.encoder == EncoderKind::p2be;
  if (cfg.mode != TrainMode::clean_consistency) request.attack.validate();
  if (p2be && cfg.mode == TrainMode::advtrain) {
    log::warn("p2be with advtrain is known to fail to learn; continuing");
  }

  auto init_rng = make_stream(cfg.seed, "init");
  Classifier model = Classifier::create(cfg.encoder, cfg.embedding_dim, train_set.num_classes, train_set.height(),
                                        train_set.width(), init_rng);
  if (request.initial_table) model.set_table(*request.initial_table);

  SgdState sgd{model.network().parameters().zeros_like()};
  AdamWState adamw;
  if (p2be) {
    adamw.first_moment.assign(model.table().weights().size(), 0.0f);
    adamw.second_moment.assign(model.table().weights().size(), 0.0f);
  }

  TrainResult result;
  const std::size_t n = train_set.size();
  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::uint64_t total_steps = std::uint64_t(cfg.epochs) * steps_per_epoch;
  const auto& weights = cfg.weights;
  const bool update_table = p2be && !cfg.freeze_embedding;
  std::uint64_t step = 0;

  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = make_stream(cfg.seed, "shuffle", std::uint64_t(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochMetrics em;
    em.epoch = epoch;
    em.lr = cosine_lr(step, total_steps, cfg.net_lr_start, cfg.net_lr_end);
    std::size_t correct = 0;

    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const std::size_t b = end - begin;
      std::vector<PixelImage> clean;
      std::vector<int> labels;
      for (std::size_t i = begin; i < end; ++i) {
        clean.push_back(train_set.images[order[i]]);
        labels.push_back(train_set.labels[order[i]]);
      }

      // Assemble the images fed to the network in this step.
      std::vector<PixelImage> batch;
      std::size_t views = 1;
      bool clean_first = true;
      if (cfg.mode == TrainMode::clean_consistency) {
        batch = clean;
        if (weights.alpha > 0.0) {
          auto aug_rng = make_stream(cfg.seed, "augment", step);
          for (int v = 0; v < 2; ++v)
            for (const auto& im : clean) batch.push_back(augment_chain(im, aug_rng));
          views = 3;
        }
      } else {
        auto adv = attack::lspga_attack_batch(model.attack_target(), clean, labels, request.attack,
                                              derive_seed(cfg.seed, "train-attack", step));
        if (cfg.mode == TrainMode::adversarial_consistency) {
          batch = clean;
          for (auto& r : adv) batch.push_back(std::move(r.adversarial));
          views = weights.alpha > 0.0 ? 2 : 1;
          if (views == 1) batch.resize(b);
        } else {
          for (auto& r : adv) batch.push_back(std::move(r.adversarial));
          clean_first = false;
        }
      }

      const Tensor input = model.encode(batch);
      const auto trace = model.network().evaluate(input);
      const Tensor& logits = trace.values[model.network().output()];
      std::vector<Tensor> parts;
      for (std::size_t v = 0; v < views; ++v) parts.push_back(numgraph::slice_rows(logits, v * b, (v + 1) * b));

      losses::LossParts lp;
      auto ce = losses::cross_entropy_with_grad(parts[0], labels);
      lp.cross_entropy = ce.value;
      std::vector<Tensor> upstream_parts;
      upstream_parts.push_back(std::move(ce.grad));
      for (std::size_t v = 1; v < views; ++v) upstream_parts.emplace_back(parts[v].shape());
      if (views > 1) {
        std::vector<const Tensor*> ptrs;
        for (const auto& p : parts) ptrs.push_back(&p);
        auto jsd = losses::jsd_from_logits(ptrs);
        lp.consistency = jsd.value;
        for (std::size_t v = 0; v < views; ++v) add_scaled(upstream_parts[v], jsd.grads[v], weights.alpha);
      }
      std::optional<losses::SmoothnessResult> smooth;
      if (p2be) {
        smooth = losses::smoothness_loss(model.table());
        lp.smoothness = smooth->value;
      }
      const Tensor upstream = numgraph::concat_rows<float>(upstream_parts);
      const auto grads = model.network().gradients(trace, upstream);

      if (clean_first) correct += count_correct(argmax_rows(parts[0]), labels);
      else correct += count_correct(model.predict(clean), labels);

      const double lr = cosine_lr(step, total_steps, cfg.net_lr_start, cfg.net_lr_end);
      sgd_momentum_step(model.network().parameters(), grads.parameters, sgd, lr, cfg.net_momentum,
                        cfg.net_weight_decay);
      if (update_table) {
        Tensor table_grad = encoders::p2be_backward_batch(batch, grads.input, model.table());
        add_scaled(table_grad, smooth->grad, weights.lambda);
        adamw_step(model.table().mutable_weights(), table_grad.data(), adamw, cfg.emb_lr, cfg.emb_beta1,
                   cfg.emb_beta2, cfg.emb_weight_decay);
        model.refresh_codebook();
      }

      const auto objective = cfg.mode == TrainMode::clean_consistency ? losses::Objective::clean_consistency
                                                                      : losses::Objective::adversarial_consistency;
      const auto total = losses::total_loss(objective, lp, weights);
      ++step;
      result.steps.push_back({step, lp.cross_entropy, lp.consistency, lp.smoothness, total.total});
      em.cross_entropy += lp.cross_entropy;
      em.consistency += lp.consistency;
      em.smoothness += lp.smoothness;
    }

    em.cross_entropy /= double(steps_per_epoch);
    em.consistency /= double(steps_per_epoch);
    em.smoothness /= double(steps_per_epoch);
    em.train_accuracy = double(correct) / double(n);
    if (request.test_set) em.clean_test_error = error_rate(model, *request.test_set);
    if (!std::isfinite(em.cross_entropy)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
    }
    result.epochs.push_back(em);
    if (request.on_epoch) request.on_epoch(em);
  }

  result.checkpoint = Checkpoint::capture(model, request.config_echo, step, sgd, adamw);
  return result;
}

std::pair<Dataset, std::optional<Dataset>> load_datasets(const DataConfig& data, std::uint64_t seed) {
  data.validate();
  if (data.source == "synthetic") {
    Dataset tr = make_synthetic({data.classes, data.image_size, data.train_samples, derive_seed(seed, "data-train")});
    Dataset te = make_synthetic({data.classes, data.image_size, data.test_samples, derive_seed(seed, "data-test")});
    return {std::move(tr), std::move(te)};
  }
  Dataset tr = load_ppm_dataset(data.train_dir, data.train_labels, data.classes);
  std::optional<Dataset> te;
  if (!data.test_labels.empty()) {
    te = load_ppm_dataset(data.test_dir.empty() ? data.train_dir : data.test_dir, data.test_labels, data.classes);
  }
  return {std::move(tr), std::move(te)};
}

double error_rate(const Classifier& model, const Dataset& data, std::size_t batch_size) {
  std::size_t wrong = 0;
  const std::span<const PixelImage> images(data.images);
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t len = std::min(batch_size, data.size() - begin);
    const auto pred = model.predict(images.subspan(begin, len));
    for (std::size_t i = 0; i < len; ++i) wrong += pred[i] != data.labels[begin + i];
  }
  return double(wrong) / double(data.size());
}

EvalReport evaluate(const Classifier& model, const Dataset& data, const EvalOptions& options) {
  data.validate();
  if (data.num_classes > model.classes()) throw ShapeError("dataset has more classes than the model");
  if (options.batch_size == 0) throw std::invalid_argument("evaluation batch size must be >= 1");
  const std::size_t n = data.size();
  const std::size_t bs = options.batch_size;
  const std::size_t batches = (n + bs - 1) / bs;
  const std::span<const PixelImage> images(data.images);
  const std::span<const int> labels(data.labels);

  EvalReport report;
  std::vector<int> clean_pred(n);
  parallel_for(batches, options.threads, [&](std::size_t k) {
    const std::size_t begin = k * bs, len = std::min(bs, n - begin);
    const auto pred = model.predict(images.subspan(begin, len));
    std::copy(pred.begin(), pred.end(), clean_pred.begin() + std::ptrdiff_t(begin));
  });
  report.clean_error = 1.0 - double(count_correct(clean_pred, labels)) / double(n);

  const auto& specs = options.corruptions;
  std::vector<double> cell_error(specs.size());
  parallel_for(specs.size(), options.threads, [&](std::size_t c) {
    const auto& spec = specs[c];
    const auto base = derive_seed(options.seed, corruptions::to_string(spec.kind), std::uint64_t(spec.severity));
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += bs) {
      const std::size_t len = std::min(bs, n - begin);
      std::vector<PixelImage> batch;
      for (std::size_t i = begin; i < begin + len; ++i)
        batch.push_back(corruptions::apply_corruption(images[i], spec, derive_seed(base, "sample", i)));
      correct += count_correct(model.predict(batch), labels.subspan(begin, len));
    }
    cell_error[c] = 1.0 - double(correct) / double(n);
  });
  for (std::size_t c = 0; c < specs.size(); ++c)
    report.corrupted[{std::string(corruptions::to_string(specs[c].kind)), specs[c].severity}] = cell_error[c];

  if (options.attack) {
    const auto target = model.attack_target();
    std::vector<attack::AttackResult> results(n);
    parallel_for(batches, options.threads, [&](std::size_t k) {
      const std::size_t begin = k * bs, len = std::min(bs, n - begin);
      auto out = attack::lspga_attack_batch(target, images.subspan(begin, len), labels.subspan(begin, len),
                                            *options.attack, derive_seed(options.seed, "eval-attack", k));
      std::move(out.begin(), out.end(), results.begin() + std::ptrdiff_t(begin));
    });
    std::vector<int> adv_pred(n);
    std::vector<PixelImage> adv(n);
    for (std::size_t i = 0; i < n; ++i) adv[i] = results[i].adversarial;
    parallel_for(batches, options.threads, [&](std::size_t k) {
      const std::size_t begin = k * bs, len = std::min(bs, n - begin);
      const auto pred = model.predict(std::span<const PixelImage>(adv).subspan(begin, len));
      std::copy(pred.begin(), pred.end(), adv_pred.begin() + std::ptrdiff_t(begin));
    });
    report.attacked_error = 1.0 - double(count_correct(adv_pred, labels)) / double(n);
    for (std::size_t i = 0; i < n; ++i) {
      report.attack_records.push_back(
          {i, clean_pred[i] == labels[i], adv_pred[i] == labels[i], std::move(results[i].loss_trace)});
    }
    if (options.keep_adversarial) report.adversarial = std::move(adv);
  }
  return report;
}

EvalReport evaluate(const Checkpoint& checkpoint, const Dataset& data, const EvalOptions& options,
                    std::optional<EncoderKind> expected) {
  if (expected && *expected != checkpoint.encoder) {
    throw ConfigError("encoder", "checkpoint uses " + std::string(encoders::to_string(checkpoint.encoder)) +
                                     " but " + std::string(encoders::to_string(*expected)) + " was requested");
  }
  if (data.height() != checkpoint.height || data.width() != checkpoint.width) {
    throw ShapeError("dataset images are " + std::to_string(data.height()) + "x" + std::to_string(data.width()) +
                     ", checkpoint expects " + std::to_string(checkpoint.height) + "x" +
                     std::to_string(checkpoint.width));
  }
  return evaluate(checkpoint.model(), data, options);
}

std::vector<std::string> non_monotone_kinds(const corruptions::ErrorMap& errors) {
  std::vector<std::string> out;
  const std::string* kind = nullptr;
  double prev = 0.0;
  bool flagged = false;
  for (const auto& [key, err] : errors) {
    if (!kind || *kind != key.first) {
      kind = &key.first;
      flagged = false;
    } else if (err < prev && !flagged) {
      out.push_back(key.first);
      flagged = true;
    }
    prev = err;
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void write_epoch_csv(std::ostream& out, const std::vector<EpochMetrics>& epochs) {
  out << "epoch,lr,L_ce,L_consistency,L_smooth,train_acc,clean_test_err\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << fmt(e.lr) << ',' << fmt(e.cross_entropy) << ',' << fmt(e.consistency) << ','
        << fmt(e.smoothness) << ',' << fmt(e.train_accuracy) << ','
        << (e.clean_test_error ? fmt(*e.clean_test_error) : std::string()) << '\n';
  }
}

void write_step_csv(std::ostream& out, const std::vector<StepMetrics>& steps) {
  out << "step,L_ce,L_consistency,L_smooth,L_total\n";
  for (const auto& s : steps) {
    out << s.step << ',' << fmt(s.cross_entropy) << ',' << fmt(s.consistency) << ',' << fmt(s.smoothness) << ','
        << fmt(s.total) << '\n';
  }
}

void write_attack_csv(std::ostream& out, const std::vector<AttackRecord>& records) {
  out << "index,clean_correct,adv_correct,loss_trace\n";
  for (const auto& r : records) {
    out << r.index << ',' << int(r.clean_correct) << ',' << int(r.adversarial_correct) << ',';
    for (std::size_t i = 0; i < r.loss_trace.size(); ++i) out << (i ? ";" : "") << fmt(r.loss_trace[i]);
    out << '\n';
  }
}

}  // namespace p2be::training
