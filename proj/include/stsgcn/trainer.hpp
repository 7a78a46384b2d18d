#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "stsgcn/config.hpp"
#include "stsgcn/error.hpp"
#include "stsgcn/losses.hpp"
#include "stsgcn/model.hpp"
#include "stsgcn/optimizer.hpp"
#include "stsgcn/random.hpp"
#include "stsgcn/tape.hpp"
#include "stsgcn/text_io.hpp"
#include "stsgcn/windows.hpp"

namespace stsgcn {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  LrSchedule schedule;
  AdamConfig adam;
  LossKind loss = LossKind::Mpjpe;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const {
    if (epochs == 0) throw ConfigError("train.epochs must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(schedule.lr0 > 0.0)) throw ConfigError("train.lr must be positive");
    if (!(schedule.decay_factor > 0.0)) throw ConfigError("train.decay_factor must be positive");
    if (schedule.decay_every == 0) throw ConfigError("train.decay_every must be positive");
    if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0 && adam.beta2 > 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0)) {
      throw ConfigError("train adam constants out of range");
    }
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;

  // Epoch-average train loss never rises after `warmup` epochs.
  bool monotone_after(std::size_t warmup) const {
    for (std::size_t i = warmup + 1; i < epochs.size(); ++i) {
      if (epochs[i].train_loss > epochs[i - 1].train_loss) return false;
    }
    return true;
  }

  std::string to_csv() const {
    std::string out = "epoch,train_loss,val_loss,lr,seconds\n";
    for (const auto& e : epochs) {
      out += std::to_string(e.epoch) + "," + text::format_real(e.train_loss) + "," +
             (std::isnan(e.val_loss) ? std::string("nan") : text::format_real(e.val_loss)) + "," +
             text::format_real(e.lr) + "," + text::format_real(e.seconds) + "\n";
    }
    return out;
  }
};

template <typename S>
struct TrainResult {
  StsGcn<S> model;
  TrainReport report;
};

namespace detail {

inline void fisher_yates(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

inline void check_windows(const ModelConfig& cfg, const WindowSet& ws, const char* what) {
  if (ws.joints != cfg.joints || ws.observed != cfg.observed || ws.horizon != cfg.horizon) {
    throw DimensionError(std::string(what) + " windows are V=" + std::to_string(ws.joints) + " T=" +
                         std::to_string(ws.observed) + " K=" + std::to_string(ws.horizon) + " but the model expects V=" +
                         std::to_string(cfg.joints) + " T=" + std::to_string(cfg.observed) +
                         " K=" + std::to_string(cfg.horizon));
  }
}

}  // namespace detail

/// Runs the model over every window in eval mode; returns [N,3,V,K].
template <typename S>
Tensor<S> predict_windows(StsGcn<S>& model, const WindowSet& ws, std::size_t batch_size = 256) {
  if (ws.empty()) throw DataError("predict_windows: empty window set");
  detail::check_windows(model.config(), ws, "prediction");
  const auto& cfg = model.config();
  Tensor<S> out({ws.size(), 3, cfg.joints, cfg.horizon});
  const std::size_t block = ws.target_block();
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ws.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(ws.size(), start + batch_size); ++i) idx.push_back(i);
    auto [X, Y] = gather_batch<S>(ws, idx);
    Tape<S> tape(false);
    Tensor<S> P = model.forward(tape, X, false);
    std::copy(P.data().begin(), P.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(start * block));
  }
  return out;
}

/// Mean loss over a window set in eval mode, weighted by batch size.
template <typename S>
double evaluate_loss(StsGcn<S>& model, const WindowSet& ws, LossKind kind, std::size_t batch_size = 256) {
  if (ws.empty()) throw DataError("evaluate_loss: empty window set");
  detail::check_windows(model.config(), ws, "evaluation");
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ws.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(ws.size(), start + batch_size); ++i) idx.push_back(i);
    auto [X, Y] = gather_batch<S>(ws, idx);
    Tape<S> tape(false);
    Tensor<S> P = model.forward(tape, X, false);
    total += static_cast<double>(compute_loss(tape, kind, P, Y).item()) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(ws.size());
}

using EpochCallback = std::function<void(const EpochRecord&)>;

/// End-to-end supervised training. Deterministic given the seeds: the model is
/// initialized from `train_cfg.seed` and batches are shuffled from a stream
/// derived from it. Returns the parameters of the epoch with the lowest
/// validation loss (the last epoch when no validation windows are given).
template <typename S>
TrainResult<S> train(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const WindowSet& windows,
                     const WindowSet& val_windows, const EpochCallback& on_epoch = {}) {
  model_cfg.validate();
  train_cfg.validate();
  if (windows.empty()) throw DataError("train: empty window set");
  detail::check_windows(model_cfg, windows, "training");
  if (!val_windows.empty()) detail::check_windows(model_cfg, val_windows, "validation");
  if (windows.representation != loss_representation(train_cfg.loss)) {
    throw ConfigError("loss " + std::string(to_string(train_cfg.loss)) + " needs " +
                      std::string(to_string(loss_representation(train_cfg.loss))) + " data, got " +
                      std::string(to_string(windows.representation)));
  }

  StsGcn<S> model = StsGcn<S>::init(model_cfg, train_cfg.seed);
  std::vector<Tensor<S>> params;
  for (const auto& nt : model.parameters()) params.push_back(nt.tensor);
  Adam<S> adam(params, train_cfg.adam);
  Rng shuffle_rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult<S> result{model.clone(), {}};
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_at_epoch(train_cfg.schedule, epoch);
    if (train_cfg.shuffle) detail::fisher_yates(order, shuffle_rng);
    double total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + train_cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      auto [X, Y] = gather_batch<S>(windows, idx);
      model.zero_grad();
      Tape<S> tape;
      Tensor<S> loss = compute_loss(tape, train_cfg.loss, model.forward(tape, X, true), Y);
      const double value = static_cast<double>(loss.item());
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                  std::to_string(batch_index),
                              epoch, batch_index);
      }
      tape.backward(loss);
      try {
        adam.step(lr);
      } catch (const DataError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + " batch " +
                                  std::to_string(batch_index),
                              epoch, batch_index);
      }
      total += value * static_cast<double>(idx.size());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(windows.size());
    rec.lr = lr;
    if (!val_windows.empty()) rec.val_loss = evaluate_loss(model, val_windows, train_cfg.loss, train_cfg.batch_size);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.epochs.push_back(rec);
    const bool better = val_windows.empty() || rec.val_loss < best_val;
    if (better) {
      if (!val_windows.empty()) best_val = rec.val_loss;
      result.report.best_epoch = epoch;
      result.model.copy_state_from(model);
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace stsgcn
