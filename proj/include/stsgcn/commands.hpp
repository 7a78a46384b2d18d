#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "stsgcn/adjacency_io.hpp"
#include "stsgcn/checkpoint.hpp"
#include "stsgcn/evaluation.hpp"
#include "stsgcn/model.hpp"
#include "stsgcn/pose_sequence.hpp"
#include "stsgcn/run_config.hpp"
#include "stsgcn/synth.hpp"
#include "stsgcn/text_io.hpp"
#include "stsgcn/trainer.hpp"
#include "stsgcn/windows.hpp"

// Command bodies behind the stsgcn tool. Each writes its primary outputs under
// the configured output directory and reports progress on `log`.
//
//   <out>/config.json          effective configuration (every command)
//   <out>/data/<split>/*.pose  synth
//   <out>/checkpoint.txt       train
//   <out>/train_report.csv     train
//   <out>/eval_report.csv|txt  eval
//   <out>/prediction.pose      predict
//   <out>/adjacency_layer<l>_<kind>.csv   export-graph

namespace stsgcn {

using Model = StsGcn<float>;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline void write_config_snapshot(const RunConfig& rc) {
  text::write_file(rc.out() / "config.json", to_json(rc).dump(2) + "\n");
}

/// Files named by a list of paths; directories expand to their regular,
/// non-hidden files in name order.
inline std::vector<fs::path> expand_paths(const std::vector<std::string>& list) {
  std::vector<fs::path> out;
  for (const auto& p : list) {
    if (!fs::exists(p)) throw IoError("data path '" + p + "' does not exist");
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename().string().front() != '.') files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.emplace_back(p);
    }
  }
  return out;
}

/// Rate conversion, root centring and joint-count check applied to every
/// sequence before windowing.
inline PoseSequence prepare_sequence(const RunConfig& rc, PoseSequence seq, const std::string& origin) {
  if (rc.data.target_fps != 0 && rc.data.target_fps != seq.fps()) seq = downsample(seq, rc.data.target_fps);
  if (rc.data.center && seq.representation() == Representation::Coords3d) seq = center_on_root(seq, rc.data.root_joint);
  if (seq.joints() != rc.model.joints) {
    throw DimensionError("'" + origin + "' has " + std::to_string(seq.joints()) + " joints but model.joints is " +
                         std::to_string(rc.model.joints));
  }
  return seq;
}

inline PoseSequence load_prepared(const RunConfig& rc, const fs::path& path) {
  return prepare_sequence(rc, load_sequence(path, rc.data.format), path.string());
}

/// All windows of one split. An absent default val directory yields an empty set.
inline WindowSet load_split(const RunConfig& rc, const std::string& split) {
  const bool implicit = (split == "train" ? rc.data.train : split == "val" ? rc.data.val : rc.data.test).empty();
  const auto paths = rc.split_paths(split);
  if (split == "val" && implicit && !fs::exists(paths.front())) return {};
  WindowSet ws;
  std::size_t id = 0;
  for (const auto& file : expand_paths(paths)) {
    const PoseSequence seq = load_prepared(rc, file);
    try {
      ws.append(make_windows(seq, rc.model.observed, rc.model.horizon, rc.data.stride, id++));
    } catch (const DataError& e) {
      throw DataError("'" + file.string() + "': " + e.what());
    }
  }
  if (ws.empty() && split != "val") throw DataError("split '" + split + "' contains no sequences");
  return ws;
}

// ---- synth ------------------------------------------------------------------

struct SynthOutput {
  std::vector<fs::path> files;
};

inline SynthOutput cmd_synth(const RunConfig& rc, std::ostream& log) {
  rc.validate();
  if (rc.synth.spec.joints != rc.model.joints) {
    throw ConfigError("synth.joints (" + std::to_string(rc.synth.spec.joints) + ") must equal model.joints (" +
                      std::to_string(rc.model.joints) + ")");
  }
  SynthOutput out;
  const std::pair<const char*, std::size_t> splits[] = {
      {"train", rc.synth.train_sequences}, {"val", rc.synth.val_sequences}, {"test", rc.synth.test_sequences}};
  std::uint64_t split_id = 0;
  for (const auto& [name, count] : splits) {
    const fs::path dir = rc.out() / "data" / name;
    if (fs::exists(dir)) {
      for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".pose") fs::remove(e.path());
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t seed = splitmix64(splitmix64(rc.synth.seed) ^ (split_id << 32) ^ i);
      char fname[32];
      std::snprintf(fname, sizeof(fname), "seq_%03zu.pose", i);
      const fs::path path = dir / fname;
      save_sequence(synth_generate(rc.synth.spec, seed), path, true);
      out.files.push_back(path);
    }
    log << "synth: " << count << " " << name << " sequences in " << dir.string() << "\n";
    ++split_id;
  }
  write_config_snapshot(rc);
  return out;
}

// ---- train ------------------------------------------------------------------

inline TrainResult<float> cmd_train(const RunConfig& rc, std::ostream& log) {
  rc.validate();
  rc.validate_paths("train");
  const WindowSet train_ws = load_split(rc, "train");
  const WindowSet val_ws = load_split(rc, "val");
  log << "train: " << train_ws.size() << " windows, val: " << val_ws.size() << " windows, variant "
      << to_string(rc.model.variant) << ", " << count_params(rc.model.variant, rc.model).total << " parameters\n";
  auto result = train<float>(rc.model, rc.train, train_ws, val_ws, [&](const EpochRecord& e) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %3zu  lr %.2e  train %.6g  val %.6g  (%.1fs)\n", e.epoch, e.lr,
                  e.train_loss, e.val_loss, e.seconds);
    log << line << std::flush;
  });
  save_checkpoint(result.model, rc.out() / "checkpoint.txt");
  text::write_file(rc.out() / "train_report.csv", result.report.to_csv());
  write_config_snapshot(rc);
  log << "train: best epoch " << result.report.best_epoch << ", checkpoint " << (rc.out() / "checkpoint.txt").string()
      << "\n";
  return result;
}

// ---- eval -------------------------------------------------------------------

inline fs::path resolve_checkpoint(const RunConfig& rc, const std::string& checkpoint) {
  const fs::path p = checkpoint.empty() ? rc.out() / "checkpoint.txt" : fs::path(checkpoint);
  if (!fs::exists(p)) throw IoError("checkpoint '" + p.string() + "' does not exist");
  return p;
}

inline std::size_t sequence_fps(const RunConfig& rc) {
  if (rc.data.target_fps) return rc.data.target_fps;
  if (rc.data.format) return rc.data.format->fps;
  return rc.synth.spec.fps;
}

inline EvalReport cmd_eval(const RunConfig& rc, const std::string& checkpoint, std::ostream& log) {
  rc.validate();
  rc.validate_paths("test");
  const auto t0 = std::chrono::steady_clock::now();
  Model model = load_checkpoint<float>(resolve_checkpoint(rc, checkpoint), &rc.model);
  const WindowSet ws = load_split(rc, "test");
  const Tensor<float> pred = predict_windows(model, ws);
  std::vector<std::size_t> all(ws.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto [X, Y] = gather_batch<float>(ws, all);
  const Tensor<float> base = zero_velocity_baseline(X, rc.model.horizon);

  EvalReport rep;
  rep.fps = sequence_fps(rc);
  const auto frames = default_horizons(rc.model.horizon);
  for (std::size_t h : frames) rep.horizons.push_back(make_horizon(h, rep.fps));
  if (ws.representation == Representation::Coords3d) {
    rep.metric = "mpjpe";
    rep.unit = "mm";
    rep.model = mpjpe_at_horizons(pred, Y, frames);
    rep.baseline = mpjpe_at_horizons(base, Y, frames);
  } else {
    rep.metric = "mae";
    rep.unit = "deg";
    rep.model = mae_at_horizons(pred, Y, frames);
    rep.baseline = mae_at_horizons(base, Y, frames);
    for (auto* v : {&rep.model, &rep.baseline})
      for (double& x : *v) x *= 180.0 / std::numbers::pi;
  }
  rep.parameter_count = model.parameter_count();
  rep.windows = ws.size();
  rep.variant = std::string(to_string(rc.model.variant));
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  text::write_file(rc.out() / "eval_report.csv", rep.to_csv());
  text::write_file(rc.out() / "eval_report.txt", rep.to_table());
  write_config_snapshot(rc);
  log << rep.to_table();
  return rep;
}

// ---- predict ----------------------------------------------------------------

/// Forecasts the K frames that follow the last T frames of `sequence`. The
/// result is in the same preprocessed frame as the model input (root-centred
/// when data.center is set).
inline PoseSequence cmd_predict(const RunConfig& rc, const std::string& checkpoint, const std::string& sequence,
                                const std::string& output, std::ostream& log) {
  rc.validate();
  if (!fs::exists(sequence)) throw IoError("sequence '" + sequence + "' does not exist");
  Model model = load_checkpoint<float>(resolve_checkpoint(rc, checkpoint), &rc.model);
  const PoseSequence seq = load_prepared(rc, sequence);
  const std::size_t V = rc.model.joints, T = rc.model.observed, K = rc.model.horizon;
  if (seq.frames() < T) {
    throw DataError("'" + sequence + "' has " + std::to_string(seq.frames()) + " frames, fewer than T = " +
                    std::to_string(T));
  }
  Tensor<float> X({1, 3, V, T});
  const std::size_t first = seq.frames() - T;
  for (std::size_t d = 0; d < 3; ++d)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t t = 0; t < T; ++t) X[(d * V + v) * T + t] = static_cast<float>(seq.at(first + t, v, d));
  Tape<float> tape(false);
  const Tensor<float> P = model.forward(tape, X, false);
  std::vector<double> values(K * V * 3);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t d = 0; d < 3; ++d) values[(k * V + v) * 3 + d] = P[(d * V + v) * K + k];
  PoseSequence out(V, seq.representation(), seq.fps(), std::move(values));
  const fs::path path = output.empty() ? rc.out() / "prediction.pose" : fs::path(output);
  save_sequence(out, path, true);
  log << "predict: " << K << " frames written to " << path.string() << "\n";
  return out;
}

// ---- export-graph -----------------------------------------------------------

inline fs::path cmd_export_graph(const RunConfig& rc, const std::string& checkpoint, std::size_t layer,
                                 AdjacencyKind kind, std::ostream& log) {
  Model model = load_checkpoint<float>(resolve_checkpoint(rc, checkpoint));
  const fs::path path =
      rc.out() / ("adjacency_layer" + std::to_string(layer) + "_" + std::string(to_string(kind)) + ".csv");
  export_adjacency(model.encoder(), layer, kind, path);
  log << "export-graph: " << path.string() << "\n";
  return path;
}

// ---- count-params -----------------------------------------------------------

inline ParamCount cmd_count_params(const RunConfig& rc, std::ostream& out) {
  rc.model.validate();
  const ParamCount pc = count_params(rc.model.variant, rc.model);
  char line[128];
  out << "variant " << to_string(rc.model.variant) << " (" << model_config_line(rc.model) << ")\n";
  for (const auto& [name, n] : pc.items) {
    std::snprintf(line, sizeof(line), "  %-36s %10zu\n", name.c_str(), n);
    out << line;
  }
  std::snprintf(line, sizeof(line), "  %-36s %10zu\n", "total", pc.total);
  out << line;
  out << "all variants:\n";
  const std::size_t sep = count_params(EncoderVariant::Separable, rc.model).total;
  for (auto v : {EncoderVariant::Separable, EncoderVariant::Full, EncoderVariant::Distinct,
                 EncoderVariant::SeparableShared}) {
    const std::size_t n = count_params(v, rc.model).total;
    std::snprintf(line, sizeof(line), "  %-12s %10zu  (%.3fx separable)\n", std::string(to_string(v)).c_str(), n,
                  static_cast<double>(n) / static_cast<double>(sep));
    out << line;
  }
  return pc;
}

}  // namespace stsgcn
