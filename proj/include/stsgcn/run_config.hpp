#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stsgcn/config.hpp"
#include "stsgcn/error.hpp"
#include "stsgcn/losses.hpp"
#include "stsgcn/pose_sequence.hpp"
#include "stsgcn/synth.hpp"
#include "stsgcn/text_io.hpp"
#include "stsgcn/trainer.hpp"

namespace stsgcn {

namespace fs = std::filesystem;

struct DataConfig {
  std::vector<std::string> train, val, test;  // files or directories; empty -> <out>/data/<split>
  std::optional<FormatSpec> format;
  std::size_t target_fps = 0;  // 0 keeps the source rate
  bool center = true;          // root-centre coords3d sequences
  std::size_t root_joint = 0;
  std::size_t stride = 1;
};

struct SynthRunConfig {
  SynthSpec spec;
  std::size_t train_sequences = 8;
  std::size_t val_sequences = 1;
  std::size_t test_sequences = 2;
  std::uint64_t seed = 0;
};

/// Everything a command needs, read from one JSON file with top-level keys
/// model, train, data, synth and output.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  SynthRunConfig synth;
  std::string output_dir = "runs/default";

  fs::path out() const { return fs::path(output_dir); }

  std::vector<std::string> split_paths(const std::string& split) const {
    const auto& list = split == "train" ? data.train : split == "val" ? data.val : data.test;
    if (!list.empty()) return list;
    return {(out() / "data" / split).string()};
  }

  void validate() const {
    model.validate();
    train.validate();
    synth.spec.validate();
    if (data.stride == 0) throw ConfigError("data.stride must be at least 1");
    if (train.loss == LossKind::Mpjpe && data.format && data.format->representation == Representation::Expmap) {
      throw ConfigError("train.loss mpjpe needs coords3d data but data.format.representation is expmap");
    }
    if (train.loss == LossKind::Mae && data.format && data.format->representation == Representation::Coords3d) {
      throw ConfigError("train.loss mae needs expmap data but data.format.representation is coords3d");
    }
    if (synth.spec.observed != model.observed || synth.spec.horizon != model.horizon) {
      throw ConfigError("synth observed/horizon must match model observed/horizon");
    }
  }

  /// Every file or directory named for `split` must exist.
  void validate_paths(const std::string& split) const {
    for (const auto& p : split_paths(split)) {
      if (!fs::exists(p)) throw IoError("data path '" + p + "' for split '" + split + "' does not exist");
    }
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& section, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + section + "." + it.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
  }
}

inline std::vector<std::string> read_paths(const json& obj, const char* key) {
  std::vector<std::string> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw ConfigError("data." + std::string(key) + " must be a path or a list of paths");
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError("data." + std::string(key) + " entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using detail::read;
  RunConfig rc;
  detail::reject_unknown(j, "<root>", {"model", "train", "data", "synth", "output"});
  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::reject_unknown(m, "model", {"joints", "observed", "horizon", "widths", "variant", "decoder_layers", "batch_norm"});
    read(m, "joints", rc.model.joints, "model");
    read(m, "observed", rc.model.observed, "model");
    read(m, "horizon", rc.model.horizon, "model");
    read(m, "widths", rc.model.widths, "model");
    read(m, "decoder_layers", rc.model.decoder_layers, "model");
    read(m, "batch_norm", rc.model.batch_norm, "model");
    if (m.contains("variant")) {
      std::string v;
      read(m, "variant", v, "model");
      rc.model.variant = parse_variant(v);
    }
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::reject_unknown(t, "train", {"epochs", "batch_size", "lr", "decay_factor", "decay_every", "decay_after",
                                        "beta1", "beta2", "eps", "loss", "seed", "shuffle"});
    read(t, "epochs", rc.train.epochs, "train");
    read(t, "batch_size", rc.train.batch_size, "train");
    read(t, "lr", rc.train.schedule.lr0, "train");
    read(t, "decay_factor", rc.train.schedule.decay_factor, "train");
    read(t, "decay_every", rc.train.schedule.decay_every, "train");
    read(t, "decay_after", rc.train.schedule.decay_after, "train");
    read(t, "beta1", rc.train.adam.beta1, "train");
    read(t, "beta2", rc.train.adam.beta2, "train");
    read(t, "eps", rc.train.adam.eps, "train");
    read(t, "seed", rc.train.seed, "train");
    read(t, "shuffle", rc.train.shuffle, "train");
    if (t.contains("loss")) {
      std::string l;
      read(t, "loss", l, "train");
      rc.train.loss = parse_loss(l);
    }
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    detail::reject_unknown(d, "data", {"train", "val", "test", "format", "target_fps", "center", "root_joint", "stride"});
    rc.data.train = detail::read_paths(d, "train");
    rc.data.val = detail::read_paths(d, "val");
    rc.data.test = detail::read_paths(d, "test");
    read(d, "target_fps", rc.data.target_fps, "data");
    read(d, "center", rc.data.center, "data");
    read(d, "root_joint", rc.data.root_joint, "data");
    read(d, "stride", rc.data.stride, "data");
    if (d.contains("format")) {
      const auto& f = d.at("format");
      detail::reject_unknown(f, "data.format", {"columns", "delimiter", "keep", "representation", "fps", "skip_rows"});
      FormatSpec fmt;
      read(f, "columns", fmt.columns, "data.format");
      read(f, "keep", fmt.keep, "data.format");
      read(f, "fps", fmt.fps, "data.format");
      read(f, "skip_rows", fmt.skip_rows, "data.format");
      if (f.contains("delimiter")) {
        std::string delim;
        read(f, "delimiter", delim, "data.format");
        if (delim.size() != 1) throw ConfigError("data.format.delimiter must be a single character");
        fmt.delimiter = delim[0];
      }
      if (f.contains("representation")) {
        std::string r;
        read(f, "representation", r, "data.format");
        fmt.representation = parse_representation(r);
      }
      rc.data.format = fmt;
    }
  }
  rc.synth.spec.joints = rc.model.joints;
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    detail::reject_unknown(s, "synth", {"joints", "frames", "fps", "period", "harmonics", "amplitude", "bone_length",
                                        "noise", "skeleton_seed", "train_sequences", "val_sequences",
                                        "test_sequences", "seed"});
    read(s, "joints", rc.synth.spec.joints, "synth");
    read(s, "frames", rc.synth.spec.frames, "synth");
    read(s, "fps", rc.synth.spec.fps, "synth");
    read(s, "period", rc.synth.spec.period, "synth");
    read(s, "harmonics", rc.synth.spec.harmonics, "synth");
    read(s, "amplitude", rc.synth.spec.amplitude, "synth");
    read(s, "bone_length", rc.synth.spec.bone_length, "synth");
    read(s, "noise", rc.synth.spec.noise, "synth");
    read(s, "skeleton_seed", rc.synth.spec.skeleton_seed, "synth");
    read(s, "train_sequences", rc.synth.train_sequences, "synth");
    read(s, "val_sequences", rc.synth.val_sequences, "synth");
    read(s, "test_sequences", rc.synth.test_sequences, "synth");
    read(s, "seed", rc.synth.seed, "synth");
  }
  rc.synth.spec.observed = rc.model.observed;
  rc.synth.spec.horizon = rc.model.horizon;
  if (j.contains("output")) {
    const auto& o = j.at("output");
    detail::reject_unknown(o, "output", {"dir"});
    read(o, "dir", rc.output_dir, "output");
  }
  return rc;
}

inline RunConfig load_run_config(const fs::path& path) {
  const std::string text = text::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

inline nlohmann::json to_json(const RunConfig& rc) {
  nlohmann::json j;
  j["model"] = {{"joints", rc.model.joints},
                {"observed", rc.model.observed},
                {"horizon", rc.model.horizon},
                {"widths", rc.model.widths},
                {"variant", std::string(to_string(rc.model.variant))},
                {"decoder_layers", rc.model.decoder_layers},
                {"batch_norm", rc.model.batch_norm}};
  j["train"] = {{"epochs", rc.train.epochs},
                {"batch_size", rc.train.batch_size},
                {"lr", rc.train.schedule.lr0},
                {"decay_factor", rc.train.schedule.decay_factor},
                {"decay_every", rc.train.schedule.decay_every},
                {"decay_after", rc.train.schedule.decay_after},
                {"beta1", rc.train.adam.beta1},
                {"beta2", rc.train.adam.beta2},
                {"eps", rc.train.adam.eps},
                {"loss", std::string(to_string(rc.train.loss))},
                {"seed", rc.train.seed},
                {"shuffle", rc.train.shuffle}};
  nlohmann::json data = {{"train", rc.data.train},
                         {"val", rc.data.val},
                         {"test", rc.data.test},
                         {"target_fps", rc.data.target_fps},
                         {"center", rc.data.center},
                         {"root_joint", rc.data.root_joint},
                         {"stride", rc.data.stride}};
  if (rc.data.format) {
    const auto& f = *rc.data.format;
    data["format"] = {{"columns", f.columns},
                      {"delimiter", std::string(1, f.delimiter)},
                      {"keep", f.keep},
                      {"representation", std::string(to_string(f.representation))},
                      {"fps", f.fps},
                      {"skip_rows", f.skip_rows}};
  }
  j["data"] = data;
  const auto& s = rc.synth.spec;
  j["synth"] = {{"joints", s.joints},
                {"frames", s.frames},
                {"fps", s.fps},
                {"period", s.period},
                {"harmonics", s.harmonics},
                {"amplitude", s.amplitude},
                {"bone_length", s.bone_length},
                {"noise", s.noise},
                {"skeleton_seed", s.skeleton_seed},
                {"train_sequences", rc.synth.train_sequences},
                {"val_sequences", rc.synth.val_sequences},
                {"test_sequences", rc.synth.test_sequences},
                {"seed", rc.synth.seed}};
  j["output"] = {{"dir", rc.output_dir}};
  return j;
}

}  // namespace stsgcn
