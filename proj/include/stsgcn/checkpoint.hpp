#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stsgcn/config.hpp"
#include "stsgcn/error.hpp"
#include "stsgcn/model.hpp"
#include "stsgcn/text_io.hpp"

// Checkpoint container (plain text):
//
//   STSGCN-CHECKPOINT v1
//   model joints=22 observed=10 horizon=25 widths=3,64,32,64,3 variant=separable decoder_layers=4 batch_norm=1
//   tensor <name> <param|buffer> <d0,d1,...>
//   <row-major values, space separated>
//   ...
//   end

namespace stsgcn {

inline constexpr std::string_view kCheckpointMagic = "STSGCN-CHECKPOINT v1";

inline std::string model_config_line(const ModelConfig& c) {
  std::ostringstream os;
  os << "model joints=" << c.joints << " observed=" << c.observed << " horizon=" << c.horizon << " widths=";
  for (std::size_t i = 0; i < c.widths.size(); ++i) os << (i ? "," : "") << c.widths[i];
  os << " variant=" << to_string(c.variant) << " decoder_layers=" << c.decoder_layers
     << " batch_norm=" << (c.batch_norm ? 1 : 0);
  return os.str();
}

namespace detail {

inline std::vector<std::size_t> parse_size_list(std::string_view s, std::size_t line) {
  std::vector<std::size_t> out;
  for (auto tok : text::split(s, ',')) {
    std::size_t v = 0;
    if (!text::parse_size(tok, v)) throw ParseError("bad integer list '" + std::string(s) + "'", line);
    out.push_back(v);
  }
  return out;
}

inline ModelConfig parse_model_line(std::string_view line, std::size_t lineno) {
  auto toks = text::split(line, ' ');
  if (toks.empty() || toks[0] != "model") throw ParseError("expected 'model' line", lineno);
  ModelConfig c;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value, got '" + std::string(toks[i]) + "'", lineno);
    auto key = toks[i].substr(0, eq), val = toks[i].substr(eq + 1);
    std::size_t n = 0;
    auto need_size = [&]() {
      if (!text::parse_size(val, n)) throw ParseError("bad value for " + std::string(key), lineno);
      return n;
    };
    if (key == "joints") c.joints = need_size();
    else if (key == "observed") c.observed = need_size();
    else if (key == "horizon") c.horizon = need_size();
    else if (key == "decoder_layers") c.decoder_layers = need_size();
    else if (key == "batch_norm") c.batch_norm = need_size() != 0;
    else if (key == "widths") c.widths = parse_size_list(val, lineno);
    else if (key == "variant") c.variant = parse_variant(val);
    else throw ParseError("unknown model key '" + std::string(key) + "'", lineno);
  }
  return c;
}

inline std::vector<std::string> config_differences(const ModelConfig& expected, const ModelConfig& found) {
  std::vector<std::string> diffs;
  auto cmp = [&](const char* name, auto a, auto b) {
    if (a != b) {
      std::ostringstream os;
      os << name << ": expected " << a << ", found " << b;
      diffs.push_back(os.str());
    }
  };
  cmp("joints", expected.joints, found.joints);
  cmp("observed", expected.observed, found.observed);
  cmp("horizon", expected.horizon, found.horizon);
  cmp("decoder_layers", expected.decoder_layers, found.decoder_layers);
  cmp("variant", to_string(expected.variant), to_string(found.variant));
  cmp("batch_norm", expected.batch_norm, found.batch_norm);
  if (expected.widths != found.widths) {
    diffs.push_back("widths: expected " + shape_str(expected.widths) + ", found " + shape_str(found.widths));
  }
  return diffs;
}

}  // namespace detail

template <typename S>
std::string checkpoint_to_string(const StsGcn<S>& model) {
  std::string out;
  out += kCheckpointMagic;
  out += '\n';
  out += model_config_line(model.config());
  out += '\n';
  auto emit = [&](const std::vector<NamedTensor<S>>& list, const char* kind) {
    for (const auto& nt : list) {
      out += "tensor " + nt.name + " " + kind + " ";
      for (std::size_t i = 0; i < nt.tensor.rank(); ++i) {
        if (i) out += ',';
        out += std::to_string(nt.tensor.dim(i));
      }
      out += '\n';
      const auto data = nt.tensor.data();
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (i) out += ' ';
        out += text::format_real(data[i]);
      }
      out += '\n';
    }
  };
  emit(model.parameters(), "param");
  emit(model.buffers(), "buffer");
  out += "end\n";
  return out;
}

template <typename S>
void save_checkpoint(const StsGcn<S>& model, const std::filesystem::path& path) {
  text::write_file(path, checkpoint_to_string(model));
}

/// Reads only the model configuration recorded in a checkpoint.
inline ModelConfig checkpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || text::trim_cr(line) != kCheckpointMagic) {
    throw ParseError("not a checkpoint file (bad magic)", 1);
  }
  if (!std::getline(in, line)) throw ParseError("missing model line", 2);
  return detail::parse_model_line(text::trim_cr(line), 2);
}

/// Loads a checkpoint. When `expected` is given, any configuration or shape
/// difference raises ShapeMismatchError listing expected vs found.
template <typename S>
StsGcn<S> load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr) {
  const std::string contents = text::read_file(path);
  std::istringstream in(contents);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> std::string_view {
    if (!std::getline(in, line)) throw ParseError("unexpected end of checkpoint", lineno + 1);
    ++lineno;
    return text::trim_cr(line);
  };
  if (next() != kCheckpointMagic) throw ParseError("not a checkpoint file (bad magic)", 1);
  ModelConfig found = detail::parse_model_line(next(), lineno);
  if (expected) {
    auto diffs = detail::config_differences(*expected, found);
    if (!diffs.empty()) {
      std::string msg = "checkpoint '" + path.string() + "' does not match config:";
      for (const auto& d : diffs) msg += " " + d + ";";
      throw ShapeMismatchError(msg);
    }
  }
  found.validate();
  StsGcn<S> model = StsGcn<S>::init(found, 0);
  for (auto& nt : model.state()) {
    const std::string header(next());
    auto toks = text::split(header, ' ');
    if (toks.size() != 4 || toks[0] != "tensor") throw ParseError("expected tensor header", lineno);
    if (toks[1] != nt.name) {
      throw ShapeMismatchError("checkpoint entry: expected " + nt.name + ", found " + std::string(toks[1]));
    }
    Shape shape = detail::parse_size_list(toks[3], lineno);
    if (shape != nt.tensor.shape()) {
      throw ShapeMismatchError(nt.name + ": expected shape " + shape_str(nt.tensor.shape()) + ", found " +
                               shape_str(shape));
    }
    auto vals = text::split(next(), ' ');
    if (vals.size() != nt.tensor.numel()) {
      throw ParseError(nt.name + ": expected " + std::to_string(nt.tensor.numel()) + " values, found " +
                           std::to_string(vals.size()),
                       lineno);
    }
    auto data = nt.tensor.data();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!text::parse_real(vals[i], data[i]) || !std::isfinite(data[i])) {
        throw ParseError(nt.name + ": bad value '" + std::string(vals[i]) + "'", lineno);
      }
    }
  }
  if (next() != "end") throw ParseError("expected 'end'", lineno);
  return model;
}

}  // namespace stsgcn
