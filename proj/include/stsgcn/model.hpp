#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stsgcn/config.hpp"
#include "stsgcn/decoder.hpp"
#include "stsgcn/encoder.hpp"
#include "stsgcn/random.hpp"
#include "stsgcn/tape.hpp"
#include "stsgcn/tensor.hpp"

namespace stsgcn {

/// Graph encoder followed by the convolutional decoder.
template <typename S>
class StsGcn {
 public:
  static StsGcn init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    StsGcn m;
    m.config_ = cfg;
    m.encoder_ = init_encoder<S>(cfg, rng);
    m.decoder_ = init_decoder<S>(cfg, rng);
    return m;
  }

  const ModelConfig& config() const { return config_; }
  EncoderParams<S>& encoder() { return encoder_; }
  const EncoderParams<S>& encoder() const { return encoder_; }
  DecoderParams<S>& decoder() { return decoder_; }
  const DecoderParams<S>& decoder() const { return decoder_; }

  /// X: [B,3,V,T] observed frames -> [B,3,V,K] predicted frames.
  Tensor<S> forward(Tape<S>& tape, const Tensor<S>& X, bool train_mode) {
    check_input(X);
    return decoder_forward(tape, decoder_, encoder_forward(tape, encoder_, X, train_mode));
  }

  void check_input(const Tensor<S>& X) const {
    if (X.rank() != 4 || X.dim(1) != 3 || X.dim(2) != config_.joints || X.dim(3) != config_.observed) {
      throw DimensionError("model input must be [B,3," + std::to_string(config_.joints) + "," +
                           std::to_string(config_.observed) + "], got " + shape_str(X.shape()));
    }
  }

  std::vector<NamedTensor<S>> parameters() const {
    auto out = encoder_parameters(encoder_);
    for (auto& p : decoder_parameters(decoder_)) out.push_back(std::move(p));
    return out;
  }

  std::vector<NamedTensor<S>> buffers() const { return encoder_buffers(encoder_); }

  std::vector<NamedTensor<S>> state() const {
    auto out = parameters();
    for (auto& b : buffers()) out.push_back(std::move(b));
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : parameters()) p.tensor.zero_grad();
  }

  /// Deep copy; aliasing between shared adjacencies is preserved.
  StsGcn clone() const {
    StsGcn m = init(config_, 0);
    m.copy_state_from(*this);
    return m;
  }

  void copy_state_from(const StsGcn& other) {
    auto dst = state();
    auto src = other.state();
    if (dst.size() != src.size()) throw ShapeMismatchError("model state layouts differ");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i].name != src[i].name || dst[i].tensor.shape() != src[i].tensor.shape()) {
        throw ShapeMismatchError("state entry " + dst[i].name + " " + shape_str(dst[i].tensor.shape()) +
                                 " vs " + src[i].name + " " + shape_str(src[i].tensor.shape()));
      }
      std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), dst[i].tensor.data().begin());
    }
  }

 private:
  ModelConfig config_;
  EncoderParams<S> encoder_;
  DecoderParams<S> decoder_;
};

struct ParamCount {
  std::size_t total = 0;
  std::vector<std::pair<std::string, std::size_t>> items;

  void add(std::string name, std::size_t n) {
    items.emplace_back(std::move(name), n);
    total += n;
  }
};

/// Trainable-scalar count derived from the configuration alone, itemized per
/// layer and parameter group.
inline ParamCount count_params(EncoderVariant variant, const ModelConfig& base) {
  ModelConfig cfg = base;
  cfg.variant = variant;
  cfg.validate();
  const std::size_t V = cfg.joints, T = cfg.observed;
  const std::size_t spatial = T * V * V, temporal = V * T * T, full = V * T * V * T;
  ParamCount pc;
  if (variant == EncoderVariant::SeparableShared) pc.add("encoder.shared.adjacency", spatial + temporal);
  for (std::size_t l = 0; l + 1 < cfg.widths.size(); ++l) {
    const std::size_t cin = cfg.widths[l], cout = cfg.widths[l + 1];
    const std::string pre = "encoder.layer" + std::to_string(l) + ".";
    switch (variant) {
      case EncoderVariant::Separable:
      case EncoderVariant::Distinct: pc.add(pre + "adjacency", spatial + temporal); break;
      case EncoderVariant::Full: pc.add(pre + "adjacency", full); break;
      case EncoderVariant::SeparableShared: break;
    }
    std::size_t proj = cin * cout, bn = cfg.batch_norm ? 2 * cout : 0, act = 1;
    if (variant == EncoderVariant::Distinct) {
      proj += cout * cout;
      bn *= 2;
      act = 2;
    }
    pc.add(pre + "projection", proj);
    if (bn) pc.add(pre + "batchnorm", bn);
    pc.add(pre + "prelu", act);
    pc.add(pre + "residual", cin * cout);
  }
  const std::size_t taps = kDecoderKernel * kDecoderKernel;
  for (std::size_t i = 0; i < cfg.decoder_layers; ++i) {
    const std::size_t cin = i == 0 ? cfg.observed : cfg.horizon;
    const std::string pre = "decoder.stage" + std::to_string(i) + ".";
    pc.add(pre + "kernel", cfg.horizon * cin * taps);
    pc.add(pre + "bias", cfg.horizon);
    pc.add(pre + "prelu", 1);
  }
  return pc;
}

}  // namespace stsgcn
