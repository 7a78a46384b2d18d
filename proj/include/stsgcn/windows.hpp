#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "stsgcn/error.hpp"
#include "stsgcn/pose_sequence.hpp"
#include "stsgcn/tensor.hpp"

namespace stsgcn {

struct WindowSource {
  std::size_t sequence_id = 0;
  std::size_t start_frame = 0;
};

/// (observed, future) training pairs. Each input block is [3, V, T] and each
/// target block [3, V, K], coordinate-major to match the [B,3,V,T] layout.
struct WindowSet {
  std::size_t joints = 0;
  std::size_t observed = 0;
  std::size_t horizon = 0;
  Representation representation = Representation::Coords3d;
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<WindowSource> sources;

  std::size_t size() const { return sources.size(); }
  bool empty() const { return sources.empty(); }
  std::size_t input_block() const { return 3 * joints * observed; }
  std::size_t target_block() const { return 3 * joints * horizon; }

  void append(const WindowSet& other) {
    if (other.empty()) return;
    if (empty() && inputs.empty()) {
      joints = other.joints;
      observed = other.observed;
      horizon = other.horizon;
      representation = other.representation;
    } else if (joints != other.joints || observed != other.observed || horizon != other.horizon ||
               representation != other.representation) {
      throw DimensionError("cannot merge window sets with different V/T/K or representation");
    }
    inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
    targets.insert(targets.end(), other.targets.begin(), other.targets.end());
    sources.insert(sources.end(), other.sources.begin(), other.sources.end());
  }
};

/// N = floor((F - T - K) / stride) + 1 windows; window i starts at i * stride.
inline WindowSet make_windows(const PoseSequence& seq, std::size_t observed, std::size_t horizon,
                              std::size_t stride, std::size_t sequence_id = 0) {
  if (observed == 0 || horizon == 0) throw ConfigError("make_windows: T and K must be positive");
  if (stride == 0) throw ConfigError("make_windows: stride must be at least 1");
  const std::size_t F = seq.frames(), V = seq.joints();
  if (F < observed + horizon) {
    throw DataError("make_windows: sequence has " + std::to_string(F) + " frames, fewer than T + K = " +
                    std::to_string(observed + horizon) + "; no windows");
  }
  WindowSet ws;
  ws.joints = V;
  ws.observed = observed;
  ws.horizon = horizon;
  ws.representation = seq.representation();
  const std::size_t n = (F - observed - horizon) / stride + 1;
  ws.inputs.resize(n * ws.input_block());
  ws.targets.resize(n * ws.target_block());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = i * stride;
    double* in = ws.inputs.data() + i * ws.input_block();
    double* tg = ws.targets.data() + i * ws.target_block();
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t t = 0; t < observed; ++t) in[(d * V + v) * observed + t] = seq.at(start + t, v, d);
        for (std::size_t k = 0; k < horizon; ++k)
          tg[(d * V + v) * horizon + k] = seq.at(start + observed + k, v, d);
      }
    ws.sources.push_back({sequence_id, start});
  }
  return ws;
}

/// Gathers the selected windows into [B,3,V,T] inputs and [B,3,V,K] targets.
template <typename S>
std::pair<Tensor<S>, Tensor<S>> gather_batch(const WindowSet& ws, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DimensionError("gather_batch: empty index list");
  const std::size_t B = indices.size(), ib = ws.input_block(), tb = ws.target_block();
  Tensor<S> X({B, 3, ws.joints, ws.observed});
  Tensor<S> Y({B, 3, ws.joints, ws.horizon});
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t i = indices[b];
    if (i >= ws.size()) throw DimensionError("gather_batch: window index out of range");
    for (std::size_t j = 0; j < ib; ++j) X[b * ib + j] = static_cast<S>(ws.inputs[i * ib + j]);
    for (std::size_t j = 0; j < tb; ++j) Y[b * tb + j] = static_cast<S>(ws.targets[i * tb + j]);
  }
  return {std::move(X), std::move(Y)};
}

}  // namespace stsgcn
