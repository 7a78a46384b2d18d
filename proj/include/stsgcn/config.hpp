#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stsgcn/error.hpp"

namespace stsgcn {

enum class EncoderVariant {
  Separable,        // factored A^s A^t per layer
  Full,             // dense space-time adjacency per layer
  Distinct,         // separate temporal and spatial GCNs joined by an activation
  SeparableShared,  // one A^s, A^t pair shared by every layer
};

inline std::string_view to_string(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::Separable: return "separable";
    case EncoderVariant::Full: return "full";
    case EncoderVariant::Distinct: return "distinct";
    case EncoderVariant::SeparableShared: return "shared";
  }
  return "separable";
}

inline EncoderVariant parse_variant(std::string_view s) {
  if (s == "separable") return EncoderVariant::Separable;
  if (s == "full") return EncoderVariant::Full;
  if (s == "distinct") return EncoderVariant::Distinct;
  if (s == "shared") return EncoderVariant::SeparableShared;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected separable, full, distinct, shared)");
}

struct ModelConfig {
  std::size_t joints = 22;   // V
  std::size_t observed = 10; // T
  std::size_t horizon = 25;  // K
  std::vector<std::size_t> widths = {3, 64, 32, 64, 3};
  EncoderVariant variant = EncoderVariant::Separable;
  std::size_t decoder_layers = 4;
  bool batch_norm = true;

  std::size_t encoder_layers() const { return widths.size() - 1; }

  void validate() const {
    if (joints == 0) throw ConfigError("model.joints must be positive");
    if (observed == 0) throw ConfigError("model.observed must be positive");
    if (horizon == 0) throw ConfigError("model.horizon must be positive");
    if (widths.size() < 2) throw ConfigError("model.widths needs at least two entries");
    for (std::size_t w : widths) {
      if (w == 0) throw ConfigError("model.widths contains a zero channel width");
    }
    if (widths.front() != 3 || widths.back() != 3) {
      throw ConfigError("model.widths must start and end with 3 (one channel per coordinate)");
    }
    if (decoder_layers == 0) throw ConfigError("model.decoder_layers must be at least 1");
  }
};

}  // namespace stsgcn
