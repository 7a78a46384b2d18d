#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stsgcn/config.hpp"
#include "stsgcn/encoder.hpp"
#include "stsgcn/error.hpp"
#include "stsgcn/text_io.hpp"

// Learnt-adjacency CSV. One block per matrix of the stack:
//
//   # layer=<l> kind=<space|time> index=<i> rows=<r> cols=<c>
//   a,b,c,...      (r rows of c comma-separated values)
//
// kind=space writes T blocks of V x V (A^s at frame i, rows = output joint);
// kind=time writes V blocks of T x T (A^t of joint i, rows = output frame).

namespace stsgcn {

enum class AdjacencyKind { Space, Time };

inline AdjacencyKind parse_adjacency_kind(std::string_view s) {
  if (s == "space") return AdjacencyKind::Space;
  if (s == "time") return AdjacencyKind::Time;
  throw ConfigError("unknown adjacency kind '" + std::string(s) + "' (expected space or time)");
}

inline std::string_view to_string(AdjacencyKind k) { return k == AdjacencyKind::Space ? "space" : "time"; }

struct AdjacencyBlock {
  std::size_t layer = 0;
  AdjacencyKind kind = AdjacencyKind::Space;
  std::size_t index = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
};

template <typename S>
std::string adjacency_csv(const EncoderParams<S>& p, std::size_t layer, AdjacencyKind kind) {
  if (p.variant == EncoderVariant::Full) {
    throw ConfigError("adjacency export: the full variant has no separate space/time matrices");
  }
  if (layer >= p.layers.size()) {
    throw ConfigError("adjacency export: layer " + std::to_string(layer) + " out of range (encoder has " +
                      std::to_string(p.layers.size()) + " layers)");
  }
  const Tensor<S>& A = kind == AdjacencyKind::Space ? p.layers[layer].As : p.layers[layer].At;
  const std::size_t blocks = A.dim(0), rows = A.dim(1), cols = A.dim(2);
  std::string out;
  for (std::size_t b = 0; b < blocks; ++b) {
    out += "# layer=" + std::to_string(layer) + " kind=" + std::string(to_string(kind)) +
           " index=" + std::to_string(b) + " rows=" + std::to_string(rows) + " cols=" + std::to_string(cols) + "\n";
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (c) out += ',';
        out += text::format_real(static_cast<double>(A[(b * rows + r) * cols + c]));
      }
      out += '\n';
    }
  }
  return out;
}

template <typename S>
void export_adjacency(const EncoderParams<S>& p, std::size_t layer, AdjacencyKind kind,
                      const std::filesystem::path& path) {
  text::write_file(path, adjacency_csv(p, layer, kind));
}

inline std::vector<AdjacencyBlock> import_adjacency(const std::filesystem::path& path) {
  const std::string contents = text::read_file(path);
  std::istringstream in(contents);
  std::vector<AdjacencyBlock> blocks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = text::trim_cr(line);
    if (l.empty()) continue;
    if (l.front() == '#') {
      AdjacencyBlock b;
      for (auto tok : text::split(l.substr(1), ' ')) {
        auto eq = tok.find('=');
        if (eq == std::string_view::npos) throw ParseError("bad block header", lineno);
        auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
        std::size_t n = 0;
        if (key == "kind") {
          b.kind = parse_adjacency_kind(val);
          continue;
        }
        if (!text::parse_size(val, n)) throw ParseError("bad header value", lineno);
        if (key == "layer") b.layer = n;
        else if (key == "index") b.index = n;
        else if (key == "rows") b.rows = n;
        else if (key == "cols") b.cols = n;
      }
      blocks.push_back(std::move(b));
      continue;
    }
    if (blocks.empty()) throw ParseError("values before the first block header", lineno);
    auto& b = blocks.back();
    auto toks = text::split(l, ',');
    if (toks.size() != b.cols) throw ParseError("expected " + std::to_string(b.cols) + " columns", lineno);
    for (auto tok : toks) {
      double v = 0.0;
      if (!text::parse_real(tok, v)) throw ParseError("bad value '" + std::string(tok) + "'", lineno);
      b.values.push_back(v);
    }
  }
  for (const auto& b : blocks) {
    if (b.values.size() != b.rows * b.cols) throw ParseError("block has wrong number of rows", lineno);
  }
  return blocks;
}

}  // namespace stsgcn
