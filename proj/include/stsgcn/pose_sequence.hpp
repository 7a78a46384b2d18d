#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stsgcn/error.hpp"
#include "stsgcn/text_io.hpp"

namespace stsgcn {

enum class Representation { Coords3d, Expmap };

inline std::string_view to_string(Representation r) {
  return r == Representation::Coords3d ? "coords3d" : "expmap";
}

inline Representation parse_representation(std::string_view s) {
  if (s == "coords3d") return Representation::Coords3d;
  if (s == "expmap") return Representation::Expmap;
  throw ConfigError("unknown representation '" + std::string(s) + "' (expected coords3d or expmap)");
}

/// A motion clip: frames x joints x 3 values, row-major by frame then joint.
/// A default-constructed sequence is empty and cannot be saved.
class PoseSequence {
 public:
  PoseSequence() = default;

  PoseSequence(std::size_t joints, Representation rep, std::size_t fps, std::vector<double> values)
      : joints_(joints), rep_(rep), fps_(fps), values_(std::move(values)) {
    if (joints_ == 0) throw DataError("pose sequence needs at least one joint");
    if (fps_ == 0) throw DataError("pose sequence fps must be positive");
    if (values_.empty() || values_.size() % (3 * joints_) != 0) {
      throw DataError("pose sequence needs a positive multiple of 3*V = " + std::to_string(3 * joints_) +
                      " values, got " + std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw DataError("non-finite value at frame " + std::to_string(i / (3 * joints_)));
      }
    }
  }

  bool empty() const { return values_.empty(); }
  std::size_t joints() const { return joints_; }
  std::size_t frames() const { return joints_ ? values_.size() / (3 * joints_) : 0; }
  Representation representation() const { return rep_; }
  std::size_t fps() const { return fps_; }

  double at(std::size_t frame, std::size_t joint, std::size_t axis) const {
    return values_[(frame * joints_ + joint) * 3 + axis];
  }
  std::span<const double> frame(std::size_t f) const {
    return std::span<const double>(values_).subspan(f * 3 * joints_, 3 * joints_);
  }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const PoseSequence&, const PoseSequence&) = default;

 private:
  std::size_t joints_ = 0;
  Representation rep_ = Representation::Coords3d;
  std::size_t fps_ = 0;
  std::vector<double> values_;
};

/// How to read a foreign CSV (or which joints to keep from a native file).
struct FormatSpec {
  std::size_t columns = 0;  // expected columns per row; must be a multiple of 3
  char delimiter = ',';
  std::vector<std::size_t> keep;  // joint indices to keep, in order; empty keeps all
  Representation representation = Representation::Coords3d;
  std::size_t fps = 50;
  std::size_t skip_rows = 0;  // header rows to ignore
};

namespace detail {

inline PoseSequence apply_keep(const PoseSequence& seq, const std::vector<std::size_t>& keep) {
  if (keep.empty()) return seq;
  const std::size_t V = seq.joints();
  for (std::size_t j : keep) {
    if (j >= V) throw ConfigError("joint keep-list index " + std::to_string(j) + " out of range (V = " +
                                  std::to_string(V) + ")");
  }
  std::vector<double> out;
  out.reserve(seq.frames() * keep.size() * 3);
  for (std::size_t f = 0; f < seq.frames(); ++f)
    for (std::size_t j : keep)
      for (std::size_t d = 0; d < 3; ++d) out.push_back(seq.at(f, j, d));
  return PoseSequence(keep.size(), seq.representation(), seq.fps(), std::move(out));
}

inline void parse_row(std::string_view line, char delim, std::size_t expected, std::size_t lineno,
                      std::vector<double>& out) {
  auto toks = text::split(line, delim);
  if (toks.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " columns, found " + std::to_string(toks.size()), lineno);
  }
  for (auto tok : toks) {
    double v = 0.0;
    if (!text::parse_real(tok, v)) throw ParseError("bad number '" + std::string(tok) + "'", lineno);
    if (!std::isfinite(v)) throw DataError("line " + std::to_string(lineno) + ": non-finite value");
    out.push_back(v);
  }
}

inline PoseSequence parse_native(const std::string& contents) {
  std::istringstream in(contents);
  std::string line;
  std::getline(in, line);
  auto toks = text::split(text::trim_cr(line), ' ');
  if (toks.size() != 5 || toks[0] != "POSESEQ") throw ParseError("bad POSESEQ header", 1);
  std::size_t V = 0, fps = 0, F = 0;
  Representation rep = Representation::Coords3d;
  bool have_rep = false;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string_view::npos) throw ParseError("bad header field '" + std::string(toks[i]) + "'", 1);
    auto key = toks[i].substr(0, eq), val = toks[i].substr(eq + 1);
    if (key == "rep") {
      rep = parse_representation(val);
      have_rep = true;
      continue;
    }
    std::size_t n = 0;
    if (!text::parse_size(val, n)) throw ParseError("bad header value for " + std::string(key), 1);
    if (key == "v") V = n;
    else if (key == "fps") fps = n;
    else if (key == "frames") F = n;
    else throw ParseError("unknown header field '" + std::string(key) + "'", 1);
  }
  if (!have_rep || V == 0 || fps == 0 || F == 0) throw ParseError("incomplete POSESEQ header", 1);
  std::vector<double> values;
  values.reserve(F * V * 3);
  for (std::size_t f = 0; f < F; ++f) {
    if (!std::getline(in, line)) throw ParseError("expected " + std::to_string(F) + " frame rows", f + 2);
    parse_row(text::trim_cr(line), ' ', 3 * V, f + 2, values);
  }
  std::size_t lineno = F + 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!text::trim_cr(line).empty()) throw ParseError("trailing data after the declared frames", lineno);
  }
  return PoseSequence(V, rep, fps, std::move(values));
}

}  // namespace detail

inline std::string sequence_to_string(const PoseSequence& seq) {
  if (seq.empty()) throw DataError("cannot serialize an empty pose sequence");
  std::string out = "POSESEQ v=" + std::to_string(seq.joints()) + " rep=" + std::string(to_string(seq.representation())) +
                    " fps=" + std::to_string(seq.fps()) + " frames=" + std::to_string(seq.frames()) + "\n";
  for (std::size_t f = 0; f < seq.frames(); ++f) {
    auto row = seq.frame(f);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ' ';
      out += text::format_real(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline void save_sequence(const PoseSequence& seq, const std::filesystem::path& path, bool overwrite = false) {
  text::write_file(path, sequence_to_string(seq), overwrite);
}

/// Loads a native POSESEQ file or, when it does not start with the native
/// header, a delimited file described by `format`. The format's keep-list is
/// applied in both cases.
inline PoseSequence load_sequence(const std::filesystem::path& path, const std::optional<FormatSpec>& format = std::nullopt) {
  const std::string contents = text::read_file(path);
  if (contents.rfind("POSESEQ", 0) == 0) {
    PoseSequence seq = detail::parse_native(contents);
    return format ? detail::apply_keep(seq, format->keep) : seq;
  }
  if (!format) throw ConfigError("'" + path.string() + "' is not a native sequence and no format spec was given");
  const FormatSpec& fmt = *format;
  if (fmt.columns == 0 || fmt.columns % 3 != 0) {
    throw ConfigError("format.columns must be a positive multiple of 3, got " + std::to_string(fmt.columns));
  }
  std::istringstream in(contents);
  std::string line;
  std::vector<double> values;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno <= fmt.skip_rows) continue;
    std::string_view l = text::trim_cr(line);
    if (l.empty()) continue;
    detail::parse_row(l, fmt.delimiter, fmt.columns, lineno, values);
  }
  if (values.empty()) throw DataError("'" + path.string() + "' contains no frames");
  PoseSequence seq(fmt.columns / 3, fmt.representation, fmt.fps, std::move(values));
  return detail::apply_keep(seq, fmt.keep);
}

/// Translates every frame so that `root_joint` sits at the origin.
inline PoseSequence center_on_root(const PoseSequence& seq, std::size_t root_joint) {
  if (seq.representation() != Representation::Coords3d) {
    throw DataError("center_on_root needs a coords3d sequence");
  }
  if (root_joint >= seq.joints()) throw ConfigError("root joint " + std::to_string(root_joint) + " out of range");
  std::vector<double> out = seq.values();
  const std::size_t V = seq.joints();
  for (std::size_t f = 0; f < seq.frames(); ++f) {
    double* row = out.data() + f * 3 * V;
    const double root[3] = {row[root_joint * 3], row[root_joint * 3 + 1], row[root_joint * 3 + 2]};
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t d = 0; d < 3; ++d) row[v * 3 + d] = v == root_joint ? 0.0 : row[v * 3 + d] - root[d];
  }
  return PoseSequence(V, seq.representation(), seq.fps(), std::move(out));
}

/// Keeps every (fps / target_fps)-th frame starting at frame 0. No filtering.
inline PoseSequence downsample(const PoseSequence& seq, std::size_t target_fps) {
  if (target_fps == 0 || seq.fps() % target_fps != 0) {
    throw ConfigError("cannot downsample " + std::to_string(seq.fps()) + " fps to " + std::to_string(target_fps) +
                      " fps (rate must divide evenly)");
  }
  const std::size_t step = seq.fps() / target_fps;
  std::vector<double> out;
  for (std::size_t f = 0; f < seq.frames(); f += step) {
    auto row = seq.frame(f);
    out.insert(out.end(), row.begin(), row.end());
  }
  return PoseSequence(seq.joints(), seq.representation(), target_fps, std::move(out));
}

}  // namespace stsgcn
