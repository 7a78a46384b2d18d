#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "stsgcn/error.hpp"
#include "stsgcn/losses.hpp"
#include "stsgcn/rotation.hpp"
#include "stsgcn/tensor.hpp"
#include "stsgcn/text_io.hpp"

namespace stsgcn {

struct Horizon {
  std::size_t frame = 0;  // 1-based index into the predicted frames
  double ms = 0.0;
};

inline Horizon make_horizon(std::size_t frame, std::size_t fps) {
  if (fps == 0) throw ConfigError("fps must be positive");
  return {frame, static_cast<double>(frame) * 1000.0 / static_cast<double>(fps)};
}

/// Frames 2, 4, 8, 10, 14, 18, 22, 25 (80 to 1000 msec at 25 fps), clipped to K;
/// just K when K < 2.
inline std::vector<std::size_t> default_horizons(std::size_t horizon) {
  std::vector<std::size_t> out;
  for (std::size_t h : {2, 4, 8, 10, 14, 18, 22, 25})
    if (h <= horizon) out.push_back(h);
  if (out.empty()) out.push_back(horizon);
  return out;
}

namespace detail {

inline void check_horizons(const std::vector<std::size_t>& horizons, std::size_t K) {
  for (std::size_t h : horizons) {
    if (h == 0 || h > K) {
      throw ConfigError("horizon " + std::to_string(h) + " out of range [1, " + std::to_string(K) + "]");
    }
  }
}

}  // namespace detail

/// Per-frame (not cumulative) mean joint position error at each horizon.
template <typename S>
std::vector<double> mpjpe_at_horizons(const Tensor<S>& pred, const Tensor<S>& target,
                                      const std::vector<std::size_t>& horizons) {
  detail::check_pose_pair("mpjpe_at_horizons", pred.shape(), target.shape());
  const std::size_t B = pred.dim(0), V = pred.dim(2), K = pred.dim(3);
  detail::check_horizons(horizons, K);
  std::vector<double> out;
  for (std::size_t h : horizons) {
    const std::size_t k = h - 1;
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t v = 0; v < V; ++v) {
        double sq = 0.0;
        for (std::size_t d = 0; d < 3; ++d) {
          const std::size_t i = ((b * 3 + d) * V + v) * K + k;
          const double diff = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
          sq += diff * diff;
        }
        acc += std::sqrt(sq);
      }
    out.push_back(acc / static_cast<double>(B * V));
  }
  return out;
}

/// Mean absolute Euler-angle (Z-Y-X) difference, in radians, over batch,
/// joints and the three angle components, after converting both operands
/// from exponential maps.
template <typename S>
std::vector<double> mae_at_horizons(const Tensor<S>& pred, const Tensor<S>& target,
                                    const std::vector<std::size_t>& horizons) {
  detail::check_pose_pair("mae_at_horizons", pred.shape(), target.shape());
  const std::size_t B = pred.dim(0), V = pred.dim(2), K = pred.dim(3);
  detail::check_horizons(horizons, K);
  auto euler_at = [&](const Tensor<S>& t, std::size_t b, std::size_t v, std::size_t k) {
    Vec3 e;
    for (std::size_t d = 0; d < 3; ++d) e[d] = static_cast<double>(t[((b * 3 + d) * V + v) * K + k]);
    return rotmat_to_euler(expmap_to_rotmat(e));
  };
  std::vector<double> out;
  for (std::size_t h : horizons) {
    const std::size_t k = h - 1;
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t v = 0; v < V; ++v) {
        const Vec3 ep = euler_at(pred, b, v, k), et = euler_at(target, b, v, k);
        for (std::size_t d = 0; d < 3; ++d) acc += std::abs(ep[d] - et[d]);
      }
    out.push_back(acc / static_cast<double>(B * V * 3));
  }
  return out;
}

/// Repeats the last observed frame K times: [B,3,V,T] -> [B,3,V,K].
template <typename S>
Tensor<S> zero_velocity_baseline(const Tensor<S>& observed, std::size_t horizon) {
  if (observed.rank() != 4) throw DimensionError("zero_velocity_baseline: expected [B,3,V,T]");
  if (horizon == 0) throw ConfigError("zero_velocity_baseline: K must be positive");
  const std::size_t rows = observed.dim(0) * observed.dim(1) * observed.dim(2), T = observed.dim(3);
  Shape shape = observed.shape();
  shape[3] = horizon;
  Tensor<S> out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const S last = observed[r * T + T - 1];
    for (std::size_t k = 0; k < horizon; ++k) out[r * horizon + k] = last;
  }
  return out;
}

struct EvalReport {
  std::string metric;  // "mpjpe" or "mae"
  std::string unit;    // "mm" (data units) or "deg"
  std::size_t fps = 25;
  std::vector<Horizon> horizons;
  std::vector<double> model;
  std::vector<double> baseline;
  std::size_t parameter_count = 0;
  std::size_t windows = 0;
  std::string variant;
  double seconds = 0.0;

  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }

  std::string to_csv() const {
    std::string out = "frame,ms," + metric + "_model," + metric + "_zero_velocity\n";
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      out += std::to_string(horizons[i].frame) + "," + text::format_real(horizons[i].ms) + "," +
             text::format_real(model[i]) + "," + text::format_real(baseline[i]) + "\n";
    }
    out += "average,," + text::format_real(mean(model)) + "," + text::format_real(mean(baseline)) + "\n";
    return out;
  }

  /// Aligned table with one column per horizon in milliseconds.
  std::string to_table() const {
    char buf[64];
    std::string out = metric + " (" + unit + "), variant " + variant + ", " + std::to_string(windows) +
                      " windows, " + std::to_string(parameter_count) + " parameters\n";
    auto row = [&](const std::string& label, const std::vector<double>* vals) {
      std::snprintf(buf, sizeof(buf), "%-14s", label.c_str());
      out += buf;
      for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (vals) std::snprintf(buf, sizeof(buf), "%9.2f", (*vals)[i]);
        else std::snprintf(buf, sizeof(buf), "%9.0f", horizons[i].ms);
        out += buf;
      }
      if (vals) std::snprintf(buf, sizeof(buf), "%9.2f", mean(*vals));
      else std::snprintf(buf, sizeof(buf), "%9s", "avg");
      out += buf;
      out += '\n';
    };
    row("msec", nullptr);
    row("model", &model);
    row("zero-velocity", &baseline);
    return out;
  }
};

}  // namespace stsgcn
