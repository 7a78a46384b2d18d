#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "stsgcn/error.hpp"
#include "stsgcn/ops.hpp"
#include "stsgcn/pose_sequence.hpp"
#include "stsgcn/tape.hpp"
#include "stsgcn/tensor.hpp"

namespace stsgcn {

enum class LossKind { Mpjpe, Mae };

inline std::string_view to_string(LossKind k) { return k == LossKind::Mpjpe ? "mpjpe" : "mae"; }

inline LossKind parse_loss(std::string_view s) {
  if (s == "mpjpe") return LossKind::Mpjpe;
  if (s == "mae") return LossKind::Mae;
  throw ConfigError("unknown loss '" + std::string(s) + "' (expected mpjpe or mae)");
}

inline Representation loss_representation(LossKind k) {
  return k == LossKind::Mpjpe ? Representation::Coords3d : Representation::Expmap;
}

namespace detail {

inline void check_pose_pair(const std::string& op, const Shape& a, const Shape& b) {
  if (a != b) throw DimensionError(op + ": prediction " + shape_str(a) + " vs target " + shape_str(b));
  if (a.size() != 4 || a[1] != 3) throw DimensionError(op + ": expected [B,3,V,K], got " + shape_str(a));
}

}  // namespace detail

/// Mean over batch, joints and frames of the per-joint Euclidean error.
/// The subgradient at a zero-distance joint is taken as zero.
template <typename S>
Tensor<S> loss_mpjpe(Tape<S>& tape, const Tensor<S>& pred, const Tensor<S>& target) {
  detail::check_pose_pair("loss_mpjpe", pred.shape(), target.shape());
  const std::size_t B = pred.dim(0), plane = pred.dim(2) * pred.dim(3);
  const double norm = 1.0 / static_cast<double>(B * plane);
  const S* p = pred.ptr();
  const S* t = target.ptr();
  double acc = 0.0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t s = 0; s < plane; ++s) {
      double sq = 0.0;
      for (std::size_t d = 0; d < 3; ++d) {
        const std::size_t i = (b * 3 + d) * plane + s;
        const double diff = static_cast<double>(p[i]) - static_cast<double>(t[i]);
        sq += diff * diff;
      }
      acc += std::sqrt(sq);
    }
  const bool grad = tape.recording() && pred.requires_grad();
  Tensor<S> out = Tensor<S>::full({1}, static_cast<S>(acc * norm), grad);
  if (grad) {
    tape.record("loss_mpjpe", out, [pred, target, out, B, plane, norm]() mutable {
      const double g = static_cast<double>(out.grad()[0]) * norm;
      const S* p = pred.ptr();
      const S* t = target.ptr();
      S* dp = pred.grad_buffer().data();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t s = 0; s < plane; ++s) {
          double diff[3], sq = 0.0;
          for (std::size_t d = 0; d < 3; ++d) {
            const std::size_t i = (b * 3 + d) * plane + s;
            diff[d] = static_cast<double>(p[i]) - static_cast<double>(t[i]);
            sq += diff[d] * diff[d];
          }
          if (sq == 0.0) continue;
          const double scale = g / std::sqrt(sq);
          for (std::size_t d = 0; d < 3; ++d) dp[(b * 3 + d) * plane + s] += static_cast<S>(scale * diff[d]);
        }
    });
  }
  return out;
}

/// Sum of absolute component errors per joint, averaged over batch, joints
/// and frames.
template <typename S>
Tensor<S> loss_mae(Tape<S>& tape, const Tensor<S>& pred, const Tensor<S>& target) {
  detail::check_pose_pair("loss_mae", pred.shape(), target.shape());
  const std::size_t B = pred.dim(0), plane = pred.dim(2) * pred.dim(3);
  const double norm = 1.0 / static_cast<double>(B * plane);
  const std::size_t n = pred.numel();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(pred[i]) - static_cast<double>(target[i]));
  const bool grad = tape.recording() && pred.requires_grad();
  Tensor<S> out = Tensor<S>::full({1}, static_cast<S>(acc * norm), grad);
  if (grad) {
    tape.record("loss_mae", out, [pred, target, out, n, norm]() mutable {
      const S g = static_cast<S>(static_cast<double>(out.grad()[0]) * norm);
      S* dp = pred.grad_buffer().data();
      for (std::size_t i = 0; i < n; ++i) {
        const S diff = pred[i] - target[i];
        if (diff > S{0}) dp[i] += g;
        else if (diff < S{0}) dp[i] -= g;
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> compute_loss(Tape<S>& tape, LossKind kind, const Tensor<S>& pred, const Tensor<S>& target) {
  return kind == LossKind::Mpjpe ? loss_mpjpe(tape, pred, target) : loss_mae(tape, pred, target);
}

}  // namespace stsgcn
