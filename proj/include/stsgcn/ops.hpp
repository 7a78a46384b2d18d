#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stsgcn/error.hpp"
#include "stsgcn/tape.hpp"
#include "stsgcn/tensor.hpp"

// Differentiable tensor operations used by the encoder and decoder.
//
// Activation layout is [B, C, V, T]: batch, channels, joints, frames. Every
// operation computes its forward value eagerly and, when the tape is recording
// and some input requires a gradient, records a closure that accumulates into
// the input gradients.

namespace stsgcn {

namespace detail {

template <typename S>
bool any_requires_grad(const Tape<S>& tape, std::initializer_list<const Tensor<S>*> inputs) {
  if (!tape.recording()) return false;
  for (const Tensor<S>* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

inline void require(bool ok, const std::string& op, const std::string& what) {
  if (!ok) throw DimensionError(op + ": " + what);
}

inline void require_rank(const std::string& op, const std::string& name, const Shape& shape,
                         std::size_t rank) {
  require(shape.size() == rank, op, name + " must have rank " + std::to_string(rank) + ", got " +
                                        shape_str(shape));
}

inline void require_axis(const std::string& op, const std::string& axis, std::size_t expected,
                         std::size_t found) {
  require(expected == found, op, axis + " axis mismatch: expected " + std::to_string(expected) +
                                     ", found " + std::to_string(found));
}

}  // namespace detail

/// Temporal graph contraction: out[b,c,v,k] = sum_m At[v,k,m] * H[b,c,v,m].
template <typename S>
Tensor<S> contract_time(Tape<S>& tape, const Tensor<S>& At, const Tensor<S>& H) {
  const std::string op = "contract_time";
  detail::require_rank(op, "At", At.shape(), 3);
  detail::require_rank(op, "H", H.shape(), 4);
  const std::size_t B = H.dim(0), C = H.dim(1), V = H.dim(2), T = H.dim(3);
  detail::require_axis(op, "joint (V)", V, At.dim(0));
  detail::require_axis(op, "frame (T, output)", T, At.dim(1));
  detail::require_axis(op, "frame (T, input)", T, At.dim(2));

  const bool grad = detail::any_requires_grad(tape, {&At, &H});
  Tensor<S> out({B, C, V, T}, grad);
  const S* a = At.ptr();
  const S* h = H.ptr();
  S* o = out.ptr();
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    for (std::size_t v = 0; v < V; ++v) {
      const S* hv = h + (bc * V + v) * T;
      const S* av = a + v * T * T;
      S* ov = o + (bc * V + v) * T;
      for (std::size_t k = 0; k < T; ++k) {
        S acc{0};
        for (std::size_t m = 0; m < T; ++m) acc += av[k * T + m] * hv[m];
        ov[k] = acc;
      }
    }
  }
  if (grad) {
    tape.record(op, out, [At, H, out, B, C, V, T]() mutable {
      const S* dO = out.grad().data();
      if (H.requires_grad()) {
        S* dh = H.grad_buffer().data();
        const S* a = At.ptr();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
          for (std::size_t v = 0; v < V; ++v) {
            const S* av = a + v * T * T;
            const S* gv = dO + (bc * V + v) * T;
            S* dhv = dh + (bc * V + v) * T;
            for (std::size_t k = 0; k < T; ++k) {
              const S g = gv[k];
              for (std::size_t m = 0; m < T; ++m) dhv[m] += av[k * T + m] * g;
            }
          }
        }
      }
      if (At.requires_grad()) {
        S* da = At.grad_buffer().data();
        const S* h = H.ptr();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
          for (std::size_t v = 0; v < V; ++v) {
            const S* hv = h + (bc * V + v) * T;
            const S* gv = dO + (bc * V + v) * T;
            S* dav = da + v * T * T;
            for (std::size_t k = 0; k < T; ++k) {
              const S g = gv[k];
              for (std::size_t m = 0; m < T; ++m) dav[k * T + m] += g * hv[m];
            }
          }
        }
      }
    });
  }
  return out;
}

/// Spatial graph contraction: out[b,c,w,k] = sum_v As[k,w,v] * Ht[b,c,v,k].
template <typename S>
Tensor<S> contract_space(Tape<S>& tape, const Tensor<S>& As, const Tensor<S>& Ht) {
  const std::string op = "contract_space";
  detail::require_rank(op, "As", As.shape(), 3);
  detail::require_rank(op, "Ht", Ht.shape(), 4);
  const std::size_t B = Ht.dim(0), C = Ht.dim(1), V = Ht.dim(2), T = Ht.dim(3);
  detail::require_axis(op, "frame (T)", T, As.dim(0));
  detail::require_axis(op, "joint (V, output)", V, As.dim(1));
  detail::require_axis(op, "joint (V, input)", V, As.dim(2));

  // [w][v][k] copy of As so the frame loop is contiguous.
  std::vector<S> awvk(V * V * T);
  for (std::size_t k = 0; k < T; ++k)
    for (std::size_t w = 0; w < V; ++w)
      for (std::size_t v = 0; v < V; ++v) awvk[(w * V + v) * T + k] = As[(k * V + w) * V + v];

  const bool grad = detail::any_requires_grad(tape, {&As, &Ht});
  Tensor<S> out({B, C, V, T}, grad);
  const S* h = Ht.ptr();
  S* o = out.ptr();
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const S* hb = h + bc * V * T;
    S* ob = o + bc * V * T;
    for (std::size_t w = 0; w < V; ++w) {
      S* ow = ob + w * T;
      for (std::size_t v = 0; v < V; ++v) {
        const S* a = awvk.data() + (w * V + v) * T;
        const S* hv = hb + v * T;
        for (std::size_t k = 0; k < T; ++k) ow[k] += a[k] * hv[k];
      }
    }
  }
  if (grad) {
    tape.record(op, out, [As, Ht, out, awvk = std::move(awvk), B, C, V, T]() mutable {
      const S* dO = out.grad().data();
      if (Ht.requires_grad()) {
        S* dh = Ht.grad_buffer().data();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
          const S* gb = dO + bc * V * T;
          S* dhb = dh + bc * V * T;
          for (std::size_t w = 0; w < V; ++w) {
            const S* gw = gb + w * T;
            for (std::size_t v = 0; v < V; ++v) {
              const S* a = awvk.data() + (w * V + v) * T;
              S* dhv = dhb + v * T;
              for (std::size_t k = 0; k < T; ++k) dhv[k] += a[k] * gw[k];
            }
          }
        }
      }
      if (As.requires_grad()) {
        std::vector<S> gwvk(V * V * T, S{0});
        const S* h = Ht.ptr();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
          const S* gb = dO + bc * V * T;
          const S* hb = h + bc * V * T;
          for (std::size_t w = 0; w < V; ++w) {
            const S* gw = gb + w * T;
            for (std::size_t v = 0; v < V; ++v) {
              S* acc = gwvk.data() + (w * V + v) * T;
              const S* hv = hb + v * T;
              for (std::size_t k = 0; k < T; ++k) acc[k] += gw[k] * hv[k];
            }
          }
        }
        S* da = As.grad_buffer().data();
        for (std::size_t k = 0; k < T; ++k)
          for (std::size_t w = 0; w < V; ++w)
            for (std::size_t v = 0; v < V; ++v) da[(k * V + w) * V + v] += gwvk[(w * V + v) * T + k];
      }
    });
  }
  return out;
}

/// Dense space-time contraction: out[b,c,w,k] = sum_{v,m} Ast[w,k,v,m] * H[b,c,v,m].
template <typename S>
Tensor<S> contract_full(Tape<S>& tape, const Tensor<S>& Ast, const Tensor<S>& H) {
  const std::string op = "contract_full";
  detail::require_rank(op, "Ast", Ast.shape(), 4);
  detail::require_rank(op, "H", H.shape(), 4);
  const std::size_t B = H.dim(0), C = H.dim(1), V = H.dim(2), T = H.dim(3);
  detail::require_axis(op, "joint (V, output)", V, Ast.dim(0));
  detail::require_axis(op, "frame (T, output)", T, Ast.dim(1));
  detail::require_axis(op, "joint (V, input)", V, Ast.dim(2));
  detail::require_axis(op, "frame (T, input)", T, Ast.dim(3));
  const std::size_t N = V * T;

  const bool grad = detail::any_requires_grad(tape, {&Ast, &H});
  Tensor<S> out({B, C, V, T}, grad);
  const S* a = Ast.ptr();
  const S* h = H.ptr();
  S* o = out.ptr();
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const S* hb = h + bc * N;
    S* ob = o + bc * N;
    for (std::size_t i = 0; i < N; ++i) {
      const S* row = a + i * N;
      S acc{0};
      for (std::size_t j = 0; j < N; ++j) acc += row[j] * hb[j];
      ob[i] = acc;
    }
  }
  if (grad) {
    tape.record(op, out, [Ast, H, out, B, C, N]() mutable {
      const S* dO = out.grad().data();
      if (H.requires_grad()) {
        S* dh = H.grad_buffer().data();
        const S* a = Ast.ptr();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
          const S* gb = dO + bc * N;
          S* dhb = dh + bc * N;
          for (std::size_t i = 0; i < N; ++i) {
            const S g = gb[i];
            const S* row = a + i * N;
            for (std::size_t j = 0; j < N; ++j) dhb[j] += row[j] * g;
          }
        }
      }
      if (Ast.requires_grad()) {
        S* da = Ast.grad_buffer().data();
        const S* h = H.ptr();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
          const S* gb = dO + bc * N;
          const S* hb = h + bc * N;
          for (std::size_t i = 0; i < N; ++i) {
            const S g = gb[i];
            S* row = da + i * N;
            for (std::size_t j = 0; j < N; ++j) row[j] += g * hb[j];
          }
        }
      }
    });
  }
  return out;
}

/// Per-site channel projection: out[b,c',...] = sum_c H[b,c,...] * W[c,c'].
/// Accepts any activation of rank >= 2 with channels on axis 1.
template <typename S>
Tensor<S> linear_channels(Tape<S>& tape, const Tensor<S>& H, const Tensor<S>& W) {
  const std::string op = "linear_channels";
  detail::require_rank(op, "W", W.shape(), 2);
  detail::require(H.rank() >= 2, op, "H must have rank >= 2, got " + shape_str(H.shape()));
  const std::size_t B = H.dim(0), Cin = H.dim(1), Cout = W.dim(1);
  detail::require_axis(op, "channel (Cin)", Cin, W.dim(0));
  const std::size_t sites = H.numel() / (B * Cin);

  Shape out_shape = H.shape();
  out_shape[1] = Cout;
  const bool grad = detail::any_requires_grad(tape, {&H, &W});
  Tensor<S> out(out_shape, grad);
  const S* h = H.ptr();
  const S* w = W.ptr();
  S* o = out.ptr();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Cout; ++co) {
      S* oc = o + (b * Cout + co) * sites;
      for (std::size_t ci = 0; ci < Cin; ++ci) {
        const S wc = w[ci * Cout + co];
        const S* hc = h + (b * Cin + ci) * sites;
        for (std::size_t s = 0; s < sites; ++s) oc[s] += wc * hc[s];
      }
    }
  }
  if (grad) {
    tape.record(op, out, [H, W, out, B, Cin, Cout, sites]() mutable {
      const S* dO = out.grad().data();
      if (H.requires_grad()) {
        S* dh = H.grad_buffer().data();
        const S* w = W.ptr();
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t ci = 0; ci < Cin; ++ci) {
            S* dhc = dh + (b * Cin + ci) * sites;
            for (std::size_t co = 0; co < Cout; ++co) {
              const S wc = w[ci * Cout + co];
              const S* gc = dO + (b * Cout + co) * sites;
              for (std::size_t s = 0; s < sites; ++s) dhc[s] += wc * gc[s];
            }
          }
        }
      }
      if (W.requires_grad()) {
        S* dw = W.grad_buffer().data();
        const S* h = H.ptr();
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t ci = 0; ci < Cin; ++ci) {
            const S* hc = h + (b * Cin + ci) * sites;
            for (std::size_t co = 0; co < Cout; ++co) {
              const S* gc = dO + (b * Cout + co) * sites;
              S acc{0};
              for (std::size_t s = 0; s < sites; ++s) acc += hc[s] * gc[s];
              dw[ci * Cout + co] += acc;
            }
          }
        }
      }
    });
  }
  return out;
}

/// PReLU with a single learnable slope shared by the whole tensor.
template <typename S>
Tensor<S> prelu(Tape<S>& tape, const Tensor<S>& H, const Tensor<S>& slope) {
  const std::string op = "prelu";
  detail::require(slope.numel() == 1, op, "slope must hold one value, got " + shape_str(slope.shape()));
  const bool grad = detail::any_requires_grad(tape, {&H, &slope});
  Tensor<S> out(H.shape(), grad);
  const S a = slope[0];
  const S* h = H.ptr();
  S* o = out.ptr();
  const std::size_t n = H.numel();
  for (std::size_t i = 0; i < n; ++i) o[i] = h[i] >= S{0} ? h[i] : a * h[i];
  if (grad) {
    tape.record(op, out, [H, slope, out, n]() mutable {
      const S* dO = out.grad().data();
      const S* h = H.ptr();
      const S a = slope[0];
      if (H.requires_grad()) {
        S* dh = H.grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) dh[i] += h[i] >= S{0} ? dO[i] : a * dO[i];
      }
      if (slope.requires_grad()) {
        S acc{0};
        for (std::size_t i = 0; i < n; ++i)
          if (h[i] < S{0}) acc += dO[i] * h[i];
        slope.grad_buffer()[0] += acc;
      }
    });
  }
  return out;
}

/// Running statistics of a batch-normalization site.
template <typename S>
struct BatchNormStats {
  Tensor<S> mean;
  Tensor<S> var;

  static BatchNormStats make(std::size_t channels) {
    return {Tensor<S>::zeros({channels}), Tensor<S>::full({channels}, S{1})};
  }
  BatchNormStats clone() const { return {mean.clone(), var.clone()}; }
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Per-channel batch normalization over every axis except axis 1.
///
/// Train mode normalizes with the biased batch variance and folds the batch
/// statistics into `stats` (unbiased variance, momentum 0.1). Eval mode uses
/// `stats` and is an affine map of its input.
template <typename S>
Tensor<S> batch_norm(Tape<S>& tape, const Tensor<S>& H, const Tensor<S>& scale,
                     const Tensor<S>& shift, BatchNormStats<S>& stats, bool train_mode) {
  const std::string op = "batch_norm";
  detail::require(H.rank() >= 2, op, "H must have rank >= 2, got " + shape_str(H.shape()));
  const std::size_t B = H.dim(0), C = H.dim(1);
  const std::size_t sites = H.numel() / (B * C);
  const std::size_t count = B * sites;
  detail::require_axis(op, "channel (scale)", C, scale.numel());
  detail::require_axis(op, "channel (shift)", C, shift.numel());
  detail::require_axis(op, "channel (running mean)", C, stats.mean.numel());
  detail::require_axis(op, "channel (running var)", C, stats.var.numel());
  if (count == 0) throw DimensionError(op + ": empty batch");

  const bool grad = detail::any_requires_grad(tape, {&H, &scale, &shift});
  Tensor<S> out(H.shape(), grad);
  std::vector<S> mean(C), inv_std(C);
  const S* h = H.ptr();
  if (train_mode) {
    for (std::size_t c = 0; c < C; ++c) {
      double sum = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const S* hc = h + (b * C + c) * sites;
        for (std::size_t s = 0; s < sites; ++s) sum += hc[s];
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const S* hc = h + (b * C + c) * sites;
        for (std::size_t s = 0; s < sites; ++s) {
          const double d = hc[s] - mu;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = static_cast<S>(mu);
      inv_std[c] = static_cast<S>(1.0 / std::sqrt(var + kBatchNormEps));
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      stats.mean[c] = static_cast<S>((1.0 - kBatchNormMomentum) * stats.mean[c] + kBatchNormMomentum * mu);
      stats.var[c] = static_cast<S>((1.0 - kBatchNormMomentum) * stats.var[c] + kBatchNormMomentum * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = stats.mean[c];
      inv_std[c] = static_cast<S>(1.0 / std::sqrt(static_cast<double>(stats.var[c]) + kBatchNormEps));
    }
  }
  S* o = out.ptr();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const S* hc = h + (b * C + c) * sites;
      S* oc = o + (b * C + c) * sites;
      const S g = scale[c] * inv_std[c];
      const S beta = shift[c];
      const S mu = mean[c];
      for (std::size_t s = 0; s < sites; ++s) oc[s] = (hc[s] - mu) * g + beta;
    }
  }
  if (grad) {
    tape.record(op, out, [H, scale, shift, out, mean = std::move(mean), inv_std = std::move(inv_std),
                          train_mode, B, C, sites, count]() mutable {
      const S* dO = out.grad().data();
      const S* h = H.ptr();
      std::vector<double> sum_g(C, 0.0), sum_gx(C, 0.0);
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
          const S* hc = h + (b * C + c) * sites;
          const S* gc = dO + (b * C + c) * sites;
          for (std::size_t s = 0; s < sites; ++s) {
            sum_g[c] += gc[s];
            sum_gx[c] += static_cast<double>(gc[s]) * ((hc[s] - mean[c]) * inv_std[c]);
          }
        }
      }
      if (scale.requires_grad()) {
        S* ds = scale.grad_buffer().data();
        for (std::size_t c = 0; c < C; ++c) ds[c] += static_cast<S>(sum_gx[c]);
      }
      if (shift.requires_grad()) {
        S* db = shift.grad_buffer().data();
        for (std::size_t c = 0; c < C; ++c) db[c] += static_cast<S>(sum_g[c]);
      }
      if (H.requires_grad()) {
        S* dh = H.grad_buffer().data();
        const double n = static_cast<double>(count);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t c = 0; c < C; ++c) {
            const S* hc = h + (b * C + c) * sites;
            const S* gc = dO + (b * C + c) * sites;
            S* dhc = dh + (b * C + c) * sites;
            const S gain = scale[c] * inv_std[c];
            if (train_mode) {
              const S mg = static_cast<S>(sum_g[c] / n);
              const S mgx = static_cast<S>(sum_gx[c] / n);
              for (std::size_t s = 0; s < sites; ++s) {
                const S xhat = (hc[s] - mean[c]) * inv_std[c];
                dhc[s] += gain * (gc[s] - mg - xhat * mgx);
              }
            } else {
              for (std::size_t s = 0; s < sites; ++s) dhc[s] += gain * gc[s];
            }
          }
        }
      }
    });
  }
  return out;
}

/// 2-D convolution with "same" zero padding over the last two axes.
/// H: [B, Cin, P, Q], kernel: [Cout, Cin, kh, kw] with odd kh, kw, bias: [Cout].
template <typename S>
Tensor<S> conv2d(Tape<S>& tape, const Tensor<S>& H, const Tensor<S>& kernel, const Tensor<S>& bias) {
  const std::string op = "conv2d";
  detail::require_rank(op, "H", H.shape(), 4);
  detail::require_rank(op, "kernel", kernel.shape(), 4);
  const std::size_t B = H.dim(0), Cin = H.dim(1), P = H.dim(2), Q = H.dim(3);
  const std::size_t Cout = kernel.dim(0), KH = kernel.dim(2), KW = kernel.dim(3);
  detail::require_axis(op, "channel (Cin)", Cin, kernel.dim(1));
  detail::require_axis(op, "channel (bias)", Cout, bias.numel());
  detail::require(KH % 2 == 1 && KW % 2 == 1, op, "kernel extents must be odd, got " + shape_str(kernel.shape()));
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(KH / 2), pw = static_cast<std::ptrdiff_t>(KW / 2);
  const std::ptrdiff_t iP = static_cast<std::ptrdiff_t>(P), iQ = static_cast<std::ptrdiff_t>(Q);

  // Visits every (output site, input site, tap) triple of one input/output plane pair.
  auto for_taps = [=](auto&& fn) {
    for (std::size_t dp = 0; dp < KH; ++dp) {
      const std::ptrdiff_t op_ = static_cast<std::ptrdiff_t>(dp) - ph;
      const std::ptrdiff_t p0 = std::max<std::ptrdiff_t>(0, -op_), p1 = std::min(iP, iP - op_);
      for (std::size_t dq = 0; dq < KW; ++dq) {
        const std::ptrdiff_t oq = static_cast<std::ptrdiff_t>(dq) - pw;
        const std::ptrdiff_t q0 = std::max<std::ptrdiff_t>(0, -oq), q1 = std::min(iQ, iQ - oq);
        fn(dp * KW + dq, op_, oq, p0, p1, q0, q1);
      }
    }
  };

  const bool grad = detail::any_requires_grad(tape, {&H, &kernel, &bias});
  Tensor<S> out({B, Cout, P, Q}, grad);
  const S* h = H.ptr();
  const S* w = kernel.ptr();
  S* o = out.ptr();
  const std::size_t plane = P * Q;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Cout; ++co) {
      S* oc = o + (b * Cout + co) * plane;
      std::fill(oc, oc + plane, bias[co]);
      for (std::size_t ci = 0; ci < Cin; ++ci) {
        const S* hc = h + (b * Cin + ci) * plane;
        const S* wk = w + (co * Cin + ci) * KH * KW;
        for_taps([&](std::size_t tap, std::ptrdiff_t dp, std::ptrdiff_t dq, std::ptrdiff_t p0,
                     std::ptrdiff_t p1, std::ptrdiff_t q0, std::ptrdiff_t q1) {
          const S wt = wk[tap];
          for (std::ptrdiff_t p = p0; p < p1; ++p) {
            S* orow = oc + p * iQ;
            const S* hrow = hc + (p + dp) * iQ + dq;
            for (std::ptrdiff_t q = q0; q < q1; ++q) orow[q] += wt * hrow[q];
          }
        });
      }
    }
  }
  if (grad) {
    tape.record(op, out, [H, kernel, bias, out, for_taps, B, Cin, Cout, plane, iQ, KH, KW]() mutable {
      const S* dO = out.grad().data();
      const S* h = H.ptr();
      const S* w = kernel.ptr();
      S* dh = H.requires_grad() ? H.grad_buffer().data() : nullptr;
      S* dw = kernel.requires_grad() ? kernel.grad_buffer().data() : nullptr;
      if (bias.requires_grad()) {
        S* db = bias.grad_buffer().data();
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t co = 0; co < Cout; ++co) {
            const S* gc = dO + (b * Cout + co) * plane;
            S acc{0};
            for (std::size_t s = 0; s < plane; ++s) acc += gc[s];
            db[co] += acc;
          }
      }
      if (!dh && !dw) return;
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t co = 0; co < Cout; ++co) {
          const S* gc = dO + (b * Cout + co) * plane;
          for (std::size_t ci = 0; ci < Cin; ++ci) {
            const S* hc = h + (b * Cin + ci) * plane;
            const std::size_t kbase = (co * Cin + ci) * KH * KW;
            for_taps([&](std::size_t tap, std::ptrdiff_t dp, std::ptrdiff_t dq, std::ptrdiff_t p0,
                         std::ptrdiff_t p1, std::ptrdiff_t q0, std::ptrdiff_t q1) {
              const S wt = w[kbase + tap];
              S acc{0};
              for (std::ptrdiff_t p = p0; p < p1; ++p) {
                const S* grow = gc + p * iQ;
                const std::ptrdiff_t in_off = (p + dp) * iQ + dq;
                if (dh) {
                  S* dhrow = dh + (b * Cin + ci) * plane + in_off;
                  for (std::ptrdiff_t q = q0; q < q1; ++q) dhrow[q] += wt * grow[q];
                }
                if (dw) {
                  const S* hrow = hc + in_off;
                  for (std::ptrdiff_t q = q0; q < q1; ++q) acc += grow[q] * hrow[q];
                }
              }
              if (dw) dw[kbase + tap] += acc;
            });
          }
        }
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> add(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  detail::require(a.shape() == b.shape(), "add",
                  "operand shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const bool grad = detail::any_requires_grad(tape, {&a, &b});
  Tensor<S> out(a.shape(), grad);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
  if (grad) {
    tape.record("add", out, [a, b, out, n]() mutable {
      const S* dO = out.grad().data();
      for (const Tensor<S>* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        S* d = t->grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) d[i] += dO[i];
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> mul(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  detail::require(a.shape() == b.shape(), "mul",
                  "operand shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const bool grad = detail::any_requires_grad(tape, {&a, &b});
  Tensor<S> out(a.shape(), grad);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
  if (grad) {
    tape.record("mul", out, [a, b, out, n]() mutable {
      const S* dO = out.grad().data();
      if (a.requires_grad()) {
        S* d = a.grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) d[i] += dO[i] * b[i];
      }
      if (b.requires_grad()) {
        S* d = b.grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) d[i] += dO[i] * a[i];
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> sum(Tape<S>& tape, const Tensor<S>& a) {
  const bool grad = detail::any_requires_grad(tape, {&a});
  S acc{0};
  for (S v : a.data()) acc += v;
  Tensor<S> out = Tensor<S>::full({1}, acc, grad);
  if (grad) {
    tape.record("sum", out, [a, out]() mutable {
      const S g = out.grad()[0];
      for (S& d : a.grad_buffer()) d += g;
    });
  }
  return out;
}

/// Axis permutation: out.shape[i] = a.shape[axes[i]].
template <typename S>
Tensor<S> permute(Tape<S>& tape, const Tensor<S>& a, const std::vector<std::size_t>& axes) {
  const std::size_t r = a.rank();
  detail::require(axes.size() == r, "permute", "axis list length must equal rank " + std::to_string(r));
  std::vector<bool> seen(r, false);
  for (std::size_t ax : axes) {
    detail::require(ax < r && !seen[ax], "permute", "axis list is not a permutation");
    seen[ax] = true;
  }
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * a.dim(i);
  Shape out_shape(r);
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = a.dim(axes[i]);
    stride[i] = in_stride[axes[i]];
  }
  // src[i] is the flat source offset of output element i.
  std::vector<std::size_t> src(a.numel());
  std::vector<std::size_t> idx(r, 0);
  std::size_t off = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    src[i] = off;
    for (std::size_t d = r; d-- > 0;) {
      off += stride[d];
      if (++idx[d] < out_shape[d]) break;
      off -= stride[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  const bool grad = detail::any_requires_grad(tape, {&a});
  Tensor<S> out(out_shape, grad);
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = a[src[i]];
  if (grad) {
    tape.record("permute", out, [a, out, src = std::move(src)]() mutable {
      const S* dO = out.grad().data();
      S* d = a.grad_buffer().data();
      for (std::size_t i = 0; i < src.size(); ++i) d[src[i]] += dO[i];
    });
  }
  return out;
}

}  // namespace stsgcn
