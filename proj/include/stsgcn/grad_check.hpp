#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stsgcn/error.hpp"
#include "stsgcn/tape.hpp"
#include "stsgcn/tensor.hpp"

namespace stsgcn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-6;
  // Entries checked per parameter tensor; 0 checks every entry.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

/// Compares reverse-mode gradients against central differences.
///
/// `loss_fn` must build a scalar loss on the given tape and be deterministic.
/// The relative error of an entry is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
inline GradCheckResult grad_check(const std::function<Tensor<double>(Tape<double>&)>& loss_fn,
                                  std::vector<Tensor<double>> params, GradCheckOptions opts = {}) {
  if (!(opts.eps > 0.0)) throw AutodiffError("grad_check: eps must be positive");
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tape<double> tape;
    Tensor<double> loss = loss_fn(tape);
    if (!std::isfinite(loss.item())) throw AutodiffError("grad_check: non-finite loss");
    tape.backward(loss);
  }
  auto eval = [&]() {
    Tape<double> tape(false);
    const double v = loss_fn(tape).item();
    if (!std::isfinite(v)) throw AutodiffError("grad_check: non-finite loss under perturbation");
    return v;
  };

  GradCheckResult result;
  std::mt19937_64 rng(opts.seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<double>& p = params[pi];
    std::vector<double> analytic(p.numel(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());

    std::vector<std::size_t> entries(p.numel());
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = i;
    if (opts.max_entries_per_param > 0 && entries.size() > opts.max_entries_per_param) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(opts.max_entries_per_param);
    }
    for (std::size_t i : entries) {
      const double saved = p[i];
      p[i] = saved + opts.eps;
      const double up = eval();
      p[i] = saved - opts.eps;
      const double down = eval();
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.eps);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_param = pi;
        result.worst_index = i;
        result.worst_analytic = analytic[i];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace stsgcn
