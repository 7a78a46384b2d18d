#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stsgcn/error.hpp"
#include "stsgcn/tensor.hpp"

namespace stsgcn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed list of parameter tensors.
template <typename S>
class Adam {
 public:
  Adam(std::vector<Tensor<S>> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p.numel(), 0.0);
      v_.emplace_back(p.numel(), 0.0);
    }
  }

  /// Applies one update. A non-finite gradient anywhere rejects the whole step
  /// before any parameter or moment is touched.
  void step(double lr) {
    if (!(lr > 0.0)) throw ConfigError("Adam: learning rate must be positive");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i].has_grad()) continue;
      for (S g : params_[i].grad()) {
        if (!std::isfinite(g)) throw DataError("Adam: non-finite gradient in parameter group " + std::to_string(i));
      }
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor<S>& p = params_[i];
      auto& m = m_[i];
      auto& v = v_[i];
      const bool has = p.has_grad();
      for (std::size_t j = 0; j < p.numel(); ++j) {
        const double g = has ? static_cast<double>(p.grad()[j]) : 0.0;
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
        const double update = lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
        p[j] = static_cast<S>(static_cast<double>(p[j]) - update);
      }
    }
  }

  std::size_t steps() const { return steps_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_.at(i); }
  const std::vector<double>& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<Tensor<S>> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t steps_ = 0;
};

struct LrSchedule {
  double lr0 = 0.01;
  double decay_factor = 0.1;
  std::size_t decay_every = 5;
  std::size_t decay_after = 20;
};

/// Step decay: constant through epoch `decay_after`, then multiplied by
/// `decay_factor` at the first epoch after it and again every `decay_every`
/// epochs (defaults: 1-20 -> 0.01, 21-25 -> 0.001, 26-30 -> 0.0001).
inline double lr_at_epoch(const LrSchedule& s, std::size_t epoch) {
  if (epoch == 0) throw ConfigError("epochs are numbered from 1");
  if (s.decay_every == 0) throw ConfigError("decay_every must be positive");
  if (epoch <= s.decay_after) return s.lr0;
  const std::size_t decays = (epoch - s.decay_after - 1) / s.decay_every + 1;
  return s.lr0 * std::pow(s.decay_factor, static_cast<double>(decays));
}

}  // namespace stsgcn
