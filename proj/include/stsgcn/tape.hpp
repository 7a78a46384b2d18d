#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "stsgcn/error.hpp"
#include "stsgcn/tensor.hpp"

namespace stsgcn {

/// Ordered record of differentiable operations for reverse-mode autodiff.
///
/// Operations push a closure that reads the output gradient and accumulates
/// into the gradients of their inputs. backward() replays the closures in
/// exact reverse order. A tape may be replayed once; a second backward() on
/// the same tape throws. Leaf gradients accumulate across tapes until the
/// caller zeroes them, which is how the trainer drives one tape per step.
///
/// A non-recording tape (Tape(false)) is used for inference: operations run
/// forward only and nothing is kept alive.
template <typename S>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool replayed() const noexcept { return replayed_; }

  // Intermediate gradients are freed as soon as their producer has run,
  // unless retained for inspection.
  void retain_intermediate_grads(bool on) noexcept { retain_ = on; }

  const std::string& op_name(std::size_t i) const { return entries_.at(i).name; }

  void record(std::string name, Tensor<S> output, std::function<void()> backward_fn) {
    if (!recording_) return;
    if (replayed_) throw AutodiffError("cannot record on a tape that was already replayed");
    entries_.push_back({std::move(name), std::move(output), std::move(backward_fn)});
  }

  void backward(Tensor<S> loss) {
    if (!loss.defined() || loss.numel() != 1) {
      throw AutodiffError("backward() needs a scalar loss, got shape " +
                          (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    }
    if (entries_.empty()) throw AutodiffError("backward() on an empty tape");
    if (replayed_) throw AutodiffError("backward() called twice on the same tape");
    if (!loss.requires_grad()) throw AutodiffError("loss does not depend on any differentiable input");
    replayed_ = true;
    loss.grad_buffer()[0] = S{1};
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (it->output.has_grad()) it->fn();
      if (!retain_) it->output.release_grad();
    }
  }

  void clear() {
    entries_.clear();
    replayed_ = false;
  }

 private:
  struct Entry {
    std::string name;
    Tensor<S> output;
    std::function<void()> fn;
  };
  std::vector<Entry> entries_;
  bool recording_ = true;
  bool replayed_ = false;
  bool retain_ = false;
};

}  // namespace stsgcn
