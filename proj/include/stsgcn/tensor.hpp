#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stsgcn/error.hpp"

namespace stsgcn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

/// Dense row-major array with an optional gradient buffer.
///
/// A Tensor is a handle: copies share storage, so an operation recorded on a
/// Tape can write gradients that the caller's copy observes. Use clone() for an
/// independent deep copy.
template <typename S>
class Tensor {
 public:
  using value_type = S;

  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : s_(std::make_shared<Storage>()) {
    for (std::size_t e : shape) {
      if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
    }
    s_->data.assign(shape_numel(shape), S{0});
    s_->shape = std::move(shape);
    s_->requires_grad = requires_grad;
  }

  Tensor(Shape shape, std::vector<S> values, bool requires_grad = false)
      : Tensor(std::move(shape), requires_grad) {
    if (values.size() != s_->data.size()) {
      throw DimensionError("tensor of shape " + shape_str(s_->shape) + " needs " +
                           std::to_string(s_->data.size()) + " values, got " +
                           std::to_string(values.size()));
    }
    s_->data = std::move(values);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return Tensor(std::move(shape), requires_grad);
  }

  static Tensor full(Shape shape, S value, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.s_->data.begin(), t.s_->data.end(), value);
    return t;
  }

  static Tensor scalar(S value, bool requires_grad = false) {
    return full(Shape{1}, value, requires_grad);
  }

  bool defined() const noexcept { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  std::size_t rank() const { return s_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return s_->shape.at(axis); }
  std::size_t numel() const { return s_->data.size(); }

  std::span<S> data() { return s_->data; }
  std::span<const S> data() const { return s_->data; }
  S* ptr() { return s_->data.data(); }
  const S* ptr() const { return s_->data.data(); }

  S& operator[](std::size_t i) { return s_->data[i]; }
  const S& operator[](std::size_t i) const { return s_->data[i]; }

  S item() const {
    if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
    return s_->data[0];
  }

  bool requires_grad() const { return s_ && s_->requires_grad; }
  void set_requires_grad(bool on) {
    s_->requires_grad = on;
    if (!on) s_->grad.clear();
  }

  bool has_grad() const { return s_ && !s_->grad.empty(); }
  std::span<S> grad() { return s_->grad; }
  std::span<const S> grad() const { return s_->grad; }

  // Returns the gradient buffer, allocating zeros on first use. Const because a
  // Tensor is a handle; the buffer lives in shared storage.
  std::span<S> grad_buffer() const {
    if (s_->grad.empty()) s_->grad.assign(s_->data.size(), S{0});
    return s_->grad;
  }

  void zero_grad() {
    if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), S{0});
  }
  void release_grad() { std::vector<S>().swap(s_->grad); }

  Tensor clone() const {
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->shape = s_->shape;
    t.s_->data = s_->data;
    t.s_->requires_grad = s_->requires_grad;
    return t;
  }

  template <typename T>
  Tensor<T> cast() const {
    std::vector<T> values(s_->data.begin(), s_->data.end());
    return Tensor<T>(s_->shape, std::move(values), s_->requires_grad);
  }

  bool shares_storage(const Tensor& other) const noexcept { return s_ == other.s_; }

  bool all_finite() const {
    return std::all_of(s_->data.begin(), s_->data.end(), [](S v) { return std::isfinite(v); });
  }

 private:
  struct Storage {
    Shape shape;
    std::vector<S> data;
    std::vector<S> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

}  // namespace stsgcn
