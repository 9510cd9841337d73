#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "moedti/errors.hpp"
#include "moedti/rng.hpp"

namespace moedti {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major 64-bit float tensor. When requires_grad is set, ops
// consuming it record a backward rule on the thread's tape; grad stays
// empty until backward actually reaches the tensor.
class Tensor {
 public:
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  static TensorPtr create(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static TensorPtr zeros(Shape shape, bool requires_grad = false);
  static TensorPtr full(Shape shape, double value, bool requires_grad = false);
  static TensorPtr scalar_val(double value, bool requires_grad = false);
  static TensorPtr uniform(Shape shape, double lo, double hi, Rng& rng,
                           bool requires_grad = false);

  int64_t numel() const;
  bool is_scalar() const { return numel() == 1; }
  double item() const;  // scalar tensors only

  // 2-d accessors.
  int64_t rows() const;
  int64_t cols() const;
  double& at(int64_t i, int64_t j) { return data[i * cols() + j]; }
  double at(int64_t i, int64_t j) const { return data[i * cols() + j]; }

  void ensure_grad();  // allocates a zero-filled grad buffer if absent
  void zero_grad();    // drops the grad buffer
  bool on_tape() const { return on_tape_; }

 private:
  friend class Tape;
  bool on_tape_ = false;  // produced by a recorded op
};

// Reverse-mode tape, one per thread. Ops append themselves in execution
// order, so every op's inputs precede it; backward replays in reverse
// and then clears the tape.
class Tape {
 public:
  static Tape& current();

  void record(const TensorPtr& output, std::function<void()> backward_fn);
  void backward(const TensorPtr& loss);
  void clear() { ops_.clear(); }
  size_t size() const { return ops_.size(); }

 private:
  std::vector<std::function<void()>> ops_;
};

// Disables tape recording in scope; used for scoring/inference.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

}  // namespace moedti
