#include "moedti/tensor.hpp"

#include <cmath>
#include <sstream>

namespace moedti {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

static int64_t shape_numel(const Shape& s) {
  if (s.empty()) throw ShapeError("tensor shape must have at least one axis");
  int64_t n = 1;
  for (int64_t d : s) {
    if (d <= 0) throw ShapeError("tensor axes must be positive, got " + shape_str(s));
    n *= d;
  }
  return n;
}

TensorPtr Tensor::create(Shape shape, std::vector<double> data, bool requires_grad) {
  int64_t n = shape_numel(shape);
  if (n != static_cast<int64_t>(data.size())) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data = std::move(data);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::zeros(Shape shape, bool requires_grad) {
  int64_t n = shape_numel(shape);
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(static_cast<size_t>(n), 0.0);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::full(Shape shape, double value, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  for (double& v : t->data) v = value;
  return t;
}

TensorPtr Tensor::scalar_val(double value, bool requires_grad) {
  return create({1}, {value}, requires_grad);
}

TensorPtr Tensor::uniform(Shape shape, double lo, double hi, Rng& rng,
                          bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  for (double& v : t->data) v = uniform_real(rng, lo, hi);
  return t;
}

int64_t Tensor::numel() const {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

double Tensor::item() const {
  if (!is_scalar()) {
    throw ContractError("item(): tensor is not scalar, shape " + shape_str(shape));
  }
  return data[0];
}

int64_t Tensor::rows() const {
  if (shape.size() != 2) {
    throw ShapeError("rows(): tensor is not 2-d, shape " + shape_str(shape));
  }
  return shape[0];
}

int64_t Tensor::cols() const {
  if (shape.size() != 2) {
    throw ShapeError("cols(): tensor is not 2-d, shape " + shape_str(shape));
  }
  return shape[1];
}

void Tensor::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() { grad.clear(); }

Tape& Tape::current() {
  static thread_local Tape tape;
  return tape;
}

void Tape::record(const TensorPtr& output, std::function<void()> backward_fn) {
  output->on_tape_ = true;
  ops_.push_back(std::move(backward_fn));
}

void Tape::backward(const TensorPtr& loss) {
  if (!loss) throw ContractError("backward: null loss");
  if (!loss->is_scalar()) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_str(loss->shape));
  }
  if (!loss->on_tape_ || ops_.empty()) {
    throw ContractError("backward: loss was not produced on the current tape");
  }
  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  clear();
}

}  // namespace moedti
