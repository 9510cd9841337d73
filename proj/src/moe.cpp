#include "moedti/moe.hpp"

#include <cmath>

#include "moedti/ops.hpp"

namespace moedti {

namespace {

TensorPtr glorot(int64_t fan_in, int64_t fan_out, Rng& rng) {
  double b = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Tensor::uniform({fan_in, fan_out}, -b, b, rng, true);
}

void load_named(const std::vector<std::pair<std::string, TensorPtr>>& stored,
                const std::vector<std::pair<std::string, TensorPtr>>& params) {
  for (auto& [name, value] : stored) {
    for (auto& [want, param] : params) {
      if (want == name) {
        if (value->shape != param->shape) {
          throw IoError("parameter " + name + " has shape " + shape_str(value->shape) +
                        ", expected " + shape_str(param->shape));
        }
        param->data = value->data;
      }
    }
  }
}

}  // namespace

MlpClassifier::MlpClassifier(int in_dim, int hidden, Rng& rng) : in_dim_(in_dim) {
  if (in_dim < 1 || hidden < 1) throw ConfigError("classifier dims must be >= 1");
  w1_ = glorot(in_dim, hidden, rng);
  b1_ = Tensor::zeros({hidden}, true);
  w2_ = glorot(hidden, 1, rng);
  b2_ = Tensor::zeros({1}, true);
}

TensorPtr MlpClassifier::probability(const TensorPtr& x) const {
  if (x->shape.size() != 2 || x->shape[1] != in_dim_) {
    throw ShapeError("classifier expects [B," + std::to_string(in_dim_) +
                     "], got " + shape_str(x->shape));
  }
  auto h = ops::relu(ops::add(ops::matmul(x, w1_), b1_));
  return ops::sigmoid(ops::add(ops::matmul(h, w2_), b2_));
}

std::vector<TensorPtr> MlpClassifier::parameters() const {
  return {w1_, b1_, w2_, b2_};
}

std::vector<std::pair<std::string, TensorPtr>> MlpClassifier::named_parameters(
    const std::string& prefix) const {
  return {{prefix + "/w1", w1_}, {prefix + "/b1", b1_},
          {prefix + "/w2", w2_}, {prefix + "/b2", b2_}};
}

void MlpClassifier::load_parameters(
    const std::string& prefix,
    const std::vector<std::pair<std::string, TensorPtr>>& named) {
  load_named(named, named_parameters(prefix));
}

GatingModel::GatingModel(int in_dim, int hidden, Rng& rng) : in_dim_(in_dim) {
  if (in_dim < 1 || hidden < 1) throw ConfigError("gate dims must be >= 1");
  w1_ = glorot(in_dim, hidden, rng);
  b1_ = Tensor::zeros({hidden}, true);
  w2_ = glorot(hidden, 2, rng);
  b2_ = Tensor::zeros({2}, true);
}

TensorPtr GatingModel::weight(const TensorPtr& x) const {
  if (x->shape.size() != 2 || x->shape[1] != in_dim_) {
    throw ShapeError("gate expects [B," + std::to_string(in_dim_) + "], got " +
                     shape_str(x->shape));
  }
  auto h = ops::relu(ops::add(ops::matmul(x, w1_), b1_));
  auto logits = ops::add(ops::matmul(h, w2_), b2_);
  auto sm = ops::softmax(logits, 1);
  return ops::slice_cols(sm, 0, 1);
}

std::vector<TensorPtr> GatingModel::parameters() const {
  return {w1_, b1_, w2_, b2_};
}

std::vector<std::pair<std::string, TensorPtr>> GatingModel::named_parameters() const {
  return {{"gate/w1", w1_}, {"gate/b1", b1_}, {"gate/w2", w2_}, {"gate/b2", b2_}};
}

void GatingModel::load_parameters(
    const std::vector<std::pair<std::string, TensorPtr>>& named) {
  load_named(named, named_parameters());
}

TensorPtr blend(const TensorPtr& w, const TensorPtr& p_ex, const TensorPtr& p_in) {
  if (w->shape != p_ex->shape || w->shape != p_in->shape) {
    throw ShapeError("blend: shapes differ: " + shape_str(w->shape) + ", " +
                     shape_str(p_ex->shape) + ", " + shape_str(p_in->shape));
  }
  return ops::add(ops::mul(w, p_ex), ops::mul(ops::affine(w, -1.0, 1.0), p_in));
}

}  // namespace moedti
