#pragma once

#include <string>
#include <vector>

#include "moedti/tensor.hpp"

namespace moedti {

// One-hidden-layer MLP ending in a sigmoid; used for both expert
// heads. Input [B, in_dim] -> probabilities [B, 1] in (0, 1).
class MlpClassifier {
 public:
  MlpClassifier(int in_dim, int hidden, Rng& rng);

  TensorPtr probability(const TensorPtr& x) const;
  std::vector<TensorPtr> parameters() const;
  int in_dim() const { return in_dim_; }

  std::vector<std::pair<std::string, TensorPtr>> named_parameters(
      const std::string& prefix) const;
  void load_parameters(const std::string& prefix,
                       const std::vector<std::pair<std::string, TensorPtr>>& named);

 private:
  int in_dim_;
  TensorPtr w1_, b1_, w2_, b2_;
};

// Produces the extrinsic mixture weight: one hidden layer, two logits,
// softmax, first component. Input [B, in_dim] -> [B, 1] in (0, 1).
class GatingModel {
 public:
  GatingModel(int in_dim, int hidden, Rng& rng);

  TensorPtr weight(const TensorPtr& x) const;
  std::vector<TensorPtr> parameters() const;
  int in_dim() const { return in_dim_; }

  std::vector<std::pair<std::string, TensorPtr>> named_parameters() const;
  void load_parameters(const std::vector<std::pair<std::string, TensorPtr>>& named);

 private:
  int in_dim_;
  TensorPtr w1_, b1_, w2_, b2_;
};

// w * p_ex + (1 - w) * p_in, elementwise on [B, 1] tensors.
TensorPtr blend(const TensorPtr& w, const TensorPtr& p_ex, const TensorPtr& p_in);

}  // namespace moedti
