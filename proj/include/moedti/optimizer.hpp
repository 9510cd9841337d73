#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moedti/tensor.hpp"

namespace moedti {

enum class OptimRule { kSgd, kAdaptive };

struct OptimConfig {
  OptimRule rule = OptimRule::kAdaptive;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

OptimRule optim_rule_from_string(const std::string& name);

// Plain SGD or adaptive-moments updates over a registered parameter
// list. step() consumes and clears gradients; parameters never touched
// by a loss keep moment estimates at zero and therefore never move.
class Optimizer {
 public:
  explicit Optimizer(OptimConfig cfg);

  void add_param(const TensorPtr& p);  // p must require grad
  void add_params(const std::vector<TensorPtr>& ps);

  // Applies one update. Every registered parameter must carry a
  // gradient (zero-filled counts); afterwards all gradients are
  // cleared.
  void step();

  void zero_grad();
  int64_t steps() const { return steps_; }
  size_t num_params() const { return slots_.size(); }
  const OptimConfig& config() const { return cfg_; }

 private:
  struct Slot {
    TensorPtr p;
    std::vector<double> m, v;  // adaptive moments
  };
  OptimConfig cfg_;
  std::vector<Slot> slots_;
  int64_t steps_ = 0;
};

}  // namespace moedti
