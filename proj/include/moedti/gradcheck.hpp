#pragma once

#include <functional>
#include <string>
#include <vector>

#include "moedti/tensor.hpp"

namespace moedti {

// Central finite differences against the tape's analytic gradients.
// Relative error uses |fd - analytic| / max(1, |fd|, |analytic|).
double fd_max_rel_err(const std::vector<TensorPtr>& params,
                      const std::function<TensorPtr()>& forward,
                      int64_t max_coords_per_tensor, Rng& rng, double step = 1e-4);

struct GradCheckReport {
  std::string module;
  int configs = 0;
  int64_t coords = 0;
  double max_rel_err = 0.0;
  double seconds = 0.0;
  bool pass = false;
};

// Randomized configurations of every trainable piece: the embedding
// table driven through lookups (as in the stage-3 path), both encoders,
// both expert heads, and the gate inside the full blended prediction.
std::vector<GradCheckReport> run_gradient_checks(int configs_per_module, uint64_t seed,
                                                 double tolerance = 1e-4);

}  // namespace moedti
