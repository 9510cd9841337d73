#include "moedti/optimizer.hpp"

#include <cmath>

namespace moedti {

OptimRule optim_rule_from_string(const std::string& name) {
  if (name == "sgd") return OptimRule::kSgd;
  if (name == "adaptive" || name == "adam") return OptimRule::kAdaptive;
  throw ConfigError("unknown optimizer rule: " + name);
}

Optimizer::Optimizer(OptimConfig cfg) : cfg_(cfg) {
  if (!(cfg_.lr >= 0.0) || !std::isfinite(cfg_.lr)) {
    throw ConfigError("optimizer: learning rate must be finite and >= 0");
  }
}

void Optimizer::add_param(const TensorPtr& p) {
  if (!p) throw ContractError("optimizer: null parameter");
  if (!p->requires_grad) {
    throw ContractError("optimizer: parameter does not require grad");
  }
  Slot s;
  s.p = p;
  if (cfg_.rule == OptimRule::kAdaptive) {
    s.m.assign(p->data.size(), 0.0);
    s.v.assign(p->data.size(), 0.0);
  }
  slots_.push_back(std::move(s));
}

void Optimizer::add_params(const std::vector<TensorPtr>& ps) {
  for (const auto& p : ps) add_param(p);
}

void Optimizer::step() {
  for (const Slot& s : slots_) {
    if (s.p->grad.empty()) {
      throw ContractError("optimizer step: a registered parameter of shape " +
                          shape_str(s.p->shape) + " has no gradient");
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  for (Slot& s : slots_) {
    double* p = s.p->data.data();
    const double* g = s.p->grad.data();
    const size_t n = s.p->data.size();
    if (cfg_.rule == OptimRule::kSgd) {
      for (size_t i = 0; i < n; ++i) p[i] -= cfg_.lr * g[i];
    } else {
      for (size_t i = 0; i < n; ++i) {
        s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g[i];
        s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        double mh = s.m[i] / bc1;
        double vh = s.v[i] / bc2;
        p[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
      }
    }
    s.p->zero_grad();
  }
}

void Optimizer::zero_grad() {
  for (Slot& s : slots_) s.p->zero_grad();
}

}  // namespace moedti
