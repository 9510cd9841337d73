#include "moedti/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "moedti/errors.hpp"
#include "moedti/moe.hpp"
#include "moedti/mol_encoder.hpp"
#include "moedti/ops.hpp"
#include "moedti/seq_encoder.hpp"
#include "moedti/smiles.hpp"
#include "moedti/synthetic.hpp"

namespace moedti {

double fd_max_rel_err(const std::vector<TensorPtr>& params,
                      const std::function<TensorPtr()>& forward,
                      int64_t max_coords_per_tensor, Rng& rng, double step) {
  Tape::current().clear();
  auto loss = forward();
  Tape::current().backward(loss);
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    if (p->grad.empty()) {
      throw ContractError("gradient check: a parameter never received a gradient");
    }
    analytic.push_back(p->grad);
    p->grad.clear();
  }
  auto evaluate = [&] {
    NoGradGuard guard;
    return forward()->item();
  };
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params[pi];
    const int64_t n = p.numel();
    std::vector<int64_t> coords(n);
    for (int64_t i = 0; i < n; ++i) coords[i] = i;
    if (n > max_coords_per_tensor) {
      for (int64_t i = 0; i < max_coords_per_tensor; ++i) {
        auto j = i + static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(n - i)));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(max_coords_per_tensor);
    }
    auto central = [&](int64_t idx, double h) {
      const double orig = p.data[idx];
      p.data[idx] = orig + h;
      const double up = evaluate();
      p.data[idx] = orig - h;
      const double down = evaluate();
      p.data[idx] = orig;
      return (up - down) / (2.0 * h);
    };
    for (int64_t idx : coords) {
      const double fd = central(idx, step);
      const double a = analytic[pi][idx];
      const double rel = std::abs(fd - a) / std::max({1.0, std::abs(fd), std::abs(a)});
      if (rel > 1e-6) {
        // Central differences only estimate the derivative where the loss is
        // smooth across [x-h, x+h]. A ReLU kink or max-readout tie inside the
        // window makes the h and h/2 estimates disagree, so such coordinates
        // carry no evidence either way and are excluded. A genuinely wrong
        // analytic gradient leaves the two estimates consistent and still fails.
        const double fd_half = central(idx, step / 2.0);
        const double drift =
            std::abs(fd - fd_half) / std::max({1.0, std::abs(fd), std::abs(fd_half)});
        if (drift > 1e-6) continue;
      }
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

namespace {

std::vector<double> random_labels(Rng& rng, int64_t n) {
  std::vector<double> y(n);
  for (auto& v : y) v = uniform_index(rng, 2) ? 1.0 : 0.0;
  return y;
}

struct Check {
  std::vector<TensorPtr> params;
  std::function<TensorPtr()> forward;
  int64_t coords_per_tensor = 6;
};

Check embedding_check(Rng& rng, int c) {
  auto check = Check{};
  const int64_t entities = 5 + c % 4;
  const int64_t dim = 3 + c % 5;
  auto table = Tensor::uniform({entities, dim}, -1.0, 1.0, rng, true);
  auto clf = std::make_shared<MlpClassifier>(static_cast<int>(2 * dim), 6, rng);
  const int64_t n = 5;
  std::vector<int64_t> di(n), ti(n);
  for (int64_t i = 0; i < n; ++i) {
    di[i] = static_cast<int64_t>(uniform_index(rng, entities));
    ti[i] = static_cast<int64_t>(uniform_index(rng, entities));
  }
  auto labels = random_labels(rng, n);
  std::vector<double> weights(n, 1.0);
  weights[0] = 3.0;  // exercise the weighted-loss path
  check.params = {table};
  for (auto& p : clf->parameters()) check.params.push_back(p);
  check.forward = [=] {
    auto h = ops::embedding_lookup(table, di);
    auto t = ops::embedding_lookup(table, ti);
    auto p = clf->probability(ops::concat({h, t}, 1));
    return ops::bce_sum(p, labels, weights);
  };
  return check;
}

Check mol_encoder_check(Rng& rng, int c) {
  auto check = Check{};
  GenMol m = random_molecule(rng, 4, 9);
  auto prepared =
      std::make_shared<MolEncoder::Prepared>(MolEncoder::prepare(parse_smiles(write_smiles(m))));
  // Random dense features instead of one-hots: same operator graph,
  // better-conditioned finite differences.
  prepared->features = Tensor::uniform(prepared->features->shape, -1.0, 1.0, rng, true);
  MolEncoder::Spec spec;
  spec.layers = 2 + c % 2;
  spec.hidden = 5 + c % 3;
  spec.out_dim = 4;
  auto enc = std::make_shared<MolEncoder>(spec, rng);
  check.params = enc->parameters();
  check.params.push_back(prepared->features);
  check.forward = [=] {
    auto e = enc->encode(*prepared);
    return ops::sum(ops::mul(e, e));
  };
  return check;
}

Check seq_encoder_check(Rng& rng, int c) {
  auto check = Check{};
  const int e_dim = 3 + c % 3;
  Rng frng(rng());
  auto featurizer = std::make_shared<ResidueFeaturizer>(ResidueFeaturizer::learned(e_dim, frng));
  SeqEncoder::Spec spec;
  spec.kernel = 3;
  spec.channels = {3, 4};
  spec.pool_len = 4;
  spec.out_dim = 5;
  auto enc = std::make_shared<SeqEncoder>(spec, e_dim, rng);
  auto seq = std::make_shared<ResidueSequence>();
  seq->target_id = "gc";
  const int64_t len = 3 + c % 14;  // covers lengths below the pool width
  seq->original_length = len;
  for (int64_t i = 0; i < len; ++i) {
    seq->residues.push_back(static_cast<int64_t>(uniform_index(rng, kResidueAlphabet)));
  }
  check.params = enc->parameters();
  for (auto& p : featurizer->parameters()) check.params.push_back(p);
  check.forward = [=] {
    auto e = enc->encode(*seq, *featurizer);
    return ops::sum(ops::mul(e, e));
  };
  return check;
}

Check classifier_check(Rng& rng, int c) {
  auto check = Check{};
  const int64_t b = 4;
  const int in = 5 + c % 5;
  auto x = Tensor::uniform({b, in}, -1.5, 1.5, rng, true);
  auto clf = std::make_shared<MlpClassifier>(in, 5 + c % 4, rng);
  auto labels = random_labels(rng, b);
  std::vector<double> weights(b, 1.0);
  check.params = clf->parameters();
  check.params.push_back(x);
  check.forward = [=] { return ops::bce_sum(clf->probability(x), labels, weights); };
  return check;
}

Check gate_check(Rng& rng, int c) {
  auto check = Check{};
  const int64_t b = 3;
  const int d_ex = 4 + c % 3, d_in = 5 + c % 2;
  auto x_ex = Tensor::uniform({b, d_ex}, -1.0, 1.0, rng, true);
  auto x_in = Tensor::uniform({b, d_in}, -1.0, 1.0, rng, true);
  auto clf_ex = std::make_shared<MlpClassifier>(d_ex, 5, rng);
  auto clf_in = std::make_shared<MlpClassifier>(d_in, 4, rng);
  auto gate = std::make_shared<GatingModel>(d_ex + d_in, 5 + c % 3, rng);
  auto labels = random_labels(rng, b);
  std::vector<double> weights(b, 1.0);
  check.params = gate->parameters();
  for (auto& p : clf_ex->parameters()) check.params.push_back(p);
  for (auto& p : clf_in->parameters()) check.params.push_back(p);
  check.params.push_back(x_ex);
  check.params.push_back(x_in);
  check.forward = [=] {
    auto p_ex = clf_ex->probability(x_ex);
    auto p_in = clf_in->probability(x_in);
    auto w = gate->weight(ops::concat({x_ex, x_in}, 1));
    return ops::bce_sum(blend(w, p_ex, p_in), labels, weights);
  };
  return check;
}

}  // namespace

std::vector<GradCheckReport> run_gradient_checks(int configs_per_module, uint64_t seed,
                                                 double tolerance) {
  if (configs_per_module < 1) throw ContractError("need at least one configuration");
  struct Module {
    const char* name;
    Check (*make)(Rng&, int);
  };
  const Module modules[] = {
      {"kg-embeddings", embedding_check}, {"mol-encoder", mol_encoder_check},
      {"seq-encoder", seq_encoder_check}, {"extrinsic-classifier", classifier_check},
      {"intrinsic-classifier", classifier_check}, {"gating-model", gate_check},
  };
  std::vector<GradCheckReport> reports;
  for (const auto& mod : modules) {
    GradCheckReport rep;
    rep.module = mod.name;
    auto start = std::chrono::steady_clock::now();
    for (int c = 0; c < configs_per_module; ++c) {
      Rng rng(derive_seed(seed, std::string(mod.name) + ":" + std::to_string(c)));
      Check check = mod.make(rng, c);
      for (const auto& p : check.params) {
        rep.coords += std::min<int64_t>(p->numel(), check.coords_per_tensor);
      }
      double err = fd_max_rel_err(check.params, check.forward, check.coords_per_tensor, rng);
      rep.max_rel_err = std::max(rep.max_rel_err, err);
      ++rep.configs;
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.pass = rep.max_rel_err <= tolerance;
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace moedti
