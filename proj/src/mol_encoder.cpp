#include "moedti/mol_encoder.hpp"

#include <cmath>

#include "moedti/ops.hpp"

namespace moedti {

namespace {

TensorPtr glorot(int64_t fan_in, int64_t fan_out, Rng& rng) {
  double b = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Tensor::uniform({fan_in, fan_out}, -b, b, rng, true);
}

}  // namespace

MolEncoder::MolEncoder(const Spec& spec, Rng& rng) : spec_(spec) {
  if (spec.layers < 1) throw ConfigError("mol encoder needs at least one layer");
  int64_t in = kAtomFeatureDim;
  for (int l = 0; l < spec.layers; ++l) {
    w_.push_back(glorot(in, spec.hidden, rng));
    b_.push_back(Tensor::zeros({spec.hidden}, true));
    in = spec.hidden;
  }
  ro_w1_ = glorot(spec.hidden, spec.hidden, rng);
  ro_b1_ = Tensor::zeros({spec.hidden}, true);
  ro_w2_ = glorot(spec.hidden, spec.out_dim, rng);
  ro_b2_ = Tensor::zeros({spec.out_dim}, true);
}

MolEncoder::Prepared MolEncoder::prepare(const MolecularGraph& g) {
  const int64_t n = static_cast<int64_t>(g.atoms.size());
  if (n == 0) throw ContractError("mol encoder: empty molecular graph");
  Prepared p;
  std::vector<double> feats;
  feats.reserve(n * kAtomFeatureDim);
  for (int64_t a = 0; a < n; ++a) {
    auto f = featurize_atom(g, static_cast<int>(a));
    feats.insert(feats.end(), f.begin(), f.end());
  }
  p.features = Tensor::create({n, kAtomFeatureDim}, std::move(feats));

  std::vector<double> deg(n, 0.0);
  for (const Bond& b : g.bonds) {
    deg[b.a] += 1.0;
    deg[b.b] += 1.0;
  }
  p.norm_adj = Tensor::zeros({n, n});
  for (int64_t v = 0; v < n; ++v) {
    p.norm_adj->at(v, v) = 1.0 / (deg[v] + 1.0);
  }
  for (const Bond& b : g.bonds) {
    double w = 1.0 / std::sqrt((deg[b.a] + 1.0) * (deg[b.b] + 1.0));
    p.norm_adj->at(b.a, b.b) = w;
    p.norm_adj->at(b.b, b.a) = w;
  }
  return p;
}

TensorPtr MolEncoder::encode(const Prepared& p) const {
  TensorPtr h = p.features;
  for (size_t l = 0; l < w_.size(); ++l) {
    h = ops::relu(ops::add(ops::matmul(p.norm_adj, ops::matmul(h, w_[l])), b_[l]));
  }
  TensorPtr node = ops::add(
      ops::matmul(ops::relu(ops::add(ops::matmul(h, ro_w1_), ro_b1_)), ro_w2_),
      ro_b2_);
  return ops::max_over_rows(node);
}

TensorPtr MolEncoder::encode(const MolecularGraph& g) const {
  return encode(prepare(g));
}

std::vector<TensorPtr> MolEncoder::parameters() const {
  std::vector<TensorPtr> ps;
  for (size_t l = 0; l < w_.size(); ++l) {
    ps.push_back(w_[l]);
    ps.push_back(b_[l]);
  }
  ps.push_back(ro_w1_);
  ps.push_back(ro_b1_);
  ps.push_back(ro_w2_);
  ps.push_back(ro_b2_);
  return ps;
}

std::vector<std::pair<std::string, TensorPtr>> MolEncoder::named_parameters() const {
  std::vector<std::pair<std::string, TensorPtr>> named;
  for (size_t l = 0; l < w_.size(); ++l) {
    named.emplace_back("gnn/w" + std::to_string(l), w_[l]);
    named.emplace_back("gnn/b" + std::to_string(l), b_[l]);
  }
  named.emplace_back("gnn/ro_w1", ro_w1_);
  named.emplace_back("gnn/ro_b1", ro_b1_);
  named.emplace_back("gnn/ro_w2", ro_w2_);
  named.emplace_back("gnn/ro_b2", ro_b2_);
  return named;
}

void MolEncoder::load_parameters(
    const std::vector<std::pair<std::string, TensorPtr>>& named) {
  for (auto& [name, stored] : named) {
    for (auto& [want, param] : named_parameters()) {
      if (want == name) {
        if (stored->shape != param->shape) {
          throw IoError("mol encoder parameter " + name + " has shape " +
                        shape_str(stored->shape) + ", expected " +
                        shape_str(param->shape));
        }
        param->data = stored->data;
      }
    }
  }
}

}  // namespace moedti
