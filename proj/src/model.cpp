#include "moedti/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "moedti/bundle.hpp"
#include "moedti/errors.hpp"
#include "moedti/ops.hpp"

namespace moedti {

ModelDims ModelDims::from_config(const Config& cfg) {
  ModelDims d;
  d.kg_dim = cfg.integer("kg.dim");
  d.gnn.layers = static_cast<int>(cfg.integer("gnn.layers"));
  d.gnn.hidden = static_cast<int>(cfg.integer("gnn.hidden"));
  d.gnn.out_dim = static_cast<int>(cfg.integer("gnn.out_dim"));
  d.cnn.kernel = static_cast<int>(cfg.integer("cnn.kernel"));
  d.cnn.channels.clear();
  for (int64_t c : cfg.int_list("cnn.channels")) d.cnn.channels.push_back(static_cast<int>(c));
  d.cnn.pool_len = static_cast<int>(cfg.integer("cnn.pool_len"));
  d.cnn.out_dim = static_cast<int>(cfg.integer("cnn.out_dim"));
  d.mlp_hidden = cfg.integer("mlp.hidden");
  d.gate_hidden = cfg.integer("gate.hidden");
  d.max_seq_len = cfg.integer("seq.max_len");
  if (d.kg_dim < 1 || d.gnn.out_dim < 1 || d.cnn.out_dim < 1 || d.max_seq_len < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  return d;
}

namespace {

MolEncoder make_mol_encoder(const MolEncoder::Spec& s, uint64_t seed) {
  Rng r(derive_seed(seed, "init:gnn"));
  return MolEncoder(s, r);
}
SeqEncoder make_seq_encoder(const SeqEncoder::Spec& s, int e_dim, uint64_t seed) {
  Rng r(derive_seed(seed, "init:cnn"));
  return SeqEncoder(s, e_dim, r);
}
MlpClassifier make_classifier(int in_dim, int hidden, uint64_t seed, const char* what) {
  Rng r(derive_seed(seed, what));
  return MlpClassifier(in_dim, hidden, r);
}
GatingModel make_gate(int in_dim, int hidden, uint64_t seed) {
  Rng r(derive_seed(seed, "init:gate"));
  return GatingModel(in_dim, hidden, r);
}

}  // namespace

DtiModel::DtiModel(const ModelDims& dims, EntityEmbeddingTable emb, uint64_t init_seed,
                   ResidueFeaturizer featurizer)
    : dims_(dims),
      emb_(std::move(emb)),
      featurizer_(std::move(featurizer)),
      mol_enc_(make_mol_encoder(dims.gnn, init_seed)),
      seq_enc_(make_seq_encoder(dims.cnn, featurizer_.e_dim(), init_seed)),
      g_ex_(make_classifier(static_cast<int>(2 * dims.kg_dim),
                            static_cast<int>(dims.mlp_hidden), init_seed, "init:gex")),
      g_in_(make_classifier(dims.gnn.out_dim + dims.cnn.out_dim,
                            static_cast<int>(dims.mlp_hidden), init_seed, "init:gin")),
      gate_(make_gate(static_cast<int>(2 * dims.kg_dim) + dims.gnn.out_dim + dims.cnn.out_dim,
                      static_cast<int>(dims.gate_hidden), init_seed)) {
  if (emb_.dim != dims_.kg_dim) {
    throw ContractError("embedding table dim " + std::to_string(emb_.dim) +
                        " does not match configured kg.dim " +
                        std::to_string(dims_.kg_dim));
  }
  entity_ = emb_.entity;
  entity_->requires_grad = false;  // stages unfreeze explicitly
  for (size_t i = 0; i < emb_.entity_ids.size(); ++i) {
    entity_index_[emb_.entity_ids[i]] = static_cast<int64_t>(i);
  }
}

DtiModel::DtiModel(const ModelDims& dims, EntityEmbeddingTable emb, uint64_t init_seed)
    : DtiModel(dims, std::move(emb), init_seed, [&] {
        Rng r(derive_seed(init_seed, "init:res"));
        return ResidueFeaturizer::learned(16, r);
      }()) {}

void DtiModel::register_drug(const std::string& id, const std::string& smiles) {
  mols_[id] = MolEncoder::prepare(parse_smiles(smiles));
}

void DtiModel::register_target(const std::string& id, const std::string& sequence) {
  seqs_[id] = encode_residues(id, sequence, dims_.max_seq_len);
}

void DtiModel::register_dataset_entities(const DtiDataset& ds) {
  for (const auto& [id, s] : ds.smiles) register_drug(id, s);
  for (const auto& [id, s] : ds.sequences) register_target(id, s);
}

int64_t DtiModel::entity_row(const std::string& id) const {
  auto it = entity_index_.find(id);
  return it == entity_index_.end() ? -1 : it->second;
}

bool DtiModel::drug_has_intrinsic(const std::string& id) const {
  return mols_.count(id) != 0;
}
bool DtiModel::target_has_intrinsic(const std::string& id) const {
  auto it = seqs_.find(id);
  if (it == seqs_.end()) return false;
  return featurizer_.is_learned() || featurizer_.covers(id);
}
bool DtiModel::drug_has_extrinsic(const std::string& id) const {
  return entity_row(id) >= 0;
}
bool DtiModel::target_has_extrinsic(const std::string& id) const {
  return entity_row(id) >= 0;
}
bool DtiModel::pair_has_intrinsic(const DtiPair& p) const {
  return drug_has_intrinsic(p.drug) && target_has_intrinsic(p.target);
}
bool DtiModel::pair_has_extrinsic(const DtiPair& p) const {
  return drug_has_extrinsic(p.drug) && target_has_extrinsic(p.target);
}

TensorPtr DtiModel::entity_pair_features(const std::vector<DtiPair>& pairs) {
  if (pairs.empty()) throw ContractError("empty pair batch");
  std::vector<int64_t> di, ti;
  di.reserve(pairs.size());
  ti.reserve(pairs.size());
  for (const auto& p : pairs) {
    int64_t d = entity_row(p.drug), t = entity_row(p.target);
    if (d < 0) throw ContractError("drug '" + p.drug + "' has no KG embedding");
    if (t < 0) throw ContractError("target '" + p.target + "' has no KG embedding");
    di.push_back(d);
    ti.push_back(t);
  }
  auto h = ops::embedding_lookup(entity_, di);
  auto t = ops::embedding_lookup(entity_, ti);
  return ops::concat({h, t}, 1);
}

TensorPtr DtiModel::extrinsic_probs(const std::vector<DtiPair>& pairs) {
  return g_ex_.probability(entity_pair_features(pairs));
}

DtiModel::EncodedBatch DtiModel::encode_batch(const std::vector<DtiPair>& pairs) {
  EncodedBatch enc;
  for (const auto& p : pairs) {
    if (!enc.drug.count(p.drug)) {
      auto it = mols_.find(p.drug);
      if (it == mols_.end())
        throw ContractError("drug '" + p.drug + "' has no registered structure");
      enc.drug[p.drug] = mol_enc_.encode(it->second);
    }
    if (!enc.target.count(p.target)) {
      auto it = seqs_.find(p.target);
      if (it == seqs_.end() || !target_has_intrinsic(p.target))
        throw ContractError("target '" + p.target + "' has no registered sequence");
      enc.target[p.target] = seq_enc_.encode(it->second, featurizer_);
    }
  }
  return enc;
}

TensorPtr DtiModel::encoded_pair_features(const std::vector<DtiPair>& pairs,
                                          const EncodedBatch& enc) {
  if (pairs.empty()) throw ContractError("empty pair batch");
  std::vector<TensorPtr> drows, trows;
  drows.reserve(pairs.size());
  trows.reserve(pairs.size());
  for (const auto& p : pairs) {
    drows.push_back(enc.drug.at(p.drug));
    trows.push_back(enc.target.at(p.target));
  }
  return ops::concat({ops::concat(drows, 0), ops::concat(trows, 0)}, 1);
}

TensorPtr DtiModel::intrinsic_probs(const std::vector<DtiPair>& pairs,
                                    const EncodedBatch& enc) {
  return g_in_.probability(encoded_pair_features(pairs, enc));
}

TensorPtr DtiModel::intrinsic_probs(const std::vector<DtiPair>& pairs) {
  auto enc = encode_batch(pairs);
  return intrinsic_probs(pairs, enc);
}

TensorPtr DtiModel::gate_weight(const std::vector<DtiPair>& pairs,
                                const EncodedBatch& enc) {
  auto x = ops::concat({entity_pair_features(pairs), encoded_pair_features(pairs, enc)}, 1);
  return gate_.weight(x);
}

DtiModel::BatchPrediction DtiModel::blended_probs(const std::vector<DtiPair>& pairs) {
  BatchPrediction out;
  auto enc = encode_batch(pairs);
  out.p_ex = extrinsic_probs(pairs);
  out.p_in = intrinsic_probs(pairs, enc);
  out.w = gate_weight(pairs, enc);
  out.p = blend(out.w, out.p_ex, out.p_in);
  return out;
}

std::vector<DtiModel::PairScore> DtiModel::score_pairs(const std::vector<DtiPair>& pairs,
                                                       Mode mode) {
  NoGradGuard guard;
  std::vector<PairScore> out(pairs.size());
  std::vector<size_t> both, ex_only, in_only;
  for (size_t i = 0; i < pairs.size(); ++i) {
    bool he = pair_has_extrinsic(pairs[i]);
    bool hi = pair_has_intrinsic(pairs[i]);
    out[i].has_extrinsic = he;
    out[i].has_intrinsic = hi;
    switch (mode) {
      case Mode::kAuto:
        if (he && hi) both.push_back(i);
        else if (he) ex_only.push_back(i);
        else if (hi) in_only.push_back(i);
        break;
      case Mode::kExtrinsicOnly:
        if (he) ex_only.push_back(i);
        break;
      case Mode::kIntrinsicOnly:
        if (hi) in_only.push_back(i);
        break;
    }
  }
  auto subset = [&](const std::vector<size_t>& idx) {
    std::vector<DtiPair> v;
    v.reserve(idx.size());
    for (size_t i : idx) v.push_back(pairs[i]);
    return v;
  };
  if (!both.empty()) {
    auto pred = blended_probs(subset(both));
    for (size_t k = 0; k < both.size(); ++k) {
      auto& s = out[both[k]];
      s.p = pred.p->data[k];
      s.w = pred.w->data[k];
      s.p_ex = pred.p_ex->data[k];
      s.p_in = pred.p_in->data[k];
      s.ok = true;
    }
  }
  if (!ex_only.empty()) {
    auto p = extrinsic_probs(subset(ex_only));
    for (size_t k = 0; k < ex_only.size(); ++k) {
      auto& s = out[ex_only[k]];
      s.p_ex = p->data[k];
      s.p = s.p_ex;  // single-perspective fallback is the expert output itself
      s.w = 1.0;
      s.ok = true;
    }
  }
  if (!in_only.empty()) {
    auto p = intrinsic_probs(subset(in_only));
    for (size_t k = 0; k < in_only.size(); ++k) {
      auto& s = out[in_only[k]];
      s.p_in = p->data[k];
      s.p = s.p_in;
      s.w = 0.0;
      s.ok = true;
    }
  }
  return out;
}

std::vector<double> DtiModel::probabilities(const std::vector<DtiPair>& pairs, Mode mode) {
  auto scores = score_pairs(pairs, mode);
  std::vector<double> p(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i].ok) {
      throw ContractError("pair (" + pairs[i].drug + ", " + pairs[i].target +
                          ") cannot be scored in the requested mode");
    }
    p[i] = scores[i].p;
  }
  return p;
}

std::vector<TensorPtr> DtiModel::extrinsic_classifier_params() {
  return g_ex_.parameters();
}

std::vector<TensorPtr> DtiModel::extrinsic_params_with_embeddings() {
  auto v = g_ex_.parameters();
  v.push_back(entity_);
  return v;
}

std::vector<TensorPtr> DtiModel::intrinsic_params() {
  std::vector<TensorPtr> v;
  for (auto& p : mol_enc_.parameters()) v.push_back(p);
  for (auto& p : seq_enc_.parameters()) v.push_back(p);
  for (auto& p : featurizer_.parameters()) v.push_back(p);
  for (auto& p : g_in_.parameters()) v.push_back(p);
  return v;
}

std::vector<TensorPtr> DtiModel::gate_params() { return gate_.parameters(); }

std::vector<TensorPtr> DtiModel::all_params_for_joint(bool tune_embeddings) {
  std::vector<TensorPtr> v = extrinsic_classifier_params();
  for (auto& p : intrinsic_params()) v.push_back(p);
  for (auto& p : gate_params()) v.push_back(p);
  if (tune_embeddings) v.push_back(entity_);
  return v;
}

TensorPtr DtiModel::entity_matrix() { return entity_; }

void DtiModel::save(const std::string& path, const Config& cfg) const {
  BundleWriter w;
  w.add_text("config", cfg.resolved_text());
  w.add_strings("kg/entity_ids", emb_.entity_ids);
  w.add_tensor("kg/entity", entity_);
  w.add_tensor("kg/relation", emb_.relation);
  std::ostringstream meta;
  meta << emb_.method << "\n" << emb_.seed << "\n" << emb_.epochs << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", emb_.final_loss);
  meta << buf << "\n";
  w.add_text("kg/meta", meta.str());
  for (auto& [name, t] : mol_enc_.named_parameters()) w.add_tensor(name, t);
  for (auto& [name, t] : seq_enc_.named_parameters()) w.add_tensor(name, t);
  for (auto& [name, t] : g_ex_.named_parameters("gex")) w.add_tensor(name, t);
  for (auto& [name, t] : g_in_.named_parameters("gin")) w.add_tensor(name, t);
  for (auto& [name, t] : gate_.named_parameters()) w.add_tensor(name, t);
  if (featurizer_.is_learned()) {
    w.add_text("res/mode", "learned");
    w.add_tensor("res/table", featurizer_.table());
  } else {
    w.add_text("res/mode", "precomputed");
    std::vector<std::string> ids;
    for (auto& [id, m] : featurizer_.per_target()) {
      ids.push_back(id);
      w.add_tensor("res/t/" + id, m);
    }
    w.add_strings("res/ids", ids);
  }
  w.write(path, cfg.fingerprint());
}

Config DtiModel::load_config(const std::string& path) {
  BundleReader r(path);
  Config cfg = Config::defaults();
  cfg.apply_text(r.text("config"), path + " (embedded config)");
  return cfg;
}

DtiModel DtiModel::load(const std::string& path) {
  BundleReader r(path);
  Config cfg = Config::defaults();
  cfg.apply_text(r.text("config"), path + " (embedded config)");
  ModelDims dims = ModelDims::from_config(cfg);

  EntityEmbeddingTable emb;
  emb.entity_ids = r.strings("kg/entity_ids");
  emb.entity = r.tensor("kg/entity");
  emb.relation = r.tensor("kg/relation");
  emb.dim = dims.kg_dim;
  {
    std::istringstream meta(r.text("kg/meta"));
    meta >> emb.method >> emb.seed >> emb.epochs >> emb.final_loss;
  }
  if (emb.entity->shape != Shape{static_cast<int64_t>(emb.entity_ids.size()), dims.kg_dim}) {
    throw IoError("bundle entity matrix shape does not match its id list: " + path);
  }
  emb.entity->requires_grad = true;

  ResidueFeaturizer featurizer = [&] {
    if (r.text("res/mode") == "learned") {
      Rng rng(0);
      auto f = ResidueFeaturizer::learned(static_cast<int>(cfg.integer("seq.e_dim")), rng);
      auto stored = r.tensor("res/table");
      if (stored->shape != f.table()->shape)
        throw IoError("bundle residue table shape mismatch: " + path);
      f.table()->data = stored->data;
      return f;
    }
    std::map<std::string, TensorPtr> per_target;
    for (const auto& id : r.strings("res/ids")) per_target[id] = r.tensor("res/t/" + id);
    return ResidueFeaturizer::precomputed_from(std::move(per_target));
  }();

  DtiModel m(dims, std::move(emb), /*init_seed=*/0, std::move(featurizer));
  auto load_named = [&](auto& module, auto&&... args) {
    auto names = module.named_parameters(args...);
    std::vector<std::pair<std::string, TensorPtr>> loaded;
    loaded.reserve(names.size());
    for (auto& [name, t] : names) loaded.emplace_back(name, r.tensor(name));
    module.load_parameters(args..., loaded);
  };
  load_named(m.mol_enc_);
  load_named(m.seq_enc_);
  load_named(m.g_ex_, std::string("gex"));
  load_named(m.g_in_, std::string("gin"));
  load_named(m.gate_);
  return m;
}

}  // namespace moedti
