#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "moedti/config.hpp"
#include "moedti/dataset.hpp"
#include "moedti/kg_embed.hpp"
#include "moedti/moe.hpp"
#include "moedti/mol_encoder.hpp"
#include "moedti/seq_encoder.hpp"
#include "moedti/smiles.hpp"

namespace moedti {

struct ModelDims {
  int64_t kg_dim = 32;
  MolEncoder::Spec gnn;
  SeqEncoder::Spec cnn;
  int64_t mlp_hidden = 64;
  int64_t gate_hidden = 64;
  int64_t max_seq_len = 2000;
  static ModelDims from_config(const Config& cfg);
};

// The fused predictor: a knowledge-graph expert scoring entity
// embedding pairs, a structure expert scoring encoded SMILES/sequence
// pairs, and a gating head that mixes the two probabilities per pair.
class DtiModel {
 public:
  enum class Mode { kAuto, kIntrinsicOnly, kExtrinsicOnly };

  DtiModel(const ModelDims& dims, EntityEmbeddingTable emb, uint64_t init_seed,
           ResidueFeaturizer featurizer);
  DtiModel(const ModelDims& dims, EntityEmbeddingTable emb, uint64_t init_seed);

  // Registration parses/encodes inputs once; pairs may then reference
  // the ids. A drug or target may exist with only one perspective.
  void register_drug(const std::string& id, const std::string& smiles);
  void register_target(const std::string& id, const std::string& sequence);
  void register_dataset_entities(const DtiDataset& ds);

  bool drug_has_intrinsic(const std::string& id) const;
  bool target_has_intrinsic(const std::string& id) const;
  bool drug_has_extrinsic(const std::string& id) const;
  bool target_has_extrinsic(const std::string& id) const;
  bool pair_has_intrinsic(const DtiPair& p) const;
  bool pair_has_extrinsic(const DtiPair& p) const;

  // Gradient-tracking batched heads. Every pair must offer the
  // perspective being asked for; missing data is a contract violation
  // here (availability policy lives in score_pairs).
  TensorPtr extrinsic_probs(const std::vector<DtiPair>& pairs);

  // Encodes each distinct drug/target once per call so a batch with
  // repeated entities costs one encoder pass per entity.
  struct EncodedBatch {
    std::map<std::string, TensorPtr> drug, target;  // id -> [1, out_dim]
  };
  EncodedBatch encode_batch(const std::vector<DtiPair>& pairs);
  TensorPtr intrinsic_probs(const std::vector<DtiPair>& pairs, const EncodedBatch& enc);
  TensorPtr intrinsic_probs(const std::vector<DtiPair>& pairs);
  TensorPtr gate_weight(const std::vector<DtiPair>& pairs, const EncodedBatch& enc);

  struct BatchPrediction {
    TensorPtr p, w, p_ex, p_in;  // all [B, 1] except w [B, 1]
  };
  BatchPrediction blended_probs(const std::vector<DtiPair>& pairs);

  // Inference scoring with per-pair availability fallback. Runs under
  // a no-grad guard. In kAuto, a pair with one perspective gets that
  // expert's probability and a pinned weight (1 extrinsic, 0
  // intrinsic); a pair with neither yields ok=false.
  struct PairScore {
    double p = 0, w = 0, p_ex = 0, p_in = 0;
    bool has_extrinsic = false, has_intrinsic = false, ok = false;
  };
  std::vector<PairScore> score_pairs(const std::vector<DtiPair>& pairs, Mode mode);
  std::vector<double> probabilities(const std::vector<DtiPair>& pairs, Mode mode);

  // Parameter groups for the staged schedule.
  std::vector<TensorPtr> extrinsic_classifier_params();
  std::vector<TensorPtr> extrinsic_params_with_embeddings();
  std::vector<TensorPtr> intrinsic_params();
  std::vector<TensorPtr> gate_params();
  std::vector<TensorPtr> all_params_for_joint(bool tune_embeddings);
  TensorPtr entity_matrix();

  const ModelDims& dims() const { return dims_; }
  const EntityEmbeddingTable& embeddings() const { return emb_; }
  MolEncoder& mol_encoder() { return mol_enc_; }
  SeqEncoder& seq_encoder() { return seq_enc_; }
  ResidueFeaturizer& residue_featurizer() { return featurizer_; }
  MlpClassifier& extrinsic_classifier() { return g_ex_; }
  MlpClassifier& intrinsic_classifier() { return g_in_; }
  GatingModel& gate() { return gate_; }

  void save(const std::string& path, const Config& cfg) const;
  static DtiModel load(const std::string& path);
  static Config load_config(const std::string& path);

 private:
  int64_t entity_row(const std::string& id) const;  // -1 when absent
  TensorPtr entity_pair_features(const std::vector<DtiPair>& pairs);
  TensorPtr encoded_pair_features(const std::vector<DtiPair>& pairs,
                                  const EncodedBatch& enc);

  ModelDims dims_;
  EntityEmbeddingTable emb_;
  TensorPtr entity_;  // [|E|, kg_dim], shared view used by lookups
  std::map<std::string, int64_t> entity_index_;
  ResidueFeaturizer featurizer_;
  MolEncoder mol_enc_;
  SeqEncoder seq_enc_;
  MlpClassifier g_ex_, g_in_;
  GatingModel gate_;
  std::map<std::string, MolEncoder::Prepared> mols_;
  std::map<std::string, ResidueSequence> seqs_;
};

}  // namespace moedti
