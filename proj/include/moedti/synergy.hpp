#pragma once

#include <set>
#include <string>
#include <vector>

#include "moedti/config.hpp"
#include "moedti/dataset.hpp"
#include "moedti/kg.hpp"
#include "moedti/model.hpp"
#include "moedti/optimizer.hpp"

namespace moedti {

// Knobs for mutually supervised pseudo-labeling. alpha_* are candidate
// sampling rates over the unlabeled drug-target grid, beta_* the
// fraction of candidates promoted to pseudo-positives, gamma_* the
// loss weight on true positives (also the scale for pseudo-negative
// balancing). The _a stage teaches the structure expert from the KG
// expert; _b swaps roles; _g drives the final joint round.
struct SynergyParams {
  double alpha_a = 0.05, alpha_b = 0.05;
  double beta_a = 0.05, beta_b = 0.05, beta_g = 0.05;
  int64_t gamma_a = 4, gamma_b = 4, gamma_g = 4;
  static SynergyParams from_config(const Config& cfg);
};

struct TrainSchedule {
  OptimRule rule = OptimRule::kAdaptive;
  double lr_s1 = 0.01, lr_s2 = 0.005, lr_s3 = 0.005, lr_s4 = 0.002;
  int64_t epochs_s1 = 200, epochs_s2 = 100, epochs_s3 = 100, epochs_s4 = 100;
  bool s4_tune_embeddings = true;
  static TrainSchedule from_config(const Config& cfg);
};

// Pseudo-negative balancing: gamma * |true pos| + |pseudo pos| -
// |true neg|, floored at zero. *floored reports whether the floor hit.
int64_t pseudo_negative_count(int64_t gamma, int64_t n_true_pos, int64_t n_pseudo_pos,
                              int64_t n_true_neg, bool* floored);

// Per-pool share in the joint round: half of
// gamma_g * |true pos| + |pool A pos| + |pool B pos| - |true neg|,
// rounded down; *odd reports a discarded remainder.
int64_t joint_negative_share(int64_t gamma_g, int64_t n_true_pos, int64_t n_pos_a,
                             int64_t n_pos_b, int64_t n_true_neg, bool* floored,
                             bool* odd);

// Uniform sample (without replacement) of floor(alpha * |D| * |T|)
// pairs from the drug-target grid minus the excluded set; a short pool
// caps the take. A request that rounds to zero or an empty pool is a
// contract violation.
std::vector<DtiPair> sample_candidates(const std::vector<std::string>& drugs,
                                       const std::vector<std::string>& targets,
                                       double alpha, const std::set<DtiPair>& exclude,
                                       Rng& rng);

// Scored candidates split by one canonical ordering (score descending,
// index ascending on ties): pseudo-positives are the first
// floor(beta * n) entries, pseudo-negatives the last `needed_negatives`.
// Using head and tail of the same permutation keeps the two sets
// disjoint even across tie plateaus; requested sizes that would force
// an overlap are a contract violation.
struct PseudoLabels {
  std::vector<DtiPair> pos, neg;
  double min_pos_score = 0, max_neg_score = 0;
};
PseudoLabels select_pseudo_labels(const std::vector<DtiPair>& candidates,
                                  const std::vector<double>& scores, double beta,
                                  int64_t needed_negatives);

// Flattened weighted-BCE batch: true positives carry weight
// gamma_true_pos, everything else weight 1.
struct LossBatch {
  std::vector<DtiPair> pairs;
  std::vector<double> labels, weights;
  int64_t n_pos_true = 0, n_pos_pseudo = 0, n_neg_true = 0, n_neg_pseudo = 0;
};
LossBatch make_loss_batch(const std::vector<DtiPair>& true_pos,
                          const std::vector<DtiPair>& true_neg,
                          const std::vector<DtiPair>& pseudo_pos,
                          const std::vector<DtiPair>& pseudo_neg,
                          double gamma_true_pos);

enum class Variant { kMose, kTrueAll, kTrueIntrinsic, kTrueExtrinsic };
Variant variant_from_string(const std::string& s);
std::string variant_name(Variant v);

struct EpochRow {
  std::string stage;
  int64_t epoch = 0;
  double loss = 0;
};

struct StageSummary {
  std::string stage;
  int64_t candidates = 0, pseudo_pos = 0, pseudo_neg = 0;
  int64_t true_pos = 0, true_neg = 0;
  double min_pos_score = 0, max_neg_score = 0;
  bool neg_floored = false, odd_split = false;
};

// Runs the staged schedule for one variant and returns the trained
// model. Stage map for the full method:
//   s1  KG expert head on ground truth (embeddings frozen)
//   s2  KG expert pseudo-labels a candidate pool, structure expert
//       trains on ground truth + pseudo-labels
//   s3  roles swap; embeddings unfreeze
//   s4  both pools re-scored by the current experts, merged, and the
//       whole model (gate included) trains jointly
// Ground-truth-only baselines reuse the same stages with empty pools.
class Trainer {
 public:
  Trainer(const Config& cfg, const KnowledgeGraph& kg, const EntityEmbeddingTable& emb,
          const DtiDataset& ds, uint64_t seed);

  DtiModel train(Variant v);

  const std::vector<EpochRow>& epoch_log() const { return epochs_; }
  const std::vector<StageSummary>& stage_log() const { return stages_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  DtiModel fresh_model(Variant v) const;
  void run_epochs(DtiModel& m, const LossBatch& batch, const std::vector<TensorPtr>& params,
                  double lr, int64_t epochs, const char* stage, DtiModel::Mode head);
  std::vector<DtiPair> usable_candidates(const DtiModel& m, DtiModel::Mode head,
                                         std::vector<DtiPair> pool);
  // Caps a pseudo-negative request at what the pool can still supply
  // after the pseudo-positive take, warning when the cap bites.
  int64_t clamp_negative_request(int64_t needed, double beta, int64_t pool_size,
                                 const char* stage);

  const Config& cfg_;
  const KnowledgeGraph& kg_;
  const EntityEmbeddingTable& emb_;
  const DtiDataset& ds_;
  uint64_t seed_;
  SynergyParams syn_;
  TrainSchedule sched_;
  OptimConfig opt_base_;
  std::vector<EpochRow> epochs_;
  std::vector<StageSummary> stages_;
  std::vector<std::string> warnings_;
};

}  // namespace moedti
