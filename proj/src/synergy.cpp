#include "moedti/synergy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moedti/errors.hpp"
#include "moedti/ops.hpp"

namespace moedti {

SynergyParams SynergyParams::from_config(const Config& cfg) {
  SynergyParams p;
  p.alpha_a = cfg.real("syn.alpha_a");
  p.alpha_b = cfg.real("syn.alpha_b");
  p.beta_a = cfg.real("syn.beta_a");
  p.beta_b = cfg.real("syn.beta_b");
  p.beta_g = cfg.real("syn.beta_g");
  p.gamma_a = cfg.integer("syn.gamma_a");
  p.gamma_b = cfg.integer("syn.gamma_b");
  p.gamma_g = cfg.integer("syn.gamma_g");
  for (double v : {p.alpha_a, p.alpha_b}) {
    if (v <= 0.0 || v > 1.0) throw ConfigError("syn.alpha_* must lie in (0, 1]");
  }
  for (double v : {p.beta_a, p.beta_b, p.beta_g}) {
    if (v <= 0.0 || v >= 1.0) throw ConfigError("syn.beta_* must lie in (0, 1)");
  }
  for (int64_t g : {p.gamma_a, p.gamma_b, p.gamma_g}) {
    if (g < 1) throw ConfigError("syn.gamma_* must be >= 1");
  }
  return p;
}

TrainSchedule TrainSchedule::from_config(const Config& cfg) {
  TrainSchedule s;
  s.rule = optim_rule_from_string(cfg.str("opt.rule"));
  s.lr_s1 = cfg.real("opt.lr_s1");
  s.lr_s2 = cfg.real("opt.lr_s2");
  s.lr_s3 = cfg.real("opt.lr_s3");
  s.lr_s4 = cfg.real("opt.lr_s4");
  s.epochs_s1 = cfg.integer("train.epochs_s1");
  s.epochs_s2 = cfg.integer("train.epochs_s2");
  s.epochs_s3 = cfg.integer("train.epochs_s3");
  s.epochs_s4 = cfg.integer("train.epochs_s4");
  s.s4_tune_embeddings = cfg.boolean("train.s4_tune_embeddings");
  for (int64_t e : {s.epochs_s1, s.epochs_s2, s.epochs_s3, s.epochs_s4}) {
    if (e < 1) throw ConfigError("train.epochs_s* must be >= 1");
  }
  return s;
}

int64_t pseudo_negative_count(int64_t gamma, int64_t n_true_pos, int64_t n_pseudo_pos,
                              int64_t n_true_neg, bool* floored) {
  int64_t n = gamma * n_true_pos + n_pseudo_pos - n_true_neg;
  if (floored) *floored = n < 0;
  return std::max<int64_t>(n, 0);
}

int64_t joint_negative_share(int64_t gamma_g, int64_t n_true_pos, int64_t n_pos_a,
                             int64_t n_pos_b, int64_t n_true_neg, bool* floored,
                             bool* odd) {
  int64_t total = gamma_g * n_true_pos + n_pos_a + n_pos_b - n_true_neg;
  if (floored) *floored = total < 0;
  total = std::max<int64_t>(total, 0);
  if (odd) *odd = (total % 2) != 0;
  return total / 2;
}

std::vector<DtiPair> sample_candidates(const std::vector<std::string>& drugs,
                                       const std::vector<std::string>& targets,
                                       double alpha, const std::set<DtiPair>& exclude,
                                       Rng& rng) {
  if (alpha <= 0.0 || alpha > 1.0) throw ContractError("candidate rate must lie in (0, 1]");
  std::vector<DtiPair> pool;
  pool.reserve(drugs.size() * targets.size());
  for (const auto& d : drugs) {
    for (const auto& t : targets) {
      DtiPair p{d, t};
      if (!exclude.count(p)) pool.push_back(std::move(p));
    }
  }
  // The request is a fraction of the full grid; exclusions only cap it.
  size_t want = static_cast<size_t>(std::floor(
      alpha * static_cast<double>(drugs.size()) * static_cast<double>(targets.size())));
  if (want < 1) {
    throw ContractError("candidate request rounds down to zero pairs");
  }
  if (pool.empty()) {
    throw ContractError("every drug-target pair is already labeled; nothing to sample");
  }
  size_t take = std::min(want, pool.size());
  // Partial Fisher-Yates: only the first `take` slots need shuffling.
  for (size_t i = 0; i < take; ++i) {
    size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

PseudoLabels select_pseudo_labels(const std::vector<DtiPair>& candidates,
                                  const std::vector<double>& scores, double beta,
                                  int64_t needed_negatives) {
  if (candidates.size() != scores.size()) {
    throw ContractError("candidate/score count mismatch: " +
                        std::to_string(candidates.size()) + " vs " +
                        std::to_string(scores.size()));
  }
  if (beta < 0.0 || beta > 1.0) throw ContractError("pseudo-positive rate must lie in [0, 1]");
  if (needed_negatives < 0) throw ContractError("negative count must be >= 0");
  const int64_t n = static_cast<int64_t>(candidates.size());
  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  const int64_t n_pos = static_cast<int64_t>(std::floor(beta * static_cast<double>(n)));
  if (n_pos + needed_negatives > n) {
    throw ContractError("pseudo-label selection wants " + std::to_string(n_pos) +
                        " positives and " + std::to_string(needed_negatives) +
                        " negatives from only " + std::to_string(n) + " candidates");
  }
  const int64_t n_neg = needed_negatives;
  PseudoLabels out;
  out.pos.reserve(n_pos);
  out.neg.reserve(std::max<int64_t>(n_neg, 0));
  for (int64_t i = 0; i < n_pos; ++i) out.pos.push_back(candidates[order[i]]);
  for (int64_t i = n - n_neg; i < n; ++i) out.neg.push_back(candidates[order[i]]);
  if (n_pos > 0) out.min_pos_score = scores[order[n_pos - 1]];
  if (n_neg > 0) out.max_neg_score = scores[order[n - n_neg]];
  return out;
}

LossBatch make_loss_batch(const std::vector<DtiPair>& true_pos,
                          const std::vector<DtiPair>& true_neg,
                          const std::vector<DtiPair>& pseudo_pos,
                          const std::vector<DtiPair>& pseudo_neg,
                          double gamma_true_pos) {
  if (gamma_true_pos < 1.0) throw ContractError("true-positive weight must be >= 1");
  LossBatch b;
  b.n_pos_true = static_cast<int64_t>(true_pos.size());
  b.n_pos_pseudo = static_cast<int64_t>(pseudo_pos.size());
  b.n_neg_true = static_cast<int64_t>(true_neg.size());
  b.n_neg_pseudo = static_cast<int64_t>(pseudo_neg.size());
  auto push = [&](const std::vector<DtiPair>& v, double label, double weight) {
    for (const auto& p : v) {
      b.pairs.push_back(p);
      b.labels.push_back(label);
      b.weights.push_back(weight);
    }
  };
  push(true_pos, 1.0, gamma_true_pos);
  push(pseudo_pos, 1.0, 1.0);
  push(true_neg, 0.0, 1.0);
  push(pseudo_neg, 0.0, 1.0);
  if (b.n_pos_true + b.n_pos_pseudo == 0) {
    throw ContractError("training batch has no positive examples");
  }
  return b;
}

Variant variant_from_string(const std::string& s) {
  if (s == "MoseDTI") return Variant::kMose;
  if (s == "True-all") return Variant::kTrueAll;
  if (s == "True-intr") return Variant::kTrueIntrinsic;
  if (s == "True-extr") return Variant::kTrueExtrinsic;
  throw ConfigError("unknown training variant: " + s);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kMose: return "MoseDTI";
    case Variant::kTrueAll: return "True-all";
    case Variant::kTrueIntrinsic: return "True-intr";
    case Variant::kTrueExtrinsic: return "True-extr";
  }
  throw ContractError("invalid variant value");
}

Trainer::Trainer(const Config& cfg, const KnowledgeGraph& kg,
                 const EntityEmbeddingTable& emb, const DtiDataset& ds, uint64_t seed)
    : cfg_(cfg),
      kg_(kg),
      emb_(emb),
      ds_(ds),
      seed_(seed),
      syn_(SynergyParams::from_config(cfg)),
      sched_(TrainSchedule::from_config(cfg)) {
  validate_embeddings(emb_, kg_);
  opt_base_.rule = sched_.rule;
}

namespace {

EntityEmbeddingTable clone_table(const EntityEmbeddingTable& t) {
  EntityEmbeddingTable c = t;
  c.entity = Tensor::zeros(t.entity->shape, false);
  c.entity->data = t.entity->data;
  c.relation = Tensor::zeros(t.relation->shape, false);
  c.relation->data = t.relation->data;
  return c;
}

}  // namespace

DtiModel Trainer::fresh_model(Variant v) const {
  (void)v;  // all variants share one init so comparisons are paired
  ModelDims dims = ModelDims::from_config(cfg_);
  uint64_t init_seed = derive_seed(seed_, "model-init");
  Rng res_rng(derive_seed(init_seed, "init:res"));
  auto featurizer =
      ResidueFeaturizer::learned(static_cast<int>(cfg_.integer("seq.e_dim")), res_rng);
  DtiModel m(dims, clone_table(emb_), init_seed, std::move(featurizer));
  m.register_dataset_entities(ds_);
  return m;
}

void Trainer::run_epochs(DtiModel& m, const LossBatch& batch,
                         const std::vector<TensorPtr>& params, double lr,
                         int64_t epochs, const char* stage, DtiModel::Mode head) {
  Optimizer opt([&] {
    OptimConfig c = opt_base_;
    c.lr = lr;
    return c;
  }());
  opt.add_params(params);
  for (int64_t e = 0; e < epochs; ++e) {
    Tape::current().clear();
    TensorPtr probs;
    switch (head) {
      case DtiModel::Mode::kExtrinsicOnly: probs = m.extrinsic_probs(batch.pairs); break;
      case DtiModel::Mode::kIntrinsicOnly: probs = m.intrinsic_probs(batch.pairs); break;
      case DtiModel::Mode::kAuto: probs = m.blended_probs(batch.pairs).p; break;
    }
    auto loss = ops::bce_sum(probs, batch.labels, batch.weights);
    double value = loss->item();
    Tape::current().backward(loss);
    opt.step();
    epochs_.push_back({stage, e, value});
  }
}

int64_t Trainer::clamp_negative_request(int64_t needed, double beta, int64_t pool_size,
                                        const char* stage) {
  int64_t cap = pool_size - static_cast<int64_t>(
                                std::floor(beta * static_cast<double>(pool_size)));
  if (needed <= cap) return needed;
  warnings_.push_back(std::string(stage) + ": pseudo-negative request " +
                      std::to_string(needed) + " exceeds pool capacity " +
                      std::to_string(cap) + "; truncated");
  return cap;
}

std::vector<DtiPair> Trainer::usable_candidates(const DtiModel& m, DtiModel::Mode head,
                                                std::vector<DtiPair> pool) {
  (void)head;  // pool pairs are scored by one expert and trained by the
               // other, so both perspectives are required either way
  size_t before = pool.size();
  std::erase_if(pool, [&](const DtiPair& p) {
    return !m.pair_has_extrinsic(p) || !m.pair_has_intrinsic(p);
  });
  if (pool.size() != before) {
    warnings_.push_back(std::to_string(before - pool.size()) +
                        " candidate pair(s) dropped: missing a perspective");
  }
  return pool;
}

DtiModel Trainer::train(Variant v) {
  // Logs describe the most recent run only; a Trainer is reused across variants.
  epochs_.clear();
  stages_.clear();
  warnings_.clear();
  DtiModel m = fresh_model(v);
  const auto& tp = ds_.train_pos;
  const auto& tn = ds_.train_neg;
  const int64_t n_tp = static_cast<int64_t>(tp.size());
  const int64_t n_tn = static_cast<int64_t>(tn.size());
  LossBatch truth = make_loss_batch(tp, tn, {}, {}, 1.0);

  auto freeze = [&](bool trainable) { m.entity_matrix()->requires_grad = trainable; };

  if (v == Variant::kTrueIntrinsic) {
    freeze(false);
    run_epochs(m, truth, m.intrinsic_params(), sched_.lr_s2, sched_.epochs_s2, "intr",
               DtiModel::Mode::kIntrinsicOnly);
    return m;
  }

  // Stage 1: KG expert head on ground truth, embeddings frozen.
  freeze(false);
  run_epochs(m, truth, m.extrinsic_classifier_params(), sched_.lr_s1, sched_.epochs_s1,
             "s1", DtiModel::Mode::kExtrinsicOnly);
  if (!m.entity_matrix()->grad.empty()) {
    throw ContractError("frozen embedding matrix accumulated gradient in stage 1");
  }
  if (v == Variant::kTrueExtrinsic) return m;

  if (v == Variant::kTrueAll) {
    freeze(false);
    run_epochs(m, truth, m.intrinsic_params(), sched_.lr_s2, sched_.epochs_s2, "s2",
               DtiModel::Mode::kIntrinsicOnly);
    freeze(true);
    run_epochs(m, truth, m.extrinsic_params_with_embeddings(), sched_.lr_s3,
               sched_.epochs_s3, "s3", DtiModel::Mode::kExtrinsicOnly);
    freeze(sched_.s4_tune_embeddings);
    run_epochs(m, truth, m.all_params_for_joint(sched_.s4_tune_embeddings),
               sched_.lr_s4, sched_.epochs_s4, "s4", DtiModel::Mode::kAuto);
    return m;
  }

  // Full mutual supervision.
  std::set<DtiPair> labeled(tp.begin(), tp.end());
  labeled.insert(tn.begin(), tn.end());

  Rng rng_a(derive_seed(seed_, "cand:a"));
  auto pool_a = usable_candidates(
      m, DtiModel::Mode::kExtrinsicOnly,
      sample_candidates(ds_.drug_ids, ds_.target_ids, syn_.alpha_a, labeled, rng_a));

  // Stage 2: KG expert pseudo-labels pool A; structure expert trains.
  {
    auto scores = m.probabilities(pool_a, DtiModel::Mode::kExtrinsicOnly);
    int64_t planned_pos = static_cast<int64_t>(
        std::floor(syn_.beta_a * static_cast<double>(pool_a.size())));
    bool floored = false;
    int64_t n_neg = pseudo_negative_count(syn_.gamma_a, n_tp, planned_pos, n_tn, &floored);
    n_neg = clamp_negative_request(n_neg, syn_.beta_a,
                                   static_cast<int64_t>(pool_a.size()), "s2");
    auto sel = select_pseudo_labels(pool_a, scores, syn_.beta_a, n_neg);
    if (floored) warnings_.push_back("stage 2 pseudo-negative count floored at zero");
    stages_.push_back({"s2", static_cast<int64_t>(pool_a.size()),
                       static_cast<int64_t>(sel.pos.size()),
                       static_cast<int64_t>(sel.neg.size()), n_tp, n_tn,
                       sel.min_pos_score, sel.max_neg_score, floored, false});
    auto batch = make_loss_batch(tp, tn, sel.pos, sel.neg,
                                 static_cast<double>(syn_.gamma_a));
    freeze(false);
    run_epochs(m, batch, m.intrinsic_params(), sched_.lr_s2, sched_.epochs_s2, "s2",
               DtiModel::Mode::kIntrinsicOnly);
  }

  Rng rng_b(derive_seed(seed_, "cand:b"));
  auto pool_b = usable_candidates(
      m, DtiModel::Mode::kIntrinsicOnly,
      sample_candidates(ds_.drug_ids, ds_.target_ids, syn_.alpha_b, labeled, rng_b));

  // Stage 3: structure expert pseudo-labels pool B; KG expert trains
  // with its embeddings unfrozen.
  {
    auto scores = m.probabilities(pool_b, DtiModel::Mode::kIntrinsicOnly);
    int64_t planned_pos = static_cast<int64_t>(
        std::floor(syn_.beta_b * static_cast<double>(pool_b.size())));
    bool floored = false;
    int64_t n_neg = pseudo_negative_count(syn_.gamma_b, n_tp, planned_pos, n_tn, &floored);
    n_neg = clamp_negative_request(n_neg, syn_.beta_b,
                                   static_cast<int64_t>(pool_b.size()), "s3");
    auto sel = select_pseudo_labels(pool_b, scores, syn_.beta_b, n_neg);
    if (floored) warnings_.push_back("stage 3 pseudo-negative count floored at zero");
    stages_.push_back({"s3", static_cast<int64_t>(pool_b.size()),
                       static_cast<int64_t>(sel.pos.size()),
                       static_cast<int64_t>(sel.neg.size()), n_tp, n_tn,
                       sel.min_pos_score, sel.max_neg_score, floored, false});
    auto batch = make_loss_batch(tp, tn, sel.pos, sel.neg,
                                 static_cast<double>(syn_.gamma_b));
    freeze(true);
    run_epochs(m, batch, m.extrinsic_params_with_embeddings(), sched_.lr_s3,
               sched_.epochs_s3, "s3", DtiModel::Mode::kExtrinsicOnly);
  }

  // Stage 4: both pools re-scored by the now-updated experts, merged
  // into one pseudo-label set, and everything trains jointly.
  {
    auto scores_a = m.probabilities(pool_a, DtiModel::Mode::kExtrinsicOnly);
    auto scores_b = m.probabilities(pool_b, DtiModel::Mode::kIntrinsicOnly);
    int64_t n_pos = std::min(
        static_cast<int64_t>(std::floor(syn_.beta_g * static_cast<double>(pool_a.size()))),
        static_cast<int64_t>(std::floor(syn_.beta_g * static_cast<double>(pool_b.size()))));
    bool floored = false, odd = false;
    int64_t share =
        joint_negative_share(syn_.gamma_g, n_tp, n_pos, n_pos, n_tn, &floored, &odd);
    share = clamp_negative_request(share, syn_.beta_g,
                                   static_cast<int64_t>(pool_a.size()), "s4");
    share = clamp_negative_request(share, syn_.beta_g,
                                   static_cast<int64_t>(pool_b.size()), "s4");
    auto sel_a = select_pseudo_labels(pool_a, scores_a, syn_.beta_g, share);
    auto sel_b = select_pseudo_labels(pool_b, scores_b, syn_.beta_g, share);
    if (static_cast<int64_t>(sel_a.pos.size()) > n_pos) sel_a.pos.resize(n_pos);
    if (static_cast<int64_t>(sel_b.pos.size()) > n_pos) sel_b.pos.resize(n_pos);
    if (floored) warnings_.push_back("stage 4 pseudo-negative count floored at zero");
    if (odd) warnings_.push_back("stage 4 negative total was odd; one pair dropped");

    // The pools overlap in general; a pair promoted by either expert
    // counts once, and a positive call beats a negative one.
    std::vector<DtiPair> pos, neg;
    std::set<DtiPair> pos_set, neg_set;
    for (const auto& v2 : {sel_a.pos, sel_b.pos}) {
      for (const auto& p : v2) {
        if (pos_set.insert(p).second) pos.push_back(p);
      }
    }
    for (const auto& v2 : {sel_a.neg, sel_b.neg}) {
      for (const auto& p : v2) {
        if (pos_set.count(p)) continue;
        if (neg_set.insert(p).second) neg.push_back(p);
      }
    }
    stages_.push_back({"s4",
                       static_cast<int64_t>(pool_a.size() + pool_b.size()),
                       static_cast<int64_t>(pos.size()),
                       static_cast<int64_t>(neg.size()), n_tp, n_tn,
                       std::min(sel_a.min_pos_score, sel_b.min_pos_score),
                       std::max(sel_a.max_neg_score, sel_b.max_neg_score), floored,
                       odd});
    auto batch = make_loss_batch(tp, tn, pos, neg, static_cast<double>(syn_.gamma_g));
    freeze(sched_.s4_tune_embeddings);
    run_epochs(m, batch, m.all_params_for_joint(sched_.s4_tune_embeddings),
               sched_.lr_s4, sched_.epochs_s4, "s4", DtiModel::Mode::kAuto);
  }
  return m;
}

}  // namespace moedti
