#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "moedti/kg_embed.hpp"
#include "moedti/ops.hpp"
#include "moedti/synergy.hpp"
#include "moedti/synthetic.hpp"

using namespace moedti;

namespace {

std::vector<DtiPair> grid(int nd, int nt) {
  std::vector<DtiPair> v;
  for (int d = 0; d < nd; ++d) {
    for (int t = 0; t < nt; ++t) {
      v.push_back({"d" + std::to_string(d), "t" + std::to_string(t)});
    }
  }
  return v;
}

std::vector<std::string> ids(char prefix, int n) {
  std::vector<std::string> v;
  for (int i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

}  // namespace

TEST_CASE("pseudo-negative arithmetic: pinned examples") {
  bool floored = false;
  CHECK(pseudo_negative_count(1, 10, 10, 10, &floored) == 10);
  CHECK_FALSE(floored);
  CHECK(pseudo_negative_count(4, 10, 5, 10, &floored) == 35);
  CHECK(pseudo_negative_count(1, 1, 0, 5, &floored) == 0);
  CHECK(floored);

  bool odd = false;
  CHECK(joint_negative_share(1, 10, 40, 40, 10, &floored, &odd) == 40);
  CHECK_FALSE(floored);
  CHECK_FALSE(odd);
  CHECK(joint_negative_share(4, 10, 25, 25, 10, &floored, &odd) == 40);
  CHECK(joint_negative_share(1, 10, 40, 41, 10, &floored, &odd) == 40);
  CHECK(odd);  // 81 splits as 40 + a dropped remainder
  CHECK(joint_negative_share(1, 0, 0, 0, 9, &floored, &odd) == 0);
  CHECK(floored);
}

TEST_CASE("balance arithmetic holds across random tuples") {
  Rng rng(81);
  for (int trial = 0; trial < 1000; ++trial) {
    int64_t gamma = 1 + static_cast<int64_t>(uniform_index(rng, 6));
    int64_t tp = static_cast<int64_t>(uniform_index(rng, 50));
    int64_t pp = static_cast<int64_t>(uniform_index(rng, 80));
    int64_t tn = static_cast<int64_t>(uniform_index(rng, 90));
    bool floored = false;
    int64_t got = pseudo_negative_count(gamma, tp, pp, tn, &floored);
    int64_t raw = gamma * tp + pp - tn;
    CHECK(got == std::max<int64_t>(raw, 0));
    CHECK(floored == (raw < 0));
    if (!floored) {
      // Realized balance: weighted positives equal total negatives.
      CHECK(gamma * tp + pp == tn + got);
    }

    int64_t pa = static_cast<int64_t>(uniform_index(rng, 60));
    int64_t pb = static_cast<int64_t>(uniform_index(rng, 60));
    bool jf = false, odd = false;
    int64_t share = joint_negative_share(gamma, tp, pa, pb, tn, &jf, &odd);
    int64_t total = gamma * tp + pa + pb - tn;
    CHECK(share == std::max<int64_t>(total, 0) / 2);
    CHECK(jf == (total < 0));
    if (total >= 0) CHECK(odd == (total % 2 != 0));
  }
}

TEST_CASE("candidate sampling: size, exclusion, determinism") {
  auto drugs = ids('d', 10);
  auto targets = ids('t', 10);

  Rng r1(5);
  auto all = sample_candidates(drugs, targets, 1.0, {}, r1);
  CHECK(all.size() == 100);
  std::set<DtiPair> uniq(all.begin(), all.end());
  CHECK(uniq.size() == 100);

  Rng r2(5);
  auto half = sample_candidates(drugs, targets, 0.5, {}, r2);
  CHECK(half.size() == 50);
  CHECK(std::set<DtiPair>(half.begin(), half.end()).size() == 50);

  Rng r3(5);
  auto again = sample_candidates(drugs, targets, 0.5, {}, r3);
  CHECK(again == half);

  std::set<DtiPair> exclude;
  for (int t = 0; t < 10; ++t) exclude.insert({"d0", "t" + std::to_string(t)});
  Rng r4(6);
  auto filtered = sample_candidates(drugs, targets, 1.0, exclude, r4);
  CHECK(filtered.size() == 90);  // the request caps at the surviving pool
  for (const auto& p : filtered) CHECK(p.drug != "d0");

  Rng r5(7);
  CHECK_THROWS_AS(sample_candidates(drugs, targets, 0.0, {}, r5), ContractError);
  CHECK_THROWS_AS(sample_candidates(ids('d', 1), ids('t', 1), 0.4, {}, r5),
                  ContractError);  // rounds down to zero
  std::set<DtiPair> everything;
  for (const auto& p : grid(2, 2)) everything.insert(p);
  CHECK_THROWS_AS(sample_candidates(ids('d', 2), ids('t', 2), 1.0, everything, r5),
                  ContractError);  // nothing left to sample
}

TEST_CASE("pseudo-label selection matches a full-sort oracle") {
  Rng rng(82);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 5 + static_cast<int>(uniform_index(rng, 60));
    auto cand = grid(n, 1);
    std::vector<double> scores(n);
    for (auto& s : scores) {
      s = uniform_index(rng, 3) == 0 ? uniform_real(rng, 0, 1)
                                     : uniform_index(rng, 4) * 0.25;  // force ties
    }
    double beta = uniform_real(rng, 0.05, 0.5);
    int64_t n_pos = static_cast<int64_t>(std::floor(beta * n));
    int64_t max_neg = n - n_pos;
    int64_t needed = static_cast<int64_t>(uniform_index(rng, max_neg + 1));

    auto sel = select_pseudo_labels(cand, scores, beta, needed);
    REQUIRE(static_cast<int64_t>(sel.pos.size()) == n_pos);
    REQUIRE(static_cast<int64_t>(sel.neg.size()) == needed);

    // Oracle: full sort on (score desc, index asc), then head and tail.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    for (int64_t i = 0; i < n_pos; ++i) CHECK(sel.pos[i] == cand[order[i]]);
    for (int64_t i = 0; i < needed; ++i) {
      CHECK(sel.neg[i] == cand[order[n - needed + i]]);
    }

    // Disjointness and the score-ordering invariant.
    std::set<DtiPair> pos_set(sel.pos.begin(), sel.pos.end());
    for (const auto& p : sel.neg) CHECK(pos_set.count(p) == 0);
    if (!sel.pos.empty() && !sel.neg.empty()) {
      CHECK(sel.min_pos_score >= sel.max_neg_score);
    }
  }
}

TEST_CASE("pseudo-label selection endpoints and errors") {
  auto cand = grid(10, 1);
  std::vector<double> inc(10);
  std::iota(inc.begin(), inc.end(), 0.0);  // strictly increasing by index
  auto sel = select_pseudo_labels(cand, inc, 0.3, 3);
  REQUIRE(sel.pos.size() == 3);
  CHECK(sel.pos[0] == cand[9]);
  CHECK(sel.pos[1] == cand[8]);
  CHECK(sel.pos[2] == cand[7]);
  CHECK(sel.neg[0] == cand[2]);
  CHECK(sel.min_pos_score == 7.0);
  CHECK(sel.max_neg_score == 2.0);

  CHECK_THROWS_AS(select_pseudo_labels(cand, inc, 0.5, 6), ContractError);
  CHECK_THROWS_AS(select_pseudo_labels(cand, {1.0}, 0.5, 0), ContractError);
  CHECK_THROWS_AS(select_pseudo_labels(cand, inc, 0.5, -1), ContractError);

  // An all-tied plateau still yields disjoint sets split by index.
  std::vector<double> flat(10, 0.5);
  auto tied = select_pseudo_labels(cand, flat, 0.4, 6);
  std::set<DtiPair> pos_set(tied.pos.begin(), tied.pos.end());
  for (const auto& p : tied.neg) CHECK(pos_set.count(p) == 0);
  CHECK(tied.pos.size() + tied.neg.size() == 10);
}

TEST_CASE("loss batches carry gamma on true positives only") {
  auto tp = grid(2, 1), tn = grid(3, 1), pp = grid(4, 1), pn = grid(5, 1);
  auto b = make_loss_batch(tp, tn, pp, pn, 4.0);
  REQUIRE(b.pairs.size() == 14);
  CHECK(b.n_pos_true == 2);
  CHECK(b.n_pos_pseudo == 4);
  CHECK(b.n_neg_true == 3);
  CHECK(b.n_neg_pseudo == 5);
  for (size_t i = 0; i < b.pairs.size(); ++i) {
    bool is_true_pos = i < 2;
    bool is_pos = i < 6;
    CHECK(b.labels[i] == (is_pos ? 1.0 : 0.0));
    CHECK(b.weights[i] == (is_true_pos ? 4.0 : 1.0));
  }

  CHECK_THROWS_AS(make_loss_batch({}, tn, {}, pn, 1.0), ContractError);
  CHECK_THROWS_AS(make_loss_batch(tp, tn, pp, pn, 0.5), ContractError);
}

TEST_CASE("weighted loss equals the explicit multiset expansion") {
  Rng rng(83);
  auto tp = grid(5, 1), tn = grid(4, 1), pp = grid(6, 1), pn = grid(5, 2);
  const double gamma = 3.0;
  auto b = make_loss_batch(tp, tn, pp, pn, gamma);

  std::vector<double> probs(b.pairs.size());
  for (auto& p : probs) p = uniform_real(rng, 0.02, 0.98);

  auto weighted =
      ops::bce_sum(Tensor::create({static_cast<int64_t>(probs.size()), 1}, probs),
                   b.labels, b.weights);

  // Literal expansion: each true positive appears gamma times at weight 1.
  std::vector<double> ex_probs, ex_labels, ex_weights;
  for (size_t i = 0; i < probs.size(); ++i) {
    int copies = b.weights[i] == gamma ? static_cast<int>(gamma) : 1;
    for (int c = 0; c < copies; ++c) {
      ex_probs.push_back(probs[i]);
      ex_labels.push_back(b.labels[i]);
      ex_weights.push_back(1.0);
    }
  }
  auto expanded =
      ops::bce_sum(Tensor::create({static_cast<int64_t>(ex_probs.size()), 1}, ex_probs),
                   ex_labels, ex_weights);
  CHECK(std::abs(weighted->item() - expanded->item()) <= 1e-12);

  // All predictions at one half: the loss is (weighted count) * ln 2.
  std::vector<double> halves(b.pairs.size(), 0.5);
  auto at_half =
      ops::bce_sum(Tensor::create({static_cast<int64_t>(halves.size()), 1}, halves),
                   b.labels, b.weights);
  double weighted_count = gamma * 5 + 6 + 4 + 10;
  CHECK(at_half->item() == doctest::Approx(weighted_count * std::log(2.0)));
}

TEST_CASE("variant names round-trip") {
  for (auto v : {Variant::kMose, Variant::kTrueAll, Variant::kTrueIntrinsic,
                 Variant::kTrueExtrinsic}) {
    CHECK(variant_from_string(variant_name(v)) == v);
  }
  CHECK(variant_name(Variant::kMose) == "MoseDTI");
  CHECK_THROWS_AS(variant_from_string("ensemble"), ConfigError);
}

TEST_CASE("staged training runs end to end on a micro world") {
  Config cfg = Config::defaults();
  cfg.set("world.drugs", "10");
  cfg.set("world.targets", "10");
  cfg.set("world.entities", "28");
  cfg.set("world.communities", "4");
  cfg.set("world.drug_degree", "2");
  cfg.set("world.target_degree", "2");
  cfg.set("world.entity_degree", "1");
  cfg.set("world.dti_edges", "2");
  cfg.set("world.seq_min", "20");
  cfg.set("world.seq_max", "30");
  cfg.set("world.mol_min", "6");
  cfg.set("world.mol_max", "10");
  cfg.set("world.seed", "5");
  cfg.set("kg.dim", "8");
  cfg.set("kg.epochs", "15");
  cfg.set("gnn.layers", "2");
  cfg.set("gnn.hidden", "8");
  cfg.set("gnn.out_dim", "6");
  cfg.set("seq.e_dim", "4");
  cfg.set("cnn.channels", "4,4");
  cfg.set("cnn.pool_len", "4");
  cfg.set("cnn.out_dim", "6");
  cfg.set("mlp.hidden", "8");
  cfg.set("gate.hidden", "8");
  cfg.set("train.epochs_s1", "8");
  cfg.set("train.epochs_s2", "4");
  cfg.set("train.epochs_s3", "4");
  cfg.set("train.epochs_s4", "4");
  cfg.set("syn.alpha_a", "0.3");
  cfg.set("syn.alpha_b", "0.3");
  cfg.set("syn.beta_a", "0.1");
  cfg.set("syn.beta_b", "0.1");
  cfg.set("syn.beta_g", "0.1");
  cfg.set("syn.gamma_a", "2");
  cfg.set("syn.gamma_b", "2");
  cfg.set("syn.gamma_g", "2");

  auto dir = std::filesystem::temp_directory_path() /
             ("moedti_syn_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  auto world = generate_synthetic_world(WorldSpec::from_config(cfg));
  write_world(world, dir.string());
  auto files = WorldFiles::in_dir(dir.string());

  auto kg = remove_dti_leakage(load_kg(files.triples, files.drugs, files.targets));
  KgTrainConfig kc;
  kc.dim = 8;
  kc.epochs = 15;
  kc.seed = 2;
  auto emb = pretrain_transe(kg, kc);
  auto ds = load_dti_dataset(files.pairs_pos, files.pairs_neg, files.smiles,
                             files.sequences, 5, 3);

  Trainer trainer(cfg, kg, emb, ds, 17);
  auto model = trainer.train(Variant::kMose);

  // All four stages ran, losses are finite, pseudo stages logged.
  std::set<std::string> stages;
  for (const auto& row : trainer.epoch_log()) {
    stages.insert(row.stage);
    CHECK(std::isfinite(row.loss));
  }
  CHECK(stages == std::set<std::string>{"s1", "s2", "s3", "s4"});
  REQUIRE(trainer.stage_log().size() == 3);  // s2, s3, s4 summaries
  for (const auto& s : trainer.stage_log()) {
    CHECK(s.true_pos == 5);
    CHECK(s.true_neg == 5);
  }

  // The trained model scores test pairs with probabilities.
  auto probs = model.probabilities(ds.test_pos, DtiModel::Mode::kAuto);
  for (double p : probs) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }

  // Determinism: a fresh trainer with the same seed reproduces the
  // epoch losses bit for bit.
  Trainer trainer2(cfg, kg, emb, ds, 17);
  auto model2 = trainer2.train(Variant::kMose);
  REQUIRE(trainer2.epoch_log().size() == trainer.epoch_log().size());
  for (size_t i = 0; i < trainer.epoch_log().size(); ++i) {
    CHECK(trainer.epoch_log()[i].loss == trainer2.epoch_log()[i].loss);
  }
  auto p2 = model2.probabilities(ds.test_pos, DtiModel::Mode::kAuto);
  CHECK(p2 == probs);

  // Baseline variants stop at their stage subsets.
  Trainer tex(cfg, kg, emb, ds, 17);
  tex.train(Variant::kTrueExtrinsic);
  for (const auto& row : tex.epoch_log()) CHECK(row.stage == "s1");
  Trainer tin(cfg, kg, emb, ds, 17);
  tin.train(Variant::kTrueIntrinsic);
  for (const auto& row : tin.epoch_log()) CHECK(row.stage == "intr");

  std::filesystem::remove_all(dir);
}
