// Release gate. Each criterion prints exactly one PASS/FAIL line; the
// exit code is the number of failed criteria. Long-running criteria
// also enforce their wall-clock budgets.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "moedti/ablation.hpp"
#include "moedti/config.hpp"
#include "moedti/dataset.hpp"
#include "moedti/gradcheck.hpp"
#include "moedti/kg.hpp"
#include "moedti/kg_embed.hpp"
#include "moedti/metrics.hpp"
#include "moedti/model.hpp"
#include "moedti/mol_encoder.hpp"
#include "moedti/ops.hpp"
#include "moedti/smiles.hpp"
#include "moedti/synergy.hpp"
#include "moedti/synthetic.hpp"

using namespace moedti;

namespace {

struct Failure {
  std::string msg;
};

void req(bool cond, const std::string& msg) {
  if (!cond) throw Failure{msg};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("moedti_acc_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string at(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  req(in.good(), "cannot open " + p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_tsv(const std::string& path) {
  std::ifstream in(path);
  req(in.good(), "cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    size_t start = 0;
    for (;;) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        cols.push_back(line.substr(start));
        break;
      }
      cols.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

int run_command(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -2;
}

double median(std::vector<double> v) {
  req(!v.empty(), "median of empty vector");
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Rank-free AUC oracle: count concordant pairs, ties worth one half.
double auc_pair_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  int64_t np = 0, nn = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (y[i] == 1) {
      ++np;
      for (size_t j = 0; j < s.size(); ++j) {
        if (y[j] == 1) continue;
        if (s[i] > s[j]) wins += 1.0;
        else if (s[i] == s[j]) wins += 0.5;
      }
    } else {
      ++nn;
    }
  }
  return wins / (static_cast<double>(np) * static_cast<double>(nn));
}

// Average precision oracle: sweep the distinct scores descending and
// recount precision/recall from scratch at every threshold.
double aupr_sweep_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<double>> thresholds(s.begin(), s.end());
  int64_t total_pos = 0;
  for (int v : y) total_pos += v;
  double ap = 0.0, prev_recall = 0.0;
  for (double th : thresholds) {
    int64_t tp = 0, fp = 0;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= th) (y[i] == 1 ? tp : fp) += 1;
    }
    double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

std::string random_sequence(Rng& rng, int min_len, int max_len) {
  static const std::string kResidues = "ACDEFGHIKLMNPQRSTVWY";
  int len = min_len + static_cast<int>(uniform_index(
                          rng, static_cast<uint64_t>(max_len - min_len + 1)));
  std::string s;
  s.reserve(len);
  for (int i = 0; i < len; ++i) s += kResidues[uniform_index(rng, kResidues.size())];
  return s;
}

MolecularGraph random_parsed_molecule(Rng& rng) {
  GenMol gm = random_molecule(rng, 8, 16);
  if (uniform_index(rng, 2) == 0) attach_leaf(gm, "F", rng);
  if (uniform_index(rng, 3) == 0) attach_leaf(gm, "Cl", rng);
  return parse_smiles(write_smiles(gm));
}

MolecularGraph permuted_graph(const MolecularGraph& g, const std::vector<int>& p) {
  MolecularGraph out;
  out.atoms.resize(g.atoms.size());
  for (size_t i = 0; i < g.atoms.size(); ++i) out.atoms[p[i]] = g.atoms[i];
  for (const auto& b : g.bonds) out.bonds.push_back({p[b.a], p[b.b], b.order});
  out.source = g.source;
  return out;
}

int64_t count_dt_triples(const KnowledgeGraph& g) {
  int64_t n = 0;
  for (const auto& t : g.triples) {
    bool dt = g.is_drug[t.head] && g.is_target[t.tail];
    bool td = g.is_target[t.head] && g.is_drug[t.tail];
    if (dt || td) ++n;
  }
  return n;
}

EntityEmbeddingTable pretrain_for(const Config& cfg, const KnowledgeGraph& kg) {
  KgTrainConfig kc;
  kc.dim = cfg.integer("kg.dim");
  kc.margin = cfg.real("kg.margin");
  kc.lr = cfg.real("kg.lr");
  kc.epochs = cfg.integer("kg.epochs");
  kc.seed = static_cast<uint64_t>(cfg.integer("kg.seed"));
  return pretrain_embeddings(kg, cfg.str("kg.method"), kc);
}

int g_failures = 0;

void criterion(int id, const std::string& label, const std::function<std::string()>& body) {
  std::string note;
  bool ok = true;
  std::string why;
  try {
    note = body();
  } catch (const Failure& f) {
    ok = false;
    why = f.msg;
  } catch (const std::exception& e) {
    ok = false;
    why = e.what();
  }
  if (ok) {
    std::printf("PASS %2d. %s%s%s\n", id, label.c_str(), note.empty() ? "" : " -- ",
                note.c_str());
  } else {
    std::printf("FAIL %2d. %s -- %s\n", id, label.c_str(), why.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------

std::string check_property_suite() {
  // Split invariants on a generated world.
  WorldSpec spec;
  spec.drugs = 16;
  spec.targets = 16;
  spec.entities = 100;
  spec.dti_edges = 4;
  spec.seed = 11;
  SyntheticWorld w = generate_synthetic_world(spec);
  TempDir dir;
  write_world(w, dir.str());
  WorldFiles files = WorldFiles::in_dir(dir.str());
  DtiDataset ds = load_dti_dataset(files.pairs_pos, files.pairs_neg, files.smiles,
                                   files.sequences, 5, 3);
  std::set<DtiPair> seen;
  for (const auto* v : {&ds.train_pos, &ds.train_neg, &ds.test_pos, &ds.test_neg}) {
    for (const auto& p : *v) req(seen.insert(p).second, "split pools overlap");
  }
  req(static_cast<int64_t>(ds.train_pos.size()) == 5, "train positives != shots");
  req(ds.train_neg.size() == 5 && ds.test_neg.size() == ds.test_pos.size(),
      "negative pools not 1:1");
  DtiDataset again = load_dti_dataset(files.pairs_pos, files.pairs_neg, files.smiles,
                                      files.sequences, 5, 3);
  req(again.train_pos == ds.train_pos && again.test_neg == ds.test_neg,
      "split not deterministic under a fixed seed");

  // Pseudo-label selection: head/tail of one canonical ordering.
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    int64_t n = 20 + static_cast<int64_t>(uniform_index(rng, 60));
    std::vector<DtiPair> cand;
    std::vector<double> scores;
    for (int64_t i = 0; i < n; ++i) {
      cand.push_back({"d" + std::to_string(i), "t" + std::to_string(i)});
      scores.push_back(uniform_index(rng, 6) / 5.0);  // heavy ties
    }
    double beta = 0.1 + 0.2 * uniform_real(rng, 0.0, 1.0);
    int64_t n_pos = static_cast<int64_t>(std::floor(beta * static_cast<double>(n)));
    int64_t needed = static_cast<int64_t>(uniform_index(rng, n - n_pos + 1));
    PseudoLabels pl = select_pseudo_labels(cand, scores, beta, needed);
    req(static_cast<int64_t>(pl.pos.size()) == n_pos, "pseudo-positive count");
    req(static_cast<int64_t>(pl.neg.size()) == needed, "pseudo-negative count");
    std::set<DtiPair> ps(pl.pos.begin(), pl.pos.end());
    for (const auto& p : pl.neg) req(!ps.count(p), "pseudo pools overlap");
    if (!pl.pos.empty() && !pl.neg.empty())
      req(pl.min_pos_score >= pl.max_neg_score, "pseudo score ordering");
  }

  // Negative triple corruption: exactly one side moves, never observed.
  KnowledgeGraph kg = load_kg(files.triples, files.drugs, files.targets);
  Rng nrng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto& t = kg.triples[uniform_index(nrng, kg.triples.size())];
    auto c = sample_negative_triple(kg, t, nrng);
    req(c.rel == t.rel, "negative sampling changed the relation");
    req((c.head == t.head) != (c.tail == t.tail), "negative sampling must move one side");
    req(!kg.has_triple(c.head, c.rel, c.tail), "negative sampling returned an observed triple");
  }

  // Tape lifecycle: backward clears, no-grad blocks recording.
  {
    Rng trng(5);
    auto x = Tensor::uniform({2, 2}, -1.0, 1.0, trng);
    x->requires_grad = true;
    auto loss = ops::sum(ops::mul(x, x));
    Tape::current().backward(loss);
    req(Tape::current().size() == 0, "tape not cleared by backward");
    {
      NoGradGuard guard;
      auto y = ops::mul(x, x);
      req(Tape::current().size() == 0, "no-grad guard leaked a tape entry");
      (void)y;
    }
  }
  return "splits, pseudo-label selection, negative sampling, tape lifecycle";
}

std::string check_gradients() {
  auto t0 = std::chrono::steady_clock::now();
  auto reports = run_gradient_checks(20, 20260815, 1e-4);
  double secs = seconds_since(t0);
  req(reports.size() == 6, "expected six trainable modules, got " +
                               std::to_string(reports.size()));
  double worst = 0.0;
  for (const auto& r : reports) {
    req(r.configs >= 20, r.module + ": fewer than 20 configurations");
    req(r.pass, r.module + ": max relative error " + std::to_string(r.max_rel_err));
    worst = std::max(worst, r.max_rel_err);
  }
  req(secs < 120.0, "gradient checks took " + std::to_string(secs) + "s (budget 120s)");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "6 modules, worst rel err %.2e, %.1fs", worst, secs);
  return buf;
}

std::string check_balance_arithmetic() {
  Rng rng(33);
  int done = 0;
  while (done < 1000) {
    int64_t gamma = 1 + static_cast<int64_t>(uniform_index(rng, 8));
    int64_t tp = static_cast<int64_t>(uniform_index(rng, 30));
    int64_t pp = static_cast<int64_t>(uniform_index(rng, 60));
    int64_t tn = static_cast<int64_t>(uniform_index(rng, 200));
    int64_t raw = gamma * tp + pp - tn;
    if (raw < 0 || tp + pp < 1) continue;

    bool floored = true;
    int64_t got = pseudo_negative_count(gamma, tp, pp, tn, &floored);
    req(got == raw, "pseudo-negative count mismatch");
    req(!floored, "floor flag raised on a non-negative outcome");

    int64_t pa = static_cast<int64_t>(uniform_index(rng, 60));
    int64_t pb = static_cast<int64_t>(uniform_index(rng, 60));
    int64_t raw4 = gamma * tp + pa + pb - tn;
    if (raw4 >= 0) {
      bool f4 = true, odd = false;
      int64_t share = joint_negative_share(gamma, tp, pa, pb, tn, &f4, &odd);
      req(share == raw4 / 2, "joint share mismatch");
      req(!f4, "joint floor flag raised on a non-negative outcome");
      req(odd == (raw4 % 2 == 1), "odd-remainder flag mismatch");
    }

    auto ids = [](const char* tag, int64_t n) {
      std::vector<DtiPair> v;
      for (int64_t i = 0; i < n; ++i)
        v.push_back({std::string(tag) + std::to_string(i), "t" + std::to_string(i)});
      return v;
    };
    LossBatch batch = make_loss_batch(ids("tp", tp), ids("tn", tn), ids("pp", pp),
                                      ids("pn", got), static_cast<double>(gamma));
    double weighted_pos = 0.0;
    int64_t negs = 0;
    for (size_t i = 0; i < batch.labels.size(); ++i) {
      if (batch.labels[i] == 1.0) weighted_pos += batch.weights[i];
      else ++negs;
    }
    req(weighted_pos == static_cast<double>(gamma * tp + pp), "weighted positive mass");
    req(negs == tn + got, "negative count in the realized batch");
    req(weighted_pos == static_cast<double>(negs), "batch balance identity");
    ++done;
  }
  return "1000 tuples, exact counts and realized batch balance";
}

std::string check_leakage() {
  // Generated world at benchmark scale: the planted bait must exist
  // before filtering and vanish after.
  Config cfg = Config::defaults();
  WorldSpec spec = WorldSpec::from_config(cfg);
  SyntheticWorld w = generate_synthetic_world(spec);
  TempDir dir;
  write_world(w, dir.str());
  WorldFiles files = WorldFiles::in_dir(dir.str());
  KnowledgeGraph kg = load_kg(files.triples, files.drugs, files.targets);
  int64_t before = count_dt_triples(kg);
  req(before > 0, "world did not plant any direct drug-target triples");
  KnowledgeGraph filtered = remove_dti_leakage(kg);
  req(count_dt_triples(filtered) == 0, "drug-target triples survive filtering");
  req(filtered.removed_leakage == before, "removed count does not match the scan");

  // Hand-built KG with edges in both directions plus bystanders.
  TempDir dir2;
  {
    std::ofstream t(dir2.at("triples.tsv"));
    t << "d1\tbinds\tt1\n"
         "t2\tbound_by\td1\n"
         "d2\tsimilar\td1\n"
         "t1\tassoc\tg1\n"
         "g1\texpresses\tt2\n";
    std::ofstream d(dir2.at("drugs.txt"));
    d << "d1\nd2\n";
    std::ofstream g(dir2.at("targets.txt"));
    g << "t1\nt2\n";
  }
  KnowledgeGraph loaded =
      load_kg(dir2.at("triples.tsv"), dir2.at("drugs.txt"), dir2.at("targets.txt"));
  req(count_dt_triples(loaded) == 2, "hand-built KG should carry two leaking triples");
  KnowledgeGraph clean = remove_dti_leakage(loaded);
  req(count_dt_triples(clean) == 0, "hand-built KG still leaks after filtering");
  req(clean.num_triples() == 3, "filter removed a non-leaking triple");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%lld planted triples removed, zero remain",
                static_cast<long long>(before));
  return buf;
}

std::string check_metric_oracles() {
  Rng rng(55);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    size_t n = 2 + uniform_index(rng, 199);
    std::vector<double> s(n);
    std::vector<int> y(n);
    bool tied_grid = uniform_index(rng, 2) == 0;
    for (;;) {
      int64_t pos = 0;
      for (size_t i = 0; i < n; ++i) {
        s[i] = tied_grid ? static_cast<double>(uniform_index(rng, 7)) / 6.0
                         : uniform_real(rng, 0.0, 1.0);
        y[i] = uniform_index(rng, 2) == 0 ? 0 : 1;
        pos += y[i];
      }
      if (pos > 0 && pos < static_cast<int64_t>(n)) break;
    }
    MetricRow m = compute_metrics(s, y);
    req(m.ranking_defined, "two-class instance reported as undefined");
    double auc_err = std::fabs(m.auc - auc_pair_oracle(s, y));
    double aupr_err = std::fabs(m.aupr - aupr_sweep_oracle(s, y));
    worst = std::max({worst, auc_err, aupr_err});
    req(auc_err <= 1e-12, "AUC deviates from the pair-counting oracle by " +
                              std::to_string(auc_err));
    req(aupr_err <= 1e-12, "AUPR deviates from the sweep oracle by " +
                               std::to_string(aupr_err));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "200 instances, worst abs err %.2e", worst);
  return buf;
}

std::string check_mixture_contract() {
  Rng rng(66);
  Config cfg = Config::defaults();
  cfg.set("kg.dim", "16");
  cfg.set("gnn.hidden", "32");
  cfg.set("gnn.out_dim", "16");
  cfg.set("seq.e_dim", "8");
  cfg.set("cnn.channels", "8,8");
  cfg.set("cnn.pool_len", "4");
  cfg.set("cnn.out_dim", "16");
  cfg.set("mlp.hidden", "16");
  cfg.set("gate.hidden", "16");

  EntityEmbeddingTable emb;
  emb.dim = 16;
  emb.method = "transe";
  const int kDrugs = 24, kTargets = 24;
  for (int i = 0; i < kDrugs; ++i) emb.entity_ids.push_back("D" + std::to_string(i));
  for (int i = 0; i < kTargets; ++i) emb.entity_ids.push_back("T" + std::to_string(i));
  emb.entity = Tensor::uniform({kDrugs + kTargets, 16}, -0.7, 0.7, rng);
  emb.relation = Tensor::uniform({1, 16}, -0.7, 0.7, rng);

  auto featurizer = ResidueFeaturizer::learned(8, rng);
  DtiModel m(ModelDims::from_config(cfg), std::move(emb), 909, std::move(featurizer));
  for (int i = 0; i < kDrugs; ++i) {
    GenMol gm = random_molecule(rng, 6, 14);
    m.register_drug("D" + std::to_string(i), write_smiles(gm));
  }
  for (int i = 0; i < kTargets; ++i) {
    m.register_target("T" + std::to_string(i), random_sequence(rng, 40, 90));
  }

  std::vector<DtiPair> pairs;
  for (int k = 0; k < 1000; ++k) {
    pairs.push_back({"D" + std::to_string(uniform_index(rng, kDrugs)),
                     "T" + std::to_string(uniform_index(rng, kTargets))});
  }
  auto fused = m.score_pairs(pairs, DtiModel::Mode::kAuto);
  for (const auto& s : fused) {
    req(s.ok && s.has_extrinsic && s.has_intrinsic, "pair lost a perspective");
    double lo = std::min(s.p_ex, s.p_in), hi = std::max(s.p_ex, s.p_in);
    req(s.p >= lo - 1e-12 && s.p <= hi + 1e-12,
        "blended probability escaped the expert envelope");
  }
  auto ex = m.score_pairs(pairs, DtiModel::Mode::kExtrinsicOnly);
  auto in = m.score_pairs(pairs, DtiModel::Mode::kIntrinsicOnly);
  for (size_t i = 0; i < pairs.size(); ++i) {
    req(ex[i].ok && in[i].ok, "forced mode refused a fully covered pair");
    req(ex[i].p == fused[i].p_ex, "extrinsic-only output not bit-identical");
    req(in[i].p == fused[i].p_in, "intrinsic-only output not bit-identical");
    req(ex[i].w == 1.0 && in[i].w == 0.0, "forced mode weight not pinned");
  }
  return "1000 pairs inside the envelope; forced modes bit-identical";
}

std::string check_synergy_benchmark() {
  auto t0 = std::chrono::steady_clock::now();
  Config cfg = Config::defaults();
  WorldSpec spec = WorldSpec::from_config(cfg);
  req(spec.drugs == 60 && spec.targets == 60, "benchmark world must be 60x60");
  SyntheticWorld w = generate_synthetic_world(spec);
  TempDir dir;
  write_world(w, dir.str());
  WorldFiles files = WorldFiles::in_dir(dir.str());

  KnowledgeGraph kg = load_kg(files.triples, files.drugs, files.targets);
  KnowledgeGraph filtered = remove_dti_leakage(kg);
  EntityEmbeddingTable emb = pretrain_for(cfg, filtered);

  std::map<std::string, std::vector<double>> auc;
  const std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  for (uint64_t seed : seeds) {
    DtiDataset ds = load_dti_dataset(files.pairs_pos, files.pairs_neg, files.smiles,
                                     files.sequences, 10, seed);
    Trainer trainer(cfg, filtered, emb, ds, seed);

    DtiModel ti = trainer.train(Variant::kTrueIntrinsic);
    auc["True-intr"].push_back(
        evaluate_model(ti, ds, DtiModel::Mode::kIntrinsicOnly).auc);
    DtiModel te = trainer.train(Variant::kTrueExtrinsic);
    auc["True-extr"].push_back(
        evaluate_model(te, ds, DtiModel::Mode::kExtrinsicOnly).auc);
    DtiModel ta = trainer.train(Variant::kTrueAll);
    auc["True-all"].push_back(evaluate_model(ta, ds, DtiModel::Mode::kAuto).auc);
    DtiModel mo = trainer.train(Variant::kMose);
    auc["Mose-intr"].push_back(
        evaluate_model(mo, ds, DtiModel::Mode::kIntrinsicOnly).auc);
    auc["Mose-extr"].push_back(
        evaluate_model(mo, ds, DtiModel::Mode::kExtrinsicOnly).auc);
    auc["MoseDTI"].push_back(evaluate_model(mo, ds, DtiModel::Mode::kAuto).auc);
  }

  std::map<std::string, double> med;
  for (auto& [name, v] : auc) {
    req(v.size() == seeds.size(), name + ": missing seeds");
    for (double x : v) req(std::isfinite(x), name + ": undefined AUC");
    med[name] = median(v);
  }
  std::ostringstream detail;
  detail.setf(std::ios::fixed);
  detail.precision(3);
  for (const char* name :
       {"True-intr", "True-extr", "True-all", "Mose-intr", "Mose-extr", "MoseDTI"}) {
    detail << name << "=" << med[name] << " ";
  }
  auto fail = [&](const std::string& what) {
    throw Failure{what + " [" + detail.str() + "]"};
  };
  if (!(med["Mose-intr"] >= med["True-intr"])) fail("Mose-intr < True-intr");
  if (!(med["Mose-extr"] >= med["True-extr"])) fail("Mose-extr < True-extr");
  double best_single = std::max(med["Mose-intr"], med["Mose-extr"]);
  if (!(med["MoseDTI"] >= best_single - 0.02)) fail("fused model trails its experts");
  if (!(med["MoseDTI"] >= 0.75)) fail("fused median AUC below 0.75");
  for (const char* t : {"True-intr", "True-extr", "True-all"}) {
    if (!(med[t] < med["MoseDTI"])) fail(std::string(t) + " not below the fused model");
  }
  double secs = seconds_since(t0);
  req(secs < 900.0, "benchmark took " + std::to_string(secs) + "s (budget 900s)");
  std::ostringstream note;
  note.setf(std::ios::fixed);
  note.precision(3);
  note << "median AUC " << detail.str() << "(" << static_cast<int>(secs) << "s)";
  return note.str();
}

std::string check_cli_determinism() {
  const std::string cli = MOEDTI_CLI_PATH;
  TempDir dir;
  const std::string world = dir.at("world");
  const std::string common_sets =
      " --set world.drugs=20 --set world.targets=20 --set world.entities=140"
      " --set world.seed=9";
  int rc = run_command(cli + " gen-synth" + common_sets + " --out-dir " + world +
                       " > " + dir.at("gen.log") + " 2>&1");
  req(rc == 0, "gen-synth exited with code " + std::to_string(rc));

  const std::string reduce =
      " --set kg.epochs=30 --set train.epochs_s1=30 --set train.epochs_s2=15"
      " --set train.epochs_s3=15 --set train.epochs_s4=15 --set syn.alpha_a=0.2"
      " --set syn.alpha_b=0.2 --set syn.beta_a=0.1 --set syn.beta_b=0.1"
      " --set syn.beta_g=0.1";
  for (const char* run : {"r1", "r2"}) {
    int code = run_command(cli + " ablate --data-dir " + world + reduce +
                           " --shots 10 --seeds 1,2 --out-dir " + dir.at(run) + " > " +
                           dir.at(std::string(run) + ".log") + " 2>&1");
    req(code == 0, std::string("ablate run ") + run + " exited with code " +
                       std::to_string(code));
  }
  req(slurp(dir.at("r1/metrics.csv")) == slurp(dir.at("r2/metrics.csv")),
      "metrics CSVs differ between identical runs");
  req(slurp(dir.at("r1/summary.csv")) == slurp(dir.at("r2/summary.csv")),
      "summary CSVs differ between identical runs");
  return "two ablate runs, byte-identical CSV artifacts";
}

std::string check_smiles_corpus() {
  const std::string data = MOEDTI_DATA_DIR;
  auto corpus = read_tsv(data + "/smiles_corpus.tsv");
  auto expected = read_tsv(data + "/smiles_corpus_expected.tsv");
  req(corpus.size() == 50, "corpus must hold 50 molecules, found " +
                               std::to_string(corpus.size()));
  req(expected.size() == corpus.size(), "oracle table size mismatch");
  std::map<std::string, std::pair<int, int>> want;
  for (const auto& row : expected) {
    req(row.size() == 3, "oracle rows need id, atoms, bonds");
    want[row[0]] = {std::stoi(row[1]), std::stoi(row[2])};
  }
  for (const auto& row : corpus) {
    req(row.size() == 2, "corpus rows need id, smiles");
    auto it = want.find(row[0]);
    req(it != want.end(), row[0] + " missing from the oracle table");
    MolecularGraph g = parse_smiles(row[1]);
    req(static_cast<int>(g.atoms.size()) == it->second.first,
        row[0] + ": atom count " + std::to_string(g.atoms.size()) + " != oracle " +
            std::to_string(it->second.first));
    req(static_cast<int>(g.bonds.size()) == it->second.second,
        row[0] + ": bond count " + std::to_string(g.bonds.size()) + " != oracle " +
            std::to_string(it->second.second));
    req(g.connected(), row[0] + ": parsed graph is not connected");
  }

  auto probes = read_tsv(data + "/smiles_malformed.tsv");
  req(probes.size() == 3, "expected exactly 3 malformed probes");
  for (const auto& row : probes) {
    req(row.size() == 3, "probe rows need smiles, kind, offset");
    bool threw = false;
    try {
      parse_smiles(row[0]);
    } catch (const ParseError& e) {
      threw = true;
      req(e.kind() == row[1], row[0] + ": kind " + e.kind() + " != " + row[1]);
      req(e.offset() == static_cast<size_t>(std::stoull(row[2])),
          row[0] + ": offset " + std::to_string(e.offset()) + " != " + row[2]);
    }
    req(threw, row[0] + ": parser accepted a malformed string");
  }
  return "50 molecules match the oracle; 3 probes report kind and offset";
}

std::string check_permutation_invariance() {
  Rng rng(1010);
  MolEncoder::Spec spec;
  spec.layers = 3;
  spec.hidden = 32;
  spec.out_dim = 16;
  MolEncoder enc(spec, rng);
  NoGradGuard guard;
  double worst = 0.0;
  for (int mol = 0; mol < 50; ++mol) {
    MolecularGraph g = random_parsed_molecule(rng);
    TensorPtr base = enc.encode(MolEncoder::prepare(g));
    std::vector<int> perm(g.atoms.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    for (int trial = 0; trial < 5; ++trial) {
      shuffle_vec(perm, rng);
      TensorPtr out = enc.encode(MolEncoder::prepare(permuted_graph(g, perm)));
      req(out->data.size() == base->data.size(), "embedding width changed");
      for (size_t k = 0; k < base->data.size(); ++k) {
        double d = std::fabs(out->data[k] - base->data[k]);
        worst = std::max(worst, d);
        req(d <= 1e-12, "embedding moved by " + std::to_string(d) +
                            " under atom reordering");
      }
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "50 molecules x 5 orders, max drift %.2e", worst);
  return buf;
}

}  // namespace

int main() {
  std::printf("release criteria\n");
  criterion(1, "substituted property suite (splits, pseudo-labels, sampling, tape)",
            check_property_suite);
  criterion(2, "analytic gradients match finite differences in every module",
            check_gradients);
  criterion(3, "pseudo-negative balance arithmetic and realized batch balance",
            check_balance_arithmetic);
  criterion(4, "leakage filter leaves zero drug-target triples", check_leakage);
  criterion(5, "ranking metrics match brute-force oracles", check_metric_oracles);
  criterion(6, "fused probability stays in the expert envelope; forced modes exact",
            check_mixture_contract);
  criterion(7, "few-shot synergy orderings on the planted benchmark",
            check_synergy_benchmark);
  criterion(8, "ablate reruns produce byte-identical CSVs", check_cli_determinism);
  criterion(9, "SMILES corpus counts and malformed probe diagnostics",
            check_smiles_corpus);
  criterion(10, "molecule embedding invariant to atom order",
            check_permutation_invariance);
  if (g_failures == 0) {
    std::printf("all 10 criteria passed\n");
  } else {
    std::printf("%d of 10 criteria failed\n", g_failures);
  }
  return g_failures;
}
