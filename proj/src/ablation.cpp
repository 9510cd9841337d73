#include "moedti/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "moedti/errors.hpp"
#include "moedti/kg.hpp"
#include "moedti/kg_embed.hpp"
#include "moedti/synthetic.hpp"

namespace moedti {

MetricRow evaluate_model(DtiModel& m, const DtiDataset& ds, DtiModel::Mode mode,
                         int64_t* skipped) {
  std::vector<DtiPair> pairs;
  std::vector<int> labels;
  for (const auto& p : ds.test_pos) {
    pairs.push_back(p);
    labels.push_back(1);
  }
  for (const auto& p : ds.test_neg) {
    pairs.push_back(p);
    labels.push_back(0);
  }
  auto scored = m.score_pairs(pairs, mode);
  std::vector<double> s;
  std::vector<int> y;
  int64_t dropped = 0;
  for (size_t i = 0; i < scored.size(); ++i) {
    if (!scored[i].ok) {
      ++dropped;
      continue;
    }
    s.push_back(scored[i].p);
    y.push_back(labels[i]);
  }
  if (skipped) *skipped = dropped;
  if (s.size() < 2) throw ContractError("fewer than two scoreable evaluation pairs");
  return compute_metrics(s, y);
}

DataPaths DataPaths::from_world_dir(const std::string& dir) {
  WorldFiles f = WorldFiles::in_dir(dir);
  return {f.triples, f.drugs, f.targets, f.smiles, f.sequences, f.pairs_pos, f.pairs_neg};
}

AblationResult run_ablation(const AblationPlan& plan) {
  if (plan.seeds.empty()) throw ContractError("ablation needs at least one seed");
  if (plan.shot_counts.empty()) throw ContractError("ablation needs at least one shot count");
  AblationResult res;

  KnowledgeGraph kg = load_kg(plan.paths.triples, plan.paths.drugs, plan.paths.targets);
  KnowledgeGraph filtered = remove_dti_leakage(kg);
  if (filtered.removed_leakage > 0) {
    res.notes.push_back("removed " + std::to_string(filtered.removed_leakage) +
                        " direct drug-target triple(s) from the KG");
  }
  EntityEmbeddingTable emb;
  if (plan.embeddings_path.empty()) {
    KgTrainConfig kc;
    kc.dim = plan.cfg.integer("kg.dim");
    kc.margin = plan.cfg.real("kg.margin");
    kc.lr = plan.cfg.real("kg.lr");
    kc.epochs = plan.cfg.integer("kg.epochs");
    kc.seed = static_cast<uint64_t>(plan.cfg.integer("kg.seed"));
    emb = pretrain_embeddings(filtered, plan.cfg.str("kg.method"), kc);
  } else {
    emb = load_embeddings(plan.embeddings_path);
    validate_embeddings(emb, filtered);
  }

  struct VariantEval {
    Variant variant;
    const char* name;
    const char* availability;
    DtiModel::Mode mode;
  };
  const VariantEval kTrue[] = {
      {Variant::kTrueIntrinsic, "True-intr", "intrinsic-only", DtiModel::Mode::kIntrinsicOnly},
      {Variant::kTrueExtrinsic, "True-extr", "extrinsic-only", DtiModel::Mode::kExtrinsicOnly},
      {Variant::kTrueAll, "True-all", "both", DtiModel::Mode::kAuto},
  };
  const VariantEval kMoseEvals[] = {
      {Variant::kMose, "Mose-intr", "intrinsic-only", DtiModel::Mode::kIntrinsicOnly},
      {Variant::kMose, "Mose-extr", "extrinsic-only", DtiModel::Mode::kExtrinsicOnly},
      {Variant::kMose, "MoseDTI", "both", DtiModel::Mode::kAuto},
  };

  for (int64_t shots : plan.shot_counts) {
    for (uint64_t seed : plan.seeds) {
      DtiDataset ds = load_dti_dataset(plan.paths.pairs_pos, plan.paths.pairs_neg,
                                       plan.paths.smiles, plan.paths.sequences, shots, seed);
      for (const auto& wmsg : ds.warnings) {
        res.notes.push_back("shots=" + std::to_string(shots) + " seed=" +
                            std::to_string(seed) + ": " + wmsg);
      }
      Trainer trainer(plan.cfg, filtered, emb, ds, seed);

      auto make_row = [&](const VariantEval& ve) {
        EvalRow row;
        row.variant = ve.name;
        row.dataset = plan.dataset_name;
        row.availability = ve.availability;
        row.shots = shots;
        row.seed = seed;
        return row;
      };

      for (const auto& ve : kTrue) {
        EvalRow row = make_row(ve);
        try {
          DtiModel m = trainer.train(ve.variant);
          row.metrics = evaluate_model(m, ds, ve.mode, &row.skipped_pairs);
        } catch (const std::exception& e) {
          row.failed = true;
          row.error = e.what();
        }
        res.rows.push_back(std::move(row));
      }
      // One full training serves all three of its evaluation modes.
      try {
        DtiModel m = trainer.train(Variant::kMose);
        for (const auto& ve : kMoseEvals) {
          EvalRow row = make_row(ve);
          try {
            row.metrics = evaluate_model(m, ds, ve.mode, &row.skipped_pairs);
          } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
          }
          res.rows.push_back(std::move(row));
        }
      } catch (const std::exception& e) {
        for (const auto& ve : kMoseEvals) {
          EvalRow row = make_row(ve);
          row.failed = true;
          row.error = e.what();
          res.rows.push_back(std::move(row));
        }
      }
    }
  }
  return res;
}

namespace {

std::string fixed6(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::ofstream open_csv(const std::string& path, const Config& cfg) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  std::istringstream lines(cfg.resolved_text());
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << '\n';
  return out;
}

std::string csv_safe(std::string s) {
  for (auto& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

void write_metrics_csv(const std::string& path, const AblationResult& result,
                       const Config& cfg) {
  auto out = open_csv(path, cfg);
  out << "variant,dataset,shots,availability,seed,ACC,AUC,AUPR\n";
  for (const auto& r : result.rows) {
    out << r.variant << ',' << r.dataset << ',' << r.shots << ',' << r.availability
        << ',' << r.seed << ',';
    if (r.failed) {
      out << "NA,NA,NA\n";
    } else {
      out << fixed6(r.metrics.acc) << ',' << fixed6(r.metrics.auc) << ','
          << fixed6(r.metrics.aupr) << '\n';
    }
  }
  for (const auto& r : result.rows) {
    if (r.failed) {
      out << "# error: variant=" << r.variant << " shots=" << r.shots
          << " seed=" << r.seed << " message=" << csv_safe(r.error) << '\n';
    } else if (r.skipped_pairs > 0) {
      out << "# note: variant=" << r.variant << " shots=" << r.shots
          << " seed=" << r.seed << " skipped_pairs=" << r.skipped_pairs << '\n';
    }
  }
  for (const auto& n : result.notes) out << "# note: " << csv_safe(n) << '\n';
}

void write_summary_csv(const std::string& path, const AblationResult& result,
                       const Config& cfg) {
  struct Key {
    std::string variant, dataset, availability;
    int64_t shots;
    bool operator<(const Key& o) const {
      return std::tie(variant, dataset, availability, shots) <
             std::tie(o.variant, o.dataset, o.availability, o.shots);
    }
  };
  struct Acc {
    std::vector<double> acc, auc, aupr;
  };
  std::map<Key, Acc> groups;
  std::vector<Key> order;  // first-seen order keeps the grid layout
  for (const auto& r : result.rows) {
    if (r.failed) continue;
    Key k{r.variant, r.dataset, r.availability, r.shots};
    if (!groups.count(k)) order.push_back(k);
    auto& g = groups[k];
    g.acc.push_back(r.metrics.acc);
    if (r.metrics.ranking_defined) {
      g.auc.push_back(r.metrics.auc);
      g.aupr.push_back(r.metrics.aupr);
    }
  }
  auto mean_std = [](const std::vector<double>& v) {
    if (v.empty()) return std::pair<double, double>(std::nan(""), std::nan(""));
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s2 = 0;
    for (double x : v) s2 += (x - m) * (x - m);
    double sd = v.size() > 1 ? std::sqrt(s2 / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair<double, double>(m, sd);
  };
  auto out = open_csv(path, cfg);
  out << "variant,dataset,shots,availability,n_seeds,ACC_mean,ACC_std,AUC_mean,"
         "AUC_std,AUPR_mean,AUPR_std\n";
  for (const auto& k : order) {
    const auto& g = groups[k];
    auto [am, as] = mean_std(g.acc);
    auto [um, us] = mean_std(g.auc);
    auto [pm, ps] = mean_std(g.aupr);
    out << k.variant << ',' << k.dataset << ',' << k.shots << ',' << k.availability
        << ',' << g.acc.size() << ',' << fixed6(am) << ',' << fixed6(as) << ','
        << fixed6(um) << ',' << fixed6(us) << ',' << fixed6(pm) << ',' << fixed6(ps)
        << '\n';
  }
}

void write_epoch_log_csv(const std::string& path, const std::vector<EpochRow>& rows,
                         const Config& cfg) {
  auto out = open_csv(path, cfg);
  out << "stage,epoch,loss\n";
  for (const auto& r : rows) {
    out << r.stage << ',' << r.epoch << ',' << fixed6(r.loss) << '\n';
  }
}

}  // namespace moedti
