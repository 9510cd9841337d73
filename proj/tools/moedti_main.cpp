#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "moedti/ablation.hpp"
#include "moedti/config.hpp"
#include "moedti/dataset.hpp"
#include "moedti/gradcheck.hpp"
#include "moedti/kg.hpp"
#include "moedti/kg_embed.hpp"
#include "moedti/model.hpp"
#include "moedti/smiles.hpp"
#include "moedti/synergy.hpp"
#include "moedti/synthetic.hpp"

namespace {

using namespace moedti;

struct ConfigOpts {
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "flat key = value config file");
    cmd->add_option("--set", sets, "override a config key, e.g. --set kg.dim=16")
        ->take_all();
  }
  Config build() const {
    Config cfg = Config::defaults();
    if (!file.empty()) cfg.apply_file(file);
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
  }
};

struct PathOpts {
  std::string data_dir;
  DataPaths paths;

  void attach(CLI::App* cmd, bool need_pairs = true) {
    cmd->add_option("--data-dir", data_dir,
                    "directory in the gen-synth layout (individual flags override)");
    cmd->add_option("--triples", paths.triples, "KG triples TSV");
    cmd->add_option("--drugs", paths.drugs, "drug id list");
    cmd->add_option("--targets", paths.targets, "target id list");
    cmd->add_option("--smiles", paths.smiles, "drug SMILES TSV");
    cmd->add_option("--sequences", paths.sequences, "target sequence TSV or FASTA");
    if (need_pairs) {
      cmd->add_option("--pairs-pos", paths.pairs_pos, "positive pair TSV");
      cmd->add_option("--pairs-neg", paths.pairs_neg, "negative pair TSV (optional)");
    }
  }
  DataPaths resolve() const {
    DataPaths p = paths;
    if (!data_dir.empty()) {
      DataPaths d = DataPaths::from_world_dir(data_dir);
      if (p.triples.empty()) p.triples = d.triples;
      if (p.drugs.empty()) p.drugs = d.drugs;
      if (p.targets.empty()) p.targets = d.targets;
      if (p.smiles.empty()) p.smiles = d.smiles;
      if (p.sequences.empty()) p.sequences = d.sequences;
      if (p.pairs_pos.empty()) p.pairs_pos = d.pairs_pos;
      if (p.pairs_neg.empty()) p.pairs_neg = d.pairs_neg;
    }
    return p;
  }
};

DtiModel::Mode mode_from_string(const std::string& s) {
  if (s == "auto") return DtiModel::Mode::kAuto;
  if (s == "intrinsic") return DtiModel::Mode::kIntrinsicOnly;
  if (s == "extrinsic") return DtiModel::Mode::kExtrinsicOnly;
  throw ConfigError("unknown mode (want auto|intrinsic|extrinsic): " + s);
}

KgTrainConfig kg_train_config(const Config& cfg) {
  KgTrainConfig kc;
  kc.dim = cfg.integer("kg.dim");
  kc.margin = cfg.real("kg.margin");
  kc.lr = cfg.real("kg.lr");
  kc.epochs = cfg.integer("kg.epochs");
  kc.seed = static_cast<uint64_t>(cfg.integer("kg.seed"));
  return kc;
}

EntityEmbeddingTable obtain_embeddings(const Config& cfg, const KnowledgeGraph& kg,
                                       const std::string& embeddings_path) {
  if (embeddings_path.empty()) {
    return pretrain_embeddings(kg, cfg.str("kg.method"), kg_train_config(cfg));
  }
  auto emb = load_embeddings(embeddings_path);
  validate_embeddings(emb, kg);
  return emb;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_pretrain_kg(const ConfigOpts& copt, const PathOpts& popt, const std::string& out) {
  Config cfg = copt.build();
  DataPaths paths = popt.resolve();
  KnowledgeGraph kg = load_kg(paths.triples, paths.drugs, paths.targets);
  KnowledgeGraph filtered = remove_dti_leakage(kg);
  std::cout << "loaded " << kg.num_triples() << " triples; removed "
            << filtered.removed_leakage << " drug-target leakage triple(s)\n";
  auto emb = pretrain_embeddings(filtered, cfg.str("kg.method"), kg_train_config(cfg));
  save_embeddings(emb, out);
  std::cout << "method=" << emb.method << " dim=" << emb.dim
            << " entities=" << emb.entity_ids.size() << " final_loss=" << emb.final_loss
            << "\nwrote " << out << "\n";
  return 0;
}

int cmd_gen_synth(const ConfigOpts& copt, const std::string& out_dir) {
  Config cfg = copt.build();
  WorldSpec spec = WorldSpec::from_config(cfg);
  SyntheticWorld w = generate_synthetic_world(spec);
  write_world(w, out_dir);
  std::ofstream meta(std::filesystem::path(out_dir) / "config.txt", std::ios::binary);
  meta << cfg.resolved_text();
  std::cout << "drugs=" << spec.drugs << " targets=" << spec.targets
            << " entities=" << spec.entities << " triples=" << w.triples.size()
            << " positive_rate=" << w.positive_rate() << "\nwrote " << out_dir << "\n";
  return 0;
}

int cmd_train(const ConfigOpts& copt, const PathOpts& popt, int64_t shots, uint64_t seed,
              const std::string& variant_str, const std::string& embeddings_path,
              const std::string& out, const std::string& log_path) {
  Config cfg = copt.build();
  DataPaths paths = popt.resolve();
  Variant variant = variant_from_string(variant_str);

  KnowledgeGraph kg = load_kg(paths.triples, paths.drugs, paths.targets);
  KnowledgeGraph filtered = remove_dti_leakage(kg);
  auto emb = obtain_embeddings(cfg, filtered, embeddings_path);
  DtiDataset ds = load_dti_dataset(paths.pairs_pos, paths.pairs_neg, paths.smiles,
                                   paths.sequences, shots, seed);
  print_warnings(ds.warnings);

  Trainer trainer(cfg, filtered, emb, ds, seed);
  DtiModel model = trainer.train(variant);
  print_warnings(trainer.warnings());
  for (const auto& s : trainer.stage_log()) {
    std::cout << "stage " << s.stage << ": candidates=" << s.candidates
              << " pseudo_pos=" << s.pseudo_pos << " pseudo_neg=" << s.pseudo_neg
              << "\n";
  }
  if (!trainer.epoch_log().empty()) {
    const auto& first = trainer.epoch_log().front();
    const auto& last = trainer.epoch_log().back();
    std::cout << "loss " << first.stage << "[0]=" << first.loss << " -> " << last.stage
              << "[" << last.epoch << "]=" << last.loss << "\n";
  }
  if (!log_path.empty()) write_epoch_log_csv(log_path, trainer.epoch_log(), cfg);
  model.save(out, cfg);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& pairs_path,
                const std::string& smiles_path, const std::string& sequences_path,
                const std::string& mode_str, const std::string& out) {
  DtiModel model = DtiModel::load(model_path);
  if (!smiles_path.empty()) {
    for (const auto& [id, s] : read_two_column_tsv(smiles_path, "SMILES")) {
      try {
        model.register_drug(id, s);
      } catch (const ParseError& e) {
        std::cerr << "warning: drug " << id << ": " << e.what() << "\n";
      }
    }
  }
  if (!sequences_path.empty()) {
    for (const auto& [id, s] : read_sequences(sequences_path)) model.register_target(id, s);
  }
  auto pairs = read_pair_tsv(pairs_path);
  auto scores = model.score_pairs(pairs, mode_from_string(mode_str));
  std::ofstream fout;
  std::ostream* os = &std::cout;
  if (!out.empty()) {
    fout.open(out, std::ios::binary);
    if (!fout) throw IoError("cannot write " + out);
    os = &fout;
  }
  *os << "drug\ttarget\tp\tw\tp_extrinsic\tp_intrinsic\tstatus\n";
  char buf[64];
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& s = scores[i];
    *os << pairs[i].drug << '\t' << pairs[i].target;
    if (s.ok) {
      std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f", s.p, s.w);
      *os << buf;
      if (s.has_extrinsic) {
        std::snprintf(buf, sizeof(buf), "\t%.6f", s.p_ex);
        *os << buf;
      } else {
        *os << "\tNA";
      }
      if (s.has_intrinsic) {
        std::snprintf(buf, sizeof(buf), "\t%.6f", s.p_in);
        *os << buf;
      } else {
        *os << "\tNA";
      }
      *os << "\tok\n";
    } else {
      *os << "\tNA\tNA\tNA\tNA\tno-perspective\n";
    }
  }
  if (!out.empty()) std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, const PathOpts& popt, int64_t shots,
                 uint64_t seed, const std::string& mode_str, const std::string& label,
                 const std::string& out) {
  DtiModel model = DtiModel::load(model_path);
  Config cfg = DtiModel::load_config(model_path);
  DataPaths paths = popt.resolve();
  DtiDataset ds = load_dti_dataset(paths.pairs_pos, paths.pairs_neg, paths.smiles,
                                   paths.sequences, shots, seed);
  print_warnings(ds.warnings);
  model.register_dataset_entities(ds);
  EvalRow row;
  row.variant = label;
  row.dataset = "eval";
  row.shots = shots;
  row.seed = seed;
  row.availability = mode_str;
  row.metrics = evaluate_model(model, ds, mode_from_string(mode_str), &row.skipped_pairs);
  std::printf("ACC=%.6f AUC=%.6f AUPR=%.6f n=%lld n_pos=%lld skipped=%lld\n",
              row.metrics.acc, row.metrics.auc, row.metrics.aupr,
              static_cast<long long>(row.metrics.n),
              static_cast<long long>(row.metrics.n_pos),
              static_cast<long long>(row.skipped_pairs));
  if (!out.empty()) {
    AblationResult one;
    one.rows.push_back(row);
    write_metrics_csv(out, one, cfg);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_ablate(const ConfigOpts& copt, const PathOpts& popt,
               std::vector<int64_t> shots, std::vector<uint64_t> seeds,
               const std::string& dataset_name, const std::string& embeddings_path,
               const std::string& out_dir) {
  AblationPlan plan;
  plan.cfg = copt.build();
  plan.paths = popt.resolve();
  plan.shot_counts = std::move(shots);
  plan.seeds = std::move(seeds);
  plan.dataset_name = dataset_name;
  plan.embeddings_path = embeddings_path;
  AblationResult result = run_ablation(plan);
  std::filesystem::create_directories(out_dir);
  auto metrics_path = (std::filesystem::path(out_dir) / "metrics.csv").string();
  auto summary_path = (std::filesystem::path(out_dir) / "summary.csv").string();
  write_metrics_csv(metrics_path, result, plan.cfg);
  write_summary_csv(summary_path, result, plan.cfg);
  int failures = 0;
  for (const auto& r : result.rows) failures += r.failed ? 1 : 0;
  std::cout << "rows=" << result.rows.size() << " failed=" << failures << "\nwrote "
            << metrics_path << "\nwrote " << summary_path << "\n";
  return failures == 0 ? 0 : 1;
}

int cmd_parse_smiles(const std::string& smiles, bool features) {
  try {
    MolecularGraph g = parse_smiles(smiles);
    std::cout << "atoms=" << g.atoms.size() << " bonds=" << g.bonds.size() << "\n";
    for (size_t i = 0; i < g.atoms.size(); ++i) {
      const auto& a = g.atoms[i];
      std::cout << i << ": " << a.element << " degree=" << a.degree
                << " charge=" << a.formal_charge << (a.aromatic ? " aromatic" : "")
                << (a.explicit_h ? " H" + std::to_string(a.explicit_h) : "") << "\n";
      if (features) {
        auto f = featurize_atom(g, static_cast<int>(i));
        std::cout << "  [";
        for (size_t k = 0; k < f.size(); ++k) std::cout << (k ? "," : "") << f[k];
        std::cout << "]\n";
      }
    }
    for (const auto& b : g.bonds) {
      std::cout << b.a << "-" << b.b << " order=" << static_cast<int>(b.order) << "\n";
    }
    print_warnings(g.warnings);
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "parse error: kind=" << e.kind() << " offset=" << e.offset() << ": "
              << e.what() << "\n";
    return 2;
  }
}

int cmd_kg_stats(const PathOpts& popt) {
  DataPaths paths = popt.resolve();
  KnowledgeGraph kg = load_kg(paths.triples, paths.drugs, paths.targets);
  std::cout << "entities=" << kg.num_entities() << " relations=" << kg.num_relations()
            << " triples=" << kg.num_triples() << "\n"
            << "drugs=" << kg.drugs.size() << " targets=" << kg.targets.size() << "\n"
            << "duplicate_triples_dropped=" << kg.duplicates_dropped
            << " list_only_entities=" << kg.entities_added_from_lists << "\n";
  KnowledgeGraph filtered = remove_dti_leakage(kg);
  std::cout << "leakage_triples=" << filtered.removed_leakage << " (removed by filter)\n";
  return 0;
}

int cmd_gradcheck(int configs, uint64_t seed, double tolerance) {
  auto reports = run_gradient_checks(configs, seed, tolerance);
  bool ok = true;
  for (const auto& r : reports) {
    std::printf("%-22s configs=%-3d coords=%-5lld max_rel_err=%.3e  %s (%.2fs)\n",
                r.module.c_str(), r.configs, static_cast<long long>(r.coords),
                r.max_rel_err, r.pass ? "ok" : "FAIL", r.seconds);
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixture-of-experts drug-target interaction toolkit"};
  app.require_subcommand(1);

  // pretrain-kg
  auto* pre = app.add_subcommand("pretrain-kg", "train KG embeddings on a leakage-filtered graph");
  ConfigOpts pre_cfg;
  PathOpts pre_paths;
  std::string pre_out = "embeddings.bin";
  pre_cfg.attach(pre);
  pre_paths.attach(pre, /*need_pairs=*/false);
  pre->add_option("--out", pre_out, "output embedding file");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate the synthetic benchmark world");
  ConfigOpts gen_cfg;
  std::string gen_out = "synth";
  gen_cfg.attach(gen);
  gen->add_option("--out-dir", gen_out, "output directory");

  // train
  auto* tr = app.add_subcommand("train", "run a training schedule and save the model bundle");
  ConfigOpts tr_cfg;
  PathOpts tr_paths;
  int64_t tr_shots = 10;
  uint64_t tr_seed = 1;
  std::string tr_variant = "MoseDTI", tr_emb, tr_out = "model.bin", tr_log;
  tr_cfg.attach(tr);
  tr_paths.attach(tr);
  tr->add_option("--shots", tr_shots, "positive training pairs");
  tr->add_option("--seed", tr_seed, "split/training seed");
  tr->add_option("--variant", tr_variant, "MoseDTI|True-all|True-intr|True-extr");
  tr->add_option("--embeddings", tr_emb, "pretrained embedding file (else pretrain now)");
  tr->add_option("--out", tr_out, "output model bundle");
  tr->add_option("--log", tr_log, "training-log CSV");

  // predict
  auto* pr = app.add_subcommand("predict", "score drug-target pairs with a saved model");
  std::string pr_model, pr_pairs, pr_smiles, pr_seqs, pr_mode = "auto", pr_out;
  pr->add_option("--model", pr_model, "model bundle")->required();
  pr->add_option("--pairs", pr_pairs, "pair TSV to score")->required();
  pr->add_option("--smiles", pr_smiles, "drug SMILES TSV");
  pr->add_option("--sequences", pr_seqs, "target sequence TSV or FASTA");
  pr->add_option("--mode", pr_mode, "auto|intrinsic|extrinsic");
  pr->add_option("--out", pr_out, "output TSV (default stdout)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "evaluate a saved model on a held-out split");
  PathOpts ev_paths;
  std::string ev_model, ev_mode = "auto", ev_label = "model", ev_out;
  int64_t ev_shots = 10;
  uint64_t ev_seed = 1;
  ev_paths.attach(ev);
  ev->add_option("--model", ev_model, "model bundle")->required();
  ev->add_option("--shots", ev_shots, "shots used for the split");
  ev->add_option("--seed", ev_seed, "split seed");
  ev->add_option("--mode", ev_mode, "auto|intrinsic|extrinsic");
  ev->add_option("--label", ev_label, "variant label for the CSV row");
  ev->add_option("--out", ev_out, "metrics CSV");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and evaluate all variants over a grid");
  ConfigOpts ab_cfg;
  PathOpts ab_paths;
  std::vector<int64_t> ab_shots = {10, 20, 40};
  std::vector<uint64_t> ab_seeds = {1, 2, 3};
  std::string ab_dataset = "synth", ab_emb, ab_out = "ablation";
  ab_cfg.attach(ab);
  ab_paths.attach(ab);
  ab->add_option("--shots", ab_shots, "shot counts")->delimiter(',');
  ab->add_option("--seeds", ab_seeds, "seeds")->delimiter(',');
  ab->add_option("--dataset-name", ab_dataset, "dataset column value");
  ab->add_option("--embeddings", ab_emb, "pretrained embedding file (else pretrain now)");
  ab->add_option("--out-dir", ab_out, "output directory for metrics.csv and summary.csv");

  // parse-smiles
  auto* ps = app.add_subcommand("parse-smiles", "parse one SMILES string and dump the graph");
  std::string ps_smiles;
  bool ps_features = false;
  ps->add_option("smiles", ps_smiles, "SMILES string")->required();
  ps->add_flag("--features", ps_features, "print atom feature vectors");

  // kg stats
  auto* kg = app.add_subcommand("kg", "knowledge-graph utilities");
  kg->require_subcommand(1);
  auto* kgs = kg->add_subcommand("stats", "vocabulary, triple, and leakage counts");
  PathOpts kg_paths;
  kg_paths.attach(kgs, /*need_pairs=*/false);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  int gc_configs = 20;
  uint64_t gc_seed = 7;
  double gc_tol = 1e-4;
  gc->add_option("--configs", gc_configs, "configurations per module");
  gc->add_option("--seed", gc_seed, "base seed");
  gc->add_option("--tolerance", gc_tol, "max relative error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) return cmd_pretrain_kg(pre_cfg, pre_paths, pre_out);
    if (gen->parsed()) return cmd_gen_synth(gen_cfg, gen_out);
    if (tr->parsed()) {
      return cmd_train(tr_cfg, tr_paths, tr_shots, tr_seed, tr_variant, tr_emb, tr_out,
                       tr_log);
    }
    if (pr->parsed()) return cmd_predict(pr_model, pr_pairs, pr_smiles, pr_seqs, pr_mode, pr_out);
    if (ev->parsed()) {
      return cmd_evaluate(ev_model, ev_paths, ev_shots, ev_seed, ev_mode, ev_label, ev_out);
    }
    if (ab->parsed()) {
      return cmd_ablate(ab_cfg, ab_paths, ab_shots, ab_seeds, ab_dataset, ab_emb, ab_out);
    }
    if (ps->parsed()) return cmd_parse_smiles(ps_smiles, ps_features);
    if (kg->parsed()) return cmd_kg_stats(kg_paths);
    if (gc->parsed()) return cmd_gradcheck(gc_configs, gc_seed, gc_tol);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
