#pragma once

#include <string>
#include <vector>

#include "moedti/config.hpp"
#include "moedti/dataset.hpp"
#include "moedti/metrics.hpp"
#include "moedti/model.hpp"
#include "moedti/synergy.hpp"

namespace moedti {

struct EvalRow {
  std::string variant, dataset, availability;
  int64_t shots = 0;
  uint64_t seed = 0;
  MetricRow metrics;
  int64_t skipped_pairs = 0;  // eval pairs lacking the forced perspective
  bool failed = false;
  std::string error;
};

// Scores the held-out pool (positives + 1:1 negatives) in the given
// mode. Pairs that cannot be scored in that mode are skipped and
// counted via *skipped.
MetricRow evaluate_model(DtiModel& m, const DtiDataset& ds, DtiModel::Mode mode,
                         int64_t* skipped = nullptr);

struct DataPaths {
  std::string triples, drugs, targets, smiles, sequences, pairs_pos, pairs_neg;
  static DataPaths from_world_dir(const std::string& dir);
};

struct AblationPlan {
  DataPaths paths;
  Config cfg = Config::defaults();
  std::vector<int64_t> shot_counts = {10, 20, 40};
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string dataset_name = "synth";
  std::string embeddings_path;  // empty: pretrain in-process
};

struct AblationResult {
  std::vector<EvalRow> rows;
  std::vector<std::string> notes;
};

// Trains the four schedules per (shots, seed) cell and reports six
// variants: the full model additionally evaluated in its two single-
// expert modes. A variant failure is recorded on its row; the run
// continues.
AblationResult run_ablation(const AblationPlan& plan);

// CSV artifacts. Every file starts with the resolved config echoed as
// comment lines; numbers are printed with fixed %.6f so identical runs
// are byte-identical. Undefined metrics print as NA.
void write_metrics_csv(const std::string& path, const AblationResult& result,
                       const Config& cfg);
void write_summary_csv(const std::string& path, const AblationResult& result,
                       const Config& cfg);
void write_epoch_log_csv(const std::string& path, const std::vector<EpochRow>& rows,
                         const Config& cfg);

}  // namespace moedti
