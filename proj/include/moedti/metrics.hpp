#pragma once

#include <cstdint>
#include <vector>

namespace moedti {

// Classification metrics over scores and binary labels. AUC follows
// the rank-statistic definition (ties count half); AUPR is average
// precision, the step-wise integral of the precision-recall curve with
// tied scores collapsed into one step. When only one class is present
// the ranking metrics are undefined: `ranking_defined` is false and
// auc/aupr are NaN, while accuracy is still computed.
struct MetricRow {
  double acc = 0.0;
  double auc = 0.0;
  double aupr = 0.0;
  bool ranking_defined = false;
  int64_t n = 0;
  int64_t n_pos = 0;
};

MetricRow compute_metrics(const std::vector<double>& scores,
                          const std::vector<int>& labels);

}  // namespace moedti
