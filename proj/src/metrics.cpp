#include "moedti/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "moedti/errors.hpp"

namespace moedti {

MetricRow compute_metrics(const std::vector<double>& scores,
                          const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ContractError("compute_metrics: score/label count mismatch");
  }
  if (scores.empty()) throw ContractError("compute_metrics: empty input");
  for (double s : scores) {
    if (!std::isfinite(s)) throw ContractError("compute_metrics: non-finite score");
  }
  MetricRow row;
  row.n = static_cast<int64_t>(scores.size());
  int64_t correct = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ContractError("compute_metrics: labels must be 0 or 1");
    }
    row.n_pos += labels[i];
    int pred = scores[i] >= 0.5 ? 1 : 0;
    if (pred == labels[i]) ++correct;
  }
  row.acc = static_cast<double>(correct) / static_cast<double>(row.n);

  const int64_t p = row.n_pos, neg = row.n - row.n_pos;
  if (p == 0 || neg == 0) {
    row.ranking_defined = false;
    row.auc = std::numeric_limits<double>::quiet_NaN();
    row.aupr = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  row.ranking_defined = true;

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney AUC via average ranks over tie groups.
  double pos_rank_sum = 0.0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  row.auc = (pos_rank_sum - 0.5 * static_cast<double>(p) * static_cast<double>(p + 1)) /
            (static_cast<double>(p) * static_cast<double>(neg));

  // Average precision, descending scores, one step per distinct score.
  double ap = 0.0;
  int64_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  for (size_t i = order.size(); i > 0;) {
    size_t j = i;
    while (j > 0 && scores[order[j - 1]] == scores[order[i - 1]]) --j;
    for (size_t k = j; k < i; ++k) {
      if (labels[order[k]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
    }
    double recall = static_cast<double>(tp) / static_cast<double>(p);
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  row.aupr = ap;
  return row;
}

}  // namespace moedti
