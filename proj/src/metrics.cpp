#include "slsense/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "slsense/common.hpp"

namespace slsense {

double nll_loss(const std::vector<double>& scores, int label) {
  if (scores.empty()) throw DataError("nll_loss: empty score vector");
  if (label < 0 || label >= static_cast<int>(scores.size()))
    throw DataError("nll_loss: label " + std::to_string(label) + " out of range [0, " +
                    std::to_string(scores.size()) + ")");
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  return std::log(sum) + mx - scores[static_cast<std::size_t>(label)];
}

double balanced_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels,
                         int classes, std::vector<double>* per_class_recall,
                         int* present_classes) {
  if (predictions.size() != labels.size())
    throw RuntimeError("balanced_accuracy: prediction/label size mismatch");
  if (labels.empty()) throw DataError("balanced_accuracy: no samples");
  std::vector<int> correct(classes, 0), total(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= classes) throw DataError("balanced_accuracy: label out of range");
    ++total[y];
    if (predictions[i] == y) ++correct[y];
  }
  if (per_class_recall) per_class_recall->assign(classes, 0.0);
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    if (total[c] == 0) continue;
    const double recall = static_cast<double>(correct[c]) / total[c];
    if (per_class_recall) (*per_class_recall)[c] = recall;
    sum += recall;
    ++present;
  }
  if (present == 0) throw DataError("balanced_accuracy: no class has samples");
  if (present_classes) *present_classes = present;
  return sum / present;
}

double auc_macro(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels,
                 int classes) {
  if (scores.size() != labels.size()) throw RuntimeError("auc_macro: score/label size mismatch");
  const int n = static_cast<int>(labels.size());
  if (n == 0) throw DataError("auc_macro: no samples");

  double sum = 0.0;
  int used = 0;
  std::vector<std::pair<double, int>> ranked(n);  // (score, is_positive)
  for (int c = 0; c < classes; ++c) {
    int positives = 0;
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(scores[i].size()) != classes)
        throw RuntimeError("auc_macro: score row has wrong class count");
      ranked[i] = {scores[i][c], labels[i] == c ? 1 : 0};
      positives += labels[i] == c ? 1 : 0;
    }
    const int negatives = n - positives;
    if (positives == 0 || negatives == 0) continue;

    // Rank-sum with midranks for ties: equivalent to counting
    // P(pos > neg) + 0.5 P(pos == neg) over all pos/neg pairs.
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double pos_rank_sum = 0.0;
    int i = 0;
    while (i < n) {
      int j = i;
      while (j < n && ranked[j].first == ranked[i].first) ++j;
      const double midrank = 0.5 * ((i + 1) + j);  // ranks are 1-based
      for (int t = i; t < j; ++t)
        if (ranked[t].second) pos_rank_sum += midrank;
      i = j;
    }
    const double u = pos_rank_sum - 0.5 * positives * (positives + 1.0);
    sum += u / (static_cast<double>(positives) * negatives);
    ++used;
  }
  if (used == 0) throw DataError("auc_macro: degenerate single-class input");
  return sum / used;
}

std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& predictions,
                                               const std::vector<int>& labels, int classes) {
  std::vector<std::vector<int>> m(classes, std::vector<int>(classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++m[labels[i]][predictions[i]];
  return m;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["balanced_accuracy"] = balanced_accuracy;
  j["auc"] = auc;
  j["per_class_recall"] = per_class_recall;
  j["confusion"] = confusion;
  j["samples"] = samples;
  j["classes_present"] = classes_present;
  if (trials > 0) {
    j["accuracy_mean"] = accuracy_mean;
    j["accuracy_std"] = accuracy_std;
    j["trials"] = trials;
  }
  return j;
}

}  // namespace slsense
