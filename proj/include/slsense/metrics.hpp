#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace slsense {

// -log softmax(scores)[label], computed with a stable log-sum-exp.
double nll_loss(const std::vector<double>& scores, int label);

// Mean per-class recall. Classes absent from `labels` are skipped (and
// reported through `present_classes` when non-null).
double balanced_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels,
                         int classes, std::vector<double>* per_class_recall = nullptr,
                         int* present_classes = nullptr);

// One-vs-rest AUC per class, macro-averaged over classes that have both
// positives and negatives. scores[i][c] ranks sample i for class c; ties
// count one half.
double auc_macro(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels,
                 int classes);

std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& predictions,
                                               const std::vector<int>& labels, int classes);

struct EvalReport {
  double balanced_accuracy = 0.0;
  double auc = 0.0;
  std::vector<double> per_class_recall;
  std::vector<std::vector<int>> confusion;
  int samples = 0;
  int classes_present = 0;
  // Filled by randomized protocols.
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  int trials = 0;

  nlohmann::json to_json() const;
};

}  // namespace slsense
