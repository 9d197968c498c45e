#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slsense/metrics.hpp"
#include "slsense/train.hpp"

namespace slsense {

// Standard evaluation restricted to an angle subset (empty = all angles).
EvalReport eval_angle_subset(const Model& model, const LoadedSplit& split, int classes,
                             const std::vector<int>& angle_subset, int threads);

struct TrialStats {
  int k = 0;
  std::vector<double> trial_accuracy;
  std::vector<double> trial_auc;
  double mean = 0.0;
  double stddev = 0.0;  // population std over trials
};

// Removes k uniformly random angles per batch of `batch_size` samples and
// evaluates; repeated `trials` times from `seed`.
TrialStats run_angle_dropout(const Model& model, const LoadedSplit& split, int classes, int k,
                             int trials, std::uint64_t seed, int batch_size, int threads);

// Tracking head only. Per batch, picks k angles and reroutes each one's
// data to another selected angle's classifier via a random derangement.
// k = 0 is the unpermuted baseline; k = 1 is rejected.
TrialStats run_angle_permutation(const Model& model, const LoadedSplit& split, int classes, int k,
                                 int trials, std::uint64_t seed, int batch_size, int threads);

struct AngleImportance {
  std::vector<int> angles;
  std::vector<std::string> gesture_names;
  // importance[g][a]: mean true-class probability of angle a's classifier
  // on gesture g, normalized to sum 1 over angles.
  std::vector<std::vector<double>> importance;
};

AngleImportance angle_importance(const Model& model, const LoadedSplit& split, int classes,
                                 const std::vector<std::string>& class_names, int threads);

void write_importance_csv(const AngleImportance& imp, const std::string& path);

// Unified table for the randomized protocols:
// protocol,setting,trial,balanced_accuracy,auc
struct ProtocolRow {
  std::string protocol;
  std::string setting;
  int trial = 0;
  double balanced_accuracy = 0.0;
  double auc = 0.0;
};

void write_protocol_csv(const std::vector<ProtocolRow>& rows, const std::string& path);

}  // namespace slsense
