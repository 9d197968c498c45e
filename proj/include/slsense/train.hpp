#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slsense/dataset.hpp"
#include "slsense/metrics.hpp"
#include "slsense/model.hpp"
#include "slsense/optim.hpp"

namespace slsense {

struct LoadedSplit {
  std::vector<PreppedSample> samples;
  std::vector<int> labels;

  std::size_t size() const { return samples.size(); }
};

struct LoadedDataset {
  LoadedSplit train, val, test;
  int classes = 0;
  std::vector<std::string> class_names;
  std::vector<int> angles;
};

// Loads every indexed sample, bins/resamples it, and builds graphs.
// Preprocessing randomness is a per-sample stream derived from `seed`.
LoadedDataset load_and_preprocess(const DatasetManifest& manifest, const PreprocessConfig& prep,
                                  const GraphConfig& graph, std::uint64_t seed, int threads);

// Tracks the best validation loss; stop after `patience` observations
// without strict improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  // Returns true when this observation improved on the best so far.
  bool observe(double val_loss);
  bool should_stop() const { return wait_ >= patience_; }
  int best_index() const { return best_index_; }
  double best_value() const { return best_value_; }

 private:
  int patience_;
  int wait_ = 0;
  int count_ = 0;
  int best_index_ = -1;
  double best_value_ = 0.0;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

// Mean NLL plus gradient of it over the given samples, accumulated into a
// flat vector (ParamStore order). Deterministic for any thread count.
double batch_gradient(const Model& model, const LoadedSplit& split,
                      const std::vector<int>& indices, int threads, std::vector<double>& grad_out);

// Mean NLL over a split (no augmentation), optionally collecting
// predictions for metrics.
double split_loss(const Model& model, const LoadedSplit& split, int threads,
                  std::vector<int>* predictions = nullptr);

// Full training loop: shuffled mini-batches with on-the-fly augmentation,
// Adam with step decay, early stopping on validation loss; the model is
// left holding the best-validation parameters.
TrainResult train_model(Model& model, const LoadedDataset& data, const TrainConfig& cfg,
                        std::uint64_t seed, int threads,
                        const std::function<void(const EpochStats&)>& on_epoch = nullptr);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

// Deterministic work distribution: slot i is always computed from task i.
void parallel_for_indexed(int n, int threads, const std::function<void(int)>& fn);

}  // namespace slsense
