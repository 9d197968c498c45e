#pragma once

#include <cstdint>
#include <vector>

#include "slsense/common.hpp"
#include "slsense/tensor.hpp"

namespace slsense {

struct TrainConfig {
  double lr_init = 0.001;
  double lr_drop = 0.5;      // decay factor applied every lr_step_epochs
  int lr_step_epochs = 80;
  int patience = 100;        // epochs without validation improvement
  int batch_size = 32;
  int max_epochs = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool augment = true;

  void validate() const;
};

// Step decay: lr_init * lr_drop ^ floor(epoch / lr_step_epochs).
double lr_at_epoch(int epoch, const TrainConfig& cfg);

// Adam moment buffers aligned with ParamStore creation order.
struct AdamState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  long step = 0;

  static AdamState create(const ParamStore& store);
};

// Standard bias-corrected Adam update, reading Parameter::grad.
void adam_step(ParamStore& store, AdamState& state, double lr, const TrainConfig& cfg);

}  // namespace slsense
