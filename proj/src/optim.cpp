#include "slsense/optim.hpp"

#include <cmath>

namespace slsense {

void TrainConfig::validate() const {
  if (lr_init <= 0.0) throw ConfigError("train.lr_init must be positive");
  if (lr_drop <= 0.0) throw ConfigError("train.lr_drop must be positive");
  if (lr_step_epochs < 1) throw ConfigError("train.lr_step_epochs must be >= 1");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
    throw ConfigError("train.beta1/beta2 must be in (0, 1)");
  if (eps <= 0.0) throw ConfigError("train.eps must be positive");
}

double lr_at_epoch(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ConfigError("lr_at_epoch: epoch must be >= 0");
  const int steps = epoch / cfg.lr_step_epochs;
  return cfg.lr_init * std::pow(cfg.lr_drop, steps);
}

AdamState AdamState::create(const ParamStore& store) {
  AdamState s;
  for (const auto& p : store.all()) {
    s.m.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    s.v.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
  return s;
}

void adam_step(ParamStore& store, AdamState& state, double lr, const TrainConfig& cfg) {
  if (state.m.size() != store.size())
    throw RuntimeError("adam state does not match parameter store");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = *store.all()[i];
    Mat& m = state.m[i];
    Mat& v = state.v[i];
    if (m.rows() != p.grad.rows() || m.cols() != p.grad.cols())
      throw RuntimeError("adam state shape mismatch for " + p.name);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * p.grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * p.grad.cwiseProduct(p.grad);
    const Mat m_hat = m / bc1;
    const Mat v_hat = v / bc2;
    p.value.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + cfg.eps);
  }
}

}  // namespace slsense
