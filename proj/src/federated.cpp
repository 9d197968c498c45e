#include "slsense/federated.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace slsense {

std::vector<double> federated_round(const FederatedRoundState& state) {
  const std::size_t n = state.participant_params.size();
  if (n == 0) throw DataError("federated_round: no participants");
  if (state.weights.size() != n)
    throw DataError("federated_round: weight count does not match participants");
  const std::size_t width = state.participant_params[0].size();
  double total_weight = 0.0;
  for (double w : state.weights) {
    if (w < 0.0) throw DataError("federated_round: negative weight");
    total_weight += w;
  }
  if (total_weight <= 0.0) throw DataError("federated_round: zero total weight");
  for (const auto& p : state.participant_params)
    if (p.size() != width) throw DataError("federated_round: parameter shape mismatch");

  std::vector<double> global(width, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = state.weights[i] / total_weight;
    const std::vector<double>& p = state.participant_params[i];
    for (std::size_t j = 0; j < width; ++j) global[j] += w * p[j];
  }
  return global;
}

double ChannelModel::transfer_us(std::size_t bytes, Rng& rng) const {
  const double tx_us = latency_us + static_cast<double>(bytes) * 8.0 / (rate_mbps * 1e6) * 1e6;
  int attempts = 1;
  while (drop_prob > 0.0 && rng.uniform() < drop_prob) ++attempts;
  return tx_us * attempts;
}

FederatedResult run_federated(Model& global_model, const LoadedDataset& data,
                              const TrainConfig& train_cfg, const FederatedSection& fed_cfg,
                              std::uint64_t seed, int threads, bool replicate_data) {
  if (data.train.size() == 0) throw DataError("federated: empty training split");
  const int p_count = fed_cfg.participants;

  // Shard the training split round-robin, or replicate it.
  std::vector<std::vector<int>> shard_indices(static_cast<std::size_t>(p_count));
  for (int i = 0; i < static_cast<int>(data.train.size()); ++i) {
    if (replicate_data) {
      for (auto& s : shard_indices) s.push_back(i);
    } else {
      shard_indices[static_cast<std::size_t>(i % p_count)].push_back(i);
    }
  }
  for (int p = 0; p < p_count; ++p) {
    if (shard_indices[static_cast<std::size_t>(p)].empty())
      throw DataError("federated: participant " + std::to_string(p) + " has no local samples");
  }

  std::vector<std::vector<double>> local_params(
      static_cast<std::size_t>(p_count), global_model.store().flatten_values());
  std::vector<AdamState> local_adam;
  for (int p = 0; p < p_count; ++p) local_adam.push_back(AdamState::create(global_model.store()));

  const ChannelModel channel{fed_cfg.link_rate_mbps, fed_cfg.link_latency_us,
                             fed_cfg.link_drop_prob};
  const std::size_t payload_bytes = global_model.store().scalar_count() * sizeof(double);
  Rng channel_rng(mix_seed(seed, 0xc4a1ULL));

  FederatedResult result;
  std::vector<double> grad;
  int local_epoch_counter = 0;

  for (int round = 0; round < fed_cfg.rounds; ++round) {
    double loss_sum = 0.0;
    for (int p = 0; p < p_count; ++p) {
      // Local training from the current global parameters.
      global_model.store().load_flat_values(local_params[static_cast<std::size_t>(p)]);
      const std::vector<int>& shard = shard_indices[static_cast<std::size_t>(p)];
      double local_loss = 0.0;
      if (fed_cfg.full_batch) {
        const double lr = lr_at_epoch(round, train_cfg);
        local_loss = batch_gradient(global_model, data.train, shard, threads, grad);
        global_model.store().zero_grads();
        std::size_t off = 0;
        for (const auto& prm : global_model.store().all()) {
          std::copy(grad.begin() + static_cast<long>(off),
                    grad.begin() + static_cast<long>(off + prm->value.size()), prm->grad.data());
          off += static_cast<std::size_t>(prm->value.size());
        }
        adam_step(global_model.store(), local_adam[static_cast<std::size_t>(p)], lr, train_cfg);
      } else {
        for (int e = 0; e < fed_cfg.local_epochs; ++e) {
          const double lr = lr_at_epoch(local_epoch_counter + e, train_cfg);
          std::vector<int> order = shard;
          Rng order_rng(mix_seed(mix_seed(mix_seed(seed, 0xfe0dULL),
                                          static_cast<std::uint64_t>(round * p_count + p)),
                                 static_cast<std::uint64_t>(e)));
          order_rng.shuffle(order);
          double epoch_loss = 0.0;
          int batches = 0;
          for (std::size_t start = 0; start < order.size();
               start += static_cast<std::size_t>(train_cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch_size));
            std::vector<int> batch(order.begin() + static_cast<long>(start),
                                   order.begin() + static_cast<long>(end));
            epoch_loss += batch_gradient(global_model, data.train, batch, threads, grad);
            global_model.store().zero_grads();
            std::size_t off = 0;
            for (const auto& prm : global_model.store().all()) {
              std::copy(grad.begin() + static_cast<long>(off),
                        grad.begin() + static_cast<long>(off + prm->value.size()),
                        prm->grad.data());
              off += static_cast<std::size_t>(prm->value.size());
            }
            adam_step(global_model.store(), local_adam[static_cast<std::size_t>(p)], lr,
                      train_cfg);
            ++batches;
          }
          local_loss = epoch_loss / std::max(1, batches);
        }
      }
      local_params[static_cast<std::size_t>(p)] = global_model.store().flatten_values();
      loss_sum += local_loss;
    }
    local_epoch_counter += fed_cfg.local_epochs;

    // Weighted averaging at the initiator, then broadcast.
    FederatedRoundState state;
    state.round = round;
    state.participant_params = local_params;
    for (int p = 0; p < p_count; ++p) {
      state.weights.push_back(fed_cfg.weighting == "uniform"
                                  ? 1.0
                                  : static_cast<double>(
                                        shard_indices[static_cast<std::size_t>(p)].size()));
    }
    const std::vector<double> global = federated_round(state);
    for (auto& lp : local_params) lp = global;
    global_model.store().load_flat_values(global);

    FederatedRoundStats stats;
    stats.round = round;
    stats.mean_local_loss = loss_sum / p_count;
    if (fed_cfg.route_via_sim) {
      // Uploads happen in parallel across participants; the round waits
      // for the slowest, then for the broadcast back.
      double up = 0.0, down = 0.0;
      for (int p = 0; p < p_count; ++p) {
        up = std::max(up, channel.transfer_us(payload_bytes, channel_rng));
        down = std::max(down, channel.transfer_us(payload_bytes, channel_rng));
      }
      stats.sim_latency_us = up + down;
    }
    if (data.val.size() > 0) {
      std::vector<int> val_preds;
      stats.val_loss = split_loss(global_model, data.val, threads, &val_preds);
      stats.val_accuracy = balanced_accuracy(val_preds, data.val.labels, data.classes);
    }
    result.history.push_back(stats);
  }
  return result;
}

void write_federated_history_csv(const std::vector<FederatedRoundStats>& history,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "round,mean_local_loss,val_loss,val_balanced_accuracy,sim_latency_us\n";
  for (const FederatedRoundStats& r : history) {
    out << r.round << ',' << format_g9(r.mean_local_loss) << ',' << format_g9(r.val_loss) << ','
        << format_g9(r.val_accuracy) << ',' << format_g9(r.sim_latency_us) << '\n';
  }
}

}  // namespace slsense
