#pragma once

#include <cstdint>
#include <vector>

#include "slsense/config.hpp"
#include "slsense/train.hpp"

namespace slsense {

struct FederatedRoundState {
  std::vector<std::vector<double>> participant_params;  // flat, shape-identical
  std::vector<double> weights;                          // e.g. local sample counts
  int round = 0;
};

// Element-wise weighted average with weights normalized to sum 1.
std::vector<double> federated_round(const FederatedRoundState& state);

// Latency/loss model for parameter exchange over the simulated sidelink.
struct ChannelModel {
  double rate_mbps = 20.0;
  double latency_us = 200.0;
  double drop_prob = 0.0;

  // Simulated one-way transfer time for `bytes`, including retransmits.
  double transfer_us(std::size_t bytes, Rng& rng) const;
};

struct FederatedRoundStats {
  int round = 0;
  double mean_local_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double sim_latency_us = 0.0;  // 0 when not routed through the channel
};

struct FederatedResult {
  std::vector<FederatedRoundStats> history;
};

// Star-orchestrated rounds: local training on each participant's shard,
// weighted averaging at the initiator, broadcast back. Participants keep
// their own Adam state between rounds. With `full_batch` each round is a
// single full-shard gradient step; with `replicate_data` every
// participant holds the entire training split.
FederatedResult run_federated(Model& global_model, const LoadedDataset& data,
                              const TrainConfig& train_cfg, const FederatedSection& fed_cfg,
                              std::uint64_t seed, int threads, bool replicate_data = false);

void write_federated_history_csv(const std::vector<FederatedRoundStats>& history,
                                 const std::string& path);

}  // namespace slsense
