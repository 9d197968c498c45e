#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "slsense/dataset.hpp"
#include "slsense/model.hpp"
#include "slsense/optim.hpp"

namespace slsense {

struct EvalSection {
  std::string model;          // checkpoint path; empty -> <out_dir>/model.json
  std::vector<int> angles;    // subset for `evaluate`; empty -> all
  std::string split = "test";
  int trials = 10;
  std::vector<int> dropout_k = {0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> permute_k = {0, 2, 4, 6, 8};
};

struct FederatedSection {
  int participants = 4;
  int rounds = 10;
  int local_epochs = 1;
  std::string weighting = "samples";  // or "uniform"
  bool full_batch = false;            // one full-batch step per round
  bool route_via_sim = false;
  double link_rate_mbps = 20.0;
  double link_latency_us = 200.0;
  double link_drop_prob = 0.0;
};

struct InterferenceSection {
  double drop_scale = 1.0;
  int ghost_count = 5;
  double range_extent_m = 3.0;
  double chirp_duration_us = 400.0;
};

struct SimSection {
  std::string scenario;       // scenario JSON path; empty -> randomized
  int blocks = 8;
  int random_sessions = 64;   // randomized scenario size when no file given
  int random_ues = 16;
  std::int64_t horizon_us = 2'000'000;
  double overlap_fraction = 0.1;
  double multi_ue_fraction = 0.3;
  InterferenceSection interference;
  std::string corrupt_dataset_in;   // optional: apply interference to a dataset
  std::string corrupt_dataset_out;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";
  int threads = 1;
  std::string dataset_root;   // where `generate` writes / others read
  GeneratorSpec dataset;      // generator settings (seed comes from `seed`)
  PreprocessConfig preprocess;
  GraphConfig graph;
  EncoderConfig encoder;
  FusionConfig fusion;
  TrainConfig train;
  EvalSection eval;
  FederatedSection federated;
  SimSection sim;

  void validate() const;
};

// Strict parsers: unknown keys anywhere raise ConfigError naming the key.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// `--a.b.c value` overrides; the value is parsed as JSON when possible,
// else taken as a string. Returns the patched document.
nlohmann::json apply_override(nlohmann::json doc, const std::string& dotted_path,
                              const std::string& value);

// Section-level (de)serialization shared with model checkpoints.
nlohmann::json preprocess_to_json(const PreprocessConfig&);
PreprocessConfig preprocess_from_json(const nlohmann::json&);
nlohmann::json graph_to_json(const GraphConfig&);
GraphConfig graph_from_json(const nlohmann::json&);
nlohmann::json encoder_to_json(const EncoderConfig&);
EncoderConfig encoder_from_json(const nlohmann::json&);
nlohmann::json fusion_to_json(const FusionConfig&);
FusionConfig fusion_from_json(const nlohmann::json&);
nlohmann::json train_to_json(const TrainConfig&);
TrainConfig train_from_json(const nlohmann::json&);

}  // namespace slsense
