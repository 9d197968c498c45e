#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slsense/fusion.hpp"
#include "slsense/preprocess.hpp"
#include "slsense/tgraph.hpp"

namespace slsense {

struct GraphConfig {
  int k = 16;
  double frame_scale = 1.0;

  void validate() const {
    if (k < 1) throw ConfigError("graph.k must be >= 1");
    if (frame_scale < 0.0) throw ConfigError("graph.frame_scale must be >= 0");
  }
};

struct ModelConfig {
  PreprocessConfig preprocess;
  GraphConfig graph;
  EncoderConfig encoder;
  FusionConfig fusion;
};

// A preprocessed sample with its per-angle graphs.
struct PreppedSample {
  MultiAngleSample sample;
  std::map<int, TemporalGraph> graphs;

  void build_graphs(const GraphConfig& cfg);
};

// Routing for the angle-permutation protocol: angle -> head that should
// consume it. Angles not present route to their own head.
using AngleRouting = std::map<int, int>;

class Model {
 public:
  Model() = default;
  static Model create(const ModelConfig& cfg, int classes,
                      const std::vector<std::string>& class_names, std::vector<int> angles,
                      std::uint64_t init_seed);

  // Log-probabilities for a prepped sample, optionally restricted to an
  // angle subset and/or rerouted between per-angle heads.
  int log_probs(Tape& tape, const PreppedSample& s,
                const std::vector<int>* subset = nullptr,
                const AngleRouting* routing = nullptr) const;

  // Convenience inference path; returns the C class probabilities.
  std::vector<double> predict(const PreppedSample& s, const std::vector<int>* subset = nullptr,
                              const AngleRouting* routing = nullptr) const;

  // Per-angle true-class probabilities for the tracking head; one row per
  // supplied angle, aligned with the returned angle list.
  std::vector<std::pair<int, std::vector<double>>> per_angle_probs(const PreppedSample& s) const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);

  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }
  const ModelConfig& config() const { return cfg_; }
  const Encoder& encoder() const { return encoder_; }
  const FusionHead& head() const { return head_; }
  int classes() const { return classes_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<int>& angles() const { return angles_; }

 private:
  ModelConfig cfg_;
  int classes_ = 0;
  std::vector<std::string> class_names_;
  std::vector<int> angles_;
  ParamStore store_;
  Encoder encoder_;
  FusionHead head_;
};

}  // namespace slsense
