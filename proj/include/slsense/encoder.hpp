#pragma once

#include <string>
#include <vector>

#include "slsense/geometry.hpp"
#include "slsense/tensor.hpp"
#include "slsense/tgraph.hpp"

namespace slsense {

// Fully connected stack with ReLU between layers (and optionally after
// the last one). Parameters live in the owning ParamStore.
struct Mlp {
  std::vector<Parameter*> weights;
  std::vector<Parameter*> biases;

  static Mlp create(ParamStore& store, const std::string& name, int in_dim,
                    const std::vector<int>& widths);
  void init(Rng& rng) const;
  int forward(Tape& tape, int x, bool relu_last) const;
  int out_dim() const { return static_cast<int>(weights.back()->value.cols()); }
};

struct EncoderConfig {
  // Output width of each edge-convolution layer; the last one is the
  // representation dimension d_R.
  std::vector<int> conv_widths = {64, 128};
  // Hidden width inside each layer's message MLP.
  int mlp_hidden = 64;

  int representation_dim() const { return conv_widths.back(); }
  void validate() const;
};

// Edge-convolution encoder: per layer, messages M(h_i, h_j - h_i) from
// each neighbor j into center i are max-pooled channel-wise; the final
// representation is the channel-wise max over all nodes.
class Encoder {
 public:
  static Encoder create(ParamStore& store, const EncoderConfig& cfg);

  // Node states after all layers (node_count x d_R).
  int node_states(Tape& tape, const TemporalGraph& graph, const MotionPointCloud& cloud) const;
  // R_a, a 1 x d_R row.
  int encode_angle(Tape& tape, const TemporalGraph& graph, const MotionPointCloud& cloud) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  std::vector<Mlp> layers_;
};

}  // namespace slsense
