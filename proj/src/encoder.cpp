#include "slsense/encoder.hpp"

namespace slsense {

Mlp Mlp::create(ParamStore& store, const std::string& name, int in_dim,
                const std::vector<int>& widths) {
  if (widths.empty()) throw ConfigError("mlp '" + name + "': no layer widths");
  Mlp mlp;
  int d = in_dim;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::string base = name + ".l" + std::to_string(l);
    mlp.weights.push_back(&store.create(base + ".w", d, widths[l]));
    mlp.biases.push_back(&store.create(base + ".b", 1, widths[l]));
    d = widths[l];
  }
  return mlp;
}

void Mlp::init(Rng& rng) const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const int fan_in = static_cast<int>(weights[l]->value.rows());
    init_fan_in(*weights[l], fan_in, rng);
    init_fan_in(*biases[l], fan_in, rng);
  }
}

int Mlp::forward(Tape& tape, int x, bool relu_last) const {
  int h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const bool with_relu = relu_last || l + 1 < weights.size();
    h = tape.linear(h, *weights[l], *biases[l], with_relu);
  }
  return h;
}

void EncoderConfig::validate() const {
  if (conv_widths.empty()) throw ConfigError("encoder.conv_widths must not be empty");
  for (int w : conv_widths)
    if (w < 1) throw ConfigError("encoder.conv_widths entries must be >= 1");
  if (mlp_hidden < 1) throw ConfigError("encoder.mlp_hidden must be >= 1");
}

Encoder Encoder::create(ParamStore& store, const EncoderConfig& cfg) {
  cfg.validate();
  Encoder enc;
  enc.cfg_ = cfg;
  int in_dim = 3;  // h^0 = (x, y, z): full features minus the frame number
  for (std::size_t l = 0; l < cfg.conv_widths.size(); ++l) {
    enc.layers_.push_back(Mlp::create(store, "encoder.conv" + std::to_string(l),
                                      2 * in_dim, {cfg.mlp_hidden, cfg.conv_widths[l]}));
    in_dim = cfg.conv_widths[l];
  }
  return enc;
}

int Encoder::node_states(Tape& tape, const TemporalGraph& graph,
                         const MotionPointCloud& cloud) const {
  const int n = static_cast<int>(cloud.points.size());
  if (n == 0) throw DataError("encoder: empty cloud");
  if (graph.node_count != n) throw RuntimeError("encoder: graph/cloud node count mismatch");

  Mat coords(n, 3);
  for (int i = 0; i < n; ++i) {
    coords(i, 0) = cloud.points[i].x;
    coords(i, 1) = cloud.points[i].y;
    coords(i, 2) = cloud.points[i].z;
  }

  int h = tape.input(std::move(coords));
  for (const Mlp& layer : layers_) {
    const int msg_in = tape.edge_message_input(h, graph.edge_center, graph.edge_neighbor);
    const int msg = layer.forward(tape, msg_in, /*relu_last=*/true);
    h = tape.segment_max(msg, graph.edge_center, n);
  }
  return h;
}

int Encoder::encode_angle(Tape& tape, const TemporalGraph& graph,
                          const MotionPointCloud& cloud) const {
  return tape.colwise_max(node_states(tape, graph, cloud));
}

}  // namespace slsense
