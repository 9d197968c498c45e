#include "slsense/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "slsense/config.hpp"

using nlohmann::json;

namespace slsense {

void PreppedSample::build_graphs(const GraphConfig& cfg) {
  graphs.clear();
  for (const auto& [angle, cloud] : sample.clouds)
    graphs.emplace(angle, build_temporal_graph(cloud, cfg.k, cfg.frame_scale));
}

Model Model::create(const ModelConfig& cfg, int classes,
                    const std::vector<std::string>& class_names, std::vector<int> angles,
                    std::uint64_t init_seed) {
  Model m;
  m.cfg_ = cfg;
  m.classes_ = classes;
  m.class_names_ = class_names;
  std::sort(angles.begin(), angles.end());
  m.angles_ = std::move(angles);
  m.encoder_ = Encoder::create(m.store_, cfg.encoder);
  m.head_ = FusionHead::create(m.store_, cfg.fusion, cfg.encoder.representation_dim(), classes,
                               m.angles_);
  Rng rng(mix_seed(init_seed, 0x1217ULL));
  for (const auto& p : m.store_.all()) {
    const int fan_in = static_cast<int>(p->value.rows());
    init_fan_in(*p, fan_in, rng);
  }
  return m;
}

int Model::log_probs(Tape& tape, const PreppedSample& s, const std::vector<int>* subset,
                     const AngleRouting* routing) const {
  std::vector<AngleFeed> feeds;
  for (const auto& [angle, cloud] : s.sample.clouds) {
    if (subset &&
        std::find(subset->begin(), subset->end(), angle) == subset->end())
      continue;
    const auto git = s.graphs.find(angle);
    if (git == s.graphs.end())
      throw RuntimeError("no graph built for angle " + std::to_string(angle));
    AngleFeed f;
    f.angle_id = angle;
    f.head_angle = angle;
    if (routing) {
      const auto rit = routing->find(angle);
      if (rit != routing->end()) f.head_angle = rit->second;
    }
    f.node = encoder_.encode_angle(tape, git->second, cloud);
    feeds.push_back(f);
  }
  if (feeds.empty()) throw DataError("no angles available for prediction");
  return head_.log_probs(tape, std::move(feeds));
}

std::vector<double> Model::predict(const PreppedSample& s, const std::vector<int>* subset,
                                   const AngleRouting* routing) const {
  Tape tape;
  const int lp = log_probs(tape, s, subset, routing);
  const Mat& v = tape.value(lp);
  std::vector<double> probs(classes_);
  for (int c = 0; c < classes_; ++c) probs[c] = std::exp(v(0, c));
  return probs;
}

std::vector<std::pair<int, std::vector<double>>> Model::per_angle_probs(
    const PreppedSample& s) const {
  if (head_.kind() != HeadKind::Tracking)
    throw RuntimeError("per_angle_probs requires the tracking head");
  std::vector<std::pair<int, std::vector<double>>> out;
  for (const auto& [angle, cloud] : s.sample.clouds) {
    Tape tape;
    const auto git = s.graphs.find(angle);
    if (git == s.graphs.end())
      throw RuntimeError("no graph built for angle " + std::to_string(angle));
    AngleFeed f;
    f.angle_id = angle;
    f.head_angle = angle;
    f.node = encoder_.encode_angle(tape, git->second, cloud);
    const int probs = head_.angle_class_probs(tape, f);
    const Mat& v = tape.value(probs);
    std::vector<double> row(classes_);
    for (int c = 0; c < classes_; ++c) row[c] = v(0, c);
    out.emplace_back(angle, std::move(row));
  }
  return out;
}

void Model::save(const std::string& path) const {
  json j;
  j["format_version"] = 1;
  j["kind"] = "model-checkpoint";
  j["classes"] = classes_;
  j["class_names"] = class_names_;
  j["angles"] = angles_;
  j["config"] = {{"preprocess", preprocess_to_json(cfg_.preprocess)},
                 {"graph", graph_to_json(cfg_.graph)},
                 {"encoder", encoder_to_json(cfg_.encoder)},
                 {"fusion", fusion_to_json(cfg_.fusion)}};
  json tensors = json::array();
  for (const auto& p : store_.all()) {
    json t;
    t["name"] = p->name;
    t["rows"] = p->value.rows();
    t["cols"] = p->value.cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) data.push_back(p->value(r, c));
    t["data"] = std::move(data);
    tensors.push_back(std::move(t));
  }
  j["tensors"] = std::move(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump() << '\n';
}

Model Model::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint parse error in " + path + ": " + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1)
      throw DataError("unsupported checkpoint format_version in " + path);
    ModelConfig cfg;
    cfg.preprocess = preprocess_from_json(j.at("config").at("preprocess"));
    cfg.graph = graph_from_json(j.at("config").at("graph"));
    cfg.encoder = encoder_from_json(j.at("config").at("encoder"));
    cfg.fusion = fusion_from_json(j.at("config").at("fusion"));
    Model m = Model::create(cfg, j.at("classes").get<int>(),
                            j.at("class_names").get<std::vector<std::string>>(),
                            j.at("angles").get<std::vector<int>>(), /*init_seed=*/0);
    std::size_t loaded = 0;
    for (const json& t : j.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      Parameter* p = m.store_.find(name);
      if (!p) throw DataError("checkpoint tensor '" + name + "' has no matching parameter");
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      if (rows != p->value.rows() || cols != p->value.cols())
        throw DataError("checkpoint tensor '" + name + "' shape mismatch");
      const auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw DataError("checkpoint tensor '" + name + "' data size mismatch");
      std::size_t i = 0;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) p->value(r, c) = data[i++];
      ++loaded;
    }
    if (loaded != m.store_.size())
      throw DataError("checkpoint is missing tensors (" + std::to_string(loaded) + " of " +
                      std::to_string(m.store_.size()) + ")");
    return m;
  } catch (const json::exception& e) {
    throw DataError("checkpoint field error in " + path + ": " + e.what());
  }
}

}  // namespace slsense
