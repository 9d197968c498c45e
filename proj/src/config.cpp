#include "slsense/config.hpp"

#include <fstream>
#include <set>

using nlohmann::json;

namespace slsense {

namespace {

// Wraps one JSON object; every accessed key is marked, and finish()
// rejects whatever was not consumed.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key))
        throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

json preprocess_to_json(const PreprocessConfig& c) {
  return {{"target_frames", c.target_frames},
          {"points_per_frame", c.points_per_frame},
          {"translation_m", c.translation_m},
          {"scale_min", c.scale_min},
          {"scale_max", c.scale_max},
          {"jitter_sigma", c.jitter_sigma},
          {"jitter_clip_m", c.jitter_clip_m},
          {"clip_jitter", c.clip_jitter},
          {"shuffle", c.shuffle}};
}

PreprocessConfig preprocess_from_json(const json& j) {
  PreprocessConfig c;
  StrictObject o(j, "preprocess");
  o.get("target_frames", c.target_frames);
  o.get("points_per_frame", c.points_per_frame);
  o.get("translation_m", c.translation_m);
  o.get("scale_min", c.scale_min);
  o.get("scale_max", c.scale_max);
  o.get("jitter_sigma", c.jitter_sigma);
  o.get("jitter_clip_m", c.jitter_clip_m);
  o.get("clip_jitter", c.clip_jitter);
  o.get("shuffle", c.shuffle);
  o.finish();
  c.validate();
  return c;
}

json graph_to_json(const GraphConfig& c) {
  return {{"k", c.k}, {"frame_scale", c.frame_scale}};
}

GraphConfig graph_from_json(const json& j) {
  GraphConfig c;
  StrictObject o(j, "graph");
  o.get("k", c.k);
  o.get("frame_scale", c.frame_scale);
  o.finish();
  c.validate();
  return c;
}

json encoder_to_json(const EncoderConfig& c) {
  return {{"conv_widths", c.conv_widths}, {"mlp_hidden", c.mlp_hidden}};
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig c;
  StrictObject o(j, "encoder");
  o.get("conv_widths", c.conv_widths);
  o.get("mlp_hidden", c.mlp_hidden);
  o.finish();
  c.validate();
  return c;
}

json fusion_to_json(const FusionConfig& c) {
  return {{"head", head_kind_name(c.head)},
          {"embed_widths", c.embed_widths},
          {"embed_dim", c.embed_dim},
          {"classifier_widths", c.classifier_widths},
          {"attention_heads", c.attention_heads},
          {"attention_head_dim", c.attention_head_dim}};
}

FusionConfig fusion_from_json(const json& j) {
  FusionConfig c;
  StrictObject o(j, "fusion");
  std::string head = head_kind_name(c.head);
  o.get("head", head);
  c.head = head_kind_from_string(head);
  o.get("embed_widths", c.embed_widths);
  o.get("embed_dim", c.embed_dim);
  o.get("classifier_widths", c.classifier_widths);
  o.get("attention_heads", c.attention_heads);
  o.get("attention_head_dim", c.attention_head_dim);
  o.finish();
  c.validate();
  return c;
}

json train_to_json(const TrainConfig& c) {
  return {{"lr_init", c.lr_init},
          {"lr_drop", c.lr_drop},
          {"lr_step_epochs", c.lr_step_epochs},
          {"patience", c.patience},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"augment", c.augment}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  StrictObject o(j, "train");
  o.get("lr_init", c.lr_init);
  o.get("lr_drop", c.lr_drop);
  o.get("lr_step_epochs", c.lr_step_epochs);
  o.get("patience", c.patience);
  o.get("batch_size", c.batch_size);
  o.get("max_epochs", c.max_epochs);
  o.get("beta1", c.beta1);
  o.get("beta2", c.beta2);
  o.get("eps", c.eps);
  o.get("augment", c.augment);
  o.finish();
  c.validate();
  return c;
}

namespace {

GeneratorSpec dataset_from_json(const json& j) {
  GeneratorSpec c;
  StrictObject o(j, "dataset");
  o.get("classes", c.classes);
  o.get("subjects", c.subjects);
  o.get("reps", c.reps);
  o.get("angles", c.angles);
  o.get("points_per_cloud", c.points_per_cloud);
  o.get("torso_fraction", c.torso_fraction);
  o.get("p_shadow", c.p_shadow);
  o.get("noise_scale", c.noise_scale);
  o.get("duration_s", c.duration_s);
  o.get("fps", c.fps);
  o.get("train_subjects", c.train_subjects);
  o.get("val_subjects", c.val_subjects);
  o.get("test_subjects", c.test_subjects);
  o.finish();
  return c;
}

json dataset_to_json(const GeneratorSpec& c) {
  return {{"classes", c.classes},
          {"subjects", c.subjects},
          {"reps", c.reps},
          {"angles", c.angles},
          {"points_per_cloud", c.points_per_cloud},
          {"torso_fraction", c.torso_fraction},
          {"p_shadow", c.p_shadow},
          {"noise_scale", c.noise_scale},
          {"duration_s", c.duration_s},
          {"fps", c.fps},
          {"train_subjects", c.train_subjects},
          {"val_subjects", c.val_subjects},
          {"test_subjects", c.test_subjects}};
}

EvalSection eval_from_json(const json& j) {
  EvalSection c;
  StrictObject o(j, "eval");
  o.get("model", c.model);
  o.get("angles", c.angles);
  o.get("split", c.split);
  o.get("trials", c.trials);
  o.get("dropout_k", c.dropout_k);
  o.get("permute_k", c.permute_k);
  o.finish();
  if (c.trials < 1) throw ConfigError("eval.trials must be >= 1");
  if (c.split != "train" && c.split != "val" && c.split != "test")
    throw ConfigError("eval.split must be train|val|test");
  return c;
}

json eval_to_json(const EvalSection& c) {
  return {{"model", c.model},       {"angles", c.angles},
          {"split", c.split},       {"trials", c.trials},
          {"dropout_k", c.dropout_k}, {"permute_k", c.permute_k}};
}

FederatedSection federated_from_json(const json& j) {
  FederatedSection c;
  StrictObject o(j, "federated");
  o.get("participants", c.participants);
  o.get("rounds", c.rounds);
  o.get("local_epochs", c.local_epochs);
  o.get("weighting", c.weighting);
  o.get("full_batch", c.full_batch);
  o.get("route_via_sim", c.route_via_sim);
  o.get("link_rate_mbps", c.link_rate_mbps);
  o.get("link_latency_us", c.link_latency_us);
  o.get("link_drop_prob", c.link_drop_prob);
  o.finish();
  if (c.participants < 1) throw ConfigError("federated.participants must be >= 1");
  if (c.rounds < 1) throw ConfigError("federated.rounds must be >= 1");
  if (c.weighting != "samples" && c.weighting != "uniform")
    throw ConfigError("federated.weighting must be samples|uniform");
  if (c.link_drop_prob < 0.0 || c.link_drop_prob >= 1.0)
    throw ConfigError("federated.link_drop_prob must be in [0, 1)");
  return c;
}

json federated_to_json(const FederatedSection& c) {
  return {{"participants", c.participants},
          {"rounds", c.rounds},
          {"local_epochs", c.local_epochs},
          {"weighting", c.weighting},
          {"full_batch", c.full_batch},
          {"route_via_sim", c.route_via_sim},
          {"link_rate_mbps", c.link_rate_mbps},
          {"link_latency_us", c.link_latency_us},
          {"link_drop_prob", c.link_drop_prob}};
}

InterferenceSection interference_from_json(const json& j) {
  InterferenceSection c;
  StrictObject o(j, "sim.interference");
  o.get("drop_scale", c.drop_scale);
  o.get("ghost_count", c.ghost_count);
  o.get("range_extent_m", c.range_extent_m);
  o.get("chirp_duration_us", c.chirp_duration_us);
  o.finish();
  if (c.chirp_duration_us <= 0.0) throw ConfigError("sim.interference.chirp_duration_us must be > 0");
  if (c.ghost_count < 0) throw ConfigError("sim.interference.ghost_count must be >= 0");
  return c;
}

json interference_to_json(const InterferenceSection& c) {
  return {{"drop_scale", c.drop_scale},
          {"ghost_count", c.ghost_count},
          {"range_extent_m", c.range_extent_m},
          {"chirp_duration_us", c.chirp_duration_us}};
}

SimSection sim_from_json(const json& j) {
  SimSection c;
  StrictObject o(j, "sim");
  o.get("scenario", c.scenario);
  o.get("blocks", c.blocks);
  o.get("random_sessions", c.random_sessions);
  o.get("random_ues", c.random_ues);
  o.get("horizon_us", c.horizon_us);
  o.get("overlap_fraction", c.overlap_fraction);
  o.get("multi_ue_fraction", c.multi_ue_fraction);
  if (o.has("interference")) c.interference = interference_from_json(o.raw("interference"));
  o.get("corrupt_dataset_in", c.corrupt_dataset_in);
  o.get("corrupt_dataset_out", c.corrupt_dataset_out);
  o.finish();
  if (c.blocks < 1) throw ConfigError("sim.blocks must be >= 1");
  return c;
}

json sim_to_json(const SimSection& c) {
  return {{"scenario", c.scenario},
          {"blocks", c.blocks},
          {"random_sessions", c.random_sessions},
          {"random_ues", c.random_ues},
          {"horizon_us", c.horizon_us},
          {"overlap_fraction", c.overlap_fraction},
          {"multi_ue_fraction", c.multi_ue_fraction},
          {"interference", interference_to_json(c.interference)},
          {"corrupt_dataset_in", c.corrupt_dataset_in},
          {"corrupt_dataset_out", c.corrupt_dataset_out}};
}

}  // namespace

void RunConfig::validate() const {
  if (threads < 0) throw ConfigError("threads must be >= 0");
  preprocess.validate();
  graph.validate();
  encoder.validate();
  fusion.validate();
  train.validate();
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  StrictObject o(j, "config");
  o.get("seed", c.seed);
  o.get("out_dir", c.out_dir);
  o.get("threads", c.threads);
  o.get("dataset_root", c.dataset_root);
  if (o.has("dataset")) c.dataset = dataset_from_json(o.raw("dataset"));
  if (o.has("preprocess")) c.preprocess = preprocess_from_json(o.raw("preprocess"));
  if (o.has("graph")) c.graph = graph_from_json(o.raw("graph"));
  if (o.has("encoder")) c.encoder = encoder_from_json(o.raw("encoder"));
  if (o.has("fusion")) c.fusion = fusion_from_json(o.raw("fusion"));
  if (o.has("train")) c.train = train_from_json(o.raw("train"));
  if (o.has("eval")) c.eval = eval_from_json(o.raw("eval"));
  if (o.has("federated")) c.federated = federated_from_json(o.raw("federated"));
  if (o.has("sim")) c.sim = sim_from_json(o.raw("sim"));
  o.finish();
  c.dataset.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

json run_config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["threads"] = c.threads;
  j["dataset_root"] = c.dataset_root;
  j["dataset"] = dataset_to_json(c.dataset);
  j["preprocess"] = preprocess_to_json(c.preprocess);
  j["graph"] = graph_to_json(c.graph);
  j["encoder"] = encoder_to_json(c.encoder);
  j["fusion"] = fusion_to_json(c.fusion);
  j["train"] = train_to_json(c.train);
  j["eval"] = eval_to_json(c.eval);
  j["federated"] = federated_to_json(c.federated);
  j["sim"] = sim_to_json(c.sim);
  return j;
}

json apply_override(json doc, const std::string& dotted_path, const std::string& value) {
  if (dotted_path.empty()) throw ConfigError("override: empty key path");
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // plain string
  }
  json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_path.find('.', start);
    const std::string key = dotted_path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override: bad key path '" + dotted_path + "'");
    if (dot == std::string::npos) {
      (*cur)[key] = parsed;
      break;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
  return doc;
}

}  // namespace slsense
