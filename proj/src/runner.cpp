#include "slsense/runner.hpp"

#include <filesystem>
#include <fstream>

#include "slsense/federated.hpp"
#include "slsense/protocols.hpp"
#include "slsense/sidelink.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace slsense {

const char* const kVersion = "0.1.0";

namespace {

std::string dataset_root(const RunConfig& cfg) {
  if (!cfg.dataset_root.empty()) return cfg.dataset_root;
  return (fs::path(cfg.out_dir) / "dataset").string();
}

std::string model_path(const RunConfig& cfg) {
  if (!cfg.eval.model.empty()) return cfg.eval.model;
  return (fs::path(cfg.out_dir) / "model.json").string();
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

void write_run_manifest(const std::string& command, const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const json resolved = run_config_to_json(cfg);
  write_json(resolved, (fs::path(cfg.out_dir) / "resolved_config.json").string());
  json manifest;
  manifest["command"] = command;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = fnv1a(resolved.dump());
  manifest["version"] = kVersion;
  write_json(manifest, (fs::path(cfg.out_dir) / "run_manifest.json").string());
}

LoadedDataset load_dataset(const RunConfig& cfg) {
  const std::string manifest_path = (fs::path(dataset_root(cfg)) / "manifest.json").string();
  if (!fs::exists(manifest_path))
    throw DataError("missing dataset manifest: " + manifest_path +
                    " (run `generate` first or point dataset_root at a dataset)");
  const DatasetManifest manifest = load_manifest(manifest_path);
  return load_and_preprocess(manifest, cfg.preprocess, cfg.graph, cfg.seed, cfg.threads);
}

const LoadedSplit& pick_split(const LoadedDataset& data, const std::string& name) {
  if (name == "train") return data.train;
  if (name == "val") return data.val;
  return data.test;
}

Model make_model(const RunConfig& cfg, const LoadedDataset& data) {
  ModelConfig mc{cfg.preprocess, cfg.graph, cfg.encoder, cfg.fusion};
  return Model::create(mc, data.classes, data.class_names, data.angles, cfg.seed);
}

json cmd_generate(const RunConfig& cfg) {
  GeneratorSpec spec = cfg.dataset;
  spec.seed = cfg.seed;
  const std::string root = dataset_root(cfg);
  const DatasetManifest manifest = generate_synthetic_dataset(spec, root);
  json out;
  out["dataset_root"] = root;
  out["samples"] = manifest.samples.size();
  out["classes"] = manifest.class_names;
  out["angles"] = manifest.angle_ids;
  // Dataset content hash over every sample file, for reproducibility checks.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const SampleIndexEntry& e : manifest.samples) {
    for (int angle : e.angles) {
      const fs::path p = fs::path(root) / e.dir / ("angle_" + std::to_string(angle) + ".csv");
      std::ifstream in(p, std::ios::binary);
      std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      h ^= fnv1a(content);
      h *= 0x100000001b3ULL;
    }
  }
  out["dataset_hash"] = h;
  return out;
}

json cmd_preprocess(const RunConfig& cfg) {
  const std::string manifest_path = (fs::path(dataset_root(cfg)) / "manifest.json").string();
  if (!fs::exists(manifest_path)) throw DataError("missing dataset manifest: " + manifest_path);
  DatasetManifest manifest = load_manifest(manifest_path);
  manifest.validate();
  const std::string out_root = (fs::path(cfg.out_dir) / "preprocessed").string();
  int clouds = 0;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const SampleIndexEntry& e = manifest.samples[i];
    MultiAngleSample raw = load_sample(manifest, e);
    Rng rng(mix_seed(mix_seed(cfg.seed, 0x7072ULL), static_cast<std::uint64_t>(i)));
    MultiAngleSample prepped = preprocess_sample(raw, cfg.preprocess, rng);
    const fs::path dir = fs::path(out_root) / e.dir;
    fs::create_directories(dir);
    for (const auto& [angle, cloud] : prepped.clouds) {
      save_cloud_csv(cloud, (dir / ("angle_" + std::to_string(angle) + ".csv")).string());
      ++clouds;
    }
  }
  DatasetManifest out_manifest = manifest;
  out_manifest.root = out_root;
  save_manifest(out_manifest, (fs::path(out_root) / "manifest.json").string());
  json out;
  out["preprocessed_root"] = out_root;
  out["clouds"] = clouds;
  out["target_frames"] = cfg.preprocess.target_frames;
  out["points_per_frame"] = cfg.preprocess.points_per_frame;
  return out;
}

json cmd_train(const RunConfig& cfg) {
  const LoadedDataset data = load_dataset(cfg);
  Model model = make_model(cfg, data);
  const TrainResult result = train_model(model, data, cfg.train, cfg.seed, cfg.threads);
  const std::string checkpoint = (fs::path(cfg.out_dir) / "model.json").string();
  model.save(checkpoint);
  write_history_csv(result.history, (fs::path(cfg.out_dir) / "history.csv").string());

  json out;
  out["model"] = checkpoint;
  out["head"] = head_kind_name(cfg.fusion.head);
  out["epochs_run"] = result.history.size();
  out["best_epoch"] = result.best_epoch;
  out["best_val_loss"] = result.best_val_loss;
  if (data.test.size() > 0) {
    const EvalReport report = eval_angle_subset(model, data.test, data.classes, {}, cfg.threads);
    out["test"] = report.to_json();
  }
  return out;
}

json cmd_evaluate(const RunConfig& cfg) {
  Model model = Model::load(model_path(cfg));
  const LoadedDataset data = load_dataset(cfg);
  const LoadedSplit& split = pick_split(data, cfg.eval.split);
  if (split.size() == 0) throw DataError("evaluate: split '" + cfg.eval.split + "' is empty");
  const EvalReport report =
      eval_angle_subset(model, split, data.classes, cfg.eval.angles, cfg.threads);
  json out = report.to_json();
  out["split"] = cfg.eval.split;
  out["angles"] = cfg.eval.angles.empty() ? json(data.angles) : json(cfg.eval.angles);
  write_json(out, (fs::path(cfg.out_dir) / "evaluate.json").string());
  return out;
}

json cmd_dropout(const RunConfig& cfg) {
  Model model = Model::load(model_path(cfg));
  const LoadedDataset data = load_dataset(cfg);
  const LoadedSplit& split = pick_split(data, cfg.eval.split);
  std::vector<ProtocolRow> rows;
  json out;
  out["protocol"] = "dropout";
  json per_k = json::array();
  for (int k : cfg.eval.dropout_k) {
    const TrialStats stats = run_angle_dropout(model, split, data.classes, k, cfg.eval.trials,
                                               mix_seed(cfg.seed, 0xd0ULL), cfg.train.batch_size,
                                               cfg.threads);
    for (std::size_t t = 0; t < stats.trial_accuracy.size(); ++t)
      rows.push_back({"dropout", "k=" + std::to_string(k), static_cast<int>(t),
                      stats.trial_accuracy[t], stats.trial_auc[t]});
    per_k.push_back({{"k", k}, {"mean", stats.mean}, {"std", stats.stddev}});
  }
  out["settings"] = per_k;
  write_protocol_csv(rows, (fs::path(cfg.out_dir) / "dropout.csv").string());
  write_json(out, (fs::path(cfg.out_dir) / "dropout.json").string());
  return out;
}

json cmd_pairs(const RunConfig& cfg) {
  Model model = Model::load(model_path(cfg));
  const LoadedDataset data = load_dataset(cfg);
  const LoadedSplit& split = pick_split(data, cfg.eval.split);
  const std::vector<std::pair<int, int>> pairs = {{0, 45}, {90, 135}, {180, 225}, {270, 315}};
  std::vector<ProtocolRow> rows;
  json out;
  out["protocol"] = "pairs";
  json reports = json::array();
  for (const auto& [a, b] : pairs) {
    const EvalReport report =
        eval_angle_subset(model, split, data.classes, {a, b}, cfg.threads);
    const std::string setting = std::to_string(a) + "+" + std::to_string(b);
    rows.push_back({"pairs", setting, 0, report.balanced_accuracy, report.auc});
    json r = report.to_json();
    r["angles"] = {a, b};
    reports.push_back(std::move(r));
  }
  out["reports"] = reports;
  write_protocol_csv(rows, (fs::path(cfg.out_dir) / "pairs.csv").string());
  write_json(out, (fs::path(cfg.out_dir) / "pairs.json").string());
  return out;
}

json cmd_permute(const RunConfig& cfg) {
  Model model = Model::load(model_path(cfg));
  const LoadedDataset data = load_dataset(cfg);
  const LoadedSplit& split = pick_split(data, cfg.eval.split);
  std::vector<ProtocolRow> rows;
  json out;
  out["protocol"] = "permute";
  json per_k = json::array();
  for (int k : cfg.eval.permute_k) {
    const TrialStats stats = run_angle_permutation(model, split, data.classes, k,
                                                   cfg.eval.trials, mix_seed(cfg.seed, 0x9eULL),
                                                   cfg.train.batch_size, cfg.threads);
    for (std::size_t t = 0; t < stats.trial_accuracy.size(); ++t)
      rows.push_back({"permute", "k=" + std::to_string(k), static_cast<int>(t),
                      stats.trial_accuracy[t], stats.trial_auc[t]});
    per_k.push_back({{"k", k}, {"mean", stats.mean}, {"std", stats.stddev}});
  }
  out["settings"] = per_k;
  write_protocol_csv(rows, (fs::path(cfg.out_dir) / "permute.csv").string());
  write_json(out, (fs::path(cfg.out_dir) / "permute.json").string());
  return out;
}

json cmd_importance(const RunConfig& cfg) {
  Model model = Model::load(model_path(cfg));
  const LoadedDataset data = load_dataset(cfg);
  const LoadedSplit& split = pick_split(data, cfg.eval.split);
  const AngleImportance imp =
      angle_importance(model, split, data.classes, data.class_names, cfg.threads);
  write_importance_csv(imp, (fs::path(cfg.out_dir) / "importance.csv").string());
  json out;
  out["gestures"] = imp.gesture_names;
  out["angles"] = imp.angles;
  out["importance"] = imp.importance;
  write_json(out, (fs::path(cfg.out_dir) / "importance.json").string());
  return out;
}

json cmd_federate(const RunConfig& cfg) {
  const LoadedDataset data = load_dataset(cfg);
  Model model = make_model(cfg, data);
  const FederatedResult result =
      run_federated(model, data, cfg.train, cfg.federated, cfg.seed, cfg.threads);
  const std::string checkpoint = (fs::path(cfg.out_dir) / "model.json").string();
  model.save(checkpoint);
  write_federated_history_csv(result.history,
                              (fs::path(cfg.out_dir) / "federated_history.csv").string());
  json out;
  out["model"] = checkpoint;
  out["participants"] = cfg.federated.participants;
  out["rounds"] = cfg.federated.rounds;
  if (!result.history.empty()) {
    out["final_val_loss"] = result.history.back().val_loss;
    out["final_val_accuracy"] = result.history.back().val_accuracy;
  }
  if (data.test.size() > 0) {
    const EvalReport report = eval_angle_subset(model, data.test, data.classes, {}, cfg.threads);
    out["test"] = report.to_json();
  }
  return out;
}

json cmd_simulate(const RunConfig& cfg) {
  Scenario scenario;
  if (!cfg.sim.scenario.empty()) {
    scenario = load_scenario(cfg.sim.scenario);
  } else {
    SimSection section = cfg.sim;
    section.blocks = cfg.sim.blocks;
    scenario = make_random_scenario(cfg.seed, section);
    save_scenario(scenario, (fs::path(cfg.out_dir) / "scenario.json").string());
  }
  const SimResult result = run_simulation(scenario);
  write_trace_csv(result, (fs::path(cfg.out_dir) / "trace.csv").string());

  json out;
  out["trace"] = (fs::path(cfg.out_dir) / "trace.csv").string();
  out["events"] = result.trace.size();
  out["sessions_completed"] = result.sessions_completed;
  out["interference_events"] = result.interference.size();

  if (!cfg.sim.corrupt_dataset_in.empty()) {
    if (cfg.sim.corrupt_dataset_out.empty())
      throw ConfigError("sim.corrupt_dataset_out required with corrupt_dataset_in");
    const DatasetManifest manifest =
        load_manifest((fs::path(cfg.sim.corrupt_dataset_in) / "manifest.json").string());
    DatasetManifest out_manifest = manifest;
    out_manifest.root = cfg.sim.corrupt_dataset_out;
    Rng rng(mix_seed(cfg.seed, 0xc0deULL));
    int clouds = 0;
    for (const SampleIndexEntry& e : manifest.samples) {
      const MultiAngleSample sample = load_sample(manifest, e);
      const fs::path dir = fs::path(cfg.sim.corrupt_dataset_out) / e.dir;
      fs::create_directories(dir);
      for (const auto& [angle, cloud] : sample.clouds) {
        const MotionPointCloud corrupted = apply_interference(
            cloud, result.interference, rng, cfg.sim.interference,
            cfg.sim.interference.chirp_duration_us);
        save_cloud_csv(corrupted, (dir / ("angle_" + std::to_string(angle) + ".csv")).string());
        ++clouds;
      }
    }
    save_manifest(out_manifest,
                  (fs::path(cfg.sim.corrupt_dataset_out) / "manifest.json").string());
    out["corrupted_dataset"] = cfg.sim.corrupt_dataset_out;
    out["corrupted_clouds"] = clouds;
  }
  return out;
}

}  // namespace

json run_command(const std::string& command, const RunConfig& cfg) {
  cfg.validate();
  write_run_manifest(command, cfg);
  json out;
  if (command == "generate") out = cmd_generate(cfg);
  else if (command == "preprocess") out = cmd_preprocess(cfg);
  else if (command == "train") out = cmd_train(cfg);
  else if (command == "evaluate") out = cmd_evaluate(cfg);
  else if (command == "dropout") out = cmd_dropout(cfg);
  else if (command == "pairs") out = cmd_pairs(cfg);
  else if (command == "permute") out = cmd_permute(cfg);
  else if (command == "importance") out = cmd_importance(cfg);
  else if (command == "federate") out = cmd_federate(cfg);
  else if (command == "simulate") out = cmd_simulate(cfg);
  else
    throw ConfigError("unknown command '" + command +
                      "' (expected generate|preprocess|train|evaluate|dropout|pairs|permute|"
                      "importance|federate|simulate)");
  out["command"] = command;
  write_json(out, (fs::path(cfg.out_dir) / (command + ".json")).string());
  return out;
}

}  // namespace slsense
