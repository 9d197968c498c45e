#include "slsense.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "slsense/protocols.hpp"
#include "slsense/runner.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Maps core exceptions onto C error codes; every entry point funnels
// through here so handles never leak exceptions across the ABI.
template <typename Fn>
sls_code guarded(Fn&& fn) {
  try {
    fn();
    return SLS_OK;
  } catch (const slsense::ConfigError& e) {
    g_last_error = e.what();
    return SLS_ERR_CONFIG;
  } catch (const slsense::DataError& e) {
    g_last_error = e.what();
    return SLS_ERR_DATA;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SLS_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return SLS_ERR_RUNTIME;
  }
}

struct DatasetHandle {
  slsense::DatasetManifest manifest;
};

struct ModelHandle {
  slsense::Model model;
};

DatasetHandle* as_dataset(sls_dataset* d) { return reinterpret_cast<DatasetHandle*>(d); }
const DatasetHandle* as_dataset(const sls_dataset* d) {
  return reinterpret_cast<const DatasetHandle*>(d);
}
ModelHandle* as_model(sls_model* m) { return reinterpret_cast<ModelHandle*>(m); }
const ModelHandle* as_model(const sls_model* m) {
  return reinterpret_cast<const ModelHandle*>(m);
}

// Loads and preprocesses one sample with the model's own preprocessing
// and graph settings.
slsense::PreppedSample prep_sample(const ModelHandle& mh, const DatasetHandle& dh,
                                   int sample_index) {
  if (sample_index < 0 || sample_index >= static_cast<int>(dh.manifest.samples.size()))
    throw slsense::DataError("sample index out of range");
  const slsense::SampleIndexEntry& entry =
      dh.manifest.samples[static_cast<std::size_t>(sample_index)];
  slsense::MultiAngleSample raw = slsense::load_sample(dh.manifest, entry);
  // Fixed inference-time preprocessing stream (seed 0 convention), the
  // same one sls_model_evaluate uses.
  slsense::Rng rng(slsense::mix_seed(slsense::mix_seed(0, 0x7072ULL),
                                     static_cast<std::uint64_t>(sample_index)));
  slsense::PreppedSample p;
  p.sample = slsense::preprocess_sample(raw, mh.model.config().preprocess, rng);
  p.build_graphs(mh.model.config().graph);
  return p;
}

}  // namespace

extern "C" {

const char* sls_version(void) { return slsense::kVersion; }

const char* sls_last_error(void) { return g_last_error.c_str(); }

sls_code sls_run(const char* command, const char* config_json, const char* out_dir,
                 char** summary_json) {
  return guarded([&]() {
    if (!command || !config_json) throw slsense::ConfigError("command and config required");
    json doc;
    try {
      doc = json::parse(config_json);
    } catch (const json::exception& e) {
      throw slsense::ConfigError(std::string("config parse error: ") + e.what());
    }
    slsense::RunConfig cfg = slsense::run_config_from_json(doc);
    if (out_dir && *out_dir) cfg.out_dir = out_dir;
    const json summary = slsense::run_command(command, cfg);
    if (summary_json) *summary_json = dup_string(summary.dump(2));
  });
}

sls_dataset* sls_dataset_open(const char* manifest_path) {
  DatasetHandle* handle = nullptr;
  const sls_code rc = guarded([&]() {
    if (!manifest_path) throw slsense::ConfigError("manifest path required");
    auto h = std::make_unique<DatasetHandle>();
    h->manifest = slsense::load_manifest(manifest_path);
    h->manifest.validate();
    handle = h.release();
  });
  return rc == SLS_OK ? reinterpret_cast<sls_dataset*>(handle) : nullptr;
}

void sls_dataset_close(sls_dataset* dataset) { delete as_dataset(dataset); }

int sls_dataset_sample_count(const sls_dataset* dataset) {
  return dataset ? static_cast<int>(as_dataset(dataset)->manifest.samples.size()) : -1;
}

int sls_dataset_class_count(const sls_dataset* dataset) {
  return dataset ? as_dataset(dataset)->manifest.class_count() : -1;
}

int sls_dataset_angle_count(const sls_dataset* dataset) {
  return dataset ? static_cast<int>(as_dataset(dataset)->manifest.angle_ids.size()) : -1;
}

int sls_dataset_angles(const sls_dataset* dataset, int* out, int cap) {
  if (!dataset || !out) return -1;
  const auto& ids = as_dataset(dataset)->manifest.angle_ids;
  const int n = std::min(cap, static_cast<int>(ids.size()));
  for (int i = 0; i < n; ++i) out[i] = ids[static_cast<std::size_t>(i)];
  return n;
}

const char* sls_dataset_class_name(const sls_dataset* dataset, int class_id) {
  if (!dataset) return nullptr;
  const auto& names = as_dataset(dataset)->manifest.class_names;
  if (class_id < 0 || class_id >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<std::size_t>(class_id)].c_str();
}

sls_model* sls_model_load(const char* checkpoint_path) {
  ModelHandle* handle = nullptr;
  const sls_code rc = guarded([&]() {
    if (!checkpoint_path) throw slsense::ConfigError("checkpoint path required");
    auto h = std::make_unique<ModelHandle>();
    h->model = slsense::Model::load(checkpoint_path);
    handle = h.release();
  });
  return rc == SLS_OK ? reinterpret_cast<sls_model*>(handle) : nullptr;
}

void sls_model_free(sls_model* model) { delete as_model(model); }

sls_code sls_model_save(const sls_model* model, const char* path) {
  return guarded([&]() {
    if (!model || !path) throw slsense::ConfigError("model and path required");
    as_model(model)->model.save(path);
  });
}

int sls_model_class_count(const sls_model* model) {
  return model ? as_model(model)->model.classes() : -1;
}

sls_code sls_model_predict(const sls_model* model, const sls_dataset* dataset, int sample_index,
                           const int* angles, int n_angles, double* probs, int probs_cap) {
  return guarded([&]() {
    if (!model || !dataset || !probs) throw slsense::ConfigError("model/dataset/probs required");
    const ModelHandle& mh = *as_model(model);
    const DatasetHandle& dh = *as_dataset(dataset);
    if (probs_cap < mh.model.classes())
      throw slsense::ConfigError("probs buffer smaller than the class count");
    const slsense::PreppedSample prepped = prep_sample(mh, dh, sample_index);
    std::vector<int> subset(angles, angles + (angles ? n_angles : 0));
    const std::vector<double> p =
        mh.model.predict(prepped, subset.empty() ? nullptr : &subset);
    for (int c = 0; c < mh.model.classes(); ++c) probs[c] = p[static_cast<std::size_t>(c)];
  });
}

sls_code sls_model_evaluate(const sls_model* model, const sls_dataset* dataset, const char* split,
                            const int* angles, int n_angles, char** report_json) {
  return guarded([&]() {
    if (!model || !dataset || !report_json)
      throw slsense::ConfigError("model/dataset/report output required");
    const ModelHandle& mh = *as_model(model);
    const DatasetHandle& dh = *as_dataset(dataset);
    const slsense::LoadedDataset data = slsense::load_and_preprocess(
        dh.manifest, mh.model.config().preprocess, mh.model.config().graph, 0, 0);
    const std::string split_name = split ? split : "test";
    const slsense::LoadedSplit* s = &data.test;
    if (split_name == "train") s = &data.train;
    else if (split_name == "val") s = &data.val;
    else if (split_name != "test")
      throw slsense::ConfigError("split must be train|val|test");
    std::vector<int> subset(angles, angles + (angles ? n_angles : 0));
    const slsense::EvalReport report =
        slsense::eval_angle_subset(mh.model, *s, data.classes, subset, 0);
    *report_json = dup_string(report.to_json().dump(2));
  });
}

void sls_string_free(char* s) { std::free(s); }

}  // extern "C"
