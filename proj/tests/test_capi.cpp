// Exercises the shared library strictly through the C header.
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slsense.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("slsense_capi_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kTinyConfig = R"({
  "seed": 7,
  "threads": 2,
  "dataset": {"classes": 2, "subjects": 3, "reps": 2, "points_per_cloud": 48},
  "preprocess": {"target_frames": 4, "points_per_frame": 4},
  "graph": {"k": 4},
  "encoder": {"conv_widths": [6, 8], "mlp_hidden": 6},
  "fusion": {"head": "tracking", "embed_widths": [6]},
  "train": {"max_epochs": 2, "batch_size": 8}
})";

}  // namespace

TEST_CASE("version and error strings exist") {
  REQUIRE(sls_version() != nullptr);
  CHECK(std::strlen(sls_version()) > 0);
  REQUIRE(sls_last_error() != nullptr);
}

TEST_CASE("full generate/train/predict/evaluate cycle through the C surface") {
  TempDir tmp("cycle");
  const std::string out = tmp.path.string();

  char* summary = nullptr;
  REQUIRE(sls_run("generate", kTinyConfig, out.c_str(), &summary) == SLS_OK);
  REQUIRE(summary != nullptr);
  CHECK(std::string(summary).find("dataset_hash") != std::string::npos);
  sls_string_free(summary);

  const std::string manifest = out + "/dataset/manifest.json";
  sls_dataset* dataset = sls_dataset_open(manifest.c_str());
  REQUIRE(dataset != nullptr);
  CHECK(sls_dataset_sample_count(dataset) == 2 * 3 * 2);
  CHECK(sls_dataset_class_count(dataset) == 2);
  CHECK(sls_dataset_angle_count(dataset) == 8);
  int angles[8] = {0};
  CHECK(sls_dataset_angles(dataset, angles, 8) == 8);
  CHECK(angles[0] == 0);
  CHECK(angles[7] == 315);
  REQUIRE(sls_dataset_class_name(dataset, 0) != nullptr);
  CHECK(sls_dataset_class_name(dataset, 99) == nullptr);

  REQUIRE(sls_run("train", kTinyConfig, out.c_str(), nullptr) == SLS_OK);
  const std::string checkpoint = out + "/model.json";
  sls_model* model = sls_model_load(checkpoint.c_str());
  REQUIRE(model != nullptr);
  CHECK(sls_model_class_count(model) == 2);

  double probs[2] = {0, 0};
  REQUIRE(sls_model_predict(model, dataset, 0, nullptr, 0, probs, 2) == SLS_OK);
  CHECK(std::abs(probs[0] + probs[1] - 1.0) < 1e-9);

  const int subset[2] = {0, 45};
  REQUIRE(sls_model_predict(model, dataset, 0, subset, 2, probs, 2) == SLS_OK);
  CHECK(std::abs(probs[0] + probs[1] - 1.0) < 1e-9);

  char* report = nullptr;
  REQUIRE(sls_model_evaluate(model, dataset, "test", nullptr, 0, &report) == SLS_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("balanced_accuracy") != std::string::npos);
  sls_string_free(report);

  // Round-trip a copy of the checkpoint.
  const std::string copy = out + "/model_copy.json";
  CHECK(sls_model_save(model, copy.c_str()) == SLS_OK);
  sls_model* clone = sls_model_load(copy.c_str());
  REQUIRE(clone != nullptr);
  sls_model_free(clone);

  sls_model_free(model);
  sls_dataset_close(dataset);
}

TEST_CASE("error paths set categorized codes and messages") {
  TempDir tmp("errors");
  // Unknown command.
  CHECK(sls_run("transmogrify", "{}", tmp.path.c_str(), nullptr) == SLS_ERR_CONFIG);
  CHECK(std::strlen(sls_last_error()) > 0);
  // Unknown config key.
  CHECK(sls_run("generate", R"({"zzz": 1})", tmp.path.c_str(), nullptr) == SLS_ERR_CONFIG);
  // Malformed JSON.
  CHECK(sls_run("generate", "{", tmp.path.c_str(), nullptr) == SLS_ERR_CONFIG);
  // Training without a dataset is a data error naming the manifest.
  CHECK(sls_run("train", kTinyConfig, tmp.path.c_str(), nullptr) == SLS_ERR_DATA);
  CHECK(std::string(sls_last_error()).find("manifest") != std::string::npos);
  // Handle opens on missing paths return NULL.
  CHECK(sls_dataset_open((tmp.path / "nope.json").c_str()) == nullptr);
  CHECK(sls_model_load((tmp.path / "nope.json").c_str()) == nullptr);
  // NULL arguments are config errors, not crashes.
  CHECK(sls_run(nullptr, "{}", nullptr, nullptr) == SLS_ERR_CONFIG);
  double probs[2];
  CHECK(sls_model_predict(nullptr, nullptr, 0, nullptr, 0, probs, 2) == SLS_ERR_CONFIG);
}

TEST_CASE("generate twice yields the same dataset hash") {
  TempDir a("det_a"), b("det_b");
  char* s1 = nullptr;
  char* s2 = nullptr;
  REQUIRE(sls_run("generate", kTinyConfig, a.path.c_str(), &s1) == SLS_OK);
  REQUIRE(sls_run("generate", kTinyConfig, b.path.c_str(), &s2) == SLS_OK);
  // Compare the dataset_hash field embedded in both summaries.
  const std::string j1 = s1, j2 = s2;
  const std::string key = "\"dataset_hash\":";
  const auto h1 = j1.substr(j1.find(key), 40);
  const auto h2 = j2.substr(j2.find(key), 40);
  CHECK(h1 == h2);
  sls_string_free(s1);
  sls_string_free(s2);
}
