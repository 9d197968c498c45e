// slsense command-line driver. Talks to the core exclusively through the
// C API in slsense.h; flag overrides are merged into the config document
// before it crosses the boundary.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slsense.h"

using nlohmann::json;

namespace {

constexpr const char* kCommands[] = {"generate", "preprocess", "train",      "evaluate",
                                     "dropout",  "pairs",      "permute",    "importance",
                                     "federate", "simulate"};

// `--a.b.c value` pairs left over after the named flags.
bool apply_dotted_override(json& doc, const std::string& key, const std::string& value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) return false;
    if (dot == std::string::npos) {
      (*cur)[part] = parsed;
      return true;
    }
    cur = &(*cur)[part];
    start = dot + 1;
  }
}

std::vector<int> parse_angle_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("slsense ") + sls_version() +
               " — multi-angle mmWave gesture sensing over simulated NR sidelink"};
  app.require_subcommand(1);
  app.allow_extras();

  std::string config_path;
  std::string out_dir;
  std::string angles_csv;
  std::string model_path;
  int threads = -1;
  long long seed = -1;

  for (const char* name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " pipeline");
    sub->allow_extras();
    sub->add_option("--config", config_path, "run config JSON (default: built-in defaults)");
    sub->add_option("--out", out_dir, "output directory (overrides config out_dir)");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    sub->add_option("--seed", seed, "global seed override");
    sub->add_option("--angles", angles_csv, "comma-separated angle subset (evaluate)");
    sub->add_option("--model", model_path, "model checkpoint path (evaluation commands)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : SLS_ERR_CONFIG;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  json doc = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config: " << config_path << "\n";
      return SLS_ERR_CONFIG;
    }
    try {
      in >> doc;
    } catch (const json::exception& e) {
      std::cerr << "error: config parse failure in " << config_path << ": " << e.what() << "\n";
      return SLS_ERR_CONFIG;
    }
  }

  if (seed >= 0) doc["seed"] = seed;
  if (threads >= 0) doc["threads"] = threads;
  if (!angles_csv.empty()) {
    try {
      doc["eval"]["angles"] = parse_angle_list(angles_csv);
    } catch (const std::exception&) {
      std::cerr << "error: bad --angles list '" << angles_csv << "'\n";
      return SLS_ERR_CONFIG;
    }
  }
  if (!model_path.empty()) doc["eval"]["model"] = model_path;

  // Remaining tokens are config overrides with dotted paths
  // (--train.patience 10) or top-level keys (--dataset_root d/).
  const std::vector<std::string> extras = sub->remaining();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    if (key.rfind("--", 0) != 0) {
      std::cerr << "error: unrecognized argument '" << key
                << "' (overrides look like --section.key value)\n";
      return SLS_ERR_CONFIG;
    }
    key = key.substr(2);
    std::string value;
    const std::size_t eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) {
        std::cerr << "error: override '--" << key << "' is missing a value\n";
        return SLS_ERR_CONFIG;
      }
      value = extras[++i];
    }
    if (!apply_dotted_override(doc, key, value)) {
      std::cerr << "error: bad override key '--" << key << "'\n";
      return SLS_ERR_CONFIG;
    }
  }

  char* summary = nullptr;
  const sls_code rc =
      sls_run(command.c_str(), doc.dump().c_str(), out_dir.empty() ? nullptr : out_dir.c_str(),
              &summary);
  if (rc != SLS_OK) {
    const char* category = rc == SLS_ERR_CONFIG ? "config"
                           : rc == SLS_ERR_DATA ? "data"
                                                : "runtime";
    std::cerr << "error (" << category << "): " << sls_last_error() << "\n";
    return rc;
  }
  if (summary) {
    std::cout << summary << "\n";
    sls_string_free(summary);
  }
  return 0;
}
