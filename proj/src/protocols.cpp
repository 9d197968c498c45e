#include "slsense/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace slsense {

namespace {

void predict_split(const Model& model, const LoadedSplit& split, int threads,
                   const std::vector<int>* subset, const AngleRouting* routing,
                   const std::vector<int>& sample_indices, std::vector<int>& preds,
                   std::vector<std::vector<double>>& probs) {
  const int n = static_cast<int>(sample_indices.size());
  parallel_for_indexed(n, threads, [&](int i) {
    const int idx = sample_indices[static_cast<std::size_t>(i)];
    const std::vector<double> p =
        model.predict(split.samples[static_cast<std::size_t>(idx)], subset, routing);
    int arg = 0;
    for (int c = 1; c < static_cast<int>(p.size()); ++c)
      if (p[c] > p[arg]) arg = c;
    preds[static_cast<std::size_t>(idx)] = arg;
    probs[static_cast<std::size_t>(idx)] = p;
  });
}

EvalReport report_from(const std::vector<int>& preds,
                       const std::vector<std::vector<double>>& probs,
                       const std::vector<int>& labels, int classes) {
  EvalReport r;
  r.samples = static_cast<int>(labels.size());
  r.balanced_accuracy =
      balanced_accuracy(preds, labels, classes, &r.per_class_recall, &r.classes_present);
  r.auc = auc_macro(probs, labels, classes);
  r.confusion = confusion_matrix(preds, labels, classes);
  return r;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

EvalReport eval_angle_subset(const Model& model, const LoadedSplit& split, int classes,
                             const std::vector<int>& angle_subset, int threads) {
  if (split.size() == 0) throw DataError("eval: empty split");
  const std::vector<int>* subset = angle_subset.empty() ? nullptr : &angle_subset;
  if (subset && subset->empty()) throw DataError("eval: empty angle subset");
  std::vector<int> preds(split.size());
  std::vector<std::vector<double>> probs(split.size());
  std::vector<int> all(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) all[i] = static_cast<int>(i);
  predict_split(model, split, threads, subset, nullptr, all, preds, probs);
  return report_from(preds, probs, split.labels, classes);
}

TrialStats run_angle_dropout(const Model& model, const LoadedSplit& split, int classes, int k,
                             int trials, std::uint64_t seed, int batch_size, int threads) {
  const std::vector<int>& angles = model.angles();
  const int m = static_cast<int>(angles.size());
  if (k < 0 || k >= m)
    throw ConfigError("angle dropout: k must be in [0, " + std::to_string(m) + ")");
  if (split.size() == 0) throw DataError("angle dropout: empty split");

  TrialStats stats;
  stats.k = k;
  const int n = static_cast<int>(split.size());
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(mix_seed(mix_seed(seed, 0xd09bULL), static_cast<std::uint64_t>(trial)));
    std::vector<int> preds(split.size());
    std::vector<std::vector<double>> probs(split.size());
    for (int start = 0; start < n; start += batch_size) {
      const int end = std::min(n, start + batch_size);
      // Draw the batch's kept angle set: remove k at random.
      std::vector<int> kept = angles;
      for (int r = 0; r < k; ++r) {
        const int victim = rng.below_int(static_cast<int>(kept.size()));
        kept.erase(kept.begin() + victim);
      }
      std::vector<int> batch_idx;
      for (int i = start; i < end; ++i) batch_idx.push_back(i);
      predict_split(model, split, threads, &kept, nullptr, batch_idx, preds, probs);
    }
    stats.trial_accuracy.push_back(balanced_accuracy(preds, split.labels, classes));
    stats.trial_auc.push_back(auc_macro(probs, split.labels, classes));
  }
  stats.mean = mean_of(stats.trial_accuracy);
  stats.stddev = std_of(stats.trial_accuracy);
  return stats;
}

TrialStats run_angle_permutation(const Model& model, const LoadedSplit& split, int classes, int k,
                                 int trials, std::uint64_t seed, int batch_size, int threads) {
  if (model.head().kind() != HeadKind::Tracking)
    throw ConfigError("angle permutation requires the tracking head");
  const std::vector<int>& angles = model.angles();
  const int m = static_cast<int>(angles.size());
  if (k == 1 || k < 0 || k > m)
    throw ConfigError("angle permutation: k must be 0 or in [2, " + std::to_string(m) + "]");
  if (split.size() == 0) throw DataError("angle permutation: empty split");

  TrialStats stats;
  stats.k = k;
  const int n = static_cast<int>(split.size());
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(mix_seed(mix_seed(seed, 0x9e37ULL), static_cast<std::uint64_t>(trial)));
    std::vector<int> preds(split.size());
    std::vector<std::vector<double>> probs(split.size());
    for (int start = 0; start < n; start += batch_size) {
      const int end = std::min(n, start + batch_size);
      AngleRouting routing;
      if (k >= 2) {
        std::vector<int> chosen = angles;
        rng.shuffle(chosen);
        chosen.resize(static_cast<std::size_t>(k));
        std::sort(chosen.begin(), chosen.end());
        // Random derangement of the chosen subset by rejection.
        std::vector<int> target = chosen;
        bool ok = false;
        while (!ok) {
          rng.shuffle(target);
          ok = true;
          for (int i = 0; i < k; ++i)
            if (target[static_cast<std::size_t>(i)] == chosen[static_cast<std::size_t>(i)]) {
              ok = false;
              break;
            }
        }
        for (int i = 0; i < k; ++i)
          routing[chosen[static_cast<std::size_t>(i)]] = target[static_cast<std::size_t>(i)];
      }
      std::vector<int> batch_idx;
      for (int i = start; i < end; ++i) batch_idx.push_back(i);
      predict_split(model, split, threads, nullptr, routing.empty() ? nullptr : &routing,
                    batch_idx, preds, probs);
    }
    stats.trial_accuracy.push_back(balanced_accuracy(preds, split.labels, classes));
    stats.trial_auc.push_back(auc_macro(probs, split.labels, classes));
  }
  stats.mean = mean_of(stats.trial_accuracy);
  stats.stddev = std_of(stats.trial_accuracy);
  return stats;
}

AngleImportance angle_importance(const Model& model, const LoadedSplit& split, int classes,
                                 const std::vector<std::string>& class_names, int threads) {
  if (model.head().kind() != HeadKind::Tracking)
    throw ConfigError("angle importance requires the tracking head");
  if (split.size() == 0) throw DataError("angle importance: empty split");
  const std::vector<int>& angles = model.angles();
  const int m = static_cast<int>(angles.size());

  std::vector<int> class_counts(classes, 0);
  for (int y : split.labels) ++class_counts[static_cast<std::size_t>(y)];
  for (int c = 0; c < classes; ++c) {
    if (class_counts[static_cast<std::size_t>(c)] == 0)
      throw DataError("angle importance: gesture '" + class_names[static_cast<std::size_t>(c)] +
                      "' absent from the evaluation split");
  }

  const int n = static_cast<int>(split.size());
  std::vector<std::vector<double>> per_sample(static_cast<std::size_t>(n));
  parallel_for_indexed(n, threads, [&](int i) {
    const auto rows = model.per_angle_probs(split.samples[static_cast<std::size_t>(i)]);
    const int label = split.labels[static_cast<std::size_t>(i)];
    std::vector<double> v(static_cast<std::size_t>(m), 0.0);
    for (const auto& [angle, probs] : rows) {
      const auto it = std::find(angles.begin(), angles.end(), angle);
      if (it == angles.end()) continue;
      v[static_cast<std::size_t>(it - angles.begin())] = probs[static_cast<std::size_t>(label)];
    }
    per_sample[static_cast<std::size_t>(i)] = std::move(v);
  });

  AngleImportance imp;
  imp.angles = angles;
  imp.gesture_names = class_names;
  imp.importance.assign(static_cast<std::size_t>(classes),
                        std::vector<double>(static_cast<std::size_t>(m), 0.0));
  for (int i = 0; i < n; ++i) {
    const int y = split.labels[static_cast<std::size_t>(i)];
    for (int a = 0; a < m; ++a)
      imp.importance[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)] +=
          per_sample[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
  }
  for (int c = 0; c < classes; ++c) {
    double total = 0.0;
    for (double v : imp.importance[static_cast<std::size_t>(c)]) total += v;
    if (total <= 0.0) throw RuntimeError("angle importance: zero mass for a gesture");
    for (double& v : imp.importance[static_cast<std::size_t>(c)]) v /= total;
  }
  return imp;
}

void write_importance_csv(const AngleImportance& imp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "gesture,angle_deg,importance\n";
  for (std::size_t g = 0; g < imp.gesture_names.size(); ++g)
    for (std::size_t a = 0; a < imp.angles.size(); ++a)
      out << imp.gesture_names[g] << ',' << imp.angles[a] << ','
          << format_g9(imp.importance[g][a]) << '\n';
}

void write_protocol_csv(const std::vector<ProtocolRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "protocol,setting,trial,balanced_accuracy,auc\n";
  for (const ProtocolRow& r : rows) {
    out << r.protocol << ',' << r.setting << ',' << r.trial << ','
        << format_g9(r.balanced_accuracy) << ',' << format_g9(r.auc) << '\n';
  }
}

}  // namespace slsense
