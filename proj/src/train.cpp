#include "slsense/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "slsense/preprocess.hpp"

namespace slsense {

void parallel_for_indexed(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += threads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

LoadedDataset load_and_preprocess(const DatasetManifest& manifest, const PreprocessConfig& prep,
                                  const GraphConfig& graph, std::uint64_t seed, int threads) {
  manifest.validate();
  LoadedDataset data;
  data.classes = manifest.class_count();
  data.class_names = manifest.class_names;
  data.angles = manifest.angle_ids;

  auto split_of = [&](int subject) -> LoadedSplit* {
    auto in = [&](const std::vector<int>& v) {
      return std::find(v.begin(), v.end(), subject) != v.end();
    };
    if (in(manifest.train_subjects)) return &data.train;
    if (in(manifest.val_subjects)) return &data.val;
    if (in(manifest.test_subjects)) return &data.test;
    return nullptr;
  };

  const int n = static_cast<int>(manifest.samples.size());
  std::vector<PreppedSample> prepped(n);
  parallel_for_indexed(n, threads, [&](int i) {
    const SampleIndexEntry& entry = manifest.samples[static_cast<std::size_t>(i)];
    MultiAngleSample raw = load_sample(manifest, entry);
    Rng rng(mix_seed(mix_seed(seed, 0x7072ULL), static_cast<std::uint64_t>(i)));
    PreppedSample p;
    p.sample = preprocess_sample(raw, prep, rng);
    p.build_graphs(graph);
    prepped[static_cast<std::size_t>(i)] = std::move(p);
  });
  for (int i = 0; i < n; ++i) {
    const SampleIndexEntry& entry = manifest.samples[static_cast<std::size_t>(i)];
    LoadedSplit* split = split_of(entry.subject);
    if (!split) continue;
    split->samples.push_back(std::move(prepped[static_cast<std::size_t>(i)]));
    split->labels.push_back(entry.label);
  }
  return data;
}

bool EarlyStopper::observe(double val_loss) {
  const bool improved = best_index_ < 0 || val_loss < best_value_;
  if (improved) {
    best_value_ = val_loss;
    best_index_ = count_;
    wait_ = 0;
  } else {
    ++wait_;
  }
  ++count_;
  return improved;
}

double batch_gradient(const Model& model, const LoadedSplit& split,
                      const std::vector<int>& indices, int threads,
                      std::vector<double>& grad_out) {
  const int b = static_cast<int>(indices.size());
  if (b == 0) throw DataError("batch_gradient: empty batch");
  const std::size_t width = model.store().scalar_count();
  std::vector<std::vector<double>> grads(static_cast<std::size_t>(b));
  std::vector<double> losses(static_cast<std::size_t>(b), 0.0);

  parallel_for_indexed(b, threads, [&](int i) {
    const int idx = indices[static_cast<std::size_t>(i)];
    Tape tape;
    const PreppedSample& s = split.samples[static_cast<std::size_t>(idx)];
    const int lp = model.log_probs(tape, s);
    const int loss = tape.scale(tape.pick(lp, 0, split.labels[static_cast<std::size_t>(idx)]), -1.0);
    losses[static_cast<std::size_t>(i)] = tape.value(loss)(0, 0);
    grads[static_cast<std::size_t>(i)].assign(width, 0.0);
    tape.backward(loss, &grads[static_cast<std::size_t>(i)]);
  });

  grad_out.assign(width, 0.0);
  double total = 0.0;
  for (int i = 0; i < b; ++i) {  // fixed merge order: independent of threads
    total += losses[static_cast<std::size_t>(i)];
    const std::vector<double>& g = grads[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < width; ++j) grad_out[j] += g[j];
  }
  const double inv = 1.0 / b;
  for (double& g : grad_out) g *= inv;
  return total * inv;
}

double split_loss(const Model& model, const LoadedSplit& split, int threads,
                  std::vector<int>* predictions) {
  const int n = static_cast<int>(split.size());
  if (n == 0) throw DataError("split_loss: empty split");
  std::vector<double> losses(static_cast<std::size_t>(n));
  std::vector<int> preds(static_cast<std::size_t>(n));
  parallel_for_indexed(n, threads, [&](int i) {
    Tape tape;
    const PreppedSample& s = split.samples[static_cast<std::size_t>(i)];
    const int lp = model.log_probs(tape, s);
    const Mat& v = tape.value(lp);
    losses[static_cast<std::size_t>(i)] = -v(0, split.labels[static_cast<std::size_t>(i)]);
    int arg = 0;
    for (int c = 1; c < model.classes(); ++c)
      if (v(0, c) > v(0, arg)) arg = c;
    preds[static_cast<std::size_t>(i)] = arg;
  });
  if (predictions) *predictions = preds;
  double total = 0.0;
  for (double l : losses) total += l;
  return total / n;
}

TrainResult train_model(Model& model, const LoadedDataset& data, const TrainConfig& cfg,
                        std::uint64_t seed, int threads,
                        const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  if (data.train.size() == 0) throw DataError("train: empty training split");
  if (data.val.size() == 0) throw DataError("train: empty validation split");

  AdamState adam = AdamState::create(model.store());
  EarlyStopper stopper(cfg.patience);
  TrainResult result;
  std::vector<double> best_params = model.store().flatten_values();

  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  const int n_train = static_cast<int>(data.train.size());
  std::vector<double> grad;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = lr_at_epoch(epoch, cfg);
    Rng order_rng(mix_seed(mix_seed(seed, 0x6f72ULL), static_cast<std::uint64_t>(epoch)));
    order_rng.shuffle(order);

    // Augmented copies for this epoch; graphs rebuilt on the augmented
    // geometry. Per-sample streams keyed by (seed, epoch, sample index).
    const LoadedSplit* train_split = &data.train;
    LoadedSplit augmented;
    if (cfg.augment) {
      augmented.labels = data.train.labels;
      augmented.samples.resize(data.train.size());
      parallel_for_indexed(n_train, threads, [&](int i) {
        Rng rng(mix_seed(mix_seed(mix_seed(seed, 0x6175ULL), static_cast<std::uint64_t>(epoch)),
                         static_cast<std::uint64_t>(i)));
        PreppedSample p;
        p.sample = augment(data.train.samples[static_cast<std::size_t>(i)].sample, rng,
                           model.config().preprocess);
        p.build_graphs(model.config().graph);
        augmented.samples[static_cast<std::size_t>(i)] = std::move(p);
      });
      train_split = &augmented;
    }

    double epoch_loss = 0.0;
    int batches = 0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int end = std::min(n_train, start + cfg.batch_size);
      std::vector<int> batch(order.begin() + start, order.begin() + end);
      epoch_loss += batch_gradient(model, *train_split, batch, threads, grad);
      model.store().zero_grads();
      // scatter the averaged flat gradient into the parameter slots
      std::size_t off = 0;
      for (const auto& p : model.store().all()) {
        std::copy(grad.begin() + static_cast<long>(off),
                  grad.begin() + static_cast<long>(off + p->value.size()), p->grad.data());
        off += static_cast<std::size_t>(p->value.size());
      }
      adam_step(model.store(), adam, lr, cfg);
      ++batches;
    }
    epoch_loss /= std::max(1, batches);

    std::vector<int> val_preds;
    const double val_loss = split_loss(model, data.val, threads, &val_preds);
    const double val_acc = balanced_accuracy(val_preds, data.val.labels, data.classes);

    EpochStats stats{epoch, lr, epoch_loss, val_loss, val_acc};
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (stopper.observe(val_loss)) {
      best_params = model.store().flatten_values();
      result.best_epoch = epoch;
      result.best_val_loss = val_loss;
    }
    if (stopper.should_stop()) break;
  }

  model.store().load_flat_values(best_params);
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "epoch,lr,train_loss,val_loss,val_balanced_accuracy\n";
  for (const EpochStats& e : history) {
    out << e.epoch << ',' << format_g9(e.lr) << ',' << format_g9(e.train_loss) << ','
        << format_g9(e.val_loss) << ',' << format_g9(e.val_accuracy) << '\n';
  }
}

}  // namespace slsense
