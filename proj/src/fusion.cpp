#include "slsense/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace slsense {

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "max") return HeadKind::Max;
  if (s == "attention") return HeadKind::Attention;
  if (s == "vote") return HeadKind::Vote;
  if (s == "tracking") return HeadKind::Tracking;
  throw ConfigError("fusion.head must be one of max|attention|vote|tracking, got '" + s + "'");
}

const char* head_kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::Max: return "max";
    case HeadKind::Attention: return "attention";
    case HeadKind::Vote: return "vote";
    case HeadKind::Tracking: return "tracking";
  }
  return "?";
}

void FusionConfig::validate() const {
  for (int w : embed_widths)
    if (w < 1) throw ConfigError("fusion.embed_widths entries must be >= 1");
  if (embed_dim < 1) throw ConfigError("fusion.embed_dim must be >= 1");
  for (int w : classifier_widths)
    if (w < 1) throw ConfigError("fusion.classifier_widths entries must be >= 1");
  if (attention_heads < 1) throw ConfigError("fusion.attention_heads must be >= 1");
  if (attention_head_dim < 1) throw ConfigError("fusion.attention_head_dim must be >= 1");
}

FusionHead FusionHead::create(ParamStore& store, const FusionConfig& cfg, int repr_dim,
                              int classes, const std::vector<int>& angles) {
  cfg.validate();
  if (classes < 2) throw ConfigError("fusion: need at least 2 classes");
  FusionHead head;
  head.cfg_ = cfg;
  head.classes_ = classes;
  head.angles_ = angles;
  std::sort(head.angles_.begin(), head.angles_.end());

  switch (cfg.head) {
    case HeadKind::Max:
    case HeadKind::Attention: {
      std::vector<int> phi = cfg.embed_widths;
      phi.push_back(cfg.embed_dim);
      head.embed_ = Mlp::create(store, "fusion.phi", repr_dim, phi);
      if (cfg.head == HeadKind::Attention) {
        for (int h = 0; h < cfg.attention_heads; ++h) {
          const std::string base = "fusion.att.h" + std::to_string(h);
          head.att_query_.push_back(&store.create(base + ".q", 1, cfg.attention_head_dim));
          head.att_key_.push_back(&store.create(base + ".k", cfg.embed_dim, cfg.attention_head_dim));
          head.att_value_.push_back(&store.create(base + ".v", cfg.embed_dim, cfg.attention_head_dim));
        }
        head.att_mix_ = &store.create("fusion.att.mix",
                                      cfg.attention_heads * cfg.attention_head_dim, cfg.embed_dim);
        head.att_mix_bias_ = &store.create("fusion.att.mix_bias", 1, cfg.embed_dim);
      }
      std::vector<int> rho = cfg.classifier_widths;
      rho.push_back(classes);
      head.classifier_ = Mlp::create(store, "fusion.rho", cfg.embed_dim, rho);
      break;
    }
    case HeadKind::Vote: {
      std::vector<int> phi = cfg.embed_widths;
      phi.push_back(classes);  // last layer width equals the class count
      head.embed_ = Mlp::create(store, "fusion.phi", repr_dim, phi);
      break;
    }
    case HeadKind::Tracking: {
      if (head.angles_.empty()) throw ConfigError("tracking head: no angles configured");
      std::vector<int> phi = cfg.embed_widths;
      phi.push_back(classes);
      for (int angle : head.angles_) {
        head.angle_heads_.push_back(
            Mlp::create(store, "fusion.angle" + std::to_string(angle), repr_dim, phi));
      }
      break;
    }
  }
  return head;
}

const Mlp& FusionHead::head_for_angle(int angle) const {
  const auto it = std::lower_bound(angles_.begin(), angles_.end(), angle);
  if (it == angles_.end() || *it != angle)
    throw DataError("tracking head: no classifier trained for angle " + std::to_string(angle));
  return angle_heads_[static_cast<std::size_t>(it - angles_.begin())];
}

int FusionHead::attention_pool(Tape& tape, int stacked) const {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.attention_head_dim));
  int concat = -1;
  for (int h = 0; h < cfg_.attention_heads; ++h) {
    const int keys = tape.matmul(stacked, tape.param(*att_key_[h]));     // m x d_h
    const int values = tape.matmul(stacked, tape.param(*att_value_[h]));  // m x d_h
    const int scores =
        tape.scale(tape.matmul(tape.param(*att_query_[h]), tape.transpose(keys)), inv_sqrt_d);
    const int weights = tape.row_softmax(scores);  // 1 x m
    const int out = tape.matmul(weights, values);  // 1 x d_h
    concat = (h == 0) ? out : tape.hconcat(concat, out);
  }
  return tape.add_row_vector(tape.matmul(concat, tape.param(*att_mix_)),
                             tape.param(*att_mix_bias_));
}

int FusionHead::pooled_embedding(Tape& tape, const std::vector<AngleFeed>& feeds) const {
  std::vector<int> embedded;
  embedded.reserve(feeds.size());
  for (const AngleFeed& f : feeds)
    embedded.push_back(embed_.forward(tape, f.node, /*relu_last=*/false));
  const int stacked = tape.vstack(embedded);
  switch (cfg_.head) {
    case HeadKind::Max: return tape.colwise_max(stacked);
    case HeadKind::Attention: return attention_pool(tape, stacked);
    case HeadKind::Vote: return tape.colwise_sum(stacked);
    case HeadKind::Tracking: break;
  }
  throw RuntimeError("pooled_embedding called on tracking head");
}

int FusionHead::angle_class_probs(Tape& tape, const AngleFeed& feed) const {
  if (cfg_.head != HeadKind::Tracking)
    throw RuntimeError("angle_class_probs is only defined for the tracking head");
  const Mlp& mlp = head_for_angle(feed.head_angle);
  return tape.row_softmax(mlp.forward(tape, feed.node, /*relu_last=*/false));
}

int FusionHead::log_probs(Tape& tape, std::vector<AngleFeed> feeds) const {
  if (feeds.empty()) throw DataError("fusion: empty angle set");
  // Canonical order makes every pooling exactly permutation invariant.
  std::sort(feeds.begin(), feeds.end(),
            [](const AngleFeed& a, const AngleFeed& b) { return a.angle_id < b.angle_id; });

  switch (cfg_.head) {
    case HeadKind::Max:
    case HeadKind::Attention: {
      const int pooled = pooled_embedding(tape, feeds);
      return tape.row_log_softmax(classifier_.forward(tape, pooled, /*relu_last=*/false));
    }
    case HeadKind::Vote:
      return tape.row_log_softmax(pooled_embedding(tape, feeds));
    case HeadKind::Tracking: {
      std::vector<int> probs;
      probs.reserve(feeds.size());
      for (const AngleFeed& f : feeds) probs.push_back(angle_class_probs(tape, f));
      // rho: element-wise sum normalized by the angle count.
      return tape.log(tape.colwise_mean(tape.vstack(probs)));
    }
  }
  throw RuntimeError("unreachable fusion head");
}

}  // namespace slsense
