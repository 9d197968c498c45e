#pragma once

#include <string>
#include <vector>

#include "slsense/encoder.hpp"
#include "slsense/tensor.hpp"

namespace slsense {

enum class HeadKind { Max, Attention, Vote, Tracking };

HeadKind head_kind_from_string(const std::string& s);
const char* head_kind_name(HeadKind k);

struct FusionConfig {
  HeadKind head = HeadKind::Attention;
  std::vector<int> embed_widths = {64};  // hidden widths of the shared embed phi
  int embed_dim = 64;                    // phi output (max/attention heads)
  std::vector<int> classifier_widths = {32};  // hidden widths of rho
  int attention_heads = 4;
  int attention_head_dim = 16;

  void validate() const;
};

// One encoded angle offered to a head. `head_angle` selects which
// per-angle classifier consumes it; it differs from `angle_id` only in
// the permutation experiment.
struct AngleFeed {
  int angle_id = 0;
  int head_angle = 0;
  int node = -1;  // 1 x d_R representation row on the tape
};

// The multi-angle prediction heads. Max/attention/vote pool a shared
// embedding over whatever angle subset is supplied; tracking runs one
// dedicated classifier per angle and averages the per-angle softmax
// outputs.
class FusionHead {
 public:
  static FusionHead create(ParamStore& store, const FusionConfig& cfg, int repr_dim,
                           int classes, const std::vector<int>& angles);

  // 1 x C log-probabilities. Feeds are canonicalized by angle_id before
  // pooling so any supplied order yields identical output.
  int log_probs(Tape& tape, std::vector<AngleFeed> feeds) const;

  // Per-angle class probabilities (tracking head only): softmax of the
  // head assigned to `head_angle` applied to `node`.
  int angle_class_probs(Tape& tape, const AngleFeed& feed) const;

  HeadKind kind() const { return cfg_.head; }
  int classes() const { return classes_; }
  const std::vector<int>& angles() const { return angles_; }

 private:
  int pooled_embedding(Tape& tape, const std::vector<AngleFeed>& feeds) const;
  int attention_pool(Tape& tape, int stacked) const;
  const Mlp& head_for_angle(int angle) const;

  FusionConfig cfg_;
  int classes_ = 0;
  std::vector<int> angles_;        // tracking-head angle ids, ascending
  Mlp embed_;                      // phi (max/attention/vote)
  Mlp classifier_;                 // rho (max/attention)
  std::vector<Mlp> angle_heads_;   // tracking: one per angle
  // attention pooling parameters
  std::vector<Parameter*> att_query_;  // one 1 x head_dim seed per head
  std::vector<Parameter*> att_key_;
  std::vector<Parameter*> att_value_;
  Parameter* att_mix_ = nullptr;
  Parameter* att_mix_bias_ = nullptr;
};

}  // namespace slsense
