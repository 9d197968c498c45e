#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slsense/fusion.hpp"

using namespace slsense;

namespace {

std::vector<double> probs_of(const FusionHead& head, Tape& tape, std::vector<AngleFeed> feeds) {
  const int lp = head.log_probs(tape, std::move(feeds));
  const Mat& v = tape.value(lp);
  std::vector<double> out(static_cast<std::size_t>(v.cols()));
  for (int c = 0; c < v.cols(); ++c) out[static_cast<std::size_t>(c)] = std::exp(v(0, c));
  return out;
}

AngleFeed feed(Tape& tape, int angle, const Mat& repr) {
  AngleFeed f;
  f.angle_id = angle;
  f.head_angle = angle;
  f.node = tape.input(repr);
  return f;
}

Mat random_row(Rng& rng, int d) {
  Mat m(1, d);
  for (int j = 0; j < d; ++j) m(0, j) = rng.uniform(-1, 1);
  return m;
}

FusionConfig small_cfg(HeadKind kind) {
  FusionConfig cfg;
  cfg.head = kind;
  cfg.embed_widths = {6};
  cfg.embed_dim = 6;
  cfg.classifier_widths = {5};
  cfg.attention_heads = 2;
  cfg.attention_head_dim = 4;
  return cfg;
}

FusionHead make_head(ParamStore& store, HeadKind kind, int repr_dim, int classes,
                     std::uint64_t seed) {
  FusionHead head = FusionHead::create(store, small_cfg(kind), repr_dim, classes,
                                       {0, 45, 90, 135, 180, 225, 270, 315});
  Rng rng(seed);
  for (const auto& p : store.all()) init_fan_in(*p, static_cast<int>(p->value.rows()), rng);
  return head;
}

}  // namespace

TEST_CASE("vote head sums logits before the softmax") {
  // Hand-built phi: identity map from a 3-dim representation to 3 logits.
  ParamStore store;
  FusionConfig cfg;
  cfg.head = HeadKind::Vote;
  cfg.embed_widths = {3};
  FusionHead head = FusionHead::create(store, cfg, 3, 3, {});
  store.find("fusion.phi.l0.w")->value = Mat::Identity(3, 3);
  store.find("fusion.phi.l0.b")->value = Mat::Zero(1, 3);
  store.find("fusion.phi.l1.w")->value = Mat::Identity(3, 3);
  store.find("fusion.phi.l1.b")->value = Mat::Zero(1, 3);

  Mat r1(1, 3), r2(1, 3);
  r1 << 1, 0, 0;
  r2 << 0, 1, 0;
  Tape tape;
  const std::vector<double> p = probs_of(head, tape, {feed(tape, 0, r1), feed(tape, 45, r2)});
  // softmax of summed logits (1, 1, 0)
  const double denom = std::exp(1.0) + std::exp(1.0) + 1.0;
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / denom).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(std::exp(1.0) / denom).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(1.0 / denom).epsilon(1e-12));
}

TEST_CASE("tracking head averages per-angle softmax outputs") {
  // phi_a built to emit fixed logits via bias-only layers on a zero input.
  ParamStore store;
  FusionConfig cfg;
  cfg.head = HeadKind::Tracking;
  cfg.embed_widths = {3};
  FusionHead head = FusionHead::create(store, cfg, 3, 3, {0, 45});
  auto rig = [&](int angle, double a, double b, double c) {
    const std::string base = "fusion.angle" + std::to_string(angle);
    store.find(base + ".l0.w")->value = Mat::Zero(3, 3);
    store.find(base + ".l0.b")->value = Mat::Zero(1, 3);
    store.find(base + ".l1.w")->value = Mat::Zero(3, 3);
    Mat bias(1, 3);
    bias << a, b, c;
    store.find(base + ".l1.b")->value = bias;
  };
  // log target probabilities, so softmax reproduces them exactly
  rig(0, std::log(0.7), std::log(0.2), std::log(0.1));
  rig(45, std::log(0.1), std::log(0.8), std::log(0.1));

  Mat r = Mat::Zero(1, 3);
  Tape tape;
  const std::vector<double> p = probs_of(head, tape, {feed(tape, 0, r), feed(tape, 45, r)});
  CHECK(p[0] == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(p[2] == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("tracking head with one angle equals that angle's softmax") {
  ParamStore store;
  FusionHead head = make_head(store, HeadKind::Tracking, 4, 3, 51);
  Rng rng(52);
  const Mat r = random_row(rng, 4);
  Tape t1;
  const std::vector<double> p = probs_of(head, t1, {feed(t1, 90, r)});
  Tape t2;
  AngleFeed f = feed(t2, 90, r);
  const Mat direct = t2.value(head.angle_class_probs(t2, f));
  for (int c = 0; c < 3; ++c)
    CHECK(p[static_cast<std::size_t>(c)] == doctest::Approx(direct(0, c)).epsilon(1e-12));
}

TEST_CASE("attention pool matches a hand-computed single-head readout") {
  ParamStore store;
  FusionConfig cfg;
  cfg.head = HeadKind::Attention;
  cfg.embed_widths = {2};
  cfg.embed_dim = 2;
  cfg.classifier_widths = {2};
  cfg.attention_heads = 1;
  cfg.attention_head_dim = 2;
  FusionHead head = FusionHead::create(store, cfg, 2, 2, {});
  // phi = identity
  store.find("fusion.phi.l0.w")->value = Mat::Identity(2, 2);
  store.find("fusion.phi.l0.b")->value = Mat::Zero(1, 2);
  store.find("fusion.phi.l1.w")->value = Mat::Identity(2, 2);
  store.find("fusion.phi.l1.b")->value = Mat::Zero(1, 2);
  Mat q(1, 2), wk(2, 2), wv(2, 2);
  q << 0.8, -0.3;
  wk << 0.5, 0.2, -0.1, 0.4;
  wv << 1.0, 0.0, 0.5, -0.5;
  store.find("fusion.att.h0.q")->value = q;
  store.find("fusion.att.h0.k")->value = wk;
  store.find("fusion.att.h0.v")->value = wv;
  store.find("fusion.att.mix")->value = Mat::Identity(2, 2);
  store.find("fusion.att.mix_bias")->value = Mat::Zero(1, 2);
  // rho = identity -> log softmax
  store.find("fusion.rho.l0.w")->value = Mat::Identity(2, 2);
  store.find("fusion.rho.l0.b")->value = Mat::Zero(1, 2);
  store.find("fusion.rho.l1.w")->value = Mat::Identity(2, 2);
  store.find("fusion.rho.l1.b")->value = Mat::Zero(1, 2);

  Mat x(2, 2);
  x << 0.6, 0.2, 0.4, 0.9;  // rows: angle 0, angle 45 (non-negative: phi's relu passes them)

  // Hand computation: phi(x) = x, one attention head, rho = relu then softmax.
  Mat keys = x * wk;
  Mat values = x * wv;
  Eigen::RowVector2d scores = (q * keys.transpose()) / std::sqrt(2.0);
  const double mx = scores.maxCoeff();
  Eigen::RowVector2d att = (scores.array() - mx).exp();
  att /= att.sum();
  Eigen::RowVector2d pooled = (att * values).cwiseMax(0.0);
  Eigen::RowVector2d sm = pooled.array().exp();
  sm /= sm.sum();

  Tape tape;
  const std::vector<double> p =
      probs_of(head, tape, {feed(tape, 0, x.row(0)), feed(tape, 45, x.row(1))});
  CHECK(p[0] == doctest::Approx(sm(0)).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(sm(1)).epsilon(1e-12));
}

TEST_CASE("identical representations reduce to the singleton behaviour") {
  Rng rng(53);
  const Mat r = random_row(rng, 4);
  for (HeadKind kind : {HeadKind::Max, HeadKind::Attention}) {
    ParamStore store;
    FusionHead head = make_head(store, kind, 4, 3, 54);
    Tape t1;
    const std::vector<double> one = probs_of(head, t1, {feed(t1, 0, r)});
    Tape t2;
    std::vector<AngleFeed> all;
    for (int angle : {0, 45, 90}) all.push_back(feed(t2, angle, r));
    const std::vector<double> many = probs_of(head, t2, all);
    for (int c = 0; c < 3; ++c)
      CHECK(many[static_cast<std::size_t>(c)] ==
            doctest::Approx(one[static_cast<std::size_t>(c)]).epsilon(1e-12));
  }
  // Vote scales logits by the angle count: only the argmax is preserved.
  ParamStore store;
  FusionHead head = make_head(store, HeadKind::Vote, 4, 3, 54);
  Tape t1;
  const std::vector<double> one = probs_of(head, t1, {feed(t1, 0, r)});
  Tape t2;
  std::vector<AngleFeed> all;
  for (int angle : {0, 45, 90}) all.push_back(feed(t2, angle, r));
  const std::vector<double> many = probs_of(head, t2, all);
  const auto argmax = [](const std::vector<double>& v) {
    return std::max_element(v.begin(), v.end()) - v.begin();
  };
  CHECK(argmax(one) == argmax(many));
}

TEST_CASE("angle order never changes any head's output") {
  Rng rng(55);
  for (HeadKind kind :
       {HeadKind::Max, HeadKind::Attention, HeadKind::Vote, HeadKind::Tracking}) {
    ParamStore store;
    FusionHead head = make_head(store, kind, 5, 4, 56);
    std::vector<int> angles = {0, 45, 90, 135, 180};
    std::vector<Mat> reprs;
    for (std::size_t i = 0; i < angles.size(); ++i) reprs.push_back(random_row(rng, 5));

    Tape t1;
    std::vector<AngleFeed> in_order;
    for (std::size_t i = 0; i < angles.size(); ++i)
      in_order.push_back(feed(t1, angles[i], reprs[i]));
    const std::vector<double> base = probs_of(head, t1, in_order);

    std::vector<int> perm = {3, 0, 4, 1, 2};
    Tape t2;
    std::vector<AngleFeed> shuffled;
    for (int idx : perm)
      shuffled.push_back(feed(t2, angles[static_cast<std::size_t>(idx)],
                              reprs[static_cast<std::size_t>(idx)]));
    const std::vector<double> out = probs_of(head, t2, shuffled);
    for (std::size_t c = 0; c < base.size(); ++c) CHECK(out[c] == base[c]);
  }
}

TEST_CASE("every head yields a probability vector on any non-empty subset") {
  Rng rng(57);
  for (HeadKind kind :
       {HeadKind::Max, HeadKind::Attention, HeadKind::Vote, HeadKind::Tracking}) {
    ParamStore store;
    FusionHead head = make_head(store, kind, 5, 4, 58);
    for (const std::vector<int>& subset :
         std::vector<std::vector<int>>{{0}, {45, 270}, {0, 45, 90, 135, 180, 225, 270, 315}}) {
      Tape tape;
      std::vector<AngleFeed> feeds;
      for (int angle : subset) feeds.push_back(feed(tape, angle, random_row(rng, 5)));
      const std::vector<double> p = probs_of(head, tape, feeds);
      double sum = 0.0;
      for (double v : p) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("empty angle set is rejected") {
  ParamStore store;
  FusionHead head = make_head(store, HeadKind::Max, 4, 3, 59);
  Tape tape;
  CHECK_THROWS_AS(head.log_probs(tape, {}), DataError);
}

TEST_CASE("tracking head rejects an angle without a trained classifier") {
  ParamStore store;
  FusionConfig cfg = small_cfg(HeadKind::Tracking);
  FusionHead head = FusionHead::create(store, cfg, 4, 3, {0, 45});
  Rng rng(60);
  for (const auto& p : store.all()) init_fan_in(*p, static_cast<int>(p->value.rows()), rng);
  Tape tape;
  Mat r = random_row(rng, 4);
  CHECK_THROWS_AS(head.log_probs(tape, {feed(tape, 90, r)}), DataError);
}

TEST_CASE("routing angle data to a different head is representable") {
  ParamStore store;
  FusionHead head = make_head(store, HeadKind::Tracking, 4, 3, 61);
  Rng rng(62);
  const Mat r = random_row(rng, 4);
  Tape t1;
  AngleFeed own = feed(t1, 0, r);
  const Mat base = t1.value(head.angle_class_probs(t1, own));
  Tape t2;
  AngleFeed routed = feed(t2, 0, r);
  routed.head_angle = 180;  // foreign classifier consumes angle 0 data
  const Mat other = t2.value(head.angle_class_probs(t2, routed));
  bool differs = false;
  for (int c = 0; c < 3; ++c) differs = differs || other(0, c) != base(0, c);
  CHECK(differs);
}
