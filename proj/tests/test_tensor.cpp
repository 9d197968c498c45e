#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "slsense/tensor.hpp"

using namespace slsense;

namespace {

Mat random_mat(Rng& rng, int r, int c) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

// Central finite differences of a scalar function of one parameter,
// compared against one reverse sweep.
void check_gradient(Parameter& p, const std::function<double()>& loss_value,
                    const std::function<double(std::vector<double>&)>& loss_and_grad,
                    double tol = 1e-6) {
  std::vector<double> grad(static_cast<std::size_t>(p.value.size()), 0.0);
  loss_and_grad(grad);
  const double eps = 1e-5;
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    const double saved = p.value.data()[i];
    p.value.data()[i] = saved + eps;
    const double up = loss_value();
    p.value.data()[i] = saved - eps;
    const double down = loss_value();
    p.value.data()[i] = saved;
    const double fd = (up - down) / (2.0 * eps);
    CHECK(std::abs(fd - grad[static_cast<std::size_t>(i)]) <
          tol * std::max(1.0, std::abs(fd)));
  }
}

}  // namespace

TEST_CASE("composite graph gradient matches finite differences") {
  // Exercises matmul, add_row_vector, relu, hconcat, sub, gather, segment
  // max, softmax paths in one expression.
  Rng rng(31);
  ParamStore store;
  Parameter& w1 = store.create("w1", 4, 6);
  Parameter& b1 = store.create("b1", 1, 6);
  Parameter& w2 = store.create("w2", 6, 3);
  init_fan_in(w1, 4, rng);
  init_fan_in(b1, 4, rng);
  init_fan_in(w2, 6, rng);
  const Mat x = random_mat(rng, 5, 2);

  auto build = [&](Tape& tape) {
    const int xin = tape.input(x);
    const int g1 = tape.gather_rows(xin, {0, 1, 2, 3, 4, 0, 2});
    const int g2 = tape.gather_rows(xin, {1, 2, 3, 4, 0, 3, 1});
    const int cat = tape.hconcat(g1, tape.sub(g2, g1));
    const int h = tape.relu(tape.add_row_vector(tape.matmul(cat, tape.param(w1)), tape.param(b1)));
    const int pooled = tape.segment_max(h, {0, 0, 1, 1, 2, 2, 2}, 3);
    const int logits = tape.matmul(tape.colwise_max(pooled), tape.param(w2));
    const int lp = tape.row_log_softmax(logits);
    return tape.scale(tape.pick(lp, 0, 1), -1.0);
  };

  auto value = [&]() {
    Tape tape;
    return tape.value(build(tape))(0, 0);
  };
  for (Parameter* p : {&w1, &b1, &w2}) {
    auto grad_fn = [&](std::vector<double>& grad) {
      Tape tape;
      const int loss = build(tape);
      grad.assign(store.scalar_count(), 0.0);
      tape.backward(loss, &grad);
      std::vector<double> mine(grad.begin() + static_cast<long>(p->flat_offset),
                               grad.begin() +
                                   static_cast<long>(p->flat_offset +
                                                     static_cast<std::size_t>(p->value.size())));
      grad = mine;
      return tape.value(loss)(0, 0);
    };
    check_gradient(*p, value, grad_fn, 1e-5);
  }
}

TEST_CASE("softmax, log, mean, sum and transpose gradients") {
  Rng rng(32);
  ParamStore store;
  Parameter& w = store.create("w", 3, 4);
  init_fan_in(w, 3, rng);
  const Mat x = random_mat(rng, 2, 3);

  auto build = [&](Tape& tape) {
    const int h = tape.matmul(tape.input(x), tape.param(w));  // 2x4
    const int sm = tape.row_softmax(h);
    const int lg = tape.log(tape.colwise_mean(sm));
    const int t = tape.transpose(tape.colwise_sum(tape.scale(lg, 0.5)));
    return tape.sum(t);
  };
  auto value = [&]() {
    Tape tape;
    return tape.value(build(tape))(0, 0);
  };
  auto grad_fn = [&](std::vector<double>& grad) {
    Tape tape;
    const int loss = build(tape);
    grad.assign(store.scalar_count(), 0.0);
    tape.backward(loss, &grad);
    return tape.value(loss)(0, 0);
  };
  check_gradient(w, value, grad_fn, 1e-5);
}

TEST_CASE("segment_max ties route gradient to the lowest row index") {
  ParamStore store;
  Parameter& p = store.create("p", 3, 1);
  p.value << 2.0, 2.0, 1.0;  // rows 0 and 1 tie
  Tape tape;
  const int leaf = tape.param(p);
  const int pooled = tape.segment_max(leaf, {0, 0, 0}, 1);
  tape.backward(tape.sum(pooled));
  CHECK(p.grad(0, 0) == 1.0);
  CHECK(p.grad(1, 0) == 0.0);
  CHECK(p.grad(2, 0) == 0.0);
}

TEST_CASE("non-finite forward values are rejected") {
  Tape tape;
  const int a = tape.input(Mat::Constant(1, 1, 1e308));
  const int b = tape.input(Mat::Constant(1, 1, 1e308));
  CHECK_THROWS_AS(tape.add(a, b), RuntimeError);  // overflows to inf
  Tape tape2;
  const int z = tape2.input(Mat::Constant(1, 1, -1.0));
  CHECK_THROWS_AS(tape2.log(z), RuntimeError);
}

TEST_CASE("backward twice on one tape is rejected") {
  Tape tape;
  const int a = tape.input(Mat::Constant(1, 1, 2.0));
  const int s = tape.sum(a);
  tape.backward(s);
  CHECK_THROWS_AS(tape.backward(s), RuntimeError);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  const int a = tape.input(Mat::Zero(2, 2));
  CHECK_THROWS_AS(tape.backward(a), RuntimeError);
}

TEST_CASE("matmul shape mismatch is rejected") {
  Tape tape;
  const int a = tape.input(Mat::Zero(2, 3));
  const int b = tape.input(Mat::Zero(2, 3));
  CHECK_THROWS_AS(tape.matmul(a, b), RuntimeError);
}

TEST_CASE("parameter store flattens and reloads in creation order") {
  ParamStore store;
  Parameter& a = store.create("a", 2, 2);
  Parameter& b = store.create("b", 1, 3);
  a.value << 1, 2, 3, 4;
  b.value << 5, 6, 7;
  std::vector<double> flat = store.flatten_values();
  REQUIRE(flat.size() == 7);
  for (double& v : flat) v *= 2.0;
  store.load_flat_values(flat);
  CHECK(a.value(0, 0) == 2.0);
  CHECK(b.value(0, 2) == 14.0);
  flat.pop_back();
  CHECK_THROWS_AS(store.load_flat_values(flat), RuntimeError);
}

TEST_CASE("grads accumulate into Parameter::grad without a sink") {
  ParamStore store;
  Parameter& p = store.create("p", 1, 2);
  p.value << 1.0, 2.0;
  for (int pass = 0; pass < 2; ++pass) {
    Tape tape;
    tape.backward(tape.sum(tape.param(p)));
  }
  CHECK(p.grad(0, 0) == 2.0);  // two sweeps, no zero_grads between
  store.zero_grads();
  CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("parameters off the loss path get zero gradient") {
  ParamStore store;
  Parameter& used = store.create("used", 1, 1);
  Parameter& unused = store.create("unused", 1, 1);
  used.value << 3.0;
  unused.value << 4.0;
  Tape tape;
  const int loss = tape.sum(tape.param(used));
  tape.param(unused);  // on the tape but not reachable from the loss
  tape.backward(loss);
  CHECK(used.grad(0, 0) == 1.0);
  CHECK(unused.grad(0, 0) == 0.0);
}
