#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "slsense/common.hpp"

namespace slsense {

// Row-major so per-row products vectorize along contiguous memory while
// staying a pure function of the row's content (see Tape::matmul).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named learnable tensor. Gradients accumulate across backward calls
// until zero_grad.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  std::size_t flat_offset = 0;  // position in the store's flat layout

  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}
};

// Owns every parameter of a model in creation order; that order is the
// flat serialization order used by checkpoints and federated exchange.
class ParamStore {
 public:
  Parameter& create(const std::string& name, int rows, int cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }

  void zero_grads();
  std::size_t scalar_count() const;
  std::vector<double> flatten_values() const;
  std::vector<double> flatten_grads() const;
  // Shape-checked; throws RuntimeError on any mismatch.
  void load_flat_values(const std::vector<double>& flat);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Reverse-mode tape over dense matrices. Ops evaluate eagerly, record
// their inputs, and backward() runs one reverse sweep, accumulating into
// Parameter::grad for every reachable parameter leaf. Each op checks its
// output for NaN/Inf and throws RuntimeError when one appears.
class Tape {
 public:
  int input(Mat value);        // constant, no gradient
  int param(Parameter& p);     // leaf bound to external parameter

  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int add_row_vector(int a, int row);  // broadcast a 1 x c row over all rows
  int relu(int a);
  // Fused x*W + b with optional ReLU; one node instead of three.
  int linear(int x, Parameter& weight, Parameter& bias, bool with_relu);
  // Fused per-edge message input [h_c, h_n - h_c] for edge convolution.
  int edge_message_input(int h, const std::vector<int>& centers,
                         const std::vector<int>& neighbors);
  int hconcat(int a, int b);
  int vstack(const std::vector<int>& rows);
  int gather_rows(int a, std::vector<int> idx);
  // Channel-wise max over row groups; tie goes to the lowest row index.
  int segment_max(int a, std::vector<int> segment_of_row, int n_segments);
  int colwise_max(int a);
  int colwise_sum(int a);
  int colwise_mean(int a);
  int row_softmax(int a);
  int row_log_softmax(int a);
  int log(int a);
  int scale(int a, double s);
  int transpose(int a);
  int pick(int a, int r, int c);  // 1 x 1 view of one element
  int sum(int a);

  const Mat& value(int id) const;
  // Shape helpers.
  int rows(int id) const;
  int cols(int id) const;

  // Seeds d(out)/d(out) = 1 (scalar nodes only) and sweeps the tape in
  // reverse. May be called once per tape. With a sink, parameter
  // gradients go into the flat vector (ParamStore layout) instead of
  // Parameter::grad, which keeps concurrent sweeps race-free.
  void backward(int loss_id, std::vector<double>* sink = nullptr);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    Input, Param, MatMul, Add, Sub, AddRow, Relu, Linear, EdgeMessage, HConcat,
    VStack, Gather, SegmentMax, RowSoftmax, RowLogSoftmax, Log, Scale,
    Transpose, Pick, Sum, ColSum, ColMean,
  };

  struct Node {
    Op op;
    Mat value;
    Mat grad;
    int a = -1, b = -1;
    std::vector<int> inputs;    // VStack
    std::vector<int> indices;   // Gather rows / SegmentMax argmax / edge centers
    std::vector<int> indices2;  // edge neighbors
    int n_segments = 0;
    double scalar = 0.0;
    int pick_r = 0, pick_c = 0;
    bool flag = false;          // Linear: ReLU applied
    Parameter* parameter = nullptr;
    Parameter* parameter2 = nullptr;  // Linear bias
  };

  int push(Node n);
  void check_finite(const Mat& m, const char* who) const;

  std::vector<Node> nodes_;
  bool swept_ = false;
};

// Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_fan_in(Parameter& p, int fan_in, Rng& rng);

}  // namespace slsense
