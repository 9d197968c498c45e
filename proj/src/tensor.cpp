#include "slsense/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace slsense {

Parameter& ParamStore::create(const std::string& name, int rows, int cols) {
  if (find(name)) throw RuntimeError("duplicate parameter name: " + name);
  const std::size_t offset = scalar_count();
  params_.push_back(std::make_unique<Parameter>(name, rows, cols));
  params_.back()->flat_offset = offset;
  return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->grad.setZero();
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

std::vector<double> ParamStore::flatten_values() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& p : params_)
    flat.insert(flat.end(), p->value.data(), p->value.data() + p->value.size());
  return flat;
}

std::vector<double> ParamStore::flatten_grads() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& p : params_)
    flat.insert(flat.end(), p->grad.data(), p->grad.data() + p->grad.size());
  return flat;
}

void ParamStore::load_flat_values(const std::vector<double>& flat) {
  if (flat.size() != scalar_count())
    throw RuntimeError("flat parameter vector has " + std::to_string(flat.size()) +
                       " values, expected " + std::to_string(scalar_count()));
  std::size_t off = 0;
  for (auto& p : params_) {
    std::copy(flat.begin() + off, flat.begin() + off + p->value.size(), p->value.data());
    off += static_cast<std::size_t>(p->value.size());
  }
}

void init_fan_in(Parameter& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
  for (Eigen::Index i = 0; i < p.value.size(); ++i)
    p.value.data()[i] = rng.uniform(-bound, bound);
}

void Tape::check_finite(const Mat& m, const char* who) const {
  if (!m.allFinite()) throw RuntimeError(std::string("non-finite values produced by ") + who);
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Mat& Tape::value(int id) const { return nodes_.at(id).value; }
int Tape::rows(int id) const { return static_cast<int>(nodes_.at(id).value.rows()); }
int Tape::cols(int id) const { return static_cast<int>(nodes_.at(id).value.cols()); }

int Tape::input(Mat value) {
  check_finite(value, "input");
  Node n;
  n.op = Op::Input;
  n.value = std::move(value);
  return push(std::move(n));
}

int Tape::param(Parameter& p) {
  Node n;
  n.op = Op::Param;
  n.value = p.value;
  n.parameter = &p;
  return push(std::move(n));
}

// Row-by-row products keep every output row a function of that row's
// content alone, so node permutation or duplication upstream reproduces
// bit-identical values; blocked GEMM does not guarantee that. The k-loop
// of contiguous axpys accumulates each output element in a fixed order
// and vectorizes along the row.
static void rowwise_product(const Mat& a, const Mat& b, Mat& out) {
  out = Mat::Zero(a.rows(), b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    auto out_row = out.row(r);
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double v = a(r, k);
      if (v != 0.0) out_row += v * b.row(k);
    }
  }
}

int Tape::matmul(int a, int b) {
  if (cols(a) != rows(b))
    throw RuntimeError("matmul shape mismatch: " + std::to_string(cols(a)) + " vs " +
                       std::to_string(rows(b)));
  Node n;
  n.op = Op::MatMul;
  n.a = a;
  n.b = b;
  rowwise_product(nodes_[a].value, nodes_[b].value, n.value);
  check_finite(n.value, "matmul");
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  if (rows(a) != rows(b) || cols(a) != cols(b)) throw RuntimeError("add shape mismatch");
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value + nodes_[b].value;
  check_finite(n.value, "add");
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  if (rows(a) != rows(b) || cols(a) != cols(b)) throw RuntimeError("sub shape mismatch");
  Node n;
  n.op = Op::Sub;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value - nodes_[b].value;
  check_finite(n.value, "sub");
  return push(std::move(n));
}

int Tape::add_row_vector(int a, int row) {
  if (rows(row) != 1 || cols(row) != cols(a)) throw RuntimeError("add_row_vector shape mismatch");
  Node n;
  n.op = Op::AddRow;
  n.a = a;
  n.b = row;
  n.value = nodes_[a].value.rowwise() + nodes_[row].value.row(0);
  check_finite(n.value, "add_row_vector");
  return push(std::move(n));
}

int Tape::relu(int a) {
  Node n;
  n.op = Op::Relu;
  n.a = a;
  n.value = nodes_[a].value.cwiseMax(0.0);
  return push(std::move(n));
}

int Tape::linear(int x, Parameter& weight, Parameter& bias, bool with_relu) {
  if (cols(x) != weight.value.rows())
    throw RuntimeError("linear: input width does not match " + weight.name);
  if (bias.value.rows() != 1 || bias.value.cols() != weight.value.cols())
    throw RuntimeError("linear: bias shape does not match " + weight.name);
  Node n;
  n.op = Op::Linear;
  n.a = x;
  n.parameter = &weight;
  n.parameter2 = &bias;
  n.flag = with_relu;
  rowwise_product(nodes_[x].value, weight.value, n.value);
  n.value.rowwise() += bias.value.row(0);
  if (with_relu) n.value = n.value.cwiseMax(0.0);
  check_finite(n.value, "linear");
  return push(std::move(n));
}

int Tape::edge_message_input(int h, const std::vector<int>& centers,
                             const std::vector<int>& neighbors) {
  if (centers.size() != neighbors.size())
    throw RuntimeError("edge_message_input: center/neighbor count mismatch");
  const Mat& src = nodes_[h].value;
  const int d = static_cast<int>(src.cols());
  const int nr = static_cast<int>(src.rows());
  Node n;
  n.op = Op::EdgeMessage;
  n.a = h;
  n.value.resize(static_cast<Eigen::Index>(centers.size()), 2 * d);
  for (std::size_t e = 0; e < centers.size(); ++e) {
    const int c = centers[e];
    const int j = neighbors[e];
    if (c < 0 || c >= nr || j < 0 || j >= nr)
      throw RuntimeError("edge_message_input: node index out of range");
    n.value.row(static_cast<Eigen::Index>(e)).head(d) = src.row(c);
    n.value.row(static_cast<Eigen::Index>(e)).tail(d) = src.row(j) - src.row(c);
  }
  n.indices = centers;
  n.indices2 = neighbors;
  return push(std::move(n));
}

int Tape::hconcat(int a, int b) {
  if (rows(a) != rows(b)) throw RuntimeError("hconcat row mismatch");
  Node n;
  n.op = Op::HConcat;
  n.a = a;
  n.b = b;
  n.value.resize(rows(a), cols(a) + cols(b));
  n.value << nodes_[a].value, nodes_[b].value;
  return push(std::move(n));
}

int Tape::vstack(const std::vector<int>& parts) {
  if (parts.empty()) throw RuntimeError("vstack: empty input list");
  int total_rows = 0;
  const int c = cols(parts[0]);
  for (int id : parts) {
    if (cols(id) != c) throw RuntimeError("vstack column mismatch");
    total_rows += rows(id);
  }
  Node n;
  n.op = Op::VStack;
  n.inputs = parts;
  n.value.resize(total_rows, c);
  int r = 0;
  for (int id : parts) {
    n.value.middleRows(r, rows(id)) = nodes_[id].value;
    r += rows(id);
  }
  return push(std::move(n));
}

int Tape::gather_rows(int a, std::vector<int> idx) {
  Node n;
  n.op = Op::Gather;
  n.a = a;
  n.value.resize(static_cast<Eigen::Index>(idx.size()), cols(a));
  const int nr = rows(a);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= nr) throw RuntimeError("gather_rows: index out of range");
    n.value.row(static_cast<Eigen::Index>(i)) = nodes_[a].value.row(idx[i]);
  }
  n.indices = std::move(idx);
  return push(std::move(n));
}

int Tape::segment_max(int a, std::vector<int> segment_of_row, int n_segments) {
  if (static_cast<int>(segment_of_row.size()) != rows(a))
    throw RuntimeError("segment_max: segment list size mismatch");
  const int c = cols(a);
  Node n;
  n.op = Op::SegmentMax;
  n.a = a;
  n.n_segments = n_segments;
  n.value.resize(n_segments, c);
  // argmax row per (segment, channel); -1 marks an empty segment.
  n.indices.assign(static_cast<std::size_t>(n_segments) * c, -1);
  std::vector<char> seen(n_segments, 0);
  const Mat& src = nodes_[a].value;
  for (int r = 0; r < rows(a); ++r) {
    const int s = segment_of_row[static_cast<std::size_t>(r)];
    if (s < 0 || s >= n_segments) throw RuntimeError("segment_max: segment id out of range");
    for (int j = 0; j < c; ++j) {
      const std::size_t slot = static_cast<std::size_t>(s) * c + j;
      if (!seen[s] || src(r, j) > n.value(s, j)) {
        n.value(s, j) = src(r, j);
        n.indices[slot] = r;
      }
    }
    seen[s] = 1;
  }
  for (int s = 0; s < n_segments; ++s)
    if (!seen[s]) throw RuntimeError("segment_max: empty segment " + std::to_string(s));
  return push(std::move(n));
}

int Tape::colwise_max(int a) {
  std::vector<int> seg(static_cast<std::size_t>(rows(a)), 0);
  return segment_max(a, std::move(seg), 1);
}

int Tape::colwise_sum(int a) {
  Node n;
  n.op = Op::ColSum;
  n.a = a;
  n.value = nodes_[a].value.colwise().sum();
  check_finite(n.value, "colwise_sum");
  return push(std::move(n));
}

int Tape::colwise_mean(int a) {
  Node n;
  n.op = Op::ColMean;
  n.a = a;
  n.value = nodes_[a].value.colwise().mean();
  check_finite(n.value, "colwise_mean");
  return push(std::move(n));
}

int Tape::row_softmax(int a) {
  Node n;
  n.op = Op::RowSoftmax;
  n.a = a;
  const Mat& x = nodes_[a].value;
  n.value.resizeLike(x);
  for (int r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    Eigen::RowVectorXd e = (x.row(r).array() - mx).exp();
    n.value.row(r) = e / e.sum();
  }
  check_finite(n.value, "row_softmax");
  return push(std::move(n));
}

int Tape::row_log_softmax(int a) {
  Node n;
  n.op = Op::RowLogSoftmax;
  n.a = a;
  const Mat& x = nodes_[a].value;
  n.value.resizeLike(x);
  for (int r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    const double lse = std::log((x.row(r).array() - mx).exp().sum()) + mx;
    n.value.row(r) = x.row(r).array() - lse;
  }
  check_finite(n.value, "row_log_softmax");
  return push(std::move(n));
}

int Tape::log(int a) {
  Node n;
  n.op = Op::Log;
  n.a = a;
  n.value = nodes_[a].value.array().log();
  check_finite(n.value, "log");
  return push(std::move(n));
}

int Tape::scale(int a, double s) {
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.scalar = s;
  n.value = nodes_[a].value * s;
  check_finite(n.value, "scale");
  return push(std::move(n));
}

int Tape::transpose(int a) {
  Node n;
  n.op = Op::Transpose;
  n.a = a;
  n.value = nodes_[a].value.transpose();
  return push(std::move(n));
}

int Tape::pick(int a, int r, int c) {
  if (r < 0 || r >= rows(a) || c < 0 || c >= cols(a))
    throw RuntimeError("pick: index out of range");
  Node n;
  n.op = Op::Pick;
  n.a = a;
  n.pick_r = r;
  n.pick_c = c;
  n.value = Mat::Constant(1, 1, nodes_[a].value(r, c));
  return push(std::move(n));
}

int Tape::sum(int a) {
  Node n;
  n.op = Op::Sum;
  n.a = a;
  n.value = Mat::Constant(1, 1, nodes_[a].value.sum());
  check_finite(n.value, "sum");
  return push(std::move(n));
}

void Tape::backward(int loss_id, std::vector<double>* sink) {
  if (swept_) throw RuntimeError("backward called twice on one tape");
  if (loss_id < 0 || loss_id >= static_cast<int>(nodes_.size()))
    throw RuntimeError("backward: no such recorded node (forward pass missing?)");
  swept_ = true;
  Node& loss = nodes_[static_cast<std::size_t>(loss_id)];
  if (loss.value.rows() != 1 || loss.value.cols() != 1)
    throw RuntimeError("backward: loss must be a 1x1 scalar node");

  // Gradients allocate lazily on first touch; untouched nodes are skipped.
  auto acc = [&](int id) -> Mat& {
    Node& m = nodes_[static_cast<std::size_t>(id)];
    if (m.grad.size() == 0) m.grad = Mat::Zero(m.value.rows(), m.value.cols());
    return m.grad;
  };
  loss.grad = Mat::Constant(1, 1, 1.0);

  for (int id = loss_id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::Input:
        break;
      case Op::Param:
        if (sink) {
          const std::size_t off = n.parameter->flat_offset;
          if (off + static_cast<std::size_t>(g.size()) > sink->size())
            throw RuntimeError("gradient sink too small for " + n.parameter->name);
          for (Eigen::Index i = 0; i < g.size(); ++i) (*sink)[off + i] += g.data()[i];
        } else {
          n.parameter->grad += g;
        }
        break;
      case Op::MatMul:
        acc(n.a).noalias() += g * nodes_[n.b].value.transpose();
        acc(n.b).noalias() += nodes_[n.a].value.transpose() * g;
        break;
      case Op::Add:
        acc(n.a) += g;
        acc(n.b) += g;
        break;
      case Op::Sub:
        acc(n.a) += g;
        acc(n.b) -= g;
        break;
      case Op::AddRow:
        acc(n.a) += g;
        acc(n.b) += g.colwise().sum();
        break;
      case Op::Relu:
        acc(n.a).array() +=
            g.array() * (nodes_[n.a].value.array() > 0.0).cast<double>();
        break;
      case Op::Linear: {
        // Mask through the fused ReLU (output > 0 iff it passed).
        Mat gm;
        const Mat* gp = &g;
        if (n.flag) {
          gm = g.array() * (n.value.array() > 0.0).cast<double>();
          gp = &gm;
        }
        acc(n.a).noalias() += *gp * n.parameter->value.transpose();
        if (sink) {
          const std::size_t w_off = n.parameter->flat_offset;
          Eigen::Map<Mat> wgrad(sink->data() + w_off, n.parameter->value.rows(),
                                n.parameter->value.cols());
          wgrad.noalias() += nodes_[n.a].value.transpose() * *gp;
          const std::size_t b_off = n.parameter2->flat_offset;
          Eigen::Map<Eigen::RowVectorXd> bgrad(sink->data() + b_off,
                                               n.parameter2->value.cols());
          bgrad += gp->colwise().sum();
        } else {
          n.parameter->grad.noalias() += nodes_[n.a].value.transpose() * *gp;
          n.parameter2->grad += gp->colwise().sum();
        }
        break;
      }
      case Op::EdgeMessage: {
        const int d = static_cast<int>(nodes_[n.a].value.cols());
        Mat& hg = acc(n.a);
        for (std::size_t e = 0; e < n.indices.size(); ++e) {
          const auto row = g.row(static_cast<Eigen::Index>(e));
          hg.row(n.indices[e]) += row.head(d) - row.tail(d);
          hg.row(n.indices2[e]) += row.tail(d);
        }
        break;
      }
      case Op::HConcat:
        acc(n.a) += g.leftCols(nodes_[n.a].value.cols());
        acc(n.b) += g.rightCols(nodes_[n.b].value.cols());
        break;
      case Op::VStack: {
        int r = 0;
        for (int id2 : n.inputs) {
          const int nr = static_cast<int>(nodes_[id2].value.rows());
          acc(id2) += g.middleRows(r, nr);
          r += nr;
        }
        break;
      }
      case Op::Gather:
        for (std::size_t i = 0; i < n.indices.size(); ++i)
          acc(n.a).row(n.indices[i]) += g.row(static_cast<Eigen::Index>(i));
        break;
      case Op::SegmentMax: {
        const int c = static_cast<int>(n.value.cols());
        for (int s = 0; s < n.n_segments; ++s)
          for (int j = 0; j < c; ++j) {
            const int r = n.indices[static_cast<std::size_t>(s) * c + j];
            if (r >= 0) acc(n.a)(r, j) += g(s, j);
          }
        break;
      }
      case Op::ColSum:
        acc(n.a).rowwise() += g.row(0);
        break;
      case Op::ColMean:
        acc(n.a).rowwise() += g.row(0) / static_cast<double>(nodes_[n.a].value.rows());
        break;
      case Op::RowSoftmax: {
        const Mat& y = n.value;
        for (int r = 0; r < y.rows(); ++r) {
          const double dot = (g.row(r).array() * y.row(r).array()).sum();
          acc(n.a).row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
        }
        break;
      }
      case Op::RowLogSoftmax: {
        for (int r = 0; r < n.value.rows(); ++r) {
          const double gsum = g.row(r).sum();
          acc(n.a).row(r).array() +=
              g.row(r).array() - n.value.row(r).array().exp() * gsum;
        }
        break;
      }
      case Op::Log:
        acc(n.a).array() += g.array() / nodes_[n.a].value.array();
        break;
      case Op::Scale:
        acc(n.a) += g * n.scalar;
        break;
      case Op::Transpose:
        acc(n.a) += g.transpose();
        break;
      case Op::Pick:
        acc(n.a)(n.pick_r, n.pick_c) += g(0, 0);
        break;
      case Op::Sum:
        acc(n.a).array() += g(0, 0);
        break;
    }
  }
}

}  // namespace slsense
