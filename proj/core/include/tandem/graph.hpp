#ifndef TANDEM_GRAPH_HPP_
#define TANDEM_GRAPH_HPP_

#include <map>
#include <string>
#include <vector>

#include "tandem/tensor.hpp"

namespace tandem {

using ParamStore = std::map<std::string, Tensor>;

enum class Op {
  kInput,
  kParam,
  kConst,
  kAdd,
  kSub,
  kMul,
  kMin,
  kMax,
  kMatMul,
  kRelu,
  kTanh,
  kExp,
  kLog,
  kSqrt,
  kAbs,
  kScale,
  kAddConst,
  kSoftmax,
  kLayerNorm,
  kConcatRows,
  kConcatCols,
  kSliceRows,
  kSliceCols,
  kSumAll,
  kMeanAll,
  kRowSum,
};

struct Node {
  Op op;
  std::vector<int> inputs;
  std::string name;  // Input/Param binding name
  double alpha = 0.0;
  int begin = 0, end = 0;  // slice range
  bool trans_a = false, trans_b = false;
  int rows = 0, cols = 0;  // inferred output shape
};

// Static computation graph. Nodes are appended in topological order and
// shapes are inferred (and validated) at build time, so the executor can
// preallocate every intermediate once.
class Graph {
 public:
  int input(const std::string& name, int rows, int cols);
  int param(const std::string& name, int rows, int cols);
  int constant(Tensor value);

  int add(int a, int b) { return binary(Op::kAdd, a, b); }
  int sub(int a, int b) { return binary(Op::kSub, a, b); }
  int mul(int a, int b) { return binary(Op::kMul, a, b); }
  int min(int a, int b) { return binary(Op::kMin, a, b); }
  int max(int a, int b) { return binary(Op::kMax, a, b); }
  int matmul(int a, int b, bool trans_a = false, bool trans_b = false);
  int relu(int a) { return unary(Op::kRelu, a); }
  int tanh(int a) { return unary(Op::kTanh, a); }
  int exp(int a) { return unary(Op::kExp, a); }
  int log(int a) { return unary(Op::kLog, a); }
  int sqrt(int a) { return unary(Op::kSqrt, a); }
  int abs(int a) { return unary(Op::kAbs, a); }
  int scale(int a, double alpha);
  int add_const(int a, double alpha);
  int softmax(int a) { return unary(Op::kSoftmax, a); }
  int layernorm(int a) { return unary(Op::kLayerNorm, a); }
  int concat_rows(const std::vector<int>& parts);
  int concat_cols(const std::vector<int>& parts);
  int slice_rows(int a, int begin, int end);
  int slice_cols(int a, int begin, int end);
  int sum_all(int a) { return reduce(Op::kSumAll, a); }
  int mean_all(int a) { return reduce(Op::kMeanAll, a); }
  int row_sum(int a);

  // x·W + b with W: [in, out], b: [1, out]; creates the params on first use.
  int linear(int x, const std::string& prefix, int in, int out);

  const Node& node(int id) const { return nodes_[id]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const Tensor& const_value(int id) const;
  const std::vector<std::string>& param_names() const { return param_names_; }

  // Deterministic parameter initialization matching declared shapes.
  ParamStore init_params(Rng& rng, double stddev = 0.1) const;

 private:
  int push(Node n);
  int unary(Op op, int a);
  int binary(Op op, int a, int b);
  int reduce(Op op, int a);
  void check_id(int a) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> const_values_;
  std::vector<int> const_index_;  // node id -> index into const_values_
  std::vector<std::string> param_names_;
  std::map<std::string, std::pair<int, int>> param_shapes_;
};

// Runs a graph forward and backward over a reusable workspace.
// A single Executor is confined to one thread; distinct Executors over the
// same Graph may run concurrently.
class Executor {
 public:
  explicit Executor(const Graph& graph);

  // Binds params/inputs by name, executes every node in order and checks
  // all intermediates for finiteness (throws with the offending node id).
  void forward(const ParamStore& params, const ParamStore& inputs);
  const Tensor& value(int node) const { return values_[node]; }

  // Reverse pass from a scalar loss node; call after forward().
  void backward(int loss_node);
  // Reverse pass seeded with an externally supplied adjoint at `node`.
  void backward_seeded(int node, const Tensor& seed);
  const Tensor& grad(int node) const { return grads_[node]; }

  // Accumulates d(loss)/d(param) into `out` (created as zeros if missing);
  // parameters that do not reach the loss receive exact-zero gradients.
  void param_grads(ParamStore& out) const;

 private:
  void run_node_backward(int id);

  const Graph& graph_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::vector<char> needs_grad_;
  std::vector<char> grad_seeded_;
};

// Max over sampled parameter coordinates of the relative error between the
// analytic gradient and a central finite difference with step eps.
// samples_per_tensor = 0 checks every coordinate.
double grad_check(const Graph& graph, const ParamStore& params,
                  const ParamStore& inputs, int loss_node, double eps,
                  int samples_per_tensor = 0, uint64_t seed = 0);

}  // namespace tandem

#endif  // TANDEM_GRAPH_HPP_
