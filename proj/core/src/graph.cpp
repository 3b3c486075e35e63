#include "tandem/graph.hpp"

#include <algorithm>
#include <cmath>

namespace tandem {
namespace {

std::string shape_str(int r, int c) {
  return "[" + std::to_string(r) + "," + std::to_string(c) + "]";
}

[[noreturn]] void fail(int node, const std::string& msg) {
  throw Error("graph node " + std::to_string(node) + ": " + msg);
}

// b broadcasts over a when it is the same shape, a row [1,C], a column
// [N,1] or a scalar [1,1].
bool broadcastable(int ar, int ac, int br, int bc) {
  if (ar == br && ac == bc) return true;
  if (br == 1 && bc == ac) return true;
  if (bc == 1 && br == ar) return true;
  if (br == 1 && bc == 1) return true;
  return false;
}

}  // namespace

void Graph::check_id(int a) const {
  if (a < 0 || a >= size()) throw Error("graph: bad node id " + std::to_string(a));
}

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  const_index_.push_back(-1);
  return size() - 1;
}

int Graph::input(const std::string& name, int rows, int cols) {
  Node n{Op::kInput, {}, name};
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

int Graph::param(const std::string& name, int rows, int cols) {
  auto it = param_shapes_.find(name);
  if (it != param_shapes_.end()) {
    if (it->second != std::make_pair(rows, cols))
      throw Error("graph: param '" + name + "' redeclared with different shape");
  } else {
    param_shapes_[name] = {rows, cols};
    param_names_.push_back(name);
  }
  Node n{Op::kParam, {}, name};
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

int Graph::constant(Tensor value) {
  Node n{Op::kConst, {}, ""};
  n.rows = value.rows();
  n.cols = value.cols();
  int id = push(std::move(n));
  const_index_[id] = static_cast<int>(const_values_.size());
  const_values_.push_back(std::move(value));
  return id;
}

const Tensor& Graph::const_value(int id) const {
  check_id(id);
  if (const_index_[id] < 0) throw Error("graph: node is not a constant");
  return const_values_[const_index_[id]];
}

int Graph::unary(Op op, int a) {
  check_id(a);
  Node n{op, {a}, ""};
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  return push(std::move(n));
}

int Graph::binary(Op op, int a, int b) {
  check_id(a);
  check_id(b);
  const Node& na = nodes_[a];
  const Node& nb = nodes_[b];
  if (!broadcastable(na.rows, na.cols, nb.rows, nb.cols))
    fail(size(), "shape mismatch " + shape_str(na.rows, na.cols) + " vs " +
                     shape_str(nb.rows, nb.cols));
  Node n{op, {a, b}, ""};
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

int Graph::matmul(int a, int b, bool trans_a, bool trans_b) {
  check_id(a);
  check_id(b);
  const Node& na = nodes_[a];
  const Node& nb = nodes_[b];
  const int m = trans_a ? na.cols : na.rows;
  const int ka = trans_a ? na.rows : na.cols;
  const int kb = trans_b ? nb.cols : nb.rows;
  const int nn = trans_b ? nb.rows : nb.cols;
  if (ka != kb)
    fail(size(), "matmul inner-dim mismatch " + shape_str(na.rows, na.cols) +
                     " x " + shape_str(nb.rows, nb.cols));
  Node n{Op::kMatMul, {a, b}, ""};
  n.trans_a = trans_a;
  n.trans_b = trans_b;
  n.rows = m;
  n.cols = nn;
  return push(std::move(n));
}

int Graph::scale(int a, double alpha) {
  int id = unary(Op::kScale, a);
  nodes_[id].alpha = alpha;
  return id;
}

int Graph::add_const(int a, double alpha) {
  int id = unary(Op::kAddConst, a);
  nodes_[id].alpha = alpha;
  return id;
}

int Graph::concat_rows(const std::vector<int>& parts) {
  if (parts.empty()) throw Error("graph: empty concat");
  int cols = nodes_[parts[0]].cols;
  int rows = 0;
  for (int p : parts) {
    check_id(p);
    if (nodes_[p].cols != cols) fail(size(), "concat_rows column mismatch");
    rows += nodes_[p].rows;
  }
  Node n{Op::kConcatRows, parts, ""};
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

int Graph::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) throw Error("graph: empty concat");
  int rows = nodes_[parts[0]].rows;
  int cols = 0;
  for (int p : parts) {
    check_id(p);
    if (nodes_[p].rows != rows) fail(size(), "concat_cols row mismatch");
    cols += nodes_[p].cols;
  }
  Node n{Op::kConcatCols, parts, ""};
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

int Graph::slice_rows(int a, int begin, int end) {
  check_id(a);
  if (begin < 0 || end > nodes_[a].rows || begin >= end)
    fail(size(), "bad row slice");
  Node n{Op::kSliceRows, {a}, ""};
  n.begin = begin;
  n.end = end;
  n.rows = end - begin;
  n.cols = nodes_[a].cols;
  return push(std::move(n));
}

int Graph::slice_cols(int a, int begin, int end) {
  check_id(a);
  if (begin < 0 || end > nodes_[a].cols || begin >= end)
    fail(size(), "bad col slice");
  Node n{Op::kSliceCols, {a}, ""};
  n.begin = begin;
  n.end = end;
  n.rows = nodes_[a].rows;
  n.cols = end - begin;
  return push(std::move(n));
}

int Graph::reduce(Op op, int a) {
  check_id(a);
  Node n{op, {a}, ""};
  n.rows = 1;
  n.cols = 1;
  return push(std::move(n));
}

int Graph::row_sum(int a) {
  check_id(a);
  Node n{Op::kRowSum, {a}, ""};
  n.rows = nodes_[a].rows;
  n.cols = 1;
  return push(std::move(n));
}

int Graph::linear(int x, const std::string& prefix, int in, int out) {
  if (nodes_[x].cols != in) fail(size(), "linear '" + prefix + "' input dim");
  int w = param(prefix + ".w", in, out);
  int b = param(prefix + ".b", 1, out);
  return add(matmul(x, w), b);
}

ParamStore Graph::init_params(Rng& rng, double stddev) const {
  ParamStore out;
  // param_names_ preserves declaration order for reproducible init
  for (const auto& name : param_names_) {
    auto [r, c] = param_shapes_.at(name);
    double s = stddev;
    // fan-in scaling for weight matrices, zeros for biases
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0) {
      out[name] = Tensor::zeros({r, c});
      continue;
    }
    if (r > 1) s = 1.0 / std::sqrt(static_cast<double>(r));
    out[name] = Tensor::randn({r, c}, rng, s);
  }
  return out;
}

// ---------------------------------------------------------------------------

Executor::Executor(const Graph& graph) : graph_(graph) {
  const int n = graph.size();
  values_.resize(n);
  grads_.resize(n);
  needs_grad_.assign(n, 0);
  grad_seeded_.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const Node& nd = graph.node(i);
    values_[i] = Tensor({nd.rows, nd.cols});
    if (nd.op == Op::kParam) needs_grad_[i] = 1;
    for (int in : nd.inputs)
      if (needs_grad_[in]) needs_grad_[i] = 1;
    if (needs_grad_[i]) grads_[i] = Tensor({nd.rows, nd.cols});
  }
}

namespace {

// Applies f(out_i, b_broadcast_i) over a's extent.
template <typename F>
void broadcast_apply(const Tensor& a, const Tensor& b, Tensor& out, F f) {
  const int R = a.rows(), C = a.cols();
  const int br = b.rows(), bc = b.cols();
  for (int i = 0; i < R; ++i) {
    const int bi = br == 1 ? 0 : i;
    const double* arow = &a.data[static_cast<size_t>(i) * C];
    const double* brow = &b.data[static_cast<size_t>(bi) * bc];
    double* orow = &out.data[static_cast<size_t>(i) * C];
    for (int j = 0; j < C; ++j) {
      const int bj = bc == 1 ? 0 : j;
      orow[j] = f(arow[j], brow[bj]);
    }
  }
}

// Accumulates g (shaped like a) into db, summing over broadcast dims.
void broadcast_reduce_into(const Tensor& g, Tensor& db, int C) {
  const int R = g.rows();
  const int br = db.rows(), bc = db.cols();
  for (int i = 0; i < R; ++i) {
    const int bi = br == 1 ? 0 : i;
    const double* grow = &g.data[static_cast<size_t>(i) * C];
    double* drow = &db.data[static_cast<size_t>(bi) * bc];
    for (int j = 0; j < C; ++j) {
      const int bj = bc == 1 ? 0 : j;
      drow[bj] += grow[j];
    }
  }
}

constexpr double kLnEps = 1e-12;
constexpr double kLayerNormEps = 1e-6;

}  // namespace

void Executor::forward(const ParamStore& params, const ParamStore& inputs) {
  const int n = graph_.size();
  for (int id = 0; id < n; ++id) {
    const Node& nd = graph_.node(id);
    Tensor& out = values_[id];
    switch (nd.op) {
      case Op::kInput:
      case Op::kParam: {
        const ParamStore& store = nd.op == Op::kInput ? inputs : params;
        auto it = store.find(nd.name);
        if (it == store.end()) fail(id, "unbound name '" + nd.name + "'");
        const Tensor& t = it->second;
        if (t.rows() != nd.rows || t.cols() != nd.cols)
          fail(id, "bound tensor '" + nd.name + "' has shape " +
                       shape_str(t.rows(), t.cols()) + ", expected " +
                       shape_str(nd.rows, nd.cols));
        out.data = t.data;
        break;
      }
      case Op::kConst:
        out.data = graph_.const_value(id).data;
        break;
      case Op::kAdd:
        broadcast_apply(values_[nd.inputs[0]], values_[nd.inputs[1]], out,
                        [](double a, double b) { return a + b; });
        break;
      case Op::kSub:
        broadcast_apply(values_[nd.inputs[0]], values_[nd.inputs[1]], out,
                        [](double a, double b) { return a - b; });
        break;
      case Op::kMul:
        broadcast_apply(values_[nd.inputs[0]], values_[nd.inputs[1]], out,
                        [](double a, double b) { return a * b; });
        break;
      case Op::kMin:
        broadcast_apply(values_[nd.inputs[0]], values_[nd.inputs[1]], out,
                        [](double a, double b) { return a < b ? a : b; });
        break;
      case Op::kMax:
        broadcast_apply(values_[nd.inputs[0]], values_[nd.inputs[1]], out,
                        [](double a, double b) { return a > b ? a : b; });
        break;
      case Op::kMatMul:
        matmul(values_[nd.inputs[0]], nd.trans_a, values_[nd.inputs[1]],
               nd.trans_b, out);
        break;
      case Op::kRelu: {
        const Tensor& x = values_[nd.inputs[0]];
        for (size_t i = 0; i < x.data.size(); ++i)
          out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
        break;
      }
      case Op::kTanh: {
        const Tensor& x = values_[nd.inputs[0]];
        for (size_t i = 0; i < x.data.size(); ++i)
          out.data[i] = std::tanh(x.data[i]);
        break;
      }
      case Op::kExp: {
        const Tensor& x = values_[nd.inputs[0]];
        for (size_t i = 0; i < x.data.size(); ++i)
          out.data[i] = std::exp(x.data[i]);
        break;
      }
      case Op::kLog: {
        const Tensor& x = values_[nd.inputs[0]];
        for (size_t i = 0; i < x.data.size(); ++i)
          out.data[i] = std::log(x.data[i]);
        break;
      }
      case Op::kSqrt: {
        const Tensor& x = values_[nd.inputs[0]];
        for (size_t i = 0; i < x.data.size(); ++i)
          out.data[i] = std::sqrt(x.data[i]);
        break;
      }
      case Op::kAbs: {
        const Tensor& x = values_[nd.inputs[0]];
        for (size_t i = 0; i < x.data.size(); ++i)
          out.data[i] = std::fabs(x.data[i]);
        break;
      }
      case Op::kScale: {
        const Tensor& x = values_[nd.inputs[0]];
        for (size_t i = 0; i < x.data.size(); ++i)
          out.data[i] = nd.alpha * x.data[i];
        break;
      }
      case Op::kAddConst: {
        const Tensor& x = values_[nd.inputs[0]];
        for (size_t i = 0; i < x.data.size(); ++i)
          out.data[i] = nd.alpha + x.data[i];
        break;
      }
      case Op::kSoftmax: {
        const Tensor& x = values_[nd.inputs[0]];
        const int R = x.rows(), C = x.cols();
        for (int i = 0; i < R; ++i) {
          const double* xr = &x.data[static_cast<size_t>(i) * C];
          double* yr = &out.data[static_cast<size_t>(i) * C];
          double mx = xr[0];
          for (int j = 1; j < C; ++j) mx = std::max(mx, xr[j]);
          double s = 0.0;
          for (int j = 0; j < C; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            s += yr[j];
          }
          for (int j = 0; j < C; ++j) yr[j] /= s;
        }
        break;
      }
      case Op::kLayerNorm: {
        const Tensor& x = values_[nd.inputs[0]];
        const int R = x.rows(), C = x.cols();
        for (int i = 0; i < R; ++i) {
          const double* xr = &x.data[static_cast<size_t>(i) * C];
          double* yr = &out.data[static_cast<size_t>(i) * C];
          double mu = 0.0;
          for (int j = 0; j < C; ++j) mu += xr[j];
          mu /= C;
          double var = 0.0;
          for (int j = 0; j < C; ++j) var += (xr[j] - mu) * (xr[j] - mu);
          var /= C;
          const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
          for (int j = 0; j < C; ++j) yr[j] = (xr[j] - mu) * inv;
        }
        break;
      }
      case Op::kConcatRows: {
        size_t off = 0;
        for (int in : nd.inputs) {
          const Tensor& p = values_[in];
          std::copy(p.data.begin(), p.data.end(), out.data.begin() + off);
          off += p.data.size();
        }
        break;
      }
      case Op::kConcatCols: {
        const int R = nd.rows;
        int coff = 0;
        for (int in : nd.inputs) {
          const Tensor& p = values_[in];
          const int pc = p.cols();
          for (int i = 0; i < R; ++i)
            std::copy(&p.data[static_cast<size_t>(i) * pc],
                      &p.data[static_cast<size_t>(i) * pc] + pc,
                      &out.data[static_cast<size_t>(i) * nd.cols + coff]);
          coff += pc;
        }
        break;
      }
      case Op::kSliceRows: {
        const Tensor& x = values_[nd.inputs[0]];
        const int C = x.cols();
        std::copy(&x.data[static_cast<size_t>(nd.begin) * C],
                  &x.data[static_cast<size_t>(nd.end) * C], out.data.begin());
        break;
      }
      case Op::kSliceCols: {
        const Tensor& x = values_[nd.inputs[0]];
        const int C = x.cols();
        for (int i = 0; i < nd.rows; ++i)
          std::copy(&x.data[static_cast<size_t>(i) * C + nd.begin],
                    &x.data[static_cast<size_t>(i) * C + nd.end],
                    &out.data[static_cast<size_t>(i) * nd.cols]);
        break;
      }
      case Op::kSumAll: {
        const Tensor& x = values_[nd.inputs[0]];
        double s = 0.0;
        for (double v : x.data) s += v;
        out.data[0] = s;
        break;
      }
      case Op::kMeanAll: {
        const Tensor& x = values_[nd.inputs[0]];
        double s = 0.0;
        for (double v : x.data) s += v;
        out.data[0] = s / static_cast<double>(x.data.size());
        break;
      }
      case Op::kRowSum: {
        const Tensor& x = values_[nd.inputs[0]];
        const int R = x.rows(), C = x.cols();
        for (int i = 0; i < R; ++i) {
          double s = 0.0;
          const double* xr = &x.data[static_cast<size_t>(i) * C];
          for (int j = 0; j < C; ++j) s += xr[j];
          out.data[i] = s;
        }
        break;
      }
    }
    if (!out.all_finite()) fail(id, "non-finite intermediate");
  }
}

void Executor::backward(int loss_node) {
  const Node& nd = graph_.node(loss_node);
  if (nd.rows != 1 || nd.cols != 1)
    fail(loss_node, "backward requires a scalar loss node");
  backward_seeded(loss_node, Tensor::scalar(1.0));
}

void Executor::backward_seeded(int node, const Tensor& seed) {
  const int n = graph_.size();
  for (int i = 0; i < n; ++i) {
    if (needs_grad_[i])
      for (auto& x : grads_[i].data) x = 0.0;
    grad_seeded_[i] = 0;
  }
  if (!needs_grad_[node]) return;  // loss independent of every param
  const Node& nd = graph_.node(node);
  if (seed.rows() != nd.rows || seed.cols() != nd.cols)
    fail(node, "seed shape mismatch");
  grads_[node].data = seed.data;
  grad_seeded_[node] = 1;
  for (int id = node; id >= 0; --id) {
    if (!grad_seeded_[id] || !needs_grad_[id]) continue;
    run_node_backward(id);
  }
}

void Executor::run_node_backward(int id) {
  const Node& nd = graph_.node(id);
  const Tensor& g = grads_[id];
  auto touch = [&](int in) {
    if (needs_grad_[in]) grad_seeded_[in] = 1;
  };
  switch (nd.op) {
    case Op::kInput:
    case Op::kParam:
    case Op::kConst:
      break;
    case Op::kAdd: {
      int a = nd.inputs[0], b = nd.inputs[1];
      if (needs_grad_[a]) {
        for (size_t i = 0; i < g.data.size(); ++i) grads_[a].data[i] += g.data[i];
        touch(a);
      }
      if (needs_grad_[b]) {
        broadcast_reduce_into(g, grads_[b], nd.cols);
        touch(b);
      }
      break;
    }
    case Op::kSub: {
      int a = nd.inputs[0], b = nd.inputs[1];
      if (needs_grad_[a]) {
        for (size_t i = 0; i < g.data.size(); ++i) grads_[a].data[i] += g.data[i];
        touch(a);
      }
      if (needs_grad_[b]) {
        Tensor neg = g;
        for (auto& x : neg.data) x = -x;
        broadcast_reduce_into(neg, grads_[b], nd.cols);
        touch(b);
      }
      break;
    }
    case Op::kMul: {
      int a = nd.inputs[0], b = nd.inputs[1];
      const Tensor& va = values_[a];
      const Tensor& vb = values_[b];
      if (needs_grad_[a]) {
        Tensor tmp({nd.rows, nd.cols});
        broadcast_apply(g, vb, tmp, [](double gi, double bi) { return gi * bi; });
        for (size_t i = 0; i < tmp.data.size(); ++i)
          grads_[a].data[i] += tmp.data[i];
        touch(a);
      }
      if (needs_grad_[b]) {
        Tensor tmp({nd.rows, nd.cols});
        for (size_t i = 0; i < tmp.data.size(); ++i)
          tmp.data[i] = g.data[i] * va.data[i];
        broadcast_reduce_into(tmp, grads_[b], nd.cols);
        touch(b);
      }
      break;
    }
    case Op::kMin:
    case Op::kMax: {
      int a = nd.inputs[0], b = nd.inputs[1];
      const Tensor& va = values_[a];
      const Tensor& vb = values_[b];
      const bool is_min = nd.op == Op::kMin;
      Tensor ga({nd.rows, nd.cols});
      Tensor gb({nd.rows, nd.cols});
      const int C = nd.cols;
      for (int i = 0; i < nd.rows; ++i) {
        const int bi = vb.rows() == 1 ? 0 : i;
        for (int j = 0; j < C; ++j) {
          const int bj = vb.cols() == 1 ? 0 : j;
          const double av = va.at(i, j), bv = vb.at(bi, bj);
          const bool pick_a = is_min ? (av <= bv) : (av >= bv);
          if (pick_a)
            ga.at(i, j) = g.at(i, j);
          else
            gb.at(i, j) = g.at(i, j);
        }
      }
      if (needs_grad_[a]) {
        for (size_t i = 0; i < ga.data.size(); ++i)
          grads_[a].data[i] += ga.data[i];
        touch(a);
      }
      if (needs_grad_[b]) {
        broadcast_reduce_into(gb, grads_[b], C);
        touch(b);
      }
      break;
    }
    case Op::kMatMul: {
      int a = nd.inputs[0], b = nd.inputs[1];
      const Tensor& va = values_[a];
      const Tensor& vb = values_[b];
      if (needs_grad_[a]) {
        if (!nd.trans_a)
          matmul(g, false, vb, !nd.trans_b, grads_[a], 1.0, true);
        else if (!nd.trans_b)
          matmul(vb, false, g, true, grads_[a], 1.0, true);
        else
          matmul(vb, true, g, true, grads_[a], 1.0, true);
        touch(a);
      }
      if (needs_grad_[b]) {
        if (!nd.trans_b)
          matmul(va, !nd.trans_a, g, false, grads_[b], 1.0, true);
        else if (!nd.trans_a)
          matmul(g, true, va, false, grads_[b], 1.0, true);
        else
          matmul(g, true, va, true, grads_[b], 1.0, true);
        touch(b);
      }
      break;
    }
    case Op::kRelu: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const Tensor& x = values_[a];
      for (size_t i = 0; i < g.data.size(); ++i)
        if (x.data[i] > 0.0) grads_[a].data[i] += g.data[i];
      touch(a);
      break;
    }
    case Op::kTanh: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const Tensor& y = values_[id];
      for (size_t i = 0; i < g.data.size(); ++i)
        grads_[a].data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
      touch(a);
      break;
    }
    case Op::kExp: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const Tensor& y = values_[id];
      for (size_t i = 0; i < g.data.size(); ++i)
        grads_[a].data[i] += g.data[i] * y.data[i];
      touch(a);
      break;
    }
    case Op::kLog: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const Tensor& x = values_[a];
      for (size_t i = 0; i < g.data.size(); ++i)
        grads_[a].data[i] += g.data[i] / x.data[i];
      touch(a);
      break;
    }
    case Op::kSqrt: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const Tensor& y = values_[id];
      for (size_t i = 0; i < g.data.size(); ++i)
        grads_[a].data[i] += g.data[i] * 0.5 / std::max(y.data[i], kLnEps);
      touch(a);
      break;
    }
    case Op::kAbs: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const Tensor& x = values_[a];
      for (size_t i = 0; i < g.data.size(); ++i) {
        const double s = x.data[i] > 0.0 ? 1.0 : (x.data[i] < 0.0 ? -1.0 : 0.0);
        grads_[a].data[i] += g.data[i] * s;
      }
      touch(a);
      break;
    }
    case Op::kScale: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      for (size_t i = 0; i < g.data.size(); ++i)
        grads_[a].data[i] += g.data[i] * nd.alpha;
      touch(a);
      break;
    }
    case Op::kAddConst: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      for (size_t i = 0; i < g.data.size(); ++i)
        grads_[a].data[i] += g.data[i];
      touch(a);
      break;
    }
    case Op::kSoftmax: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const Tensor& y = values_[id];
      const int R = y.rows(), C = y.cols();
      for (int i = 0; i < R; ++i) {
        const double* yr = &y.data[static_cast<size_t>(i) * C];
        const double* gr = &g.data[static_cast<size_t>(i) * C];
        double dot = 0.0;
        for (int j = 0; j < C; ++j) dot += yr[j] * gr[j];
        double* dr = &grads_[a].data[static_cast<size_t>(i) * C];
        for (int j = 0; j < C; ++j) dr[j] += yr[j] * (gr[j] - dot);
      }
      touch(a);
      break;
    }
    case Op::kLayerNorm: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const Tensor& x = values_[a];
      const Tensor& y = values_[id];  // normalized x
      const int R = x.rows(), C = x.cols();
      for (int i = 0; i < R; ++i) {
        const double* xr = &x.data[static_cast<size_t>(i) * C];
        const double* yr = &y.data[static_cast<size_t>(i) * C];
        const double* gr = &g.data[static_cast<size_t>(i) * C];
        double mu = 0.0;
        for (int j = 0; j < C; ++j) mu += xr[j];
        mu /= C;
        double var = 0.0;
        for (int j = 0; j < C; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= C;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        double gmean = 0.0, gymean = 0.0;
        for (int j = 0; j < C; ++j) {
          gmean += gr[j];
          gymean += gr[j] * yr[j];
        }
        gmean /= C;
        gymean /= C;
        double* dr = &grads_[a].data[static_cast<size_t>(i) * C];
        for (int j = 0; j < C; ++j)
          dr[j] += inv * (gr[j] - gmean - yr[j] * gymean);
      }
      touch(a);
      break;
    }
    case Op::kConcatRows: {
      size_t off = 0;
      for (int in : nd.inputs) {
        const size_t sz = values_[in].data.size();
        if (needs_grad_[in]) {
          for (size_t i = 0; i < sz; ++i)
            grads_[in].data[i] += g.data[off + i];
          touch(in);
        }
        off += sz;
      }
      break;
    }
    case Op::kConcatCols: {
      const int R = nd.rows;
      int coff = 0;
      for (int in : nd.inputs) {
        const int pc = values_[in].cols();
        if (needs_grad_[in]) {
          for (int i = 0; i < R; ++i)
            for (int j = 0; j < pc; ++j)
              grads_[in].at(i, j) += g.at(i, coff + j);
          touch(in);
        }
        coff += pc;
      }
      break;
    }
    case Op::kSliceRows: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const int C = nd.cols;
      for (int i = 0; i < nd.rows; ++i)
        for (int j = 0; j < C; ++j)
          grads_[a].at(nd.begin + i, j) += g.at(i, j);
      touch(a);
      break;
    }
    case Op::kSliceCols: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      for (int i = 0; i < nd.rows; ++i)
        for (int j = 0; j < nd.cols; ++j)
          grads_[a].at(i, nd.begin + j) += g.at(i, j);
      touch(a);
      break;
    }
    case Op::kSumAll: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const double gv = g.data[0];
      for (auto& x : grads_[a].data) x += gv;
      touch(a);
      break;
    }
    case Op::kMeanAll: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const double gv = g.data[0] / static_cast<double>(values_[a].data.size());
      for (auto& x : grads_[a].data) x += gv;
      touch(a);
      break;
    }
    case Op::kRowSum: {
      int a = nd.inputs[0];
      if (!needs_grad_[a]) break;
      const int R = nd.rows, C = values_[a].cols();
      for (int i = 0; i < R; ++i) {
        const double gv = g.data[i];
        double* dr = &grads_[a].data[static_cast<size_t>(i) * C];
        for (int j = 0; j < C; ++j) dr[j] += gv;
      }
      touch(a);
      break;
    }
  }
}

void Executor::param_grads(ParamStore& out) const {
  // Fixed (declaration) order; a param appearing at several nodes sums.
  for (const auto& name : graph_.param_names()) {
    Tensor* acc = nullptr;
    for (int id = 0; id < graph_.size(); ++id) {
      const Node& nd = graph_.node(id);
      if (nd.op != Op::kParam || nd.name != name) continue;
      if (!acc) {
        auto it = out.find(name);
        if (it == out.end())
          it = out.emplace(name, Tensor({nd.rows, nd.cols})).first;
        acc = &it->second;
      }
      for (size_t i = 0; i < grads_[id].data.size(); ++i)
        acc->data[i] += grads_[id].data[i];
    }
  }
}

double grad_check(const Graph& graph, const ParamStore& params,
                  const ParamStore& inputs, int loss_node, double eps,
                  int samples_per_tensor, uint64_t seed) {
  if (eps <= 0.0) throw Error("grad_check: eps must be positive");
  Executor ex(graph);
  ex.forward(params, inputs);
  ex.backward(loss_node);
  ParamStore analytic;
  ex.param_grads(analytic);

  ParamStore work = params;
  Rng rng(derive_seed(seed, "grad-check"));
  double max_err = 0.0;
  for (auto& [name, tensor] : work) {
    const Tensor& ga = analytic.at(name);
    const int64_t n = tensor.size();
    std::vector<int64_t> idx;
    if (samples_per_tensor <= 0 || samples_per_tensor >= n) {
      idx.resize(n);
      for (int64_t i = 0; i < n; ++i) idx[i] = i;
    } else {
      for (int s = 0; s < samples_per_tensor; ++s)
        idx.push_back(static_cast<int64_t>(rng.below(n)));
    }
    for (int64_t i : idx) {
      const double orig = tensor.data[i];
      tensor.data[i] = orig + eps;
      ex.forward(work, inputs);
      const double fp = ex.value(loss_node).data[0];
      tensor.data[i] = orig - eps;
      ex.forward(work, inputs);
      const double fm = ex.value(loss_node).data[0];
      tensor.data[i] = orig;
      const double fd = (fp - fm) / (2.0 * eps);
      const double an = ga.data[i];
      const double denom = std::max({std::fabs(an), std::fabs(fd), 1e-8});
      max_err = std::max(max_err, std::fabs(an - fd) / denom);
    }
  }
  return max_err;
}

}  // namespace tandem
