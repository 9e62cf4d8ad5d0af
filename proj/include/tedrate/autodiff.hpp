#ifndef TEDRATE_AUTODIFF_HPP
#define TEDRATE_AUTODIFF_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tedrate/common.hpp"

namespace tedrate::autodiff {

// Dense row-major tensor of doubles. Rank 0 (scalar), 1 (vector) and
// 2 (matrix) cover everything the models need; conv1d treats a matrix as
// channels x length.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(double scalar) : data{scalar} {}
  Tensor(std::vector<std::size_t> s, double fill = 0.0);

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool is_scalar() const { return shape.empty(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  double scalar_value() const;
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  std::string shape_string() const;
  bool all_finite() const;
};

class Graph;

// Lightweight handle to a node in a Graph.
class Var {
 public:
  Var() = default;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  std::size_t id() const { return id_; }
  Graph* graph() const { return graph_; }

  const Tensor& value() const;
  const Tensor& grad() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are created in topological order by the eager
// forward pass; backward() walks them once in reverse.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value);

  // Accumulates gradients for every leaf on a path to `loss`, which must be
  // scalar. May be called once per graph.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

  // internal: used by the op definitions
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    const char* op = "leaf";
    std::function<void(Graph&, const Tensor&)> backprop;  // out-grad -> parents
  };
  Var emplace(Tensor value, const char* op, std::vector<std::size_t> parents,
              std::function<void(Graph&, const Tensor&)> backprop);
  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  void accumulate(std::size_t id, const Tensor& g);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

 private:
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// --- primitives ---

Var add(Var a, Var b);                  // same shape
Var mul(Var a, Var b);                  // elementwise, same shape
Var scale(Var a, double c);             // multiply by a constant scalar
Var matmul(Var m, Var v);               // (r x c)·(c) -> (r), (r x c)·(c x p) -> (r x p)
Var concat(const std::vector<Var>& parts);  // 1-D concatenation
Var sum_axis(Var x, std::size_t axis);
Var mean_axis(Var x, std::size_t axis);
Var sigmoid(Var x);
Var tanh_op(Var x);
Var relu(Var x);
// Cross-correlation with symmetric zero padding that preserves the length:
// input (c_in x m), weights (f_out x c_in x k) flattened row-major into a
// matrix of shape (f_out, c_in*k), bias (f_out); odd k only.
Var conv1d(Var input, Var weights, Var bias, std::size_t c_in, std::size_t k);
Var maxpool1d(Var input, std::size_t window);  // (c x m) -> (c x floor(m/window))
Var embedding_row(Var table, std::size_t row);
Var dropout_mask(Var x, const Tensor& mask);  // elementwise by a fixed mask
Var reshape(Var x, std::vector<std::size_t> shape);  // same element count
// Mean binary cross-entropy over the components of r against fixed targets;
// r is clamped to [1e-7, 1 - 1e-7] before the logs.
Var bce(Var r, const std::vector<double>& targets);

inline constexpr double kBceClamp = 1e-7;

// --- finite-difference gradient checking ---

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;  // which tensor
  std::size_t worst_index = 0;  // which coordinate within it
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
  std::size_t unstable_skipped = 0;  // kink_guard only; see below
};

// f builds a scalar loss from leaves created over `point`. Central
// differences with the given epsilon; relative error per coordinate is
// |g_ad - g_fd| / max(1e-6, |g_ad| + |g_fd|); the floor keeps
// finite-difference roundoff on near-zero gradients from dominating.
//
// kink_guard: models with relu/maxpool are only piecewise smooth, and a
// finite-difference stencil that straddles a kink measures nothing. With the
// guard on, each coordinate is estimated at epsilon and epsilon/2; if the
// two estimates disagree the stencil is invalid there and the coordinate is
// skipped (counted in unstable_skipped), otherwise their Richardson
// extrapolation is compared against the analytic gradient.
GradCheckResult gradcheck(
    const std::function<Var(Graph&, const std::vector<Var>&)>& f,
    const std::vector<Tensor>& point, double epsilon = 1e-5, bool kink_guard = false);

}  // namespace tedrate::autodiff

#endif  // TEDRATE_AUTODIFF_HPP
