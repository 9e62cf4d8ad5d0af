#include "tedrate/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tedrate::autodiff {

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  data.assign(n, fill);
}

Tensor Tensor::vector(std::vector<double> v) {
  Tensor t;
  t.shape = {v.size()};
  t.data = std::move(v);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  if (v.size() != rows * cols) throw Error("Tensor::matrix: data size mismatch");
  Tensor t;
  t.shape = {rows, cols};
  t.data = std::move(v);
  return t;
}

double Tensor::scalar_value() const {
  if (!is_scalar() || data.size() != 1) throw Error("Tensor::scalar_value on non-scalar");
  return data[0];
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

const Tensor& Var::value() const { return graph_->node(id_).value; }
const Tensor& Var::grad() const { return graph_->node(id_).grad; }

Var Graph::emplace(Tensor value, const char* op, std::vector<std::size_t> parents,
                   std::function<void(Graph&, const Tensor&)> backprop) {
  if (!value.all_finite())
    throw NumericError(std::string("non-finite value produced by op '") + op + "'");
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (std::size_t p : parents)
    if (nodes_[p].needs_grad) n.needs_grad = true;
  if (n.needs_grad) {
    n.grad = Tensor(n.value.shape);
    n.backprop = std::move(backprop);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("non-finite value in leaf tensor");
  Node n;
  n.value = std::move(value);
  n.op = "leaf";
  n.needs_grad = requires_grad;
  if (requires_grad) n.grad = Tensor(n.value.shape);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) { return leaf(std::move(value), false); }

void Graph::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  for (std::size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
}

void Graph::backward(Var loss) {
  if (backward_done_) throw Error("backward already run on this graph");
  if (loss.graph() != this) throw Error("backward: loss belongs to another graph");
  Node& ln = nodes_[loss.id()];
  if (!ln.value.is_scalar()) throw Error("backward requires a scalar loss node");
  if (!ln.needs_grad) {
    backward_done_ = true;
    return;  // nothing on the tape requires gradients
  }
  ln.grad.data[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backprop) n.backprop(*this, n.grad);
  }
  backward_done_ = true;
}

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw Error(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                b.value().shape_string());
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Graph& g = *a.graph();
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.value().data[i];
  std::size_t pa = a.id(), pb = b.id();
  return g.emplace(std::move(out), "add", {pa, pb}, [pa, pb](Graph& gr, const Tensor& go) {
    gr.accumulate(pa, go);
    gr.accumulate(pb, go);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Graph& g = *a.graph();
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.value().data[i];
  std::size_t pa = a.id(), pb = b.id();
  return g.emplace(std::move(out), "mul", {pa, pb}, [pa, pb](Graph& gr, const Tensor& go) {
    const Tensor& av = gr.node(pa).value;
    const Tensor& bv = gr.node(pb).value;
    if (gr.needs_grad(pa)) {
      Tensor& ga = gr.node(pa).grad;
      for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i] * bv.data[i];
    }
    if (gr.needs_grad(pb)) {
      Tensor& gb = gr.node(pb).grad;
      for (std::size_t i = 0; i < go.data.size(); ++i) gb.data[i] += go.data[i] * av.data[i];
    }
  });
}

Var scale(Var a, double c) {
  Graph& g = *a.graph();
  Tensor out = a.value();
  for (double& v : out.data) v *= c;
  std::size_t pa = a.id();
  return g.emplace(std::move(out), "scale", {pa}, [pa, c](Graph& gr, const Tensor& go) {
    if (!gr.needs_grad(pa)) return;
    Tensor& ga = gr.node(pa).grad;
    for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += c * go.data[i];
  });
}

Var matmul(Var m, Var v) {
  Graph& g = *m.graph();
  const Tensor& mv = m.value();
  const Tensor& vv = v.value();
  if (mv.rank() != 2)
    throw Error("matmul: left operand must be a matrix, got " + mv.shape_string());
  std::size_t rows = mv.rows(), cols = mv.cols();
  std::size_t pm = m.id(), pv = v.id();

  if (vv.rank() == 1) {
    if (vv.shape[0] != cols)
      throw Error("matmul: shape mismatch " + mv.shape_string() + " vs " + vv.shape_string());
    Tensor out = Tensor::zeros({rows});
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      const double* mrow = &mv.data[r * cols];
      for (std::size_t c = 0; c < cols; ++c) acc += mrow[c] * vv.data[c];
      out.data[r] = acc;
    }
    return g.emplace(std::move(out), "matmul", {pm, pv},
                     [pm, pv, rows, cols](Graph& gr, const Tensor& go) {
                       const Tensor& mval = gr.node(pm).value;
                       const Tensor& vval = gr.node(pv).value;
                       if (gr.needs_grad(pm)) {
                         Tensor& gm = gr.node(pm).grad;
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c)
                             gm.data[r * cols + c] += go.data[r] * vval.data[c];
                       }
                       if (gr.needs_grad(pv)) {
                         Tensor& gv = gr.node(pv).grad;
                         for (std::size_t r = 0; r < rows; ++r) {
                           const double* mrow = &mval.data[r * cols];
                           for (std::size_t c = 0; c < cols; ++c)
                             gv.data[c] += go.data[r] * mrow[c];
                         }
                       }
                     });
  }
  if (vv.rank() == 2) {
    if (vv.rows() != cols)
      throw Error("matmul: shape mismatch " + mv.shape_string() + " vs " + vv.shape_string());
    std::size_t p = vv.cols();
    Tensor out({rows, p});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        double a = mv.data[r * cols + c];
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < p; ++j) out.data[r * p + j] += a * vv.data[c * p + j];
      }
    return g.emplace(std::move(out), "matmul", {pm, pv},
                     [pm, pv, rows, cols, p](Graph& gr, const Tensor& go) {
                       const Tensor& mval = gr.node(pm).value;
                       const Tensor& vval = gr.node(pv).value;
                       if (gr.needs_grad(pm)) {
                         Tensor& gm = gr.node(pm).grad;
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c) {
                             double acc = 0.0;
                             for (std::size_t j = 0; j < p; ++j)
                               acc += go.data[r * p + j] * vval.data[c * p + j];
                             gm.data[r * cols + c] += acc;
                           }
                       }
                       if (gr.needs_grad(pv)) {
                         Tensor& gv = gr.node(pv).grad;
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c) {
                             double a = mval.data[r * cols + c];
                             if (a == 0.0) continue;
                             for (std::size_t j = 0; j < p; ++j)
                               gv.data[c * p + j] += a * go.data[r * p + j];
                           }
                       }
                     });
  }
  throw Error("matmul: right operand must be a vector or matrix, got " + vv.shape_string());
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("concat: no inputs");
  Graph& g = *parts.front().graph();
  std::size_t total = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> sizes;
  for (const Var& p : parts) {
    if (p.value().rank() != 1)
      throw Error("concat: expects vectors, got " + p.value().shape_string());
    total += p.value().size();
    ids.push_back(p.id());
    sizes.push_back(p.value().size());
  }
  Tensor out = Tensor::zeros({total});
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + off);
    off += p.value().size();
  }
  return g.emplace(std::move(out), "concat", ids, [ids, sizes](Graph& gr, const Tensor& go) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (gr.needs_grad(ids[i])) {
        Tensor& gp = gr.node(ids[i]).grad;
        for (std::size_t j = 0; j < sizes[i]; ++j) gp.data[j] += go.data[off + j];
      }
      off += sizes[i];
    }
  });
}

namespace {

Var reduce_axis(Var x, std::size_t axis, bool mean) {
  Graph& g = *x.graph();
  const Tensor& xv = x.value();
  std::size_t px = x.id();
  const char* op = mean ? "mean_axis" : "sum_axis";
  if (xv.rank() == 1) {
    if (axis != 0) throw Error(std::string(op) + ": axis out of range for vector");
    double acc = 0.0;
    for (double v : xv.data) acc += v;
    double denom = mean ? static_cast<double>(xv.size()) : 1.0;
    std::size_t n = xv.size();
    Tensor out(acc / denom);
    return g.emplace(std::move(out), op, {px}, [px, n, denom](Graph& gr, const Tensor& go) {
      if (!gr.needs_grad(px)) return;
      Tensor& gx = gr.node(px).grad;
      double gval = go.data[0] / denom;
      for (std::size_t i = 0; i < n; ++i) gx.data[i] += gval;
    });
  }
  if (xv.rank() == 2) {
    if (axis > 1) throw Error(std::string(op) + ": axis out of range for matrix");
    std::size_t rows = xv.rows(), cols = xv.cols();
    std::size_t extent = axis == 0 ? rows : cols;
    double denom = mean ? static_cast<double>(extent) : 1.0;
    Tensor out = Tensor::zeros({axis == 0 ? cols : rows});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        out.data[axis == 0 ? c : r] += xv.data[r * cols + c] / denom;
    return g.emplace(std::move(out), op, {px},
                     [px, rows, cols, axis, denom](Graph& gr, const Tensor& go) {
                       if (!gr.needs_grad(px)) return;
                       Tensor& gx = gr.node(px).grad;
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < cols; ++c)
                           gx.data[r * cols + c] += go.data[axis == 0 ? c : r] / denom;
                     });
  }
  throw Error(std::string(op) + ": unsupported rank");
}

template <typename F, typename DF>
Var elementwise(Var x, const char* op, F f, DF df_from_y) {
  Graph& g = *x.graph();
  Tensor out = x.value();
  for (double& v : out.data) v = f(v);
  std::size_t px = x.id();
  // df_from_y computes the local derivative from the forward OUTPUT value
  Tensor saved = out;
  return g.emplace(std::move(out), op, {px},
                   [px, df_from_y, saved = std::move(saved)](Graph& gr, const Tensor& go) {
                     if (!gr.needs_grad(px)) return;
                     Tensor& gx = gr.node(px).grad;
                     for (std::size_t i = 0; i < go.data.size(); ++i)
                       gx.data[i] += go.data[i] * df_from_y(saved.data[i]);
                   });
}

}  // namespace

Var sum_axis(Var x, std::size_t axis) { return reduce_axis(x, axis, false); }
Var mean_axis(Var x, std::size_t axis) { return reduce_axis(x, axis, true); }

Var sigmoid(Var x) {
  return elementwise(
      x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double y) { return y * (1.0 - y); });
}

Var tanh_op(Var x) {
  return elementwise(
      x, "tanh", [](double v) { return std::tanh(v); }, [](double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return elementwise(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double y) { return y > 0.0 ? 1.0 : 0.0; });
}

Var conv1d(Var input, Var weights, Var bias, std::size_t c_in, std::size_t k) {
  Graph& g = *input.graph();
  const Tensor& xv = input.value();
  const Tensor& wv = weights.value();
  const Tensor& bv = bias.value();
  if (k % 2 == 0) throw Error("conv1d: receptive field must be odd");
  if (xv.rank() != 2 || xv.rows() != c_in)
    throw Error("conv1d: input must be (" + std::to_string(c_in) + " x m), got " +
                xv.shape_string());
  if (wv.rank() != 2 || wv.cols() != c_in * k)
    throw Error("conv1d: weights must be (f_out x c_in*k), got " + wv.shape_string());
  std::size_t f_out = wv.rows();
  if (bv.rank() != 1 || bv.shape[0] != f_out)
    throw Error("conv1d: bias must have one entry per filter, got " + bv.shape_string());
  std::size_t m = xv.cols();
  std::size_t pad = (k - 1) / 2;

  Tensor out({f_out, m});
  for (std::size_t f = 0; f < f_out; ++f) {
    const double* wrow = &wv.data[f * c_in * k];
    for (std::size_t j = 0; j < m; ++j) {
      double acc = bv.data[f];
      for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t kk = 0; kk < k; ++kk) {
          long src = static_cast<long>(j + kk) - static_cast<long>(pad);
          if (src < 0 || src >= static_cast<long>(m)) continue;
          acc += wrow[c * k + kk] * xv.data[c * m + static_cast<std::size_t>(src)];
        }
      out.data[f * m + j] = acc;
    }
  }
  std::size_t px = input.id(), pw = weights.id(), pb = bias.id();
  return g.emplace(
      std::move(out), "conv1d", {px, pw, pb},
      [px, pw, pb, c_in, k, f_out, m, pad](Graph& gr, const Tensor& go) {
        const Tensor& xval = gr.node(px).value;
        const Tensor& wval = gr.node(pw).value;
        if (gr.needs_grad(pb)) {
          Tensor& gb = gr.node(pb).grad;
          for (std::size_t f = 0; f < f_out; ++f)
            for (std::size_t j = 0; j < m; ++j) gb.data[f] += go.data[f * m + j];
        }
        if (gr.needs_grad(pw)) {
          Tensor& gw = gr.node(pw).grad;
          for (std::size_t f = 0; f < f_out; ++f)
            for (std::size_t c = 0; c < c_in; ++c)
              for (std::size_t kk = 0; kk < k; ++kk) {
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                  long src = static_cast<long>(j + kk) - static_cast<long>(pad);
                  if (src < 0 || src >= static_cast<long>(m)) continue;
                  acc += go.data[f * m + j] * xval.data[c * m + static_cast<std::size_t>(src)];
                }
                gw.data[f * c_in * k + c * k + kk] += acc;
              }
        }
        if (gr.needs_grad(px)) {
          Tensor& gx = gr.node(px).grad;
          for (std::size_t f = 0; f < f_out; ++f) {
            const double* wrow = &wval.data[f * c_in * k];
            for (std::size_t j = 0; j < m; ++j) {
              double gj = go.data[f * m + j];
              if (gj == 0.0) continue;
              for (std::size_t c = 0; c < c_in; ++c)
                for (std::size_t kk = 0; kk < k; ++kk) {
                  long src = static_cast<long>(j + kk) - static_cast<long>(pad);
                  if (src < 0 || src >= static_cast<long>(m)) continue;
                  gx.data[c * m + static_cast<std::size_t>(src)] += gj * wrow[c * k + kk];
                }
            }
          }
        }
      });
}

Var maxpool1d(Var input, std::size_t window) {
  Graph& g = *input.graph();
  const Tensor& xv = input.value();
  if (xv.rank() != 2) throw Error("maxpool1d: input must be (c x m), got " + xv.shape_string());
  if (window == 0) throw Error("maxpool1d: window must be positive");
  std::size_t c = xv.rows(), m = xv.cols();
  std::size_t out_len = m / window;
  if (out_len == 0)
    throw Error("maxpool1d: window " + std::to_string(window) + " exceeds length " +
                std::to_string(m));
  Tensor out({c, out_len});
  std::vector<std::size_t> argmax(c * out_len);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t j = 0; j < out_len; ++j) {
      std::size_t base = ch * m + j * window;
      std::size_t best = base;
      for (std::size_t t = 1; t < window; ++t)
        if (xv.data[base + t] > xv.data[best]) best = base + t;
      out.data[ch * out_len + j] = xv.data[best];
      argmax[ch * out_len + j] = best;
    }
  std::size_t px = input.id();
  return g.emplace(std::move(out), "maxpool1d", {px},
                   [px, argmax = std::move(argmax)](Graph& gr, const Tensor& go) {
                     if (!gr.needs_grad(px)) return;
                     Tensor& gx = gr.node(px).grad;
                     for (std::size_t i = 0; i < go.data.size(); ++i)
                       gx.data[argmax[i]] += go.data[i];
                   });
}

Var embedding_row(Var table, std::size_t row) {
  Graph& g = *table.graph();
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw Error("embedding_row: table must be a matrix");
  if (row >= tv.rows())
    throw Error("embedding_row: row " + std::to_string(row) + " out of range " +
                std::to_string(tv.rows()));
  std::size_t cols = tv.cols();
  Tensor out = Tensor::zeros({cols});
  std::copy(tv.data.begin() + row * cols, tv.data.begin() + (row + 1) * cols, out.data.begin());
  std::size_t pt = table.id();
  return g.emplace(std::move(out), "embedding_row", {pt},
                   [pt, row, cols](Graph& gr, const Tensor& go) {
                     if (!gr.needs_grad(pt)) return;
                     Tensor& gt = gr.node(pt).grad;
                     for (std::size_t i = 0; i < cols; ++i) gt.data[row * cols + i] += go.data[i];
                   });
}

Var reshape(Var x, std::vector<std::size_t> shape) {
  std::size_t total = 1;
  for (std::size_t d : shape) total *= d;
  if (total != x.value().size())
    throw Error("reshape: cannot view " + x.value().shape_string() + " as " +
                Tensor(shape, 0.0).shape_string());
  Graph& g = *x.graph();
  Tensor out(shape, 0.0);
  out.data = x.value().data;
  std::size_t px = x.id();
  return g.emplace(std::move(out), "reshape", {px}, [px](Graph& gr, const Tensor& go) {
    if (!gr.needs_grad(px)) return;
    Tensor& gx = gr.node(px).grad;
    for (std::size_t i = 0; i < go.data.size(); ++i) gx.data[i] += go.data[i];
  });
}

Var dropout_mask(Var x, const Tensor& mask) {
  if (!x.value().same_shape(mask))
    throw Error("dropout_mask: mask shape " + mask.shape_string() + " does not match input " +
                x.value().shape_string());
  Graph& g = *x.graph();
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask.data[i];
  std::size_t px = x.id();
  return g.emplace(std::move(out), "dropout_mask", {px},
                   [px, mask](Graph& gr, const Tensor& go) {
                     if (!gr.needs_grad(px)) return;
                     Tensor& gx = gr.node(px).grad;
                     for (std::size_t i = 0; i < go.data.size(); ++i)
                       gx.data[i] += go.data[i] * mask.data[i];
                   });
}

Var bce(Var r, const std::vector<double>& targets) {
  Graph& g = *r.graph();
  const Tensor& rv = r.value();
  if (rv.rank() != 1 || rv.size() != targets.size())
    throw Error("bce: prediction shape " + rv.shape_string() + " does not match " +
                std::to_string(targets.size()) + " targets");
  for (double y : targets)
    if (y != 0.0 && y != 1.0) throw DataError("bce: targets must be 0 or 1");
  double n = static_cast<double>(targets.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    double rc = std::clamp(rv.data[i], kBceClamp, 1.0 - kBceClamp);
    loss -= targets[i] * std::log(rc) + (1.0 - targets[i]) * std::log(1.0 - rc);
  }
  loss /= n;
  std::size_t pr = r.id();
  return g.emplace(Tensor(loss), "bce", {pr}, [pr, targets, n](Graph& gr, const Tensor& go) {
    if (!gr.needs_grad(pr)) return;
    const Tensor& rval = gr.node(pr).value;
    Tensor& grad = gr.node(pr).grad;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      double v = rval.data[i];
      if (v <= kBceClamp || v >= 1.0 - kBceClamp) continue;  // clamp region: flat
      grad.data[i] += go.data[0] * (-(targets[i] / v - (1.0 - targets[i]) / (1.0 - v)) / n);
    }
  });
}

GradCheckResult gradcheck(const std::function<Var(Graph&, const std::vector<Var>&)>& f,
                          const std::vector<Tensor>& point, double epsilon, bool kink_guard) {
  // analytic gradients
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> leaves;
    leaves.reserve(point.size());
    for (const Tensor& t : point) leaves.push_back(g.leaf(t, true));
    Var loss = f(g, leaves);
    if (!loss.value().is_scalar()) throw Error("gradcheck: function must return a scalar");
    g.backward(loss);
    for (const Var& v : leaves) analytic.push_back(v.grad());
  }

  auto eval = [&](const std::vector<Tensor>& p) {
    Graph g;
    std::vector<Var> leaves;
    leaves.reserve(p.size());
    for (const Tensor& t : p) leaves.push_back(g.leaf(t, false));
    double v = f(g, leaves).value().scalar_value();
    if (!std::isfinite(v)) throw NumericError("gradcheck: non-finite loss value");
    return v;
  };

  GradCheckResult result;
  std::vector<Tensor> probe = point;
  for (std::size_t t = 0; t < point.size(); ++t) {
    for (std::size_t i = 0; i < point[t].data.size(); ++i) {
      double saved = probe[t].data[i];
      auto central = [&](double eps) {
        probe[t].data[i] = saved + eps;
        double up = eval(probe);
        probe[t].data[i] = saved - eps;
        double down = eval(probe);
        probe[t].data[i] = saved;
        double fd = (up - down) / (2.0 * eps);
        if (!std::isfinite(fd))
          throw NumericError("gradcheck: non-finite difference at tensor " + std::to_string(t) +
                             " coordinate " + std::to_string(i));
        return fd;
      };
      double fd = central(epsilon);
      if (kink_guard) {
        double half = central(epsilon / 2.0);
        // disagreement between the two stencils marks a kink inside them
        if (std::fabs(fd - half) > 0.02 * (std::fabs(fd) + std::fabs(half)) + 1e-7) {
          ++result.unstable_skipped;
          continue;
        }
        fd = (4.0 * half - fd) / 3.0;  // Richardson: cancels the O(eps^2) term
      }
      ++result.coords_checked;
      double ad = analytic[t].data[i];
      double rel = std::fabs(ad - fd) / std::max(1e-6, std::fabs(ad) + std::fabs(fd));
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_input = t;
        result.worst_index = i;
        result.analytic = ad;
        result.numeric = fd;
      }
    }
  }
  return result;
}

}  // namespace tedrate::autodiff
