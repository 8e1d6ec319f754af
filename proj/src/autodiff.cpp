#include "presup/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "presup/error.hpp"

namespace presup::ad {

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("use of an unbound Var");
  return tape_->value(id_);
}

Var Tape::push_leaf(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.owned = std::move(value);
  return push_leaf(std::move(n));
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.op = "constant";
  n.ref = &value;
  return push_leaf(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.op = "variable";
  n.owned = std::move(value);
  n.requires_grad = true;
  return push_leaf(std::move(n));
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  if (store_ && store_ != &store) {
    throw UsageError("a tape may only bind parameters from one store");
  }
  store_ = &store;
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  const ParamEntry& e = store.entry(name);
  Node n;
  n.op = "param";
  n.ref = &e.value;
  n.requires_grad = e.trainable;
  n.param_name = name;
  Var v = push_leaf(std::move(n));
  param_nodes_.emplace(name, v.id());
  return v;
}

Var Tape::record(std::string_view op, const std::vector<Var>& inputs, ForwardFn forward,
                 BackwardFn backward) {
  Node n;
  n.op = op;
  n.inputs.reserve(inputs.size());
  std::vector<const Tensor*> in;
  in.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.tape() != this) throw UsageError(std::string(op) + ": input from another tape");
    n.inputs.push_back(v.id());
    in.push_back(&nodes_[v.id()].value());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  n.owned = forward(in);
  n.forward = std::move(forward);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const { return nodes_.at(id).value(); }

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (!has_backward_ || !n.requires_grad) {
    throw UsageError("no gradient recorded for node " + std::to_string(v.id()));
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw UsageError("backward: loss is not on this tape");
  const Tensor& lv = nodes_.at(loss.id()).value();
  if (lv.rank() != 0) {
    throw UsageError("backward needs a scalar loss, got shape " + to_string(lv.shape()));
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad && i <= loss.id()) {
      n.grad = Tensor(n.value().shape());
    } else {
      n.grad = Tensor();
    }
  }
  has_backward_ = true;
  visits_ = 0;
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad[0] = 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    ++visits_;
    if (!n.backward) continue;
    BackwardContext ctx{n.value(), n.grad, {}, {}};
    ctx.in.reserve(n.inputs.size());
    ctx.in_grad.reserve(n.inputs.size());
    for (std::size_t id : n.inputs) {
      Node& src = nodes_[id];
      ctx.in.push_back(&src.value());
      ctx.in_grad.push_back(src.requires_grad ? &src.grad : nullptr);
    }
    n.backward(ctx);
  }
}

Gradients Tape::gradients(const ParamStore& store) const {
  if (!has_backward_) throw UsageError("gradients() before backward()");
  Gradients out;
  for (const auto& [name, e] : store) {
    if (!e.trainable) continue;
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end() && store_ == &store) {
      out.emplace(name, nodes_[it->second].grad);
    } else {
      out.emplace(name, Tensor(e.value.shape()));
    }
  }
  return out;
}

std::size_t Tape::replay_mismatches() const {
  std::size_t bad = 0;
  std::vector<const Tensor*> in;
  for (const Node& n : nodes_) {
    if (!n.forward) continue;
    in.clear();
    for (std::size_t id : n.inputs) in.push_back(&nodes_[id].value());
    if (!(n.forward(in) == n.value())) ++bad;
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Primitives

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (!a.tape() || a.tape() != b.tape()) {
    throw UsageError(std::string(op) + ": operands are not on the same tape");
  }
  return *a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(t.shape()));
  }
}

template <typename F, typename D>
Var unary(Var a, std::string_view op, F f, D dfdx) {
  // dfdx(x, y) gives dy/dx from input and output.
  return a.tape()->record(
      op, {a},
      [f](std::span<const Tensor* const> in) {
        Tensor out(in[0]->shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = f((*in[0])[i]);
        return out;
      },
      [dfdx](const BackwardContext& c) {
        if (!c.in_grad[0]) return;
        Tensor& g = *c.in_grad[0];
        for (std::size_t i = 0; i < g.size(); ++i)
          g[i] += c.out_grad[i] * dfdx((*c.in[0])[i], c.out[i]);
      });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  // Validate eagerly so the error names both shapes.
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || (bv.rank() != 1 && bv.rank() != 2) || av.shape()[1] != bv.shape()[0]) {
    throw ShapeError("matmul shape mismatch: " + to_string(av.shape()) + " * " +
                     to_string(bv.shape()));
  }
  return t.record(
      "matmul", {a, b},
      [](std::span<const Tensor* const> in) { return kernels::matmul(*in[0], *in[1]); },
      [](const BackwardContext& c) {
        const Tensor& A = *c.in[0];
        const Tensor& B = *c.in[1];
        const std::size_t m = A.shape()[0];
        const std::size_t k = A.shape()[1];
        const std::size_t n = B.rank() == 2 ? B.shape()[1] : 1;
        const double* g = c.out_grad.data().data();
        if (Tensor* ga = c.in_grad[0]) {
          // dA = G * B^T
          double* pga = ga->data().data();
          const double* pb = B.data().data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * pb[p * n + j];
              pga[i * k + p] += s;
            }
        }
        if (Tensor* gb = c.in_grad[1]) {
          // dB = A^T * G
          double* pgb = gb->data().data();
          const double* pa = A.data().data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double av = pa[i * k + p];
              if (av == 0.0) continue;
              for (std::size_t j = 0; j < n; ++j) pgb[p * n + j] += av * g[i * n + j];
            }
        }
      });
}

Var transpose(Var m) {
  require_rank(m.value(), 2, "transpose");
  return m.tape()->record(
      "transpose", {m},
      [](std::span<const Tensor* const> in) { return kernels::transpose(*in[0]); },
      [](const BackwardContext& c) {
        if (!c.in_grad[0]) return;
        Tensor& g = *c.in_grad[0];
        const std::size_t r = g.shape()[0];
        const std::size_t cc = g.shape()[1];
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < cc; ++j) g.at(i, j) += c.out_grad.at(j, i);
      });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool broadcast = av.rank() == 2 && bv.rank() == 1 && av.shape()[1] == bv.shape()[0];
  if (!broadcast) require_same_shape(av, bv, "add");
  return t.record(
      "add", {a, b},
      [broadcast](std::span<const Tensor* const> in) {
        Tensor out = *in[0];
        const Tensor& y = *in[1];
        if (broadcast) {
          const std::size_t c = y.size();
          for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i % c];
        } else {
          for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
        }
        return out;
      },
      [broadcast](const BackwardContext& c) {
        if (Tensor* ga = c.in_grad[0])
          for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += c.out_grad[i];
        if (Tensor* gb = c.in_grad[1]) {
          const std::size_t n = gb->size();
          if (broadcast) {
            for (std::size_t i = 0; i < c.out_grad.size(); ++i) (*gb)[i % n] += c.out_grad[i];
          } else {
            for (std::size_t i = 0; i < n; ++i) (*gb)[i] += c.out_grad[i];
          }
        }
      });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  return t.record(
      "sub", {a, b},
      [](std::span<const Tensor* const> in) {
        Tensor out = *in[0];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= (*in[1])[i];
        return out;
      },
      [](const BackwardContext& c) {
        if (Tensor* ga = c.in_grad[0])
          for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += c.out_grad[i];
        if (Tensor* gb = c.in_grad[1])
          for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] -= c.out_grad[i];
      });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  return t.record(
      "mul", {a, b},
      [](std::span<const Tensor* const> in) {
        Tensor out = *in[0];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*in[1])[i];
        return out;
      },
      [](const BackwardContext& c) {
        if (Tensor* ga = c.in_grad[0])
          for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += c.out_grad[i] * (*c.in[1])[i];
        if (Tensor* gb = c.in_grad[1])
          for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += c.out_grad[i] * (*c.in[0])[i];
      });
}

Var scale(Var a, double k) {
  return unary(
      a, "scale", [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Var tanh(Var a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var concat(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat");
  require_rank(a.value(), 1, "concat");
  require_rank(b.value(), 1, "concat");
  return t.record(
      "concat", {a, b},
      [](std::span<const Tensor* const> in) {
        std::vector<double> d(in[0]->values());
        d.insert(d.end(), in[1]->values().begin(), in[1]->values().end());
        return Tensor::vector(std::move(d));
      },
      [](const BackwardContext& c) {
        const std::size_t na = c.in[0]->size();
        if (Tensor* ga = c.in_grad[0])
          for (std::size_t i = 0; i < na; ++i) (*ga)[i] += c.out_grad[i];
        if (Tensor* gb = c.in_grad[1])
          for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += c.out_grad[na + i];
      });
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat_cols");
  require_rank(a.value(), 2, "concat_cols");
  require_rank(b.value(), 2, "concat_cols");
  if (a.value().shape()[0] != b.value().shape()[0]) {
    throw ShapeError("concat_cols: row mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  return t.record(
      "concat_cols", {a, b},
      [](std::span<const Tensor* const> in) {
        const Tensor& x = *in[0];
        const Tensor& y = *in[1];
        const std::size_t r = x.shape()[0], cx = x.shape()[1], cy = y.shape()[1];
        Tensor out(Shape{r, cx + cy});
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < cx; ++j) out.at(i, j) = x.at(i, j);
          for (std::size_t j = 0; j < cy; ++j) out.at(i, cx + j) = y.at(i, j);
        }
        return out;
      },
      [](const BackwardContext& c) {
        const std::size_t r = c.out.shape()[0];
        const std::size_t cx = c.in[0]->shape()[1], cy = c.in[1]->shape()[1];
        for (std::size_t i = 0; i < r; ++i) {
          if (Tensor* ga = c.in_grad[0])
            for (std::size_t j = 0; j < cx; ++j) ga->at(i, j) += c.out_grad.at(i, j);
          if (Tensor* gb = c.in_grad[1])
            for (std::size_t j = 0; j < cy; ++j) gb->at(i, j) += c.out_grad.at(i, cx + j);
        }
      });
}

Var concat_rows(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat_rows");
  require_rank(a.value(), 2, "concat_rows");
  require_rank(b.value(), 2, "concat_rows");
  if (a.value().shape()[1] != b.value().shape()[1]) {
    throw ShapeError("concat_rows: column mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  return t.record(
      "concat_rows", {a, b},
      [](std::span<const Tensor* const> in) {
        std::vector<double> d(in[0]->values());
        d.insert(d.end(), in[1]->values().begin(), in[1]->values().end());
        return Tensor(Shape{in[0]->shape()[0] + in[1]->shape()[0], in[0]->shape()[1]},
                      std::move(d));
      },
      [](const BackwardContext& c) {
        const std::size_t na = c.in[0]->size();
        if (Tensor* ga = c.in_grad[0])
          for (std::size_t i = 0; i < na; ++i) (*ga)[i] += c.out_grad[i];
        if (Tensor* gb = c.in_grad[1])
          for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += c.out_grad[na + i];
      });
}

Var slice(Var v, std::size_t begin, std::size_t end) {
  require_rank(v.value(), 1, "slice");
  if (begin > end || end > v.value().size()) {
    throw ShapeError("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of range for " + to_string(v.shape()));
  }
  return v.tape()->record(
      "slice", {v},
      [begin, end](std::span<const Tensor* const> in) {
        const auto& d = in[0]->values();
        return Tensor::vector(std::vector<double>(d.begin() + begin, d.begin() + end));
      },
      [begin](const BackwardContext& c) {
        if (Tensor* g = c.in_grad[0])
          for (std::size_t i = 0; i < c.out_grad.size(); ++i) (*g)[begin + i] += c.out_grad[i];
      });
}

Var row(Var m, std::size_t r) {
  require_rank(m.value(), 2, "row");
  if (r >= m.value().shape()[0]) {
    throw ShapeError("row " + std::to_string(r) + " out of range for " + to_string(m.shape()));
  }
  return m.tape()->record(
      "row", {m},
      [r](std::span<const Tensor* const> in) {
        const std::size_t c = in[0]->shape()[1];
        const auto& d = in[0]->values();
        return Tensor::vector(std::vector<double>(d.begin() + r * c, d.begin() + (r + 1) * c));
      },
      [r](const BackwardContext& c) {
        if (Tensor* g = c.in_grad[0]) {
          const std::size_t n = c.out_grad.size();
          for (std::size_t j = 0; j < n; ++j) (*g)[r * n + j] += c.out_grad[j];
        }
      });
}

Var stack_cols(const std::vector<Var>& cols) {
  if (cols.empty()) throw ShapeError("stack_cols: no columns");
  Tape* t = cols.front().tape();
  const std::size_t n = cols.front().value().size();
  for (const Var& v : cols) {
    require_rank(v.value(), 1, "stack_cols");
    if (v.tape() != t) throw UsageError("stack_cols: operands are not on the same tape");
    if (v.value().size() != n) throw ShapeError("stack_cols: ragged columns");
  }
  return t->record(
      "stack_cols", cols,
      [](std::span<const Tensor* const> in) {
        const std::size_t n = in[0]->size();
        const std::size_t k = in.size();
        Tensor out(Shape{n, k});
        for (std::size_t j = 0; j < k; ++j)
          for (std::size_t i = 0; i < n; ++i) out.at(i, j) = (*in[j])[i];
        return out;
      },
      [](const BackwardContext& c) {
        const std::size_t n = c.out.shape()[0];
        for (std::size_t j = 0; j < c.in_grad.size(); ++j)
          if (Tensor* g = c.in_grad[j])
            for (std::size_t i = 0; i < n; ++i) (*g)[i] += c.out_grad.at(i, j);
      });
}

Var gather_rows(Var table, std::vector<std::size_t> ids) {
  require_rank(table.value(), 2, "gather_rows");
  for (std::size_t id : ids)
    if (id >= table.value().shape()[0])
      throw ShapeError("gather_rows: id " + std::to_string(id) + " out of range for " +
                       to_string(table.shape()));
  return table.tape()->record(
      "gather_rows", {table},
      [ids](std::span<const Tensor* const> in) {
        const std::size_t c = in[0]->shape()[1];
        Tensor out(Shape{ids.size(), c});
        for (std::size_t i = 0; i < ids.size(); ++i)
          std::memcpy(&out.at(i, 0), in[0]->data().data() + ids[i] * c, c * sizeof(double));
        return out;
      },
      [ids](const BackwardContext& c) {
        Tensor* g = c.in_grad[0];
        if (!g) return;
        const std::size_t cols = g->shape()[1];
        for (std::size_t i = 0; i < ids.size(); ++i)
          for (std::size_t j = 0; j < cols; ++j) g->at(ids[i], j) += c.out_grad.at(i, j);
      });
}

Var gather(Var v, std::vector<std::size_t> ids) {
  require_rank(v.value(), 1, "gather");
  for (std::size_t id : ids)
    if (id >= v.value().size())
      throw ShapeError("gather: id " + std::to_string(id) + " out of range for " +
                       to_string(v.shape()));
  return v.tape()->record(
      "gather", {v},
      [ids](std::span<const Tensor* const> in) {
        Tensor out(Shape{ids.size()});
        for (std::size_t i = 0; i < ids.size(); ++i) out[i] = (*in[0])[ids[i]];
        return out;
      },
      [ids](const BackwardContext& c) {
        if (Tensor* g = c.in_grad[0])
          for (std::size_t i = 0; i < ids.size(); ++i) (*g)[ids[i]] += c.out_grad[i];
      });
}

Var unfold_rows(Var m, std::size_t width) {
  require_rank(m.value(), 2, "unfold_rows");
  const std::size_t T = m.value().shape()[0];
  if (width == 0 || width > T) {
    throw ShapeError("unfold_rows: width " + std::to_string(width) + " invalid for " +
                     to_string(m.shape()));
  }
  return m.tape()->record(
      "unfold_rows", {m},
      [width](std::span<const Tensor* const> in) {
        const std::size_t T = in[0]->shape()[0];
        const std::size_t n = in[0]->shape()[1];
        const std::size_t rows = T - width + 1;
        Tensor out(Shape{rows, width * n});
        for (std::size_t t = 0; t < rows; ++t)
          std::memcpy(&out.at(t, 0), in[0]->data().data() + t * n, width * n * sizeof(double));
        return out;
      },
      [width](const BackwardContext& c) {
        Tensor* g = c.in_grad[0];
        if (!g) return;
        const std::size_t n = g->shape()[1];
        const std::size_t rows = c.out.shape()[0];
        for (std::size_t t = 0; t < rows; ++t)
          for (std::size_t k = 0; k < width * n; ++k) (*g)[t * n + k] += c.out_grad.at(t, k);
      });
}

Var softmax(Var v) {
  require_rank(v.value(), 1, "softmax");
  return v.tape()->record(
      "softmax", {v},
      [](std::span<const Tensor* const> in) { return kernels::softmax(*in[0]); },
      [](const BackwardContext& c) {
        Tensor* g = c.in_grad[0];
        if (!g) return;
        double dotp = 0.0;
        for (std::size_t i = 0; i < c.out.size(); ++i) dotp += c.out_grad[i] * c.out[i];
        for (std::size_t i = 0; i < c.out.size(); ++i)
          (*g)[i] += c.out[i] * (c.out_grad[i] - dotp);
      });
}

Var softmax_axis(Var m, Axis axis) {
  require_rank(m.value(), 2, "softmax_axis");
  return m.tape()->record(
      "softmax_axis", {m},
      [axis](std::span<const Tensor* const> in) { return kernels::softmax_axis(*in[0], axis); },
      [axis](const BackwardContext& c) {
        Tensor* g = c.in_grad[0];
        if (!g) return;
        const std::size_t r = c.out.shape()[0];
        const std::size_t cc = c.out.shape()[1];
        const Tensor& y = c.out;
        const Tensor& gy = c.out_grad;
        if (axis == Axis::kCols) {
          for (std::size_t i = 0; i < r; ++i) {
            double dotp = 0.0;
            for (std::size_t j = 0; j < cc; ++j) dotp += gy.at(i, j) * y.at(i, j);
            for (std::size_t j = 0; j < cc; ++j) g->at(i, j) += y.at(i, j) * (gy.at(i, j) - dotp);
          }
        } else {
          for (std::size_t j = 0; j < cc; ++j) {
            double dotp = 0.0;
            for (std::size_t i = 0; i < r; ++i) dotp += gy.at(i, j) * y.at(i, j);
            for (std::size_t i = 0; i < r; ++i) g->at(i, j) += y.at(i, j) * (gy.at(i, j) - dotp);
          }
        }
      });
}

Var mean_axis(Var m, Axis axis) {
  require_rank(m.value(), 2, "mean_axis");
  return m.tape()->record(
      "mean_axis", {m},
      [axis](std::span<const Tensor* const> in) { return kernels::mean_axis(*in[0], axis); },
      [axis](const BackwardContext& c) {
        Tensor* g = c.in_grad[0];
        if (!g) return;
        const std::size_t r = g->shape()[0];
        const std::size_t cc = g->shape()[1];
        if (axis == Axis::kCols) {
          const double k = 1.0 / static_cast<double>(cc);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < cc; ++j) g->at(i, j) += c.out_grad[i] * k;
        } else {
          const double k = 1.0 / static_cast<double>(r);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < cc; ++j) g->at(i, j) += c.out_grad[j] * k;
        }
      });
}

Var max_axis(Var m, Axis axis) {
  require_rank(m.value(), 2, "max_axis");
  // The arg-max is recomputed in backward from the recorded input; ties go
  // to the first index in both passes.
  auto argmax = [axis](const Tensor& x) {
    const std::size_t r = x.shape()[0];
    const std::size_t c = x.shape()[1];
    std::vector<std::size_t> idx;
    if (axis == Axis::kRows) {
      idx.assign(c, 0);
      for (std::size_t j = 0; j < c; ++j)
        for (std::size_t i = 1; i < r; ++i)
          if (x.at(i, j) > x.at(idx[j], j)) idx[j] = i;
    } else {
      idx.assign(r, 0);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 1; j < c; ++j)
          if (x.at(i, j) > x.at(i, idx[i])) idx[i] = j;
    }
    return idx;
  };
  return m.tape()->record(
      "max_axis", {m},
      [axis, argmax](std::span<const Tensor* const> in) {
        const Tensor& x = *in[0];
        const auto idx = argmax(x);
        Tensor out(Shape{idx.size()});
        for (std::size_t k = 0; k < idx.size(); ++k)
          out[k] = axis == Axis::kRows ? x.at(idx[k], k) : x.at(k, idx[k]);
        return out;
      },
      [axis, argmax](const BackwardContext& c) {
        Tensor* g = c.in_grad[0];
        if (!g) return;
        const auto idx = argmax(*c.in[0]);
        for (std::size_t k = 0; k < idx.size(); ++k) {
          if (axis == Axis::kRows) {
            g->at(idx[k], k) += c.out_grad[k];
          } else {
            g->at(k, idx[k]) += c.out_grad[k];
          }
        }
      });
}

Var sum(Var v) {
  return v.tape()->record(
      "sum", {v},
      [](std::span<const Tensor* const> in) {
        double s = 0.0;
        for (double x : in[0]->values()) s += x;
        return Tensor::scalar(s);
      },
      [](const BackwardContext& c) {
        if (Tensor* g = c.in_grad[0])
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[0];
      });
}

Var dot(Var a, Var b) {
  Tape& t = same_tape(a, b, "dot");
  require_rank(a.value(), 1, "dot");
  require_same_shape(a.value(), b.value(), "dot");
  return t.record(
      "dot", {a, b},
      [](std::span<const Tensor* const> in) {
        double s = 0.0;
        for (std::size_t i = 0; i < in[0]->size(); ++i) s += (*in[0])[i] * (*in[1])[i];
        return Tensor::vector({s});
      },
      [](const BackwardContext& c) {
        const double g0 = c.out_grad[0];
        if (Tensor* ga = c.in_grad[0])
          for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g0 * (*c.in[1])[i];
        if (Tensor* gb = c.in_grad[1])
          for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += g0 * (*c.in[0])[i];
      });
}

Var nll(Var probs, std::size_t label, double floor) {
  require_rank(probs.value(), 1, "nll");
  if (label >= probs.value().size()) {
    throw UsageError("nll: label " + std::to_string(label) + " out of range");
  }
  return probs.tape()->record(
      "nll", {probs},
      [label, floor](std::span<const Tensor* const> in) {
        return Tensor::scalar(-std::log(std::max((*in[0])[label], floor)));
      },
      [label, floor](const BackwardContext& c) {
        Tensor* g = c.in_grad[0];
        if (!g) return;
        const double p = (*c.in[0])[label];
        if (p > floor) (*g)[label] -= c.out_grad[0] / p;
      });
}

}  // namespace presup::ad
