#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "presup/param_store.hpp"
#include "presup/tensor.hpp"

namespace presup::ad {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

struct BackwardContext {
  const Tensor& out;
  const Tensor& out_grad;
  std::vector<const Tensor*> in;
  // nullptr where the input does not need a gradient.
  std::vector<Tensor*> in_grad;
};

using ForwardFn = std::function<Tensor(std::span<const Tensor* const>)>;
using BackwardFn = std::function<void(const BackwardContext&)>;

// Append-only record of primitive operations. Nodes are stored in creation
// order, which is a topological order; backward() walks it in reverse.
// A tape belongs to one thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Refers to `value` without copying; it must outlive the tape.
  Var constant_ref(const Tensor& value);
  // Leaf that receives a gradient (for tests and ad hoc differentiation).
  Var variable(Tensor value);
  // Leaf bound to a stored parameter. Repeated calls with the same name
  // return the same node. Frozen parameters behave as constants.
  Var param(const ParamStore& store, const std::string& name);

  Var record(std::string_view op, const std::vector<Var>& inputs, ForwardFn forward,
             BackwardFn backward);

  // Reverse-mode sweep from a rank-0 loss.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }

  // Gradients for every trainable parameter in `store`; zero for those the
  // loss did not reach. Requires a prior backward().
  Gradients gradients(const ParamStore& store) const;

  // Re-run every recorded forward from its inputs; returns the number of
  // nodes whose recomputed value differs bitwise from the recorded one.
  std::size_t replay_mismatches() const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t last_backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    std::string_view op;
    std::vector<std::size_t> inputs;
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor grad;
    bool requires_grad = false;
    ForwardFn forward;
    BackwardFn backward;
    std::string param_name;

    const Tensor& value() const { return ref ? *ref : owned; }
  };

  Var push_leaf(Node node);

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t, std::less<>> param_nodes_;
  const ParamStore* store_ = nullptr;
  std::size_t visits_ = 0;
  bool has_backward_ = false;
};

// Primitives. Shape rules:
//  matmul: [m,k]x[k,n] -> [m,n]; [m,k]x[k] -> [m]
//  add: equal shapes, or matrix [r,c] + vector [c] broadcast over rows
//  sub, mul: equal shapes
Var matmul(Var a, Var b);
Var transpose(Var m);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double k);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var exp(Var a);

// Vector concatenation; concat_cols/concat_rows join matrices side by side
// and top to bottom.
Var concat(Var a, Var b);
Var concat_cols(Var a, Var b);
Var concat_rows(Var a, Var b);
Var slice(Var v, std::size_t begin, std::size_t end);
Var row(Var m, std::size_t r);
// Columns of the result are the given equal-length vectors.
Var stack_cols(const std::vector<Var>& cols);
Var gather_rows(Var table, std::vector<std::size_t> ids);
Var gather(Var v, std::vector<std::size_t> ids);
// Sliding windows over rows: [T,n] -> [T-w+1, w*n], row t = rows t..t+w-1.
Var unfold_rows(Var m, std::size_t width);

Var softmax(Var v);
Var softmax_axis(Var m, Axis axis);
Var mean_axis(Var m, Axis axis);
Var max_axis(Var m, Axis axis);
Var sum(Var v);  // -> rank 0
Var dot(Var a, Var b);  // vectors -> [1]
// -log(max(probs[label], floor)) as a rank-0 value.
Var nll(Var probs, std::size_t label, double floor = 1e-12);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace presup::ad
