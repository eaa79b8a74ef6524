#pragma once

#include "temp/nn/tensor.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace temp::nn {

struct Parameter {
  std::string name;
  Tensor value;
};

/// Gradient buffers aligned with a ParameterSet.
using Gradients = std::vector<Tensor>;

/// Ordered, named collection of trainable tensors. Order is insertion order
/// and is what checkpoints and optimizers iterate over.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t id(const std::string& name) const;
  bool contains(const std::string& name) const { return ids_.count(name) != 0; }
  const Tensor& value(const std::string& name) const { return params_[id(name)].value; }
  Tensor& value(const std::string& name) { return params_[id(name)].value; }

  Gradients zero_gradients() const;
  std::size_t scalar_count() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> ids_;
};

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode recording of tensor operations. One tape per forward pass;
/// tapes are cheap and never shared between threads. With recording off,
/// backward closures are dropped and the tape only evaluates.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t);
  /// Leaf bound to parameter `id` of `params`, read without copying.
  Var param(const ParameterSet& params, std::size_t id);
  Var param(const ParameterSet& params, const std::string& name);

  Var push(Tensor value, Backward backward);

  const Tensor& value(int id) const;
  Tensor& grad(int id);
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }

  /// Seeds d(loss)/d(loss) = 1 for a single-element `loss` and propagates.
  /// Parameter-leaf gradients are accumulated into `param_grads` if given.
  void backward(Var loss, Gradients* param_grads = nullptr);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor grad;
    Backward backward;
    long param_id = -1;
  };

  bool record_;
  std::vector<Node> nodes_;
};

// Differentiable operations. Every binary op requires both Vars on one tape.

/// a[n x k] * b[k x m]
Var matmul(Var a, Var b);
/// a[n x k] * b[m x k]^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// x[n x m] + bias[m] broadcast over rows.
Var add_bias(Var x, Var bias);
Var scale(Var a, double s);
Var relu(Var x);
Var softmax_rows(Var x);
/// Per-row (x - mean) / sqrt(var + eps) * alpha + delta, population variance.
Var layer_norm(Var x, Var alpha, Var delta, double eps = 1e-5);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var slice_rows(Var x, std::size_t start, std::size_t count);
/// Mean of squared differences; 1x1 result.
Var mse(Var a, Var b);
/// Sum of weighted 1x1 scalars.
Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights);

/// xW + b
Var linear(Var x, Var w, Var b);

}  // namespace temp::nn
