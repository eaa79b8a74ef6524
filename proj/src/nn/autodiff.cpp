#include "temp/nn/autodiff.hpp"

#include <Eigen/Core>

#include <cmath>

namespace temp::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const Tensor& t) { return ConstMap(t.data(), t.rows(), t.cols()); }
MutMap view(Tensor& t) { return MutMap(t.data(), t.rows(), t.cols()); }

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw ShapeError("operands recorded on different tapes");
  }
  return *a.tape;
}

void require(bool ok, const std::string& op, const Tensor& a, const Tensor& b) {
  if (!ok) {
    throw ShapeError(op + ": incompatible shapes " + a.shape_string() + " and " +
                     b.shape_string());
  }
}

}  // namespace

std::size_t ParameterSet::add(std::string name, Tensor value) {
  if (ids_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  ids_[name] = params_.size();
  params_.push_back(Parameter{std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::size_t ParameterSet::id(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second;
}

Gradients ParameterSet::zero_gradients() const {
  Gradients g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.push_back(Tensor::zeros_like(p.value));
  return g;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor t) { return push(std::move(t), nullptr); }

Var Tape::param(const ParameterSet& params, std::size_t id) {
  Node n;
  n.ref = &params[id].value;
  n.param_id = static_cast<long>(id);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(const ParameterSet& params, const std::string& name) {
  return param(params, params.id(name));
}

Var Tape::push(Tensor value, Backward backward) {
  Node n;
  n.owned = std::move(value);
  if (record_) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

const Tensor& Tape::value(int id) const {
  const Node& n = nodes_.at(id);
  return n.ref ? *n.ref : n.owned;
}

Tensor& Tape::grad(int id) { return nodes_[id].grad; }

void Tape::backward(Var loss, Gradients* param_grads) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  if (value(loss.id).size() != 1) throw ShapeError("backward needs a scalar loss");
  for (auto& n : nodes_) {
    n.grad = Tensor::zeros_like(n.ref ? *n.ref : n.owned);
  }
  nodes_[loss.id].grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward) n.backward(*this, i);
    if (n.param_id >= 0 && param_grads) {
      (*param_grads)[n.param_id].add_inplace(n.grad);
    }
  }
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.cols() == bv.rows(), "matmul", av, bv);
  Tensor out(av.rows(), bv.cols());
  view(out).noalias() = view(av) * view(bv);
  return t.push(std::move(out), [a, b](Tape& tp, int self) {
    const auto g = view(static_cast<const Tensor&>(tp.grad(self)));
    view(tp.grad(a.id)).noalias() += g * view(tp.value(b.id)).transpose();
    view(tp.grad(b.id)).noalias() += view(tp.value(a.id)).transpose() * g;
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.cols() == bv.cols(), "matmul_nt", av, bv);
  Tensor out(av.rows(), bv.rows());
  view(out).noalias() = view(av) * view(bv).transpose();
  return t.push(std::move(out), [a, b](Tape& tp, int self) {
    const auto g = view(static_cast<const Tensor&>(tp.grad(self)));
    view(tp.grad(a.id)).noalias() += g * view(tp.value(b.id));
    view(tp.grad(b.id)).noalias() += g.transpose() * view(tp.value(a.id));
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.value().size() == b.value().size() && a.cols() == b.cols(), "add",
          a.value(), b.value());
  Tensor out = a.value();
  out.add_inplace(b.value());
  return t.push(std::move(out), [a, b](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    tp.grad(a.id).add_inplace(g);
    tp.grad(b.id).add_inplace(g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.value().size() == b.value().size() && a.cols() == b.cols(), "sub",
          a.value(), b.value());
  Tensor out = a.value();
  out.add_inplace(b.value(), -1.0);
  return t.push(std::move(out), [a, b](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    tp.grad(a.id).add_inplace(g);
    tp.grad(b.id).add_inplace(g, -1.0);
  });
}

Var add_bias(Var x, Var bias) {
  Tape& t = same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require(bv.size() == xv.cols(), "add_bias", xv, bv);
  Tensor out = xv;
  const std::size_t n = xv.rows(), m = xv.cols();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out(r, c) += bv[c];
  return t.push(std::move(out), [x, bias, n, m](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    tp.grad(x.id).add_inplace(g);
    Tensor& gb = tp.grad(bias.id);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) gb[c] += g(r, c);
  });
}

Var linear(Var x, Var w, Var b) { return add_bias(matmul(x, w), b); }

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= s;
  return a.tape->push(std::move(out), [a, s](Tape& tp, int self) {
    tp.grad(a.id).add_inplace(tp.grad(self), s);
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return x.tape->push(std::move(out), [x](Tape& tp, int self) {
    const Tensor& in = tp.value(x.id);
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(x.id);
    // Subgradient at exactly 0 is 0.
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var softmax_rows(Var x) {
  Tensor out = x.value();
  const std::size_t n = out.rows(), m = out.cols();
  for (std::size_t r = 0; r < n; ++r) {
    double* row = out.data() + r * m;
    double mx = row[0];
    for (std::size_t c = 1; c < m; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < m; ++c) row[c] /= sum;
  }
  const int out_id = static_cast<int>(x.tape->size());
  return x.tape->push(std::move(out), [x, n, m, out_id](Tape& tp, int self) {
    const Tensor& y = tp.value(out_id);
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(x.id);
    for (std::size_t r = 0; r < n; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < m; ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < m; ++c) gx(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var layer_norm(Var x, Var alpha, Var delta, double eps) {
  Tape& t = same_tape(x, alpha);
  same_tape(x, delta);
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), d = xv.cols();
  require(alpha.value().size() == d && delta.value().size() == d, "layer_norm",
          xv, alpha.value());
  if (d < 2) throw ShapeError("layer_norm needs at least two features");
  Tensor xhat(n, d);
  std::vector<double> inv_std(n);
  Tensor out(n, d);
  const Tensor& av = alpha.value();
  const Tensor& dv = delta.value();
  for (std::size_t r = 0; r < n; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += xv(r, c);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (xv(r, c) - mu) * (xv(r, c) - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat(r, c) = (xv(r, c) - mu) * inv_std[r];
      out(r, c) = xhat(r, c) * av[c] + dv[c];
    }
  }
  return t.push(std::move(out), [x, alpha, delta, xhat = std::move(xhat),
                                 inv_std = std::move(inv_std), n, d](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& av = tp.value(alpha.id);
    Tensor& gx = tp.grad(x.id);
    Tensor& ga = tp.grad(alpha.id);
    Tensor& gd = tp.grad(delta.id);
    std::vector<double> gh(d);
    for (std::size_t r = 0; r < n; ++r) {
      double mean_gh = 0.0, mean_ghx = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        ga[c] += g(r, c) * xhat(r, c);
        gd[c] += g(r, c);
        gh[c] = g(r, c) * av[c];
        mean_gh += gh[c];
        mean_ghx += gh[c] * xhat(r, c);
      }
      mean_gh /= static_cast<double>(d);
      mean_ghx /= static_cast<double>(d);
      for (std::size_t c = 0; c < d; ++c) {
        gx(r, c) += inv_std[r] * (gh[c] - mean_gh - xhat(r, c) * mean_ghx);
      }
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const std::size_t n = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.rows() == n, "concat_cols", parts.front().value(), p.value());
    total += p.cols();
  }
  Tensor out(n, total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
    off += v.cols();
  }
  return parts.front().tape->push(std::move(out), [parts, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    std::size_t off = 0;
    for (const auto& p : parts) {
      Tensor& gp = tp.grad(p.id);
      const std::size_t m = gp.cols();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) gp(r, c) += g(r, off + c);
      off += m;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const std::size_t m = parts.front().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.cols() == m, "concat_rows", parts.front().value(), p.value());
    total += p.rows();
  }
  Tensor out(total, m);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.data(), v.data() + v.size(), out.data() + off);
    off += v.size();
  }
  return parts.front().tape->push(std::move(out), [parts](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    std::size_t off = 0;
    for (const auto& p : parts) {
      Tensor& gp = tp.grad(p.id);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
      off += gp.size();
    }
  });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  const Tensor& v = x.value();
  if (start + count > v.cols() || count == 0) {
    throw ShapeError("slice_cols out of range for " + v.shape_string());
  }
  const std::size_t n = v.rows();
  Tensor out(n, count);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = v(r, start + c);
  return x.tape->push(std::move(out), [x, start, count, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(x.id);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < count; ++c) gx(r, start + c) += g(r, c);
  });
}

Var slice_rows(Var x, std::size_t start, std::size_t count) {
  const Tensor& v = x.value();
  if (start + count > v.rows() || count == 0) {
    throw ShapeError("slice_rows out of range for " + v.shape_string());
  }
  const std::size_t m = v.cols();
  Tensor out(count, m);
  std::copy(v.data() + start * m, v.data() + (start + count) * m, out.data());
  return x.tape->push(std::move(out), [x, start, m](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[start * m + i] += g[i];
  });
}

Var mse(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.value().size() == b.value().size(), "mse", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const double n = static_cast<double>(av.size());
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
  Tensor out(1, 1, s / n);
  return t.push(std::move(out), [a, b, n](Tape& tp, int self) {
    const double g = tp.grad(self)[0];
    const Tensor& av = tp.value(a.id);
    const Tensor& bv = tp.value(b.id);
    Tensor& ga = tp.grad(a.id);
    Tensor& gb = tp.grad(b.id);
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double d = 2.0 * g * (av[i] - bv[i]) / n;
      ga[i] += d;
      gb[i] -= d;
    }
  });
}

Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights) {
  if (scalars.empty() || scalars.size() != weights.size()) {
    throw ShapeError("weighted_sum: need one weight per scalar");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].value().size() != 1) throw ShapeError("weighted_sum: non-scalar term");
    s += weights[i] * scalars[i].value()[0];
  }
  return scalars.front().tape->push(Tensor(1, 1, s), [scalars, weights](Tape& tp, int self) {
    const double g = tp.grad(self)[0];
    for (std::size_t i = 0; i < scalars.size(); ++i) {
      tp.grad(scalars[i].id)[0] += weights[i] * g;
    }
  });
}

}  // namespace temp::nn
