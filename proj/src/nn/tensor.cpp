#include "temp/nn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace temp::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, values_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw ShapeError("tensor dimensions must be positive");
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.empty()) throw ShapeError("tensor needs at least one dimension");
  std::size_t n = 1;
  for (auto s : shape_) {
    if (s == 0) throw ShapeError("tensor dimensions must be positive");
    n *= s;
  }
  if (n != values_.size()) {
    throw ShapeError("tensor value count " + std::to_string(values_.size()) +
                     " does not match shape " + shape_string());
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> v;
  std::size_t cols = rows.begin()->size();
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("ragged matrix literal");
    v.insert(v.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(v));
}

Tensor Tensor::zeros_like(const Tensor& t) {
  Tensor z;
  z.shape_ = t.shape_;
  z.values_.assign(t.values_.size(), 0.0);
  return z;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  return std::accumulate(shape_.begin(), shape_.end() - 1, std::size_t{1},
                         std::multiplies<>());
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::add_inplace(const Tensor& other, double scale) {
  if (other.values_.size() != values_.size()) {
    throw ShapeError("add_inplace: " + shape_string() + " vs " + other.shape_string());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

}  // namespace temp::nn
