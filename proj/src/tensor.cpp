#include "presup/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "presup/error.hpp"

namespace presup {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + to_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{n}, std::move(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
  switch (rank()) {
    case 1: return 1;
    case 2: return shape_[0];
    default: throw ShapeError("rows() needs rank 1 or 2, got " + to_string(shape_));
  }
}

std::size_t Tensor::cols() const {
  switch (rank()) {
    case 1: return shape_[0];
    case 2: return shape_[1];
    default: throw ShapeError("cols() needs rank 1 or 2, got " + to_string(shape_));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

namespace kernels {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) ||
      a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul shape mismatch: " + to_string(a.shape()) + " * " +
                     to_string(b.shape()));
  }
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.rank() == 2 ? b.shape()[1] : 1;
  Tensor out(b.rank() == 2 ? Shape{m, n} : Shape{m});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor transpose(const Tensor& m) {
  if (m.rank() != 2) throw ShapeError("transpose needs a matrix, got " + to_string(m.shape()));
  const std::size_t r = m.shape()[0];
  const std::size_t c = m.shape()[1];
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor softmax(const Tensor& v) {
  Tensor out(v.shape());
  if (v.size() == 0) return out;
  const double mx = *std::max_element(v.data().begin(), v.data().end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= sum;
  return out;
}

Tensor softmax_axis(const Tensor& m, Axis axis) {
  if (m.rank() != 2) throw ShapeError("softmax_axis needs a matrix, got " + to_string(m.shape()));
  const std::size_t r = m.shape()[0];
  const std::size_t c = m.shape()[1];
  Tensor out(m.shape());
  if (axis == Axis::kCols) {
    for (std::size_t i = 0; i < r; ++i) {
      double mx = m.at(i, 0);
      for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, m.at(i, j));
      double sum = 0.0;
      for (std::size_t j = 0; j < c; ++j) sum += out.at(i, j) = std::exp(m.at(i, j) - mx);
      for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= sum;
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      double mx = m.at(0, j);
      for (std::size_t i = 1; i < r; ++i) mx = std::max(mx, m.at(i, j));
      double sum = 0.0;
      for (std::size_t i = 0; i < r; ++i) sum += out.at(i, j) = std::exp(m.at(i, j) - mx);
      for (std::size_t i = 0; i < r; ++i) out.at(i, j) /= sum;
    }
  }
  return out;
}

Tensor mean_axis(const Tensor& m, Axis axis) {
  if (m.rank() != 2) throw ShapeError("mean_axis needs a matrix, got " + to_string(m.shape()));
  const std::size_t r = m.shape()[0];
  const std::size_t c = m.shape()[1];
  if (axis == Axis::kCols) {
    Tensor out(Shape{r});
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += m.at(i, j);
      out[i] = s / static_cast<double>(c);
    }
    return out;
  }
  Tensor out(Shape{c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += m.at(i, j);
  for (std::size_t j = 0; j < c; ++j) out[j] /= static_cast<double>(r);
  return out;
}

}  // namespace kernels
}  // namespace presup
