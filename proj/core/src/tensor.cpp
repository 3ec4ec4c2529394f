#include "stdsh/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace stdsh {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must have rank >= 1");
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor dims must be positive: " + shape_to_string(shape));
  }
  if (data.size() != shape_numel(shape)) {
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_to_string(shape));
  }
  s_ = std::make_shared<Storage>();
  s_->shape = std::move(shape);
  s_->data = std::move(data);
  s_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1, 1}, {value}, requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values, bool requires_grad) {
  return Tensor({rows, cols}, std::vector<double>(values), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!s_) throw std::logic_error("undefined tensor");
  return s_->shape;
}

std::size_t Tensor::numel() const { return s_ ? s_->data.size() : 0; }

std::size_t Tensor::rows() const {
  const Shape& s = shape();
  if (s.size() == 1) return 1;
  if (s.size() == 2) return s[0];
  throw std::logic_error("matrix view of rank-" + std::to_string(s.size()) + " tensor");
}

std::size_t Tensor::cols() const {
  const Shape& s = shape();
  if (s.size() == 1) return s[0];
  if (s.size() == 2) return s[1];
  throw std::logic_error("matrix view of rank-" + std::to_string(s.size()) + " tensor");
}

std::span<double> Tensor::data() { return s_->data; }
std::span<const double> Tensor::data() const { return s_->data; }

double Tensor::item() const {
  if (numel() != 1) throw std::logic_error("item() on tensor of shape " + shape_to_string(shape()));
  return s_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return s_->data[r * cols() + c]; }
double& Tensor::at(std::size_t r, std::size_t c) { return s_->data[r * cols() + c]; }

bool Tensor::requires_grad() const { return s_ && s_->requires_grad; }
void Tensor::set_requires_grad(bool value) { s_->requires_grad = value; }

bool Tensor::has_grad() const { return s_ && !s_->grad.empty(); }
std::span<const double> Tensor::grad() const { return s_->grad; }

std::span<double> Tensor::mutable_grad() const {
  if (s_->grad.empty()) s_->grad.assign(s_->data.size(), 0.0);
  return s_->grad;
}

void Tensor::zero_grad() {
  if (!s_) return;
  std::fill(s_->grad.begin(), s_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  if (!s_) return {};
  return Tensor(s_->shape, s_->data, false);
}

std::size_t Mask::row_count(std::size_t r) const {
  return static_cast<std::size_t>(
      std::count(bits_.begin() + r * cols_, bits_.begin() + (r + 1) * cols_, 1));
}

std::size_t Mask::col_count(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows_; ++r) n += bits_[r * cols_ + c];
  return n;
}

Mask Mask::transposed() const {
  Mask t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t.set(c, r, (*this)(r, c));
  return t;
}

}  // namespace stdsh
