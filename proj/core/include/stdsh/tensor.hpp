#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stdsh {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major tensor of 64-bit reals with shared storage. Copies alias the
// same buffer (like a handle); use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values,
                       bool requires_grad = false);

  bool defined() const { return static_cast<bool>(s_); }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  // Matrix view: rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data();
  std::span<const double> data() const;
  double item() const;
  double at(std::size_t r, std::size_t c) const;
  double& at(std::size_t r, std::size_t c);

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  std::span<const double> grad() const;
  // Allocates a zero buffer on first use.
  std::span<double> mutable_grad() const;
  void zero_grad();

  bool same_storage(const Tensor& other) const { return s_ == other.s_; }
  Tensor clone() const;
  // Fresh storage with the same values and no gradient tracking.
  Tensor detach() const { return clone(); }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

// Binary incidence / mask matrix used by the masked softmax primitives.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool value = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, value ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool operator()(std::size_t r, std::size_t c) const {
    return bits_[r * cols_ + c] != 0;
  }
  void set(std::size_t r, std::size_t c, bool value) {
    bits_[r * cols_ + c] = value ? 1 : 0;
  }
  std::size_t row_count(std::size_t r) const;
  std::size_t col_count(std::size_t c) const;
  Mask transposed() const;
  bool operator==(const Mask&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<unsigned char> bits_;
};

}  // namespace stdsh
