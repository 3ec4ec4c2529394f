#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "stdsh/tensor.hpp"

namespace stdsh {

// Reverse-mode automatic differentiation over rank-2 tensors.
//
// Every op that touches a tensor with requires_grad appends a record; the
// recording order is a valid topological order, so backward() simply walks the
// records once in reverse. A Tape belongs to one thread; independent tapes may
// run concurrently as long as they do not share parameters being written.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }
  std::size_t size() const { return records_.size(); }
  std::vector<std::string_view> op_names() const;

  Tensor matmul(const Tensor& a, const Tensor& b);
  // Same-shape add, or b broadcast as a 1xC row (bias) or 1x1 scalar.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double factor);
  Tensor add_scalar(const Tensor& a, double value);
  Tensor transpose(const Tensor& a);

  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor relu(const Tensor& a);
  Tensor square(const Tensor& a);
  // Elementwise clamp; gradient is zero where the clamp is active.
  Tensor clip(const Tensor& a, double lo, double hi);
  Tensor minimum(const Tensor& a, const Tensor& b);

  // Subtracts from every allowed entry the max over the allowed entries of its
  // row. Disallowed entries are passed through as 0.
  Tensor max_subtract(const Tensor& scores, const Mask& mask);
  // Row-wise softmax of scores/tau restricted to mask; masked entries are
  // exactly 0. Rows with no allowed entry are rejected.
  Tensor masked_softmax(const Tensor& scores, const Mask& mask, double tau = 1.0);
  // Row-wise log-softmax restricted to mask; masked entries are 0.
  Tensor masked_log_softmax(const Tensor& scores, const Mask& mask);

  // Column-wise max over rows: RxC -> 1xC.
  Tensor reduce_max(const Tensor& a);
  Tensor reduce_sum(const Tensor& a);
  // Per-row sum: RxC -> Rx1.
  Tensor row_sum(const Tensor& a);
  Tensor mean(const Tensor& a);

  Tensor concat_cols(std::span<const Tensor> parts);
  Tensor concat_rows(std::span<const Tensor> parts);
  // Picks a[r, index[r]] for every row: RxC -> Rx1.
  Tensor gather(const Tensor& a, std::span<const std::size_t> index);
  // Selects a subset of rows.
  Tensor take_rows(const Tensor& a, std::span<const std::size_t> rows);
  // Broadcasts a 1x1, Rx1 or 1xC tensor to rows x cols.
  Tensor expand(const Tensor& a, std::size_t rows, std::size_t cols);
  // Right-pads with zero columns up to `cols`.
  Tensor pad_cols(const Tensor& a, std::size_t cols);

  // Populates grad on every tensor with requires_grad reachable from loss.
  // Leaf gradients accumulate across tapes; call zero_grad on them first.
  void backward(const Tensor& loss);

 private:
  struct Record {
    std::string_view op;
    Tensor output;
    std::function<void()> backward;
  };

  bool needs_grad(std::initializer_list<const Tensor*> inputs) const;
  Tensor result(Shape shape, std::vector<double> data, bool grad);
  void push(std::string_view op, const Tensor& out, std::function<void()> fn);
  template <typename F, typename D>
  Tensor pointwise(std::string_view op, const Tensor& a, F f, D df);

  Mode mode_;
  bool consumed_ = false;
  std::vector<Record> records_;
};

}  // namespace stdsh
