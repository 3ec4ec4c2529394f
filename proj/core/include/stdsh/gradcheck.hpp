#pragma once

#include <functional>
#include <span>

#include "stdsh/tape.hpp"
#include "stdsh/tensor.hpp"

namespace stdsh {

// Builds a scalar loss on the given tape. Must be deterministic and must read
// the checked tensors by handle so in-place perturbations are visible.
using ScalarFn = std::function<Tensor(Tape&)>;

// Compares reverse-mode gradients against central differences. Returns
//   max_k |analytic_k - numeric_k| / max(1, |analytic_k|)
// over every coordinate of every tensor in `inputs`. The inputs must have
// requires_grad set; their grad buffers are overwritten.
double finite_diff_check(const ScalarFn& f, std::span<Tensor> inputs, double eps = 1e-5);
double finite_diff_check(const ScalarFn& f, Tensor input, double eps = 1e-5);

}  // namespace stdsh
