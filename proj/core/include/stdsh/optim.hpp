#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stdsh/tensor.hpp"

namespace stdsh {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive moment estimation over a fixed parameter set. Parameters are
// updated in place; gradients are read from each tensor's grad buffer.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config = {});

  void step();
  void zero_grad();

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }
  std::span<const Tensor> params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t steps_ = 0;
};

// L2 norm over all gradient buffers (missing buffers count as zero).
double global_grad_norm(std::span<const Tensor> params);

// Rescales all gradients so their global norm is at most max_norm. Returns the
// norm measured before clipping.
double clip_grad_norm(std::span<Tensor> params, double max_norm);

}  // namespace stdsh
